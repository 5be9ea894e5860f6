#pragma once
// Loss terms of the layout objective and analytic gradients of the
// continuous part.
//
//   total = w_img * (size + aspect_ratio) + w_text * text + w_align * align
//         + author + viewer + interaction
//
// Each element contributes exactly one discrete term: the interaction term
// when the viewer forced its alternative, the viewer term when a slider
// other than neutral touches one of its modalities, the author term
// otherwise.  The template's author term is always present.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexdoc/model.hpp"

namespace flexdoc::objective {

inline constexpr double kTemplateRankWeight = 1000.0;
inline constexpr double kAlternativeRankWeight = 50.0;
inline constexpr double kNeutralSlider = 0.5;

namespace term {
inline constexpr const char* size = "size";
inline constexpr const char* aspect_ratio = "aspect_ratio";
inline constexpr const char* text = "text";
inline constexpr const char* align = "align";
inline constexpr const char* author = "author";
inline constexpr const char* viewer = "viewer";
inline constexpr const char* interaction = "interaction";
}  // namespace term

struct ContinuousWeights {
  double image = 1.0;
  double text = 1.0;
  double align = 1.0;
  bool operator==(const ContinuousWeights&) const = default;
};

struct ImageAssignment {
  double w, h;    // solved
  double wp, hp;  // preferred
};

struct TextAssignment {
  double font;            // solved
  double preferred_font;  //
  double similarity;      // chosen text vs original, in [0, 1]
};

struct MidlinePair {
  double yi, hi, yj, hj;
};

struct RankChoice {
  int k;  // chosen rank, 1 = most preferred
  int K;  // number of alternatives
};

struct SliderChoice {
  double s;
  int k;
  int K;
};

inline double image_size_loss(std::span<const ImageAssignment> xs) {
  if (xs.empty()) throw std::invalid_argument("image_size_loss: no images");
  double sw = 0, sh = 0;
  for (const auto& a : xs) {
    sw += (a.w - a.wp) * (a.w - a.wp);
    sh += (a.h - a.hp) * (a.h - a.hp);
  }
  const double n = static_cast<double>(xs.size());
  return sw / n + sh / n;
}

inline double aspect_ratio_loss(std::span<const ImageAssignment> xs) {
  if (xs.empty()) throw std::invalid_argument("aspect_ratio_loss: no images");
  double s = 0;
  for (const auto& a : xs) {
    const double r = a.w * a.hp - a.h * a.wp;
    s += r * r;
  }
  return s / static_cast<double>(xs.size());
}

inline double text_loss(std::span<const TextAssignment> xs) {
  if (xs.empty()) throw std::invalid_argument("text_loss: no text");
  double deficit = 0, sim = 0;
  for (const auto& a : xs) {
    deficit += std::max(a.preferred_font - a.font, 0.0);
    sim += a.similarity;
  }
  const double n = static_cast<double>(xs.size());
  return deficit / n - sim / n;
}

inline double alignment_loss(std::span<const MidlinePair> pairs) {
  double s = 0;
  for (const auto& p : pairs) {
    const double d = (p.yi + 0.5 * p.hi) - (p.yj + 0.5 * p.hj);
    s += d * d;
  }
  return s;
}

inline double template_term(int m, int M) {
  if (M < 1 || m < 1 || m > M) throw std::out_of_range("template rank out of range");
  return -kTemplateRankWeight * (M + 1 - m);
}

inline double alternative_author_term(RankChoice c) {
  if (c.K < 1 || c.k < 1 || c.k > c.K) throw std::out_of_range("alternative rank out of range");
  return -kAlternativeRankWeight * (c.K + 1 - c.k);
}

inline double author_loss(int m, int M, std::span<const RankChoice> chosen) {
  double s = template_term(m, M);
  for (const auto& c : chosen) s += alternative_author_term(c);
  return s;
}

inline double viewer_term(SliderChoice c) {
  if (!(c.s >= 0.0 && c.s <= 1.0)) throw std::out_of_range("slider outside [0, 1]");
  if (c.K < 1 || c.k < 1 || c.k > c.K) throw std::out_of_range("alternative rank out of range");
  return (kNeutralSlider - c.s) * kAlternativeRankWeight * (c.K + 1 - c.k);
}

inline double viewer_loss(std::span<const SliderChoice> chosen) {
  double s = 0;
  for (const auto& c : chosen) s += viewer_term(c);
  return s;
}

/// 0 for the forced alternative, nullopt (infeasible) for any other.
inline std::optional<double> interaction_loss(const Element& e, std::string_view forced_alternative,
                                              std::string_view candidate) {
  if (!e.find(forced_alternative))
    throw std::invalid_argument("interaction_loss: '" + std::string(forced_alternative) +
                                "' is not an alternative of '" + e.id + "'");
  if (candidate == forced_alternative) return 0.0;
  return std::nullopt;
}

// ---- discrete part ---------------------------------------------------------

/// Interaction forcings in effect for one solve.
struct Forcing {
  std::optional<std::string> template_id;
  std::map<std::string, std::string> alternatives;  // element id -> alternative id
  bool operator==(const Forcing&) const = default;
};

/// Which forcings to honor; the solver drops them in this order when nothing
/// is feasible.  Pins are always honored.
struct ForcingMask {
  bool zoom = true;
  bool alternatives = true;
  bool template_choice = true;
};

/// Alternative selected by a zoom delta: the rank-1 alternative's detail
/// level shifted by delta, clamped to the element's range.
inline const Alternative* zoom_target(const Element& e, int delta) {
  const Alternative* base = e.by_rank(1);
  if (!base) return nullptr;
  const int level = std::clamp(base->detail_level + delta, 0, e.max_detail_level());
  return e.at_detail_level(level);
}

inline Forcing forcing_from(const Document& doc, const PreferenceState& prefs, ForcingMask mask = {}) {
  Forcing f;
  if (mask.template_choice) f.template_id = prefs.forced_template;
  if (mask.zoom)
    for (const auto& [eid, delta] : prefs.zoom_deltas)
      if (const Element* e = doc.find_element(eid))
        if (const Alternative* a = zoom_target(*e, delta)) f.alternatives[eid] = a->id;
  if (mask.alternatives)
    for (const auto& [eid, aid] : prefs.forced_alternatives) f.alternatives[eid] = aid;
  for (const auto& [eid, pin] : prefs.pins) f.alternatives[eid] = pin.alternative;
  for (const auto& e : doc.elements)
    if (e.pinned_geometry && !prefs.pins.count(e.id) && !f.alternatives.count(e.id))
      if (const Alternative* a = e.by_rank(1)) f.alternatives[e.id] = a->id;
  return f;
}

enum class DiscreteMode { author, viewer, interaction };

/// True when a non-neutral slider applies to one of the element's modalities.
inline bool slider_touches(const Element& e, const PreferenceState& prefs) {
  for (const auto& a : e.alternatives) {
    auto it = prefs.sliders.find(a.modality);
    if (it != prefs.sliders.end() && it->second != kNeutralSlider) return true;
  }
  return false;
}

inline DiscreteMode discrete_mode(const Element& e, const PreferenceState& prefs, const Forcing& f) {
  if (f.alternatives.count(e.id)) return DiscreteMode::interaction;
  if (slider_touches(e, prefs)) return DiscreteMode::viewer;
  return DiscreteMode::author;
}

/// The element's discrete term for one candidate alternative; nullopt when
/// an interaction forbids it.
inline std::optional<double> element_discrete_term(const Element& e, const Alternative& alt,
                                                   const PreferenceState& prefs, const Forcing& f) {
  const int K = static_cast<int>(e.alternatives.size());
  switch (discrete_mode(e, prefs, f)) {
    case DiscreteMode::interaction:
      return interaction_loss(e, f.alternatives.at(e.id), alt.id);
    case DiscreteMode::viewer:
      return viewer_term({prefs.slider(alt.modality), alt.rank, K});
    case DiscreteMode::author:
      return alternative_author_term({alt.rank, K});
  }
  return std::nullopt;
}

/// A complete discrete assignment: a template and one alternative per
/// element, in document element order.
struct DiscreteChoice {
  const Template* tmpl = nullptr;
  std::vector<const Alternative*> alternatives;
};

struct ElementGeometry {
  Box box;
  double font = 0;  // text only
};

using LossTerms = std::map<std::string, double>;

struct LossReport {
  double total = 0;
  LossTerms terms;
};

inline double weighted_total(const LossTerms& t, const ContinuousWeights& w) {
  auto get = [&](const char* k) {
    auto it = t.find(k);
    return it == t.end() ? 0.0 : it->second;
  };
  return w.image * (get(term::size) + get(term::aspect_ratio)) + w.text * get(term::text) +
         w.align * get(term::align) + get(term::author) + get(term::viewer) +
         get(term::interaction);
}

/// Image pairs on the same row: their areas share the top and bottom bound
/// and they sit on the same flow line.  `line_of` gives each element's
/// line index within its area; empty means every element is on line 0.
inline std::vector<std::pair<int, int>> alignment_pairs(const Document& doc, const DiscreteChoice& c,
                                                        std::span<const int> line_of = {}) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::pair<int, const ElementArea*>> images;
  for (const auto& area : c.tmpl->areas)
    for (const auto& eid : area.assigned_elements) {
      const int i = doc.element_index(eid);
      if (i >= 0 && c.alternatives[i]->modality == Modality::image) images.push_back({i, &area});
    }
  auto line = [&](int i) { return line_of.empty() ? 0 : line_of[i]; };
  for (std::size_t a = 0; a < images.size(); ++a)
    for (std::size_t b = a + 1; b < images.size(); ++b)
      if (images[a].second->top == images[b].second->top &&
          images[a].second->bottom == images[b].second->bottom &&
          line(images[a].first) == line(images[b].first))
        pairs.push_back({std::min(images[a].first, images[b].first),
                         std::max(images[a].first, images[b].first)});
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// Discrete terms only (template plus per-element).  nullopt if an
/// interaction forbids the choice.
inline std::optional<LossTerms> discrete_terms(const Document& doc, const DiscreteChoice& c,
                                               const PreferenceState& prefs, const Forcing& f) {
  LossTerms t{{term::author, 0.0}, {term::viewer, 0.0}, {term::interaction, 0.0}};
  int M = static_cast<int>(doc.templates.size());
  t[term::author] += template_term(c.tmpl->rank, M);
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    auto v = element_discrete_term(e, *c.alternatives[i], prefs, f);
    if (!v) return std::nullopt;
    switch (discrete_mode(e, prefs, f)) {
      case DiscreteMode::author: t[term::author] += *v; break;
      case DiscreteMode::viewer: t[term::viewer] += *v; break;
      case DiscreteMode::interaction: t[term::interaction] += *v; break;
    }
  }
  return t;
}

inline LossTerms continuous_terms(const Document& doc, const DiscreteChoice& c,
                                  std::span<const ElementGeometry> g, std::span<const int> line_of = {}) {
  std::vector<ImageAssignment> imgs;
  std::vector<TextAssignment> texts;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const Alternative& a = *c.alternatives[i];
    if (a.modality == Modality::image)
      imgs.push_back({g[i].box.w, g[i].box.h, a.preferred_size.w, a.preferred_size.h});
    else if (a.modality == Modality::text)
      texts.push_back({g[i].font, a.preferred_font_size, a.similarity});
  }
  std::vector<MidlinePair> mids;
  for (auto [i, j] : alignment_pairs(doc, c, line_of))
    mids.push_back({g[i].box.y, g[i].box.h, g[j].box.y, g[j].box.h});
  LossTerms t;
  t[term::size] = imgs.empty() ? 0.0 : image_size_loss(imgs);
  t[term::aspect_ratio] = imgs.empty() ? 0.0 : aspect_ratio_loss(imgs);
  t[term::text] = texts.empty() ? 0.0 : text_loss(texts);
  t[term::align] = alignment_loss(mids);
  return t;
}

inline LossReport total_loss(const Document& doc, const DiscreteChoice& c,
                             std::span<const ElementGeometry> geometry, const PreferenceState& prefs,
                             const ContinuousWeights& w, const Forcing& f, std::span<const int> line_of = {}) {
  if (geometry.size() != doc.elements.size() || c.alternatives.size() != doc.elements.size())
    throw std::invalid_argument("total_loss: geometry must cover every element");
  auto disc = discrete_terms(doc, c, prefs, f);
  if (!disc) throw std::invalid_argument("total_loss: choice violates a viewer interaction");
  LossReport r;
  r.terms = continuous_terms(doc, c, geometry, line_of);
  for (const auto& [k, v] : *disc) r.terms[k] = v;
  r.total = weighted_total(r.terms, w);
  return r;
}

inline LossReport total_loss(const Document& doc, const DiscreteChoice& c,
                             std::span<const ElementGeometry> geometry, const PreferenceState& prefs,
                             const ContinuousWeights& w) {
  return total_loss(doc, c, geometry, prefs, w, forcing_from(doc, prefs));
}

struct GeometryGradient {
  double dx = 0, dy = 0, dw = 0, dh = 0, dfont = 0;
};

/// Analytic partial derivatives of the weighted continuous loss.  At the
/// text kink (font == preferred) the subgradient 0 is used.
inline std::vector<GeometryGradient> continuous_gradient(const Document& doc, const DiscreteChoice& c,
                                                         std::span<const ElementGeometry> g,
                                                         const ContinuousWeights& w,
                                                         std::span<const int> line_of = {}) {
  const std::size_t n = doc.elements.size();
  if (g.size() != n || c.alternatives.size() != n)
    throw std::invalid_argument("continuous_gradient: geometry must cover every element");
  std::vector<GeometryGradient> out(n);
  int n_img = 0, n_text = 0;
  for (std::size_t i = 0; i < n; ++i) {
    n_img += c.alternatives[i]->modality == Modality::image;
    n_text += c.alternatives[i]->modality == Modality::text;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Alternative& a = *c.alternatives[i];
    const Box& b = g[i].box;
    if (a.modality == Modality::image) {
      const double wp = a.preferred_size.w, hp = a.preferred_size.h;
      const double r = b.w * hp - b.h * wp;
      out[i].dw += w.image * (2.0 * (b.w - wp) + 2.0 * r * hp) / n_img;
      out[i].dh += w.image * (2.0 * (b.h - hp) - 2.0 * r * wp) / n_img;
    } else if (a.modality == Modality::text) {
      if (g[i].font < a.preferred_font_size) out[i].dfont += -w.text / n_text;
    }
  }
  for (auto [i, j] : alignment_pairs(doc, c, line_of)) {
    const double d = (g[i].box.y + 0.5 * g[i].box.h) - (g[j].box.y + 0.5 * g[j].box.h);
    out[i].dy += w.align * 2.0 * d;
    out[i].dh += w.align * d;
    out[j].dy -= w.align * 2.0 * d;
    out[j].dh -= w.align * d;
  }
  return out;
}

}  // namespace flexdoc::objective
