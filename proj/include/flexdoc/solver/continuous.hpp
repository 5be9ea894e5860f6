#pragma once
// Geometry subproblem for one discrete choice: tabstop positions, element
// boxes and font sizes.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexdoc/document_io.hpp"
#include "flexdoc/model.hpp"
#include "flexdoc/objective.hpp"
#include "flexdoc/solver/barrier.hpp"

namespace flexdoc::solver {

using objective::ContinuousWeights;
using objective::DiscreteChoice;
using objective::ElementGeometry;
using objective::LossTerms;

inline constexpr double kMinGap = 1.0;        // between consecutive tabstops
inline constexpr double kMinExtent = 1.0;     // element width and height
inline constexpr double kMinFont = 6.0;
inline constexpr double kMaxFont = 72.0;
inline constexpr double kCharWidthEm = 0.5;   // average glyph advance
inline constexpr double kLineHeightEm = 1.2;
inline constexpr double kHeightWeight = 1e-6; // keeps the document compact
inline constexpr double kFontWeight = 1e-6;   // settles slack fonts at the preference
inline constexpr int kMaxFlowRounds = 5;

/// Code points in a UTF-8 string.
inline std::size_t glyph_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

/// A text box of width w at font f needs height >= text_fit_kappa * f^2 / w.
inline double text_fit_kappa(const Alternative& a) {
  return kCharWidthEm * kLineHeightEm * static_cast<double>(std::max<std::size_t>(1, glyph_count(a.text)));
}

/// Smallest font at or below `f` that fits a w x h box; 0 if even the
/// minimum font does not fit.
inline double fitting_font(const Alternative& a, double w, double h, double f) {
  const double cap = std::sqrt(std::max(0.0, h * w / text_fit_kappa(a)));
  const double font = std::min(f, cap);
  return font >= kMinFont ? font : 0.0;
}

// ---- flow packing ----------------------------------------------------------

struct FlowLines {
  std::vector<std::vector<int>> lines;  // positions within the area's element list
  std::vector<bool> oversize;           // per position
  bool operator==(const FlowLines&) const = default;
};

/// Greedy first-fit.  Row-wrap starts a new line when the next width would
/// overflow; column puts every element on its own line.
inline FlowLines flow_pack(std::span<const double> widths, FlowDirection direction, double available_width) {
  if (!(available_width > 0)) throw std::invalid_argument("flow_pack: available width must be positive");
  FlowLines out;
  out.oversize.assign(widths.size(), false);
  double used = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const double w = widths[i];
    out.oversize[i] = w > available_width;
    if (direction == FlowDirection::column || out.lines.empty() || used + w > available_width) {
      out.lines.push_back({});
      used = 0;
    }
    out.lines.back().push_back(static_cast<int>(i));
    used += w;
  }
  return out;
}

// ---- problem ---------------------------------------------------------------

struct ElementVars {
  Operand x, y, w, h, font;
  int deficit = -1;  // slack for max(fp - f, 0), text only
  int area = -1;
  int line = -1;
};

/// Inputs shared by every continuous solve of one discrete choice.
struct GeometryInputs {
  const Document* doc = nullptr;
  DiscreteChoice choice;
  Viewport viewport;
  std::map<int, Box> pins;  // element index -> fixed box
  bool avoid_scrolling = false;
  ContinuousWeights weights;
};

struct ContinuousProblem {
  GeometryInputs in;
  std::vector<FlowLines> flow;                 // per template area
  std::vector<std::vector<Operand>> bands;     // per area: line boundaries, lines+1 entries
  std::map<std::string, Operand> x_stops, y_stops;  // includes boundaries
  std::vector<ElementVars> vars;               // per document element
  std::vector<std::pair<int, int>> aligned;    // alignment pairs
  ConvexProgram program;
  Eigen::VectorXd start;

  std::vector<int> line_of() const {
    std::vector<int> out;
    for (const auto& v : vars) out.push_back(v.line);
    return out;
  }
};

namespace detail {

inline const Alternative& alt(const GeometryInputs& in, int i) { return *in.choice.alternatives[i]; }

/// Rough positions used to seed packing and the interior start.
inline std::map<std::string, double> even_x_positions(const Template& t, double width) {
  std::map<std::string, double> pos;
  const double n = static_cast<double>(t.x_tabstops.size() + 1);
  pos[std::string(kBoundaryLeft)] = 0;
  pos[std::string(kBoundaryRight)] = width;
  for (std::size_t i = 0; i < t.x_tabstops.size(); ++i) pos[t.x_tabstops[i]] = width * (i + 1) / n;
  return pos;
}

inline double packing_width(const GeometryInputs& in, int i) {
  auto pin = in.pins.find(i);
  if (pin != in.pins.end()) return pin->second.w;
  return alt(in, i).preferred_size.w;
}

}  // namespace detail

/// Packs each area with the given element widths and area widths.
inline std::vector<FlowLines> pack_areas(const GeometryInputs& in, std::span<const double> element_widths,
                                         const std::map<std::string, double>& x_positions) {
  const Template& t = *in.choice.tmpl;
  std::vector<FlowLines> out;
  for (const auto& area : t.areas) {
    std::vector<double> ws;
    for (const auto& eid : area.assigned_elements) ws.push_back(element_widths[in.doc->element_index(eid)]);
    const double avail = std::max(x_positions.at(area.right) - x_positions.at(area.left), 1e-9);
    out.push_back(flow_pack(ws, t.flow_of(area), avail));
  }
  return out;
}

inline ContinuousProblem build_continuous_problem(const GeometryInputs& in, std::vector<FlowLines> flow) {
  const Document& doc = *in.doc;
  const Template& t = *in.choice.tmpl;
  const std::size_t n = doc.elements.size();
  if (in.choice.alternatives.size() != n) throw std::invalid_argument("choice must cover every element");
  if (flow.size() != t.areas.size()) throw std::invalid_argument("one line assignment per area");

  ContinuousProblem P;
  P.in = in;
  P.flow = std::move(flow);
  auto& prog = P.program;
  auto var = [&] { return Operand::variable(prog.add_var()); };
  auto ge = [&](LinExpr e) { prog.inequalities.push_back(std::move(e)); };
  // a - b - c >= 0
  auto ge_diff = [&](Operand a, Operand b, double c) {
    LinExpr e;
    e.add(a, 1.0).add(b, -1.0).shift(-c);
    ge(std::move(e));
  };

  // Tabstops.
  P.x_stops[std::string(kBoundaryLeft)] = Operand::constant(0);
  P.x_stops[std::string(kBoundaryRight)] = Operand::constant(in.viewport.width);
  for (const auto& id : t.x_tabstops) P.x_stops[id] = var();
  P.y_stops[std::string(kBoundaryTop)] = Operand::constant(0);
  for (const auto& id : t.y_tabstops) P.y_stops[id] = var();
  const Operand bottom = var();
  P.y_stops[std::string(kBoundaryBottom)] = bottom;

  std::vector<Operand> xs{P.x_stops[std::string(kBoundaryLeft)]};
  for (const auto& id : t.x_tabstops) xs.push_back(P.x_stops[id]);
  xs.push_back(P.x_stops[std::string(kBoundaryRight)]);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) ge_diff(xs[i + 1], xs[i], kMinGap);
  std::vector<Operand> ys{P.y_stops[std::string(kBoundaryTop)]};
  for (const auto& id : t.y_tabstops) ys.push_back(P.y_stops[id]);
  ys.push_back(bottom);
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) ge_diff(ys[i + 1], ys[i], kMinGap);
  if (in.avoid_scrolling) ge_diff(Operand::constant(in.viewport.height), bottom, 0.0);

  // Elements.
  P.vars.resize(n);
  int n_img = 0, n_text = 0;
  for (std::size_t i = 0; i < n; ++i) {
    n_img += detail::alt(in, i).modality == Modality::image;
    n_text += detail::alt(in, i).modality == Modality::text;
  }
  double sim_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Alternative& a = detail::alt(in, static_cast<int>(i));
    ElementVars& v = P.vars[i];
    auto pin = in.pins.find(static_cast<int>(i));
    if (pin != in.pins.end()) {
      v.x = Operand::constant(pin->second.x);
      v.y = Operand::constant(pin->second.y);
      v.w = Operand::constant(pin->second.w);
      v.h = Operand::constant(pin->second.h);
    } else {
      v.x = var();
      v.y = var();
      if (a.modality == Modality::audio) {
        v.w = Operand::constant(a.preferred_size.w);
        v.h = Operand::constant(a.preferred_size.h);
      } else {
        v.w = var();
        v.h = var();
        ge_diff(v.w, Operand::constant(0), kMinExtent);
        ge_diff(v.h, Operand::constant(0), kMinExtent);
      }
    }
    if (a.modality == Modality::image) {
      const double wgt = in.weights.image / n_img;
      const double wp = a.preferred_size.w, hp = a.preferred_size.h;
      LinExpr dw, dh, ar;
      dw.add(v.w, 1.0).shift(-wp);
      dh.add(v.h, 1.0).shift(-hp);
      ar.add(v.w, hp).add(v.h, -wp);
      prog.squares.push_back({dw, wgt});
      prog.squares.push_back({dh, wgt});
      prog.squares.push_back({ar, wgt});
    } else if (a.modality == Modality::text) {
      v.font = var();
      v.deficit = prog.add_var();
      const Operand d = Operand::variable(v.deficit);
      ge_diff(v.font, Operand::constant(0), kMinFont);
      ge_diff(Operand::constant(kMaxFont), v.font, 0.0);
      ge_diff(d, Operand::constant(0), 0.0);
      LinExpr lift;  // d - (fp - f) >= 0
      lift.add(d, 1.0).add(v.font, 1.0).shift(-a.preferred_font_size);
      ge(std::move(lift));
      FitConstraint fit;
      fit.lhs.add(v.h, 1.0);
      fit.font = v.font;
      fit.width = v.w;
      fit.kappa = text_fit_kappa(a);
      prog.fits.push_back(std::move(fit));
      prog.linear.add(d, in.weights.text / n_text);
      LinExpr settle;
      settle.add(v.font, 1.0).shift(-a.preferred_font_size);
      prog.squares.push_back({settle, kFontWeight});
      sim_sum += a.similarity;
    }
  }
  if (n_text > 0) prog.linear.shift(-in.weights.text * sim_sum / n_text);

  // Areas and flow lines.
  for (std::size_t ai = 0; ai < t.areas.size(); ++ai) {
    const auto& area = t.areas[ai];
    const Operand L = P.x_stops.at(area.left), R = P.x_stops.at(area.right);
    const Operand T = P.y_stops.at(area.top), B = P.y_stops.at(area.bottom);
    const auto& fl = P.flow[ai];
    std::vector<Operand> band{T};
    for (std::size_t k = 1; k < fl.lines.size(); ++k) band.push_back(var());
    band.push_back(B);
    for (std::size_t k = 0; k < fl.lines.size(); ++k) {
      const auto& line = fl.lines[k];
      for (std::size_t j = 0; j < line.size(); ++j) {
        const int ei = doc.element_index(area.assigned_elements[line[j]]);
        ElementVars& v = P.vars[ei];
        v.area = static_cast<int>(ai);
        v.line = static_cast<int>(k);
        if (j == 0) ge_diff(v.x, L, 0.0);
        if (j + 1 < line.size()) {
          const ElementVars& nx = P.vars[doc.element_index(area.assigned_elements[line[j + 1]])];
          LinExpr e;  // next.x - x - w >= 0
          e.add(nx.x, 1.0).add(v.x, -1.0).add(v.w, -1.0);
          ge(std::move(e));
        } else {
          LinExpr e;  // R - x - w >= 0
          e.add(R, 1.0).add(v.x, -1.0).add(v.w, -1.0);
          ge(std::move(e));
        }
        ge_diff(v.y, band[k], 0.0);
        LinExpr e;  // band[k+1] - y - h >= 0
        e.add(band[k + 1], 1.0).add(v.y, -1.0).add(v.h, -1.0);
        ge(std::move(e));
      }
    }
    P.bands.push_back(std::move(band));
  }

  // Midline alignment.
  P.aligned = objective::alignment_pairs(doc, in.choice, P.line_of());
  for (auto [i, j] : P.aligned) {
    LinExpr e;
    e.add(P.vars[i].y, 1.0).add(P.vars[i].h, 0.5).add(P.vars[j].y, -1.0).add(P.vars[j].h, -0.5);
    prog.squares.push_back({e, in.weights.align});
  }
  prog.linear.add(bottom, kHeightWeight);

  // Interior start: even tabstops, elements in the middle of their slots,
  // line heights from the start sizes.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(prog.num_vars);
  auto set = [&](Operand o, double val) {
    if (o.is_var()) z[o.var] = val;
  };
  auto xpos = detail::even_x_positions(t, in.viewport.width);
  for (const auto& [id, o] : P.x_stops) set(o, xpos[id]);
  std::vector<double> line_h_total(t.areas.size(), 0);
  std::vector<std::vector<double>> line_h(t.areas.size());
  for (std::size_t ai = 0; ai < t.areas.size(); ++ai) {
    const auto& area = t.areas[ai];
    const double avail = xpos[area.right] - xpos[area.left];
    for (const auto& line : P.flow[ai].lines) {
      const double slot = avail / static_cast<double>(line.size());
      double tallest = 0;
      for (std::size_t j = 0; j < line.size(); ++j) {
        const int ei = doc.element_index(area.assigned_elements[line[j]]);
        const Alternative& a = detail::alt(in, ei);
        ElementVars& v = P.vars[ei];
        const double w = v.w.is_var() ? std::max(0.5 * slot, 1.5) : v.w.value;
        set(v.w, w);
        set(v.x, xpos[area.left] + slot * static_cast<double>(j) + 0.25 * slot);
        double h = v.h.is_var() ? 0 : v.h.value;
        if (a.modality == Modality::text) {
          const double f = std::clamp(a.preferred_font_size, kMinFont + 0.5, kMaxFont - 0.5);
          set(v.font, f);
          z[v.deficit] = std::max(a.preferred_font_size - f, 0.0) + 1.0;
          if (v.h.is_var()) h = 1.25 * text_fit_kappa(a) * f * f / w + 1.0;
        } else if (v.h.is_var()) {
          h = std::max(w * a.preferred_size.h / a.preferred_size.w, 1.5);
        }
        set(v.h, h);
        tallest = std::max(tallest, h);
      }
      line_h[ai].push_back(tallest + 2.0);
      line_h_total[ai] += tallest + 2.0;
    }
  }
  std::map<std::string, double> ypos{{std::string(kBoundaryTop), 0.0}};
  std::vector<std::string> yorder(t.y_tabstops.begin(), t.y_tabstops.end());
  yorder.push_back(std::string(kBoundaryBottom));
  double prev = 0;
  for (const auto& id : yorder) {
    double p = prev + 2.0;
    for (std::size_t ai = 0; ai < t.areas.size(); ++ai)
      if (t.areas[ai].bottom == id) p = std::max(p, ypos[t.areas[ai].top] + line_h_total[ai] + 1.0);
    ypos[id] = p;
    prev = p;
  }
  for (const auto& [id, o] : P.y_stops) set(o, ypos[id]);
  // The document may scroll, but the barrier needs a bounded region.  The
  // cap exceeds the stacked heights every element could usefully take: a
  // text box at its preferred font and minimum width, an image at the larger
  // of its preferred height and the height matching the viewport width.
  double tallest_stack = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Alternative& a = detail::alt(in, static_cast<int>(i));
    if (auto pin = in.pins.find(static_cast<int>(i)); pin != in.pins.end()) {
      tallest_stack += pin->second.h;
    } else if (a.modality == Modality::text) {
      const double f = std::clamp(a.preferred_font_size, kMinFont, kMaxFont);
      tallest_stack += text_fit_kappa(a) * f * f / kMinExtent;
    } else if (a.modality == Modality::image) {
      tallest_stack += std::max(a.preferred_size.h, in.viewport.width * a.preferred_size.h / a.preferred_size.w);
    } else {
      tallest_stack += a.preferred_size.h;
    }
  }
  const double cap = in.avoid_scrolling
                         ? in.viewport.height
                         : 4.0 * std::max(ypos[std::string(kBoundaryBottom)], in.viewport.height) + 2.0 * tallest_stack;
  if (!in.avoid_scrolling) ge_diff(Operand::constant(cap), bottom, 0.0);
  for (std::size_t ai = 0; ai < t.areas.size(); ++ai) {
    double top = ypos[t.areas[ai].top];
    const auto& band = P.bands[ai];
    for (std::size_t k = 0; k < P.flow[ai].lines.size(); ++k) {
      if (k > 0) set(band[k], top);
      for (int pos : P.flow[ai].lines[k]) {
        const int ei = doc.element_index(t.areas[ai].assigned_elements[pos]);
        set(P.vars[ei].y, top + 1.0);
      }
      top += line_h[ai][k];
    }
  }
  P.start = std::move(z);
  return P;
}

// ---- solving ---------------------------------------------------------------

struct ContinuousResult {
  bool feasible = false;
  bool iteration_cap = false;
  std::vector<ElementGeometry> geometry;
  std::map<std::string, double> x_tabstops, y_tabstops;  // interior tabstops only
  double document_height = 0;
  LossTerms terms;  // continuous terms only
  double loss = 0;  // weighted continuous loss
  std::vector<FlowLines> flow;
  std::vector<int> line_of;  // per element
  bool oversize = false;
  int newton_steps = 0;
};

/// One constrained minimization for a fixed line assignment, followed by
/// snapping: elements are left-packed within lines and top-aligned within
/// bands (aligned images keep their solved offsets).
inline ContinuousResult solve_continuous(const ContinuousProblem& P, const BarrierOptions& opt = {}) {
  ContinuousResult r;
  r.flow = P.flow;
  for (const auto& f : P.flow)
    for (bool o : f.oversize) r.oversize = r.oversize || o;
  auto br = minimize(P.program, P.start, opt);
  r.newton_steps = br.newton_steps;
  if (br.status == BarrierStatus::infeasible) return r;
  r.feasible = true;
  r.iteration_cap = br.status == BarrierStatus::iteration_cap;
  const Eigen::VectorXd& z = br.z;

  const Document& doc = *P.in.doc;
  const Template& t = *P.in.choice.tmpl;
  const std::size_t n = doc.elements.size();
  r.geometry.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = P.vars[i];
    r.geometry[i].box = {v.x.at(z), v.y.at(z), v.w.at(z), v.h.at(z)};
    if (v.font.is_var() || v.font.value > 0) r.geometry[i].font = v.font.at(z);
  }
  std::vector<bool> aligned(n, false);
  for (auto [i, j] : P.aligned) aligned[i] = aligned[j] = true;
  for (std::size_t ai = 0; ai < t.areas.size(); ++ai) {
    const auto& area = t.areas[ai];
    const double left = P.x_stops.at(area.left).at(z);
    for (std::size_t k = 0; k < P.flow[ai].lines.size(); ++k) {
      const double top = P.bands[ai][k].at(z);
      double cursor = left;
      for (int pos : P.flow[ai].lines[k]) {
        const int ei = doc.element_index(area.assigned_elements[pos]);
        Box& b = r.geometry[ei].box;
        if (P.in.pins.count(ei)) {
          cursor = b.x + b.w;
          continue;
        }
        b.x = cursor;
        cursor = b.x + b.w;
        if (!aligned[ei]) b.y = top;
      }
    }
  }
  for (const auto& id : t.x_tabstops) r.x_tabstops[id] = P.x_stops.at(id).at(z);
  for (const auto& id : t.y_tabstops) r.y_tabstops[id] = P.y_stops.at(id).at(z);
  r.document_height = P.y_stops.at(std::string(kBoundaryBottom)).at(z);
  r.line_of = P.line_of();
  r.terms = objective::continuous_terms(doc, P.in.choice, r.geometry, r.line_of);
  r.loss = objective::weighted_total(r.terms, P.in.weights);
  return r;
}

/// Alternates flow packing and constrained minimization until the line
/// assignment repeats; returns the best feasible round.  `seed` replaces the
/// first packing when given (warm start from a previous solve).
inline ContinuousResult solve_geometry(const GeometryInputs& in, const BarrierOptions& opt = {},
                                       const std::vector<FlowLines>* seed = nullptr) {
  const Document& doc = *in.doc;
  const Template& t = *in.choice.tmpl;
  std::vector<double> widths(doc.elements.size());
  for (std::size_t i = 0; i < widths.size(); ++i) widths[i] = detail::packing_width(in, static_cast<int>(i));

  std::vector<FlowLines> flow =
      seed && seed->size() == t.areas.size() ? *seed : pack_areas(in, widths, detail::even_x_positions(t, in.viewport.width));
  std::optional<ContinuousResult> best;
  std::vector<std::vector<FlowLines>> tried;
  int steps = 0;
  for (int round = 0; round < kMaxFlowRounds; ++round) {
    tried.push_back(flow);
    auto res = solve_continuous(build_continuous_problem(in, flow), opt);
    steps += res.newton_steps;
    if (!res.feasible) break;
    std::vector<double> solved(widths.size());
    for (std::size_t i = 0; i < solved.size(); ++i) solved[i] = res.geometry[i].box.w;
    std::map<std::string, double> xpos{{std::string(kBoundaryLeft), 0.0},
                                       {std::string(kBoundaryRight), in.viewport.width}};
    for (const auto& [id, p] : res.x_tabstops) xpos[id] = p;
    if (!best || res.loss < best->loss) best = std::move(res);
    // Small tolerance so a box that exactly fills its line stays put.
    for (auto& w : solved) w -= 1e-6;
    auto next = pack_areas(in, solved, xpos);
    if (std::find(tried.begin(), tried.end(), next) != tried.end()) break;
    flow = std::move(next);
  }
  if (!best) {
    // Fallback: everything on one line per row-wrap area.
    std::vector<FlowLines> single;
    for (const auto& area : t.areas) {
      std::vector<double> none(area.assigned_elements.size(), 0.0);
      single.push_back(flow_pack(none, t.flow_of(area), 1.0));
    }
    if (std::find(tried.begin(), tried.end(), single) == tried.end()) {
      auto res = solve_continuous(build_continuous_problem(in, single), opt);
      steps += res.newton_steps;
      if (res.feasible) best = std::move(res);
    }
  }
  if (!best) {
    ContinuousResult r;
    r.newton_steps = steps;
    return r;
  }
  best->newton_steps = steps;
  return *best;
}

/// Lower bound on the weighted image terms (size plus aspect ratio) of any
/// layout of this choice: images keep only horizontal containment in their
/// areas, everything else is dropped.  0 when there are no images.
inline double image_loss_lower_bound(const GeometryInputs& in, const BarrierOptions& opt = {}) {
  const Document& doc = *in.doc;
  const Template& t = *in.choice.tmpl;
  std::vector<int> images;
  for (std::size_t i = 0; i < doc.elements.size(); ++i)
    if (detail::alt(in, static_cast<int>(i)).modality == Modality::image) images.push_back(static_cast<int>(i));
  if (images.empty()) return 0.0;

  ConvexProgram prog;
  std::map<std::string, Operand> xs{{std::string(kBoundaryLeft), Operand::constant(0)},
                                    {std::string(kBoundaryRight), Operand::constant(in.viewport.width)}};
  std::vector<Operand> order{xs.at(std::string(kBoundaryLeft))};
  for (const auto& id : t.x_tabstops) order.push_back(xs[id] = Operand::variable(prog.add_var()));
  order.push_back(xs.at(std::string(kBoundaryRight)));
  auto ge_diff = [&](Operand a, Operand b, double c) {
    LinExpr e;
    e.add(a, 1.0).add(b, -1.0).shift(-c);
    prog.inequalities.push_back(std::move(e));
  };
  for (std::size_t i = 0; i + 1 < order.size(); ++i) ge_diff(order[i + 1], order[i], kMinGap);

  const double wgt = in.weights.image / static_cast<double>(images.size());
  double constant_part = 0;
  for (int i : images) {
    const Alternative& a = detail::alt(in, i);
    const ElementArea* area = nullptr;
    for (const auto& ar : t.areas)
      for (const auto& eid : ar.assigned_elements)
        if (eid == doc.elements[i].id) area = &ar;
    const double wp = a.preferred_size.w, hp = a.preferred_size.h;
    Operand x, w, h;
    auto pin = in.pins.find(i);
    if (pin != in.pins.end()) {
      x = Operand::constant(pin->second.x);
      w = Operand::constant(pin->second.w);
      const double hh = pin->second.h, ww = pin->second.w;
      const double r = ww * hp - hh * wp;
      constant_part += wgt * ((ww - wp) * (ww - wp) + (hh - hp) * (hh - hp) + r * r);
    } else {
      x = Operand::variable(prog.add_var());
      w = Operand::variable(prog.add_var());
      h = Operand::variable(prog.add_var());
      ge_diff(w, Operand::constant(0), kMinExtent);
      ge_diff(h, Operand::constant(0), kMinExtent);
      LinExpr dw, dh, ar;
      dw.add(w, 1.0).shift(-wp);
      dh.add(h, 1.0).shift(-hp);
      ar.add(w, hp).add(h, -wp);
      prog.squares.push_back({dw, wgt});
      prog.squares.push_back({dh, wgt});
      prog.squares.push_back({ar, wgt});
    }
    ge_diff(x, xs.at(area->left), 0.0);
    LinExpr e;
    e.add(xs.at(area->right), 1.0).add(x, -1.0).add(w, -1.0);
    prog.inequalities.push_back(std::move(e));
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(prog.num_vars);
  auto xpos = detail::even_x_positions(t, in.viewport.width);
  for (const auto& [id, o] : xs)
    if (o.is_var()) z[o.var] = xpos[id];
  int idx = static_cast<int>(t.x_tabstops.size());
  for (int i : images) {
    if (in.pins.count(i)) continue;
    const ElementArea* area = nullptr;
    for (const auto& ar : t.areas)
      for (const auto& eid : ar.assigned_elements)
        if (eid == doc.elements[i].id) area = &ar;
    const double l = xpos[area->left], r = xpos[area->right];
    const double w = std::max(0.5 * (r - l), 1.5);
    z[idx] = l + 0.25 * (r - l);
    z[idx + 1] = w;
    z[idx + 2] = std::max(1.5, w * detail::alt(in, i).preferred_size.h / detail::alt(in, i).preferred_size.w);
    idx += 3;
  }
  auto r = minimize(prog, z, opt);
  if (r.status == BarrierStatus::infeasible) return std::numeric_limits<double>::infinity();
  if (r.status == BarrierStatus::iteration_cap) return 0.0;  // no certificate
  return std::max(0.0, constant_part + r.objective - opt.gap - 1e-9);
}

}  // namespace flexdoc::solver
