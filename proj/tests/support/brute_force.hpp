#pragma once
// Brute-force reference solver for small documents.
//
// Oracle documents use templates made of vertical strips spanning the page
// (optionally under a full-width header row).  Each strip holds one
// element, or two stacked in a column flow.  For such layouts every
// element's best continuous cost depends only on the width of its strip,
// so the reference enumerates all discrete candidates and, for each,
// grid-searches the strip widths at 1 px before refining by ternary search.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "flexdoc/document_io.hpp"
#include "support/generators.hpp"

namespace flexdoc::testkit {

struct OracleCase {
  Document doc;
  Viewport viewport;
  PreferenceState prefs;
};

inline OracleCase random_oracle_case(unsigned seed) {
  std::mt19937 rng(seed * 7919u + 17u);
  std::uniform_real_distribution<double> u(0, 1);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  OracleCase oc;
  Document& d = oc.doc;
  const int n = pick(1, 3);
  for (int i = 0; i < n; ++i) {
    Element e;
    e.id = "e" + std::to_string(i);
    const int K = pick(1, 3);
    for (int k = 0; k < K; ++k) {
      Alternative a;
      a.id = e.id + "a" + std::to_string(k);
      a.rank = k + 1;
      if (u(rng) < 0.5) {
        a.modality = Modality::image;
        a.asset = "asset" + std::to_string(d.assets.size());
        d.assets.push_back({a.asset, a.asset + ".png", "image/png", ""});
        a.preferred_size = {static_cast<double>(pick(60, 300)), static_cast<double>(pick(40, 250))};
      } else {
        a.modality = Modality::text;
        a.text = paragraph(rng, pick(1, 4));
        a.preferred_font_size = pick(10, 24);
        a.preferred_size = {300, 100};
      }
      e.alternatives.push_back(std::move(a));
    }
    std::shuffle(e.alternatives.begin(), e.alternatives.end(), rng);
    d.elements.push_back(std::move(e));
  }
  oc.prefs.avoid_scrolling = u(rng) < 0.3;
  oc.viewport = {static_cast<double>(pick(400, 1000)), static_cast<double>(pick(300, 900))};
  if (u(rng) < 0.3) oc.prefs.sliders[Modality::image] = std::round(u(rng) * 20) / 20;
  if (u(rng) < 0.3) oc.prefs.sliders[Modality::text] = std::round(u(rng) * 20) / 20;

  const int M = pick(1, 2);
  for (int m = 0; m < M; ++m) {
    Template t;
    t.id = "t" + std::to_string(m);
    t.rank = m + 1;
    std::vector<std::string> ids;
    for (const auto& e : d.elements) ids.push_back(e.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::string top = "top";
    if (!oc.prefs.avoid_scrolling && n >= 2 && u(rng) < 0.4) {
      t.y_tabstops = {"head"};
      t.areas.push_back({"left", "right", "top", "head", {ids.front()}, std::nullopt});
      ids.erase(ids.begin());
      top = "head";
    }
    // Split the rest into strips; a strip takes two elements only when
    // scrolling is allowed.
    std::vector<std::vector<std::string>> strips;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!strips.empty() && strips.back().size() == 1 && !oc.prefs.avoid_scrolling && u(rng) < 0.3)
        strips.back().push_back(ids[i]);
      else
        strips.push_back({ids[i]});
    }
    for (std::size_t s = 1; s < strips.size(); ++s) t.x_tabstops.push_back("s" + std::to_string(s));
    for (std::size_t s = 0; s < strips.size(); ++s) {
      ElementArea a;
      a.left = s == 0 ? "left" : "s" + std::to_string(s);
      a.right = s + 1 == strips.size() ? "right" : "s" + std::to_string(s + 1);
      a.top = top;
      a.bottom = "bottom";
      a.assigned_elements = strips[s];
      if (strips[s].size() > 1) a.flow_direction = FlowDirection::column;
      t.areas.push_back(std::move(a));
    }
    d.templates.push_back(std::move(t));
  }
  derive(d);
  return oc;
}

/// Minimum of (w-wp)^2 + (h-hp)^2 + (w*hp - h*wp)^2 over [1, wmax] x [1, hmax].
inline double image_box_cost(double wp, double hp, double wmax, double hmax) {
  auto q = [&](double w, double h) {
    const double r = w * hp - h * wp;
    return (w - wp) * (w - wp) + (h - hp) * (h - hp) + r * r;
  };
  if (wp <= wmax && hp <= hmax) return 0.0;
  // The minimizer lies on the boundary; minimize along each edge.
  double best = std::numeric_limits<double>::infinity();
  auto along_w = [&](double h) {  // fixed h, quadratic in w: (1 + hp^2) w^2 - 2 (wp + hp^2 ... )
    const double w = std::clamp((wp + hp * h * wp) / (1 + hp * hp), 1.0, wmax);
    best = std::min(best, q(w, h));
  };
  auto along_h = [&](double w) {
    const double h = std::clamp((hp + wp * w * hp) / (1 + wp * wp), 1.0, hmax);
    best = std::min(best, q(w, h));
  };
  along_w(1.0);
  along_w(hmax);
  along_h(1.0);
  along_h(wmax);
  return best;
}

struct OracleResult {
  double total = std::numeric_limits<double>::infinity();
  double discrete = 0;
  double continuous = 0;
  bool feasible = false;
  std::string template_id;
  std::vector<int> pick;  // alternative index per element
};

/// Template term plus per-element terms, written from the definitions.
inline double oracle_discrete(const Document& d, const Template& t, const std::vector<int>& pick,
                              const PreferenceState& p) {
  const int M = static_cast<int>(d.templates.size());
  double s = -1000.0 * (M + 1 - t.rank);
  for (std::size_t i = 0; i < d.elements.size(); ++i) {
    const auto& e = d.elements[i];
    const Alternative& a = e.alternatives[pick[i]];
    const int K = static_cast<int>(e.alternatives.size());
    bool touched = false;
    for (const auto& b : e.alternatives) {
      auto it = p.sliders.find(b.modality);
      touched = touched || (it != p.sliders.end() && it->second != 0.5);
    }
    if (touched) {
      auto it = p.sliders.find(a.modality);
      const double sl = it == p.sliders.end() ? 0.5 : it->second;
      s += (0.5 - sl) * 50.0 * (K + 1 - a.rank);
    } else {
      s += -50.0 * (K + 1 - a.rank);
    }
  }
  return s;
}

/// Best continuous loss of one candidate; infinity if infeasible.
inline double oracle_continuous(const Document& d, const Template& t, const std::vector<int>& pick,
                                const Viewport& vp, bool avoid_scrolling) {
  const double W = vp.width, H = vp.height;
  int n_img = 0, n_text = 0;
  for (std::size_t i = 0; i < d.elements.size(); ++i) {
    const auto m = d.elements[i].alternatives[pick[i]].modality;
    n_img += m == Modality::image;
    n_text += m == Modality::text;
  }
  double sim = 0;
  for (std::size_t i = 0; i < d.elements.size(); ++i) {
    const Alternative& a = d.elements[i].alternatives[pick[i]];
    if (a.modality == Modality::text) sim += a.similarity;
  }
  // Cost of element i given the width available to it.
  auto cost = [&](int i, double s) {
    const Alternative& a = d.elements[i].alternatives[pick[i]];
    if (a.modality == Modality::image)
      return image_box_cost(a.preferred_size.w, a.preferred_size.h, s, avoid_scrolling ? H : 1e12) / n_img;
    double fmax = 72;
    if (avoid_scrolling) {
      std::size_t glyphs = 0;
      for (unsigned char c : a.text) glyphs += (c & 0xC0) != 0x80;
      fmax = std::min(72.0, std::sqrt(H * s / (0.6 * static_cast<double>(glyphs))));
      if (fmax < 6) return std::numeric_limits<double>::infinity();
    }
    return std::max(a.preferred_font_size - fmax, 0.0) / n_text;
  };
  double fixed = n_text ? -sim / n_text : 0.0;
  std::vector<std::vector<int>> strips;
  for (const auto& area : t.areas) {
    std::vector<int> members;
    for (const auto& id : area.assigned_elements) members.push_back(d.element_index(id));
    if (area.left == "left" && area.right == "right" && area.bottom != "bottom") {
      for (int i : members) fixed += cost(i, W);
    } else {
      strips.push_back(members);
    }
  }
  auto strip_cost = [&](std::size_t k, double s) {
    double c = 0;
    for (int i : strips[k]) c += cost(i, s);
    return c;
  };
  const std::size_t k = strips.size();
  auto ternary = [](auto f, double lo, double hi) {
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
      if (f(a) <= f(b)) hi = b;
      else lo = a;
    }
    return f(0.5 * (lo + hi));
  };
  double best = std::numeric_limits<double>::infinity();
  if (k == 1) {
    best = strip_cost(0, W);
  } else if (k == 2) {
    auto f = [&](double s1) { return strip_cost(0, s1) + strip_cost(1, W - s1); };
    int arg = 1;
    for (int s1 = 1; s1 <= static_cast<int>(W) - 1; ++s1)
      if (f(s1) < best) best = f(s1), arg = s1;
    best = std::min(best, ternary(f, std::max(1.0, arg - 2.0), std::min(W - 1, arg + 2.0)));
  } else if (k == 3) {
    auto f = [&](double s1, double s2) { return strip_cost(0, s1) + strip_cost(1, s2) + strip_cost(2, W - s1 - s2); };
    std::vector<double> c0(static_cast<int>(W) + 1), c1(c0.size()), c2(c0.size());
    for (int s = 1; s <= static_cast<int>(W); ++s) c0[s] = strip_cost(0, s), c1[s] = strip_cost(1, s), c2[s] = strip_cost(2, s);
    int a1 = 1, a2 = 1;
    const int Wi = static_cast<int>(W);
    for (int s1 = 1; s1 <= Wi - 2; ++s1)
      for (int s2 = 1; s1 + s2 <= Wi - 1; ++s2) {
        const double v = c0[s1] + c1[s2] + c2[Wi - s1 - s2];
        if (v < best) best = v, a1 = s1, a2 = s2;
      }
    auto inner = [&](double s1) {
      return ternary([&](double s2) { return f(s1, s2); }, std::max(1.0, a2 - 2.0), std::min(W - s1 - 1, a2 + 2.0));
    };
    best = std::min(best, ternary(inner, std::max(1.0, a1 - 2.0), std::min(W - 2, a1 + 2.0)));
  }
  return fixed + best;
}

/// Exhaustive minimum over every (template, alternatives) candidate.
inline OracleResult oracle_solve(const OracleCase& oc) {
  OracleResult r;
  const Document& d = oc.doc;
  std::vector<int> pick(d.elements.size(), 0);
  for (const auto& t : d.templates) {
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      const double c = oracle_continuous(d, t, pick, oc.viewport, oc.prefs.avoid_scrolling);
      if (std::isfinite(c)) {
        const double disc = oracle_discrete(d, t, pick, oc.prefs);
        if (disc + c < r.total) r = {disc + c, disc, c, true, t.id, pick};
      }
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == static_cast<int>(d.elements[i].alternatives.size())) pick[i++] = 0;
      if (i == pick.size()) break;
    }
  }
  return r;
}

/// Indices of the alternatives a solution chose, for oracle lookups.
inline std::vector<int> chosen_indices(const Document& d, const LayoutSolution& s) {
  std::vector<int> out;
  for (const auto& e : d.elements) {
    const ElementPlacement* p = s.find(e.id);
    int idx = -1;
    for (std::size_t k = 0; k < e.alternatives.size(); ++k)
      if (p && e.alternatives[k].id == p->alternative_id) idx = static_cast<int>(k);
    out.push_back(idx);
  }
  return out;
}

}  // namespace flexdoc::testkit
