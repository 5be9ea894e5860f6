#pragma once
// Discrete search over (template, alternative per element) with a
// continuous geometry solve per candidate.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexdoc/model.hpp"
#include "flexdoc/objective.hpp"
#include "flexdoc/solver/continuous.hpp"

namespace flexdoc::solver {

enum class SearchMode { automatic, exhaustive, beam };

inline std::optional<SearchMode> search_mode_from_string(std::string_view s) {
  if (s == "auto") return SearchMode::automatic;
  if (s == "exhaustive") return SearchMode::exhaustive;
  if (s == "beam") return SearchMode::beam;
  return std::nullopt;
}

class GeometryCache;

struct SolverConfig {
  SearchMode mode = SearchMode::automatic;
  int beam_width = 64;
  std::size_t exhaustive_limit = 4096;  // automatic mode switches to beam above this
  double tolerance = 1e-6;              // continuous duality gap, loss units
  int iteration_cap = 500;              // Newton steps per continuous solve
  std::chrono::milliseconds time_budget{450};
  double tie_tolerance = 1e-5;          // totals closer than this are ties
  ContinuousWeights weights;
  std::function<bool()> cancelled;      // polled between candidates
  GeometryCache* cache = nullptr;       // memo of continuous solves
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::string> relaxed)
      : Error(what), relaxed_(std::move(relaxed)) {}
  const std::vector<std::string>& relaxed() const { return relaxed_; }

 private:
  std::vector<std::string> relaxed_;
};

class CancelledError : public Error {
 public:
  CancelledError() : Error("solve cancelled") {}
};

/// Thread-safe memo of continuous solves keyed by a subproblem fingerprint.
class GeometryCache {
 public:
  explicit GeometryCache(std::size_t capacity = 4096) : capacity_(capacity) {}

  std::shared_ptr<const ContinuousResult> find(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : it->second;
  }
  void insert(const std::string& key, ContinuousResult r) {
    std::lock_guard lock(mu_);
    if (map_.size() >= capacity_) map_.clear();
    map_[key] = std::make_shared<const ContinuousResult>(std::move(r));
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return map_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const ContinuousResult>> map_;
};

// ---- candidates ------------------------------------------------------------

struct Candidate {
  const Template* tmpl = nullptr;
  std::vector<const Alternative*> alternatives;  // document element order
  double discrete = 0;                           // template plus element terms

  objective::DiscreteChoice choice() const { return {tmpl, alternatives}; }
};

/// Yields candidates in ascending discrete loss, at most `per_template` from
/// each template (0 = unlimited).  Forced alternatives and pins leave a
/// single option for their element.
class CandidateStream {
 public:
  CandidateStream(const Document& doc, const PreferenceState& prefs, const objective::Forcing& forcing,
                  std::size_t per_template)
      : doc_(doc), per_template_(per_template) {
    const int M = static_cast<int>(doc.templates.size());
    for (const auto& t : doc.templates)
      if (!forcing.template_id || *forcing.template_id == t.id) templates_.push_back(&t);
    std::sort(templates_.begin(), templates_.end(),
              [](const Template* a, const Template* b) { return a->rank < b->rank; });
    for (const auto& e : doc.elements) {
      std::vector<Option> opts;
      for (const auto& a : e.alternatives)
        if (auto v = objective::element_discrete_term(e, a, prefs, forcing)) opts.push_back({*v, &a});
      std::sort(opts.begin(), opts.end(), [](const Option& x, const Option& y) {
        return x.term != y.term ? x.term < y.term : x.alt->rank < y.alt->rank;
      });
      options_.push_back(std::move(opts));
    }
    for (const auto& o : options_)
      if (o.empty()) return;  // nothing feasible
    emitted_.assign(templates_.size(), 0);
    for (std::size_t ti = 0; ti < templates_.size(); ++ti) {
      Node n{objective::template_term(templates_[ti]->rank, M), static_cast<int>(ti),
             std::vector<int>(options_.size(), 0), 0};
      for (const auto& o : options_) n.sum += o[0].term;
      heap_.push(std::move(n));
    }
  }

  /// Number of candidates the stream can yield.
  std::size_t total() const {
    if (templates_.empty()) return 0;
    double product = 1;
    for (const auto& o : options_) product *= static_cast<double>(o.size());
    const double per = per_template_ ? std::min<double>(product, per_template_) : product;
    const double all = per * static_cast<double>(templates_.size());
    return all > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(all);
  }

  bool next(Candidate& out) {
    while (!heap_.empty()) {
      Node n = heap_.top();
      heap_.pop();
      if (per_template_ && emitted_[n.tmpl] >= per_template_) continue;
      ++emitted_[n.tmpl];
      // Children increment one position at or after the last incremented
      // one, so every combination is generated exactly once.
      for (std::size_t i = n.pivot; i < options_.size(); ++i) {
        if (n.pos[i] + 1 >= static_cast<int>(options_[i].size())) continue;
        Node c = n;
        c.sum += options_[i][c.pos[i] + 1].term - options_[i][c.pos[i]].term;
        ++c.pos[i];
        c.pivot = i;
        heap_.push(std::move(c));
      }
      out.tmpl = templates_[n.tmpl];
      out.alternatives.resize(options_.size());
      for (std::size_t i = 0; i < options_.size(); ++i) out.alternatives[i] = options_[i][n.pos[i]].alt;
      out.discrete = n.sum;
      return true;
    }
    return false;
  }

 private:
  struct Option {
    double term;
    const Alternative* alt;
  };
  struct Node {
    double sum;
    int tmpl;
    std::vector<int> pos;
    std::size_t pivot;
  };
  struct Later {
    bool operator()(const Node& a, const Node& b) const {
      if (a.sum != b.sum) return a.sum > b.sum;
      if (a.tmpl != b.tmpl) return a.tmpl > b.tmpl;
      return a.pos > b.pos;
    }
  };

  const Document& doc_;
  std::size_t per_template_;
  std::vector<const Template*> templates_;
  std::vector<std::vector<Option>> options_;
  std::vector<std::size_t> emitted_;
  std::priority_queue<Node, std::vector<Node>, Later> heap_;
};

/// Candidates of the full product space (or at most beam_width per template
/// in beam mode), in ascending discrete loss.
inline std::vector<Candidate> enumerate_candidates(const Document& doc, const PreferenceState& prefs,
                                                   const SolverConfig& config) {
  const auto forcing = objective::forcing_from(doc, prefs);
  CandidateStream probe(doc, prefs, forcing, 0);
  const bool beam = config.mode == SearchMode::beam ||
                    (config.mode == SearchMode::automatic && probe.total() > config.exhaustive_limit);
  if (!beam && probe.total() > 10'000'000) throw Error("candidate space too large to list");
  CandidateStream s(doc, prefs, forcing, beam ? static_cast<std::size_t>(config.beam_width) : 0);
  std::vector<Candidate> out;
  Candidate c;
  while (s.next(c)) out.push_back(c);
  if (out.empty()) throw InfeasibleError("no candidate satisfies the forced choices", {});
  return out;
}

// ---- solve -----------------------------------------------------------------

/// Pinned boxes by element index: viewer pins, then bundle pins.
inline std::map<int, Box> effective_pins(const Document& doc, const PreferenceState& prefs) {
  std::map<int, Box> pins;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    auto it = prefs.pins.find(e.id);
    if (it != prefs.pins.end()) pins[static_cast<int>(i)] = it->second.box;
    else if (e.pinned_geometry) pins[static_cast<int>(i)] = *e.pinned_geometry;
  }
  return pins;
}

namespace detail {

inline std::string fingerprint(const Candidate& c, const GeometryInputs& in, const SolverConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << c.tmpl->id << '|';
  for (const auto* a : c.alternatives) os << a->id << ',';
  os << '|' << in.viewport.width << 'x' << in.viewport.height << '|' << in.avoid_scrolling << '|'
     << in.weights.image << ',' << in.weights.text << ',' << in.weights.align << '|' << cfg.tolerance << ','
     << cfg.iteration_cap << '|';
  for (const auto& [i, b] : in.pins) os << i << ':' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ';';
  return os.str();
}

struct Scored {
  Candidate cand;
  std::shared_ptr<const ContinuousResult> geometry;
  objective::LossTerms terms;
  double total = 0;
};

/// Lower template rank first, then lexicographically lower alternative ranks.
inline bool prefer(const Scored& a, const Scored& b) {
  if (a.cand.tmpl->rank != b.cand.tmpl->rank) return a.cand.tmpl->rank < b.cand.tmpl->rank;
  for (std::size_t i = 0; i < a.cand.alternatives.size(); ++i)
    if (a.cand.alternatives[i]->rank != b.cand.alternatives[i]->rank)
      return a.cand.alternatives[i]->rank < b.cand.alternatives[i]->rank;
  return false;
}

struct SearchOutcome {
  std::vector<Scored> feasible;
  bool truncated = false;
  std::size_t evaluated = 0;
};

inline SearchOutcome search(const Document& doc, const Viewport& viewport, const PreferenceState& prefs,
                            const objective::Forcing& forcing, const SolverConfig& cfg,
                            std::chrono::steady_clock::time_point deadline) {
  CandidateStream probe(doc, prefs, forcing, 0);
  const bool beam = cfg.mode == SearchMode::beam ||
                    (cfg.mode == SearchMode::automatic && probe.total() > cfg.exhaustive_limit);
  CandidateStream stream(doc, prefs, forcing, beam ? static_cast<std::size_t>(cfg.beam_width) : 0);

  GeometryInputs in;
  in.doc = &doc;
  in.viewport = viewport;
  in.pins = effective_pins(doc, prefs);
  in.avoid_scrolling = prefs.avoid_scrolling;
  in.weights = cfg.weights;
  BarrierOptions bopt;
  bopt.gap = cfg.tolerance;
  bopt.max_newton = cfg.iteration_cap;

  SearchOutcome out;
  double incumbent = std::numeric_limits<double>::infinity();
  std::map<std::string, double> image_bounds;  // per template and image choice
  std::set<std::string> done;

  auto evaluate = [&](const Candidate& c) {
    std::string key = fingerprint(c, in, cfg);
    if (!done.insert(key).second) return;
    in.choice = c.choice();
    double text_reward = 0;
    int n_text = 0;
    for (const auto* a : c.alternatives)
      if (a->modality == Modality::text) {
        text_reward += a->similarity;
        ++n_text;
      }
    double bound = c.discrete - (n_text ? cfg.weights.text * text_reward / n_text : 0.0);
    if (bound > incumbent + cfg.tie_tolerance) return;
    std::string img_key = c.tmpl->id;
    for (const auto* a : c.alternatives)
      if (a->modality == Modality::image) img_key += "|" + a->id;
    auto ib = image_bounds.find(img_key);
    if (ib == image_bounds.end()) ib = image_bounds.emplace(img_key, image_loss_lower_bound(in, bopt)).first;
    bound += ib->second;
    if (bound > incumbent + cfg.tie_tolerance) return;

    ++out.evaluated;
    std::shared_ptr<const ContinuousResult> geo = cfg.cache ? cfg.cache->find(key) : nullptr;
    if (!geo) {
      auto r = solve_geometry(in, bopt);
      if (cfg.cache) {
        cfg.cache->insert(key, r);
        geo = cfg.cache->find(key);
      }
      if (!geo) geo = std::make_shared<const ContinuousResult>(std::move(r));
    }
    if (!geo->feasible) return;
    auto disc = objective::discrete_terms(doc, c.choice(), prefs, forcing);
    Scored s{c, geo, geo->terms, 0};
    for (const auto& [k, v] : *disc) s.terms[k] = v;
    s.total = objective::weighted_total(s.terms, cfg.weights);
    incumbent = std::min(incumbent, s.total);
    out.feasible.push_back(std::move(s));
  };
  auto out_of_time = [&] {
    if (cfg.cancelled && cfg.cancelled()) throw CancelledError();
    if (!out.feasible.empty() && std::chrono::steady_clock::now() > deadline) {
      out.truncated = true;
      return true;
    }
    return false;
  };

  // Seed the incumbent with each template's best discrete candidate so
  // hopeless templates are pruned by their bound.
  {
    CandidateStream seeds(doc, prefs, forcing, 1);
    Candidate c;
    while (seeds.next(c) && !out_of_time()) evaluate(c);
  }
  Candidate c;
  while (!out.truncated && stream.next(c)) {
    // The continuous part is at least -w_text (similarity reward); the
    // stream is ordered, so nothing later can beat the incumbent.
    if (c.discrete - cfg.weights.text > incumbent + cfg.tie_tolerance) break;
    if (out_of_time()) break;
    evaluate(c);
  }
  return out;
}

inline LayoutSolution make_solution(const Document& doc, const Scored& s) {
  LayoutSolution sol;
  sol.template_id = s.cand.tmpl->id;
  const auto& g = *s.geometry;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const Alternative& a = *s.cand.alternatives[i];
    ElementPlacement p;
    p.element_id = doc.elements[i].id;
    p.alternative_id = a.id;
    p.modality = a.modality;
    p.box = g.geometry[i].box;
    if (a.modality == Modality::text) p.font_size = g.geometry[i].font;
    else if (const Asset* as = doc.find_asset(a.asset)) p.asset_hash = as->hash;
    sol.placements.push_back(std::move(p));
  }
  sol.x_tabstops = g.x_tabstops;
  sol.y_tabstops = g.y_tabstops;
  sol.document_height = g.document_height;
  sol.loss_breakdown = s.terms;
  sol.total_loss = s.total;
  return sol;
}

/// Forcing relaxation ladder: each step drops one more kind of forcing.
inline std::vector<std::pair<objective::ForcingMask, std::vector<std::string>>> relaxation_ladder(
    const PreferenceState& prefs) {
  std::vector<std::pair<objective::ForcingMask, std::vector<std::string>>> out;
  objective::ForcingMask mask;
  std::vector<std::string> dropped;
  out.push_back({mask, dropped});
  if (!prefs.zoom_deltas.empty()) {
    mask.zoom = false;
    for (const auto& [eid, _] : prefs.zoom_deltas) dropped.push_back("zoom:" + eid);
    out.push_back({mask, dropped});
  }
  if (!prefs.forced_alternatives.empty()) {
    mask.zoom = false;
    mask.alternatives = false;
    for (const auto& [eid, _] : prefs.forced_alternatives) dropped.push_back("forced_alternative:" + eid);
    out.push_back({mask, dropped});
  }
  if (prefs.forced_template) {
    mask = {false, false, false};
    dropped.push_back("forced_template:" + *prefs.forced_template);
    out.push_back({mask, dropped});
  }
  return out;
}

}  // namespace detail

/// Best layout for the document at this viewport and preference state.
/// Throws InfeasibleError when no candidate is feasible even after
/// dropping zoom, forced alternatives and the forced template (pins are
/// never dropped).
inline LayoutSolution solve(const Document& doc, const Viewport& viewport, const PreferenceState& prefs,
                            const SolverConfig& config = {}) {
  if (!viewport.valid()) throw std::invalid_argument("viewport must be positive");
  const auto deadline = std::chrono::steady_clock::now() + config.time_budget;
  std::vector<std::string> tried;
  for (const auto& [mask, dropped] : detail::relaxation_ladder(prefs)) {
    const auto forcing = objective::forcing_from(doc, prefs, mask);
    auto outcome = detail::search(doc, viewport, prefs, forcing, config, deadline);
    tried = dropped;
    if (outcome.feasible.empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : outcome.feasible) best = std::min(best, s.total);
    const detail::Scored* pick = nullptr;
    for (const auto& s : outcome.feasible)
      if (s.total <= best + config.tie_tolerance && (!pick || detail::prefer(s, *pick))) pick = &s;
    LayoutSolution sol = detail::make_solution(doc, *pick);
    sol.relaxed = dropped;
    sol.truncated = outcome.truncated;
    return sol;
  }
  std::string msg = "no feasible layout";
  if (!tried.empty()) {
    msg += " after relaxing";
    for (const auto& t : tried) msg += " " + t;
  }
  msg += " (pinned content is never relaxed)";
  throw InfeasibleError(msg, tried);
}

// ---- interactions ------------------------------------------------------------

enum class InteractionKind { zoom_in, zoom_out, pin, unpin, switch_template, switch_element };

inline std::optional<InteractionKind> interaction_from_string(std::string_view s) {
  if (s == "zoom_in") return InteractionKind::zoom_in;
  if (s == "zoom_out") return InteractionKind::zoom_out;
  if (s == "pin") return InteractionKind::pin;
  if (s == "unpin") return InteractionKind::unpin;
  if (s == "switch_template") return InteractionKind::switch_template;
  if (s == "switch_element") return InteractionKind::switch_element;
  return std::nullopt;
}

struct Interaction {
  InteractionKind kind = InteractionKind::zoom_in;
  std::string element_id;
  std::string template_id;     // switch_template
  std::string alternative_id;  // switch_element
};

/// Relaxation entries that would undo this interaction.
inline std::vector<std::string> relaxation_keys(const Interaction& i) {
  switch (i.kind) {
    case InteractionKind::zoom_in:
    case InteractionKind::zoom_out: return {"zoom:" + i.element_id};
    case InteractionKind::switch_element: return {"forced_alternative:" + i.element_id};
    case InteractionKind::switch_template: return {"forced_template:" + i.template_id};
    default: return {};
  }
}

/// Preference state after applying an interaction to the displayed solution.
inline PreferenceState apply_interaction(const Document& doc, const LayoutSolution& shown,
                                         const Interaction& i, PreferenceState prefs) {
  auto element = [&]() -> const Element& {
    const Element* e = doc.find_element(i.element_id);
    if (!e) throw std::invalid_argument("unknown element '" + i.element_id + "'");
    return *e;
  };
  switch (i.kind) {
    case InteractionKind::zoom_in:
    case InteractionKind::zoom_out: {
      const Element& e = element();
      const ElementPlacement* p = shown.find(e.id);
      const Alternative* cur = p ? e.find(p->alternative_id) : nullptr;
      if (!cur) cur = e.by_rank(1);
      const int step = i.kind == InteractionKind::zoom_in ? 1 : -1;
      const int level = std::clamp(cur->detail_level + step, 0, e.max_detail_level());
      prefs.zoom_deltas[e.id] = level - e.by_rank(1)->detail_level;
      prefs.forced_alternatives.erase(e.id);
      break;
    }
    case InteractionKind::pin: {
      const Element& e = element();
      const ElementPlacement* p = shown.find(e.id);
      if (!p) throw std::invalid_argument("element '" + e.id + "' is not in the displayed layout");
      prefs.pins[e.id] = {p->box, p->alternative_id};
      break;
    }
    case InteractionKind::unpin:
      prefs.pins.erase(element().id);
      break;
    case InteractionKind::switch_template:
      if (!doc.find_template(i.template_id))
        throw std::invalid_argument("unknown template '" + i.template_id + "'");
      prefs.forced_template = i.template_id;
      break;
    case InteractionKind::switch_element: {
      const Element& e = element();
      if (!e.find(i.alternative_id))
        throw std::invalid_argument("unknown alternative '" + i.alternative_id + "' of '" + e.id + "'");
      prefs.forced_alternatives[e.id] = i.alternative_id;
      prefs.zoom_deltas.erase(e.id);
      break;
    }
  }
  return prefs;
}

/// Applies the interaction to `prefs` and re-solves.
inline LayoutSolution resolve_interaction(const LayoutSolution& previous, const Interaction& interaction,
                                          const Document& doc, const Viewport& viewport, PreferenceState& prefs,
                                          const SolverConfig& config = {}) {
  PreferenceState next = apply_interaction(doc, previous, interaction, prefs);
  LayoutSolution sol = solve(doc, viewport, next, config);
  prefs = std::move(next);
  return sol;
}

}  // namespace flexdoc::solver
