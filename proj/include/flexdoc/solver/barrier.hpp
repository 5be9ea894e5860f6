#pragma once
// Log-barrier interior-point method for the convex programs produced by the
// layout builder:
//
//   minimize    sum_i weight_i * (a_i . z + b_i)^2  +  c . z + d
//   subject to  g_k(z) = a_k . z + b_k >= 0
//               g_f(z) = l_f(z) - kappa_f * font^2 / width >= 0
//
// The second family (quadratic-over-linear) is convex for width > 0 and
// models the text-fit requirement.  Newton steps use a sparse LDL^T
// factorization whose pattern is analyzed once per program.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace flexdoc::solver {

/// A variable reference or a constant.
struct Operand {
  int var = -1;
  double value = 0;

  static Operand variable(int v) { return {v, 0}; }
  static Operand constant(double c) { return {-1, c}; }
  bool is_var() const { return var >= 0; }
  double at(const Eigen::VectorXd& z) const { return var >= 0 ? z[var] : value; }
};

struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}

  LinExpr& add(int var, double coef) {
    for (auto& [v, c] : terms)
      if (v == var) {
        c += coef;
        return *this;
      }
    terms.push_back({var, coef});
    return *this;
  }
  LinExpr& add(Operand o, double coef) {
    if (o.is_var()) add(o.var, coef);
    else constant += coef * o.value;
    return *this;
  }
  LinExpr& shift(double c) {
    constant += c;
    return *this;
  }
  bool is_constant() const {
    for (const auto& [_, c] : terms)
      if (c != 0) return false;
    return true;
  }
  double eval(const Eigen::VectorXd& z) const {
    double s = constant;
    for (const auto& [v, c] : terms) s += c * z[v];
    return s;
  }
};

/// lhs(z) - kappa * font^2 / width >= 0.
struct FitConstraint {
  LinExpr lhs;
  Operand font;
  Operand width;
  double kappa = 0;

  double eval(const Eigen::VectorXd& z) const {
    const double f = font.at(z), w = width.at(z);
    return lhs.eval(z) - kappa * f * f / w;
  }
};

struct ConvexProgram {
  int num_vars = 0;
  std::vector<std::pair<LinExpr, double>> squares;  // (expr, weight)
  LinExpr linear;
  std::vector<LinExpr> inequalities;  // expr >= 0
  std::vector<FitConstraint> fits;

  int add_var() { return num_vars++; }

  double objective(const Eigen::VectorXd& z) const {
    double s = linear.eval(z);
    for (const auto& [e, w] : squares) {
      const double v = e.eval(z);
      s += w * v * v;
    }
    return s;
  }
};

struct BarrierOptions {
  double gap = 1e-6;          // stop when the duality gap bound m/t falls below
  double mu = 40.0;           // barrier parameter growth
  int max_newton = 500;       // total Newton steps, both phases
  double slack = 1e-7;        // every non-constant constraint is relaxed by this
  double centering = 1e-10;   // Newton decrement^2/2 threshold
};

enum class BarrierStatus { optimal, infeasible, iteration_cap };

struct BarrierResult {
  BarrierStatus status = BarrierStatus::infeasible;
  Eigen::VectorXd z;
  double objective = std::numeric_limits<double>::infinity();
  int newton_steps = 0;
};

namespace detail {

/// Evaluates t * f0 + barrier with gradient and Hessian for one program.
class BarrierModel {
 public:
  BarrierModel(const ConvexProgram& p, double slack) : p_(p), slack_(slack), n_(p.num_vars) {
    for (std::size_t k = 0; k < p.inequalities.size(); ++k)
      if (!p.inequalities[k].is_constant()) lin_.push_back(k);
    build_pattern();
  }

  int barrier_terms() const { return static_cast<int>(lin_.size() + p_.fits.size()); }

  /// Smallest relaxed constraint value; positive iff strictly feasible.
  double min_slack(const Eigen::VectorXd& z) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k : lin_) m = std::min(m, p_.inequalities[k].eval(z) + slack_);
    for (const auto& f : p_.fits) {
      if (f.width.at(z) <= 0) return -1;
      m = std::min(m, f.eval(z) + slack_);
    }
    return m;
  }

  /// +inf outside the domain.
  double value(const Eigen::VectorXd& z, double t) const {
    double phi = 0;
    for (std::size_t k : lin_) {
      const double g = p_.inequalities[k].eval(z) + slack_;
      if (!(g > 0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(g);
    }
    for (const auto& f : p_.fits) {
      if (!(f.width.at(z) > 0)) return std::numeric_limits<double>::infinity();
      const double g = f.eval(z) + slack_;
      if (!(g > 0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(g);
    }
    return t * p_.objective(z) + phi;
  }

  void derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& grad) {
    grad.setZero(n_);
    auto* val = H_.valuePtr();
    std::fill(val, val + H_.nonZeros(), 0.0);
    std::size_t slot = 0;

    for (const auto& [v, c] : p_.linear.terms) grad[v] += t * c;
    for (const auto& [e, w] : p_.squares) {
      const double r = e.eval(z);
      for (const auto& [v, c] : e.terms) grad[v] += t * 2.0 * w * r * c;
      accumulate_outer(e.terms, t * 2.0 * w, slot);
    }
    for (std::size_t k : lin_) {
      const auto& e = p_.inequalities[k];
      const double g = e.eval(z) + slack_;
      for (const auto& [v, c] : e.terms) grad[v] -= c / g;
      accumulate_outer(e.terms, 1.0 / (g * g), slot);
    }
    for (const auto& f : p_.fits) {
      const double fv = f.font.at(z), wv = f.width.at(z);
      const double g = f.eval(z) + slack_;
      // gradient of g
      scratch_.clear();
      for (const auto& [v, c] : f.lhs.terms) scratch_.push_back({v, c});
      if (f.font.is_var()) add_to(scratch_, f.font.var, -2.0 * f.kappa * fv / wv);
      if (f.width.is_var()) add_to(scratch_, f.width.var, f.kappa * fv * fv / (wv * wv));
      for (const auto& [v, c] : scratch_) grad[v] -= c / g;
      accumulate_outer(scratch_, 1.0 / (g * g), slot);
      // -hess(g)/g
      const double hff = -2.0 * f.kappa / wv;
      const double hfw = 2.0 * f.kappa * fv / (wv * wv);
      const double hww = -2.0 * f.kappa * fv * fv / (wv * wv * wv);
      if (f.font.is_var()) val[fit_slots_[slot++]] -= hff / g;
      if (f.font.is_var() && f.width.is_var()) val[fit_slots_[slot++]] -= hfw / g;
      if (f.width.is_var()) val[fit_slots_[slot++]] -= hww / g;
    }
  }

  const Eigen::SparseMatrix<double>& hessian() const { return H_; }
  Eigen::SparseMatrix<double>& hessian() { return H_; }

 private:
  using Terms = std::vector<std::pair<int, double>>;

  static void add_to(Terms& ts, int v, double c) {
    for (auto& [u, d] : ts)
      if (u == v) {
        d += c;
        return;
      }
    ts.push_back({v, c});
  }

  void accumulate_outer(const Terms& ts, double scale, std::size_t& slot) {
    auto* val = H_.valuePtr();
    for (std::size_t a = 0; a < ts.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) val[fit_slots_[slot++]] += scale * ts[a].second * ts[b].second;
  }

  // Records every (row >= col) pair touched, in the same order derivatives()
  // visits them, and maps each to its position in the value array.
  void build_pattern() {
    std::vector<std::pair<int, int>> pairs;
    auto outer = [&](const std::vector<int>& vars) {
      for (std::size_t a = 0; a < vars.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b)
          pairs.push_back({std::max(vars[a], vars[b]), std::min(vars[a], vars[b])});
    };
    auto vars_of = [](const Terms& ts) {
      std::vector<int> v;
      for (const auto& [u, _] : ts) v.push_back(u);
      return v;
    };
    for (const auto& [e, _] : p_.squares) outer(vars_of(e.terms));
    for (std::size_t k : lin_) outer(vars_of(p_.inequalities[k].terms));
    for (const auto& f : p_.fits) {
      Terms ts;
      for (const auto& [v, c] : f.lhs.terms) ts.push_back({v, c});
      if (f.font.is_var()) add_to(ts, f.font.var, 1.0);
      if (f.width.is_var()) add_to(ts, f.width.var, 1.0);
      outer(vars_of(ts));
      if (f.font.is_var()) pairs.push_back({f.font.var, f.font.var});
      if (f.font.is_var() && f.width.is_var())
        pairs.push_back({std::max(f.font.var, f.width.var), std::min(f.font.var, f.width.var)});
      if (f.width.is_var()) pairs.push_back({f.width.var, f.width.var});
    }
    const std::size_t visited = pairs.size();
    for (int i = 0; i < n_; ++i) pairs.push_back({i, i});

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(pairs.size());
    for (const auto& [r, c] : pairs) trips.emplace_back(r, c, 0.0);
    H_.resize(n_, n_);
    H_.setFromTriplets(trips.begin(), trips.end());
    H_.makeCompressed();

    fit_slots_.resize(visited);
    for (std::size_t i = 0; i < visited; ++i) fit_slots_[i] = position(pairs[i].first, pairs[i].second);
    diag_slots_.resize(n_);
    for (int i = 0; i < n_; ++i) diag_slots_[i] = position(i, i);
  }

  int position(int row, int col) const {
    const int* outer = H_.outerIndexPtr();
    const int* inner = H_.innerIndexPtr();
    const int* b = inner + outer[col];
    const int* e = inner + outer[col + 1];
    const int* it = std::lower_bound(b, e, row);
    return static_cast<int>(it - inner);
  }

 public:
  std::vector<int> diag_slots_;

 private:
  const ConvexProgram& p_;
  double slack_;
  int n_;
  std::vector<std::size_t> lin_;
  Eigen::SparseMatrix<double> H_;
  std::vector<int> fit_slots_;
  Terms scratch_;
};

/// Barrier path following from a strictly feasible z.  `done` may stop the
/// run early (used by phase I).
inline BarrierStatus follow_path(const ConvexProgram& p, Eigen::VectorXd& z, const BarrierOptions& opt,
                                 int& steps, const std::function<bool(const Eigen::VectorXd&)>& done) {
  BarrierModel model(p, opt.slack);
  const int m = std::max(1, model.barrier_terms());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  ldlt.analyzePattern(model.hessian());

  // Initial t balances the objective against the barrier.
  double t = static_cast<double>(m) / std::max(1.0, std::abs(p.objective(z)));
  Eigen::VectorXd grad, step;
  for (;;) {
    double last_decrement = std::numeric_limits<double>::infinity();
    for (;;) {
      if (steps >= opt.max_newton) return BarrierStatus::iteration_cap;
      model.derivatives(z, t, grad);
      auto& H = model.hessian();
      double reg = 0;
      for (;;) {
        ldlt.factorize(H);
        if (ldlt.info() == Eigen::Success) break;
        double maxd = 1;
        for (int s : model.diag_slots_) maxd = std::max(maxd, std::abs(H.valuePtr()[s]));
        const double add = reg == 0 ? 1e-12 * maxd : reg * 9;
        for (int s : model.diag_slots_) H.valuePtr()[s] += add;
        reg += add;
        if (reg > 1e6 * maxd) return BarrierStatus::iteration_cap;
      }
      step = ldlt.solve(-grad);
      ++steps;
      const double decrement = -grad.dot(step);
      if (!(decrement > 2 * opt.centering)) break;
      // Quadratic convergence has stalled at rounding level.
      if (decrement < 0.1 && decrement > 0.25 * last_decrement) break;
      last_decrement = decrement;

      // Near the center a full step is safe; Armijo comparisons are
      // unreliable there once t * f0 dwarfs the decrement.
      const bool pure = decrement < 0.1;
      const double f0 = pure ? 0.0 : model.value(z, t);
      double alpha = 1.0;
      Eigen::VectorXd trial;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
        trial = z + alpha * step;
        const double f1 = model.value(trial, t);
        if (!std::isfinite(f1)) continue;
        if (pure || f1 <= f0 - 0.01 * alpha * decrement) {
          moved = true;
          break;
        }
      }
      if (!moved) break;  // numerically centered
      z = trial;
      if (done && done(z)) return BarrierStatus::optimal;
    }
    if (static_cast<double>(m) / t < opt.gap) return BarrierStatus::optimal;
    t *= opt.mu;
  }
}

}  // namespace detail

/// Minimizes the program from an initial guess that need not be feasible.
inline BarrierResult minimize(const ConvexProgram& p, Eigen::VectorXd z0, const BarrierOptions& opt = {}) {
  BarrierResult res;
  for (const auto& e : p.inequalities)
    if (e.is_constant() && e.constant < -opt.slack) return res;
  for (const auto& f : p.fits)
    if (f.lhs.is_constant() && !f.font.is_var() && !f.width.is_var() && f.eval(z0) < -opt.slack)
      return res;

  detail::BarrierModel probe(p, opt.slack);
  if (!(probe.min_slack(z0) > 0)) {
    // Phase I: minimize s subject to g(z) + s >= 0, stopping once s < 0.
    ConvexProgram ph;
    ph.num_vars = p.num_vars + 1;
    const int s = p.num_vars;
    ph.linear.add(s, 1.0);
    for (const auto& e : p.inequalities) {
      if (e.is_constant()) continue;
      LinExpr r = e;
      r.add(s, 1.0);
      ph.inequalities.push_back(std::move(r));
    }
    for (const auto& f : p.fits) {
      FitConstraint r = f;
      r.lhs.add(s, 1.0);
      ph.fits.push_back(std::move(r));
      if (f.width.is_var()) {
        LinExpr dom;
        dom.add(f.width.var, 1.0).shift(-1e-3);
        ph.inequalities.push_back(std::move(dom));
        if (z0[f.width.var] <= 1e-3) z0[f.width.var] = 1.0;
      }
    }
    LinExpr floor_s;
    floor_s.add(s, 1.0).shift(1.0);
    ph.inequalities.push_back(std::move(floor_s));
    // Variables bounded only from one side would leave the phase I barrier
    // without a center; box them around the start, wide enough to cover the
    // start and every single-constraint breakpoint.
    double scale = p.num_vars > 0 ? z0.cwiseAbs().maxCoeff() : 0.0;
    auto widen = [&](const LinExpr& e) {
      double smallest = std::numeric_limits<double>::infinity();
      for (const auto& [v, c] : e.terms)
        if (c != 0) smallest = std::min(smallest, std::abs(c));
      if (std::isfinite(smallest)) scale = std::max(scale, std::abs(e.constant) / smallest);
    };
    for (const auto& e : p.inequalities) widen(e);
    for (const auto& f : p.fits) widen(f.lhs);
    const double radius = 1.0 + 2.0 * scale;
    for (int i = 0; i < p.num_vars; ++i) {
      LinExpr lo, hi;
      lo.add(i, 1.0).shift(radius - z0[i]);
      hi.add(i, -1.0).shift(radius + z0[i]);
      ph.inequalities.push_back(std::move(lo));
      ph.inequalities.push_back(std::move(hi));
    }

    Eigen::VectorXd z(ph.num_vars);
    z.head(p.num_vars) = z0;
    z[s] = 0;
    detail::BarrierModel ph_probe(ph, opt.slack);
    z[s] = std::max(0.0, -ph_probe.min_slack(z)) + 1.0;

    BarrierOptions phopt = opt;
    phopt.gap = 1e-9;
    auto feasible = [&](const Eigen::VectorXd& zz) {
      return zz[s] < -1e-9 && probe.min_slack(zz.head(p.num_vars)) > 0;
    };
    detail::follow_path(ph, z, phopt, res.newton_steps, feasible);
    if (!feasible(z)) {
      res.status = BarrierStatus::infeasible;
      return res;
    }
    z0 = z.head(p.num_vars);
  }

  res.status = detail::follow_path(p, z0, opt, res.newton_steps, nullptr);
  res.z = z0;
  res.objective = p.objective(z0);
  return res;
}

}  // namespace flexdoc::solver
