#pragma once

// LP/MILP solving over pamso::Model: presolve, LP relaxation, best-bound
// branch-and-bound and an exhaustive enumeration oracle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "pamso/lp.hpp"
#include "pamso/model.hpp"

namespace pamso {

struct SolveReport {
  SolveStatus status = SolveStatus::kInfeasible;
  std::optional<Solution> incumbent;
  double best_bound = 0.0;
  double gap = kInf;
  std::int64_t nodes_explored = 0;
  std::int64_t lp_iterations = 0;
  double wall_time = 0.0;
  // Incumbent objective each time a better one was found, in model sense.
  std::vector<double> incumbent_history;
  // LP only: one dual per constraint and one reduced cost per variable,
  // with objective gradient = sum_i dual_i a_i + reduced_cost.
  std::vector<double> duals;
  std::vector<double> reduced_costs;

  double objective() const { return incumbent ? incumbent->objective : kInf; }
};

inline double relative_gap(double objective, double bound) {
  return std::abs(objective - bound) / std::max(1.0, std::abs(objective));
}

namespace detail {

// Column/row reduction of a piecewise-free model into an LpProblem, always
// in minimization form. Fixed columns and singleton rows are folded away.
struct Reduction {
  lp::LpProblem lp;
  std::vector<int> col_of_var;       // -1 when eliminated
  std::vector<double> fixed_value;   // value of eliminated columns
  std::vector<int> var_of_col;
  std::vector<bool> col_integral;
  bool infeasible = false;
  double sign = 1.0;                 // -1 for maximization
};

// Tightens coefficients of binary columns in the one-sided row
// sum a x <= b, keeping every 0/1 completion's feasibility unchanged.
inline bool tighten_binary_coefficients(std::vector<std::pair<int, double>>& terms, double& b,
                                        const std::vector<double>& lo, const std::vector<double>& hi,
                                        const std::vector<bool>& integral) {
  auto max_term = [&](int j, double a) { return a > 0 ? a * hi[j] : a * lo[j]; };
  bool changed = false;
  for (auto& [j, a] : terms) {
    if (!integral[j] || lo[j] != 0.0 || hi[j] != 1.0 || a == 0.0) continue;
    double rest = 0.0;
    bool finite = true;
    for (const auto& [k, c] : terms) {
      if (k == j) continue;
      double v = max_term(k, c);
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
      rest += v;
    }
    if (!finite) return changed;
    const double eps = 1e-9 * std::max(1.0, std::abs(b));
    if (a < 0 && rest >= b - eps && rest < b - a - eps) {
      a = b - rest;
      changed = true;
    } else if (a > 0 && rest < b - eps && b - a < rest - eps) {
      double delta = b - rest;
      a -= delta;
      b = rest;
      changed = true;
    }
  }
  return changed;
}

inline Reduction reduce(const Model& model, bool integrality, bool presolve, double tol = 1e-9) {
  Reduction red;
  const std::size_t nv = model.num_variables();
  red.sign = model.objective_sense() == ObjectiveSense::kMaximize ? -1.0 : 1.0;
  std::vector<double> lo(nv), hi(nv);
  std::vector<bool> integral(nv);
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& v = model.variables()[j];
    lo[j] = v.lower;
    hi[j] = v.upper;
    integral[j] = integrality && is_integral_kind(v.kind);
    if (integral[j]) {
      lo[j] = std::ceil(lo[j] - 1e-9);
      hi[j] = std::floor(hi[j] + 1e-9);
    }
  }
  struct Row {
    std::vector<std::pair<int, double>> terms;
    double lo, hi;
    bool active = true;
  };
  const auto& cons = model.constraints();
  std::vector<Row> rows(cons.size());
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const auto& c = cons[i];
    rows[i].lo = c.sense == Sense::kLessEqual ? -kInf : c.rhs;
    rows[i].hi = c.sense == Sense::kGreaterEqual ? kInf : c.rhs;
    rows[i].terms.reserve(c.expr.terms().size());
    for (const auto& t : c.expr.terms()) rows[i].terms.push_back({static_cast<int>(t.var.index), t.coef});
  }
  auto is_fixed = [&](std::size_t j) { return presolve && lo[j] == hi[j]; };

  auto tighten = [&](std::size_t j, double nlo, double nhi) -> bool {
    bool changed = false;
    if (integral[j]) {
      nlo = std::ceil(nlo - 1e-6);
      nhi = std::floor(nhi + 1e-6);
    }
    if (nlo > lo[j] + tol) {
      lo[j] = nlo;
      changed = true;
    }
    if (nhi < hi[j] - tol) {
      hi[j] = nhi;
      changed = true;
    }
    if (lo[j] > hi[j]) {
      if (lo[j] - hi[j] <= 1e-7 && !integral[j]) {
        double mid = 0.5 * (lo[j] + hi[j]);
        lo[j] = hi[j] = mid;
      } else {
        red.infeasible = true;
      }
    }
    if (!integral[j] && hi[j] - lo[j] <= 1e-12 && lo[j] != hi[j]) hi[j] = lo[j];
    return changed;
  };

  if (presolve) {
    for (int pass = 0; pass < 20 && !red.infeasible; ++pass) {
      bool changed = false;
      for (Row& row : rows) {
        if (!row.active) continue;
        double shift = 0.0;
        int live = 0;
        std::size_t last = 0;
        double last_coef = 0.0;
        for (const auto& [j, a] : row.terms) {
          if (is_fixed(j)) {
            shift += a * lo[j];
          } else {
            ++live;
            last = j;
            last_coef = a;
          }
        }
        if (live == 0) {
          double scale = std::max(1.0, std::abs(shift));
          if (shift < row.lo - 1e-9 * scale || shift > row.hi + 1e-9 * scale) red.infeasible = true;
          row.active = false;
          changed = true;
        } else if (live == 1 && std::abs(last_coef) > 1e-9) {
          double a = row.lo - shift, b = row.hi - shift;
          double nlo = last_coef > 0 ? a / last_coef : b / last_coef;
          double nhi = last_coef > 0 ? b / last_coef : a / last_coef;
          tighten(last, nlo, nhi);
          row.active = false;
          changed = true;
        }
      }
      if (!changed) break;
    }
    if (integrality && !red.infeasible) {
      for (Row& row : rows) {
        if (!row.active) continue;
        if (std::isfinite(row.hi) && !std::isfinite(row.lo)) {
          tighten_binary_coefficients(row.terms, row.hi, lo, hi, integral);
        } else if (std::isfinite(row.lo) && !std::isfinite(row.hi)) {
          for (auto& t : row.terms) t.second = -t.second;
          double b = -row.lo;
          tighten_binary_coefficients(row.terms, b, lo, hi, integral);
          for (auto& t : row.terms) t.second = -t.second;
          row.lo = -b;
        }
      }
    }
  }

  red.col_of_var.assign(nv, -1);
  red.fixed_value.assign(nv, 0.0);
  const LinearExpr& obj = model.objective();
  std::vector<double> cost(nv, 0.0);
  for (const auto& t : obj.terms()) cost[t.var.index] = red.sign * t.coef;
  red.lp.offset = red.sign * obj.constant();

  std::vector<std::vector<std::pair<int, double>>> col_entries(nv);
  for (const Row& row : rows) {
    if (!row.active) continue;
    double shift = 0.0;
    for (const auto& [j, a] : row.terms) {
      if (is_fixed(j)) shift += a * lo[j];
    }
    int r = red.lp.add_row(row.lo - shift, row.hi - shift);
    for (const auto& [j, a] : row.terms) {
      if (!is_fixed(j) && a != 0.0) col_entries[j].push_back({r, a});
    }
  }
  for (std::size_t j = 0; j < nv; ++j) {
    if (is_fixed(j)) {
      red.fixed_value[j] = lo[j];
      red.lp.offset += cost[j] * lo[j];
      continue;
    }
    red.col_of_var[j] = red.lp.add_column(cost[j], lo[j], hi[j], col_entries[j]);
    red.var_of_col.push_back(static_cast<int>(j));
    red.col_integral.push_back(integral[j]);
  }
  return red;
}

inline std::vector<double> expand(const Reduction& red, const std::vector<double>& cols) {
  std::vector<double> values(red.col_of_var.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    int c = red.col_of_var[j];
    values[j] = c < 0 ? red.fixed_value[j] : cols[c];
  }
  return values;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void require_sealed(const Model& model) {
  if (!model.sealed()) throw Error(ErrorCode::kInvalidArgument, "model must be sealed before solving");
}

inline SolveStatus map_lp_status(lp::LpStatus s) {
  switch (s) {
    case lp::LpStatus::kOptimal: return SolveStatus::kOptimal;
    case lp::LpStatus::kInfeasible: return SolveStatus::kInfeasible;
    case lp::LpStatus::kUnbounded: return SolveStatus::kUnbounded;
    case lp::LpStatus::kTimeLimit: return SolveStatus::kTimeLimitNoIncumbent;
    default: return SolveStatus::kNumericalFailure;
  }
}

}  // namespace detail

// Solves the continuous relaxation (integrality dropped).
inline SolveReport solve_lp(const Model& model, const SolveOptions& options = {}) {
  detail::require_sealed(model);
  if (!model.piecewise_terms().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "lower piecewise terms before calling solve_lp");
  }
  options.validate();
  auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  detail::Reduction red = detail::reduce(model, false, false);
  if (red.infeasible) {
    rep.status = SolveStatus::kInfeasible;
    rep.wall_time = detail::seconds_since(t0);
    return rep;
  }
  lp::SimplexSolver solver(red.lp);
  solver.set_deadline(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(options.time_limit)));
  lp::LpStatus st = solver.solve();
  rep.lp_iterations = solver.iterations();
  rep.status = detail::map_lp_status(st);
  if (st == lp::LpStatus::kOptimal) {
    Solution sol;
    sol.values = detail::expand(red, solver.primal_values());
    sol.objective = objective_value(model, sol.values);
    sol.status = SolveStatus::kOptimal;
    rep.best_bound = red.sign * solver.objective();
    rep.gap = 0.0;
    std::vector<double> y = solver.row_duals();
    std::vector<double> d = solver.reduced_costs();
    rep.duals.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rep.duals[i] = red.sign * y[i];
    rep.reduced_costs.assign(model.num_variables(), 0.0);
    for (std::size_t j = 0; j < rep.reduced_costs.size(); ++j) {
      if (red.col_of_var[j] >= 0) rep.reduced_costs[j] = red.sign * d[red.col_of_var[j]];
    }
    rep.incumbent_history.push_back(sol.objective);
    rep.incumbent = std::move(sol);
  }
  rep.wall_time = detail::seconds_since(t0);
  return rep;
}

// Best-bound branch-and-bound with depth-first plunging until the first
// incumbent. Node LPs are warm-started from the parent's optimal basis.
inline SolveReport solve_milp(const Model& model, const SolveOptions& options = {}) {
  detail::require_sealed(model);
  options.validate();
  auto t0 = std::chrono::steady_clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double>(options.time_limit));
  const Model lowered = model.piecewise_terms().empty() ? Model{} : lower_piecewise(model);
  const Model& work = model.piecewise_terms().empty() ? model : lowered;

  SolveReport rep;
  detail::Reduction red = detail::reduce(work, true, true);
  if (red.infeasible) {
    rep.status = SolveStatus::kInfeasible;
    rep.wall_time = detail::seconds_since(t0);
    return rep;
  }
  const int ncols = red.lp.num_cols;
  lp::SimplexSolver solver(red.lp);
  solver.set_deadline(deadline);
  const double int_tol = options.integrality_tolerance;

  struct Node {
    std::vector<std::pair<int, std::pair<double, double>>> bounds;  // accumulated overrides
    double bound;
    int depth;
    std::uint64_t id;
    std::uint64_t parent;
    std::shared_ptr<const lp::Basis> basis;
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id > b.id;
    }
  };
  std::vector<Node> stack;
  std::priority_queue<Node, std::vector<Node>, Worse> heap;
  std::uint64_t next_id = 1;
  std::uint64_t last_solved = 0;
  std::vector<int> touched;

  std::optional<std::vector<double>> best_cols;
  double incumbent = kInf;  // internal minimization sense
  double pruned_min = kInf;
  bool numerical_trouble = false;
  bool stopped = false;

  auto cutoff = [&]() {
    if (!best_cols) return kInf;
    double slack = std::max(options.mip_gap * std::max(1.0, std::abs(incumbent)),
                            1e-9 * std::max(1.0, std::abs(incumbent)));
    return incumbent - slack;
  };

  stack.push_back({{}, -kInf, 0, 0, 0, nullptr});
  auto open_count = [&]() { return stack.size() + heap.size(); };
  auto open_min_bound = [&]() {
    double b = kInf;
    for (const auto& n : stack) b = std::min(b, n.bound);
    if (!heap.empty()) b = std::min(b, heap.top().bound);
    return b;
  };

  while (open_count() > 0) {
    if (rep.nodes_explored >= options.node_limit || std::chrono::steady_clock::now() > deadline) {
      stopped = true;
      break;
    }
    if (best_cols && !heap.empty()) {
      double global = std::min(open_min_bound(), pruned_min);
      if ((incumbent - global) / std::max(1.0, std::abs(incumbent)) <= options.mip_gap) break;
    }
    Node node;
    if (!stack.empty()) {
      node = std::move(stack.back());
      stack.pop_back();
      // Abandon a plunge whose bound has drifted far from the best open one.
      if (best_cols && !heap.empty()) {
        double lb = heap.top().bound;
        if (node.bound > lb + 0.5 * (incumbent - lb)) {
          heap.push(std::move(node));
          continue;
        }
      }
    } else {
      node = heap.top();
      heap.pop();
    }
    if (node.bound >= cutoff()) {
      pruned_min = std::min(pruned_min, node.bound);
      continue;
    }
    ++rep.nodes_explored;

    for (int j : touched) solver.set_col_bounds(j, red.lp.col_lo[j], red.lp.col_hi[j]);
    touched.clear();
    if (node.basis && node.parent != last_solved) solver.set_basis(*node.basis);
    for (const auto& [j, b] : node.bounds) {
      solver.set_col_bounds(j, b.first, b.second);
      touched.push_back(j);
    }
    lp::LpStatus st = solver.solve();
    rep.lp_iterations += solver.iterations();
    if (st == lp::LpStatus::kNumericalFailure || st == lp::LpStatus::kIterationLimit) {
      // Retry cold before giving up on the node.
      lp::Basis cold;
      lp::SimplexSolver fresh(red.lp);
      for (const auto& [j, b] : node.bounds) fresh.set_col_bounds(j, b.first, b.second);
      st = fresh.solve();
      if (st == lp::LpStatus::kOptimal) solver.set_basis(fresh.basis()), st = solver.solve();
    }
    last_solved = node.id;
    if (st == lp::LpStatus::kTimeLimit) {
      stopped = true;
      pruned_min = std::min(pruned_min, node.bound);
      break;
    }
    if (st == lp::LpStatus::kInfeasible) continue;
    if (st == lp::LpStatus::kUnbounded) {
      if (node.depth == 0) {
        rep.status = SolveStatus::kUnbounded;
        rep.wall_time = detail::seconds_since(t0);
        return rep;
      }
      numerical_trouble = true;
      continue;
    }
    if (st != lp::LpStatus::kOptimal) {
      numerical_trouble = true;
      pruned_min = std::min(pruned_min, node.bound);
      continue;
    }
    const double obj = solver.objective();
    if (obj >= cutoff()) {
      pruned_min = std::min(pruned_min, obj);
      continue;
    }
    std::vector<double> x = solver.primal_values();
    int branch = -1;
    double best_frac = int_tol;
    for (int j = 0; j < ncols; ++j) {
      if (!red.col_integral[j]) continue;
      double f = x[j] - std::floor(x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist > best_frac + 1e-12) {
        best_frac = dist;
        branch = j;
      }
    }
    if (branch < 0) {
      for (int j = 0; j < ncols; ++j) {
        if (red.col_integral[j]) x[j] = std::round(x[j]);
      }
      if (obj < incumbent) {
        bool first = !best_cols;
        incumbent = obj;
        best_cols = std::move(x);
        rep.incumbent_history.push_back(red.sign * obj);
        if (first) {
          while (!stack.empty()) {
            heap.push(std::move(stack.back()));
            stack.pop_back();
          }
        }
      }
      continue;
    }
    auto basis = std::make_shared<const lp::Basis>(solver.basis());
    const double v = x[branch];
    double cur_lo = red.lp.col_lo[branch], cur_hi = red.lp.col_hi[branch];
    for (const auto& [j, b] : node.bounds) {
      if (j == branch) {
        cur_lo = b.first;
        cur_hi = b.second;
      }
    }
    auto child = [&](double lo, double hi) {
      Node c;
      c.bounds = node.bounds;
      bool replaced = false;
      for (auto& [j, b] : c.bounds) {
        if (j == branch) {
          b = {lo, hi};
          replaced = true;
        }
      }
      if (!replaced) c.bounds.push_back({branch, {lo, hi}});
      c.bound = obj;
      c.depth = node.depth + 1;
      c.id = next_id++;
      c.parent = node.id;
      c.basis = basis;
      return c;
    };
    Node down = child(cur_lo, std::floor(v));
    Node up = child(std::ceil(v), cur_hi);
    const bool up_first = v - std::floor(v) >= 0.5;
    // Plunge into the nearer rounding; before the first incumbent the
    // search is purely depth-first.
    Node& near = up_first ? up : down;
    Node& far = up_first ? down : up;
    if (!best_cols) {
      stack.push_back(std::move(far));
    } else {
      heap.push(std::move(far));
    }
    stack.push_back(std::move(near));
  }

  rep.wall_time = detail::seconds_since(t0);
  double global = std::min(open_min_bound(), pruned_min);
  if (best_cols) {
    global = std::min(global, incumbent);
    Solution sol;
    sol.values = detail::expand(red, *best_cols);
    sol.values.resize(model.num_variables());
    sol.objective = objective_value(model, sol.values);
    rep.best_bound = red.sign * global;
    rep.gap = relative_gap(sol.objective, rep.best_bound);
    bool proven = !stopped && !numerical_trouble;
    rep.status = (proven || rep.gap <= options.mip_gap) && !numerical_trouble ? SolveStatus::kOptimal
                                                                              : SolveStatus::kFeasibleGap;
    sol.status = rep.status;
    rep.incumbent = std::move(sol);
  } else {
    rep.best_bound = red.sign * global;
    if (stopped) {
      rep.status = SolveStatus::kTimeLimitNoIncumbent;
    } else if (numerical_trouble) {
      rep.status = SolveStatus::kNumericalFailure;
    } else {
      rep.status = SolveStatus::kInfeasible;
    }
  }
  return rep;
}

struct BruteForceOptions {
  double cap = 4194304.0;  // 2^22 integer assignments
};

// Enumerates every integer assignment and solves the remaining LP from scratch.
inline SolveReport brute_force_milp(const Model& model, const SolveOptions& options = {},
                                    BruteForceOptions bf = {}) {
  detail::require_sealed(model);
  options.validate();
  auto t0 = std::chrono::steady_clock::now();
  const Model lowered = model.piecewise_terms().empty() ? Model{} : lower_piecewise(model);
  const Model& work = model.piecewise_terms().empty() ? model : lowered;
  detail::Reduction red = detail::reduce(work, true, false);
  SolveReport rep;

  std::vector<int> int_cols;
  std::vector<long long> lo, span;
  double space = 1.0;
  for (int j = 0; j < red.lp.num_cols; ++j) {
    if (!red.col_integral[j]) continue;
    double l = red.lp.col_lo[j], h = red.lp.col_hi[j];
    if (!std::isfinite(l) || !std::isfinite(h)) {
      throw Error(ErrorCode::kSearchSpaceTooLarge, "unbounded integer variable");
    }
    if (h < l) {
      rep.status = SolveStatus::kInfeasible;
      return rep;
    }
    int_cols.push_back(j);
    lo.push_back(static_cast<long long>(l));
    span.push_back(static_cast<long long>(h - l) + 1);
    space *= static_cast<double>(span.back());
    if (space > bf.cap) throw Error(ErrorCode::kSearchSpaceTooLarge, "integer search space exceeds cap");
  }

  std::vector<long long> digit(int_cols.size(), 0);
  double best = kInf;
  std::optional<std::vector<double>> best_cols;
  bool unbounded = false;
  while (true) {
    lp::LpProblem sub = red.lp;
    for (std::size_t k = 0; k < int_cols.size(); ++k) {
      double v = static_cast<double>(lo[k] + digit[k]);
      sub.col_lo[int_cols[k]] = v;
      sub.col_hi[int_cols[k]] = v;
    }
    lp::SimplexSolver solver(std::move(sub));
    lp::LpStatus st = solver.solve();
    ++rep.nodes_explored;
    rep.lp_iterations += solver.iterations();
    if (st == lp::LpStatus::kUnbounded) unbounded = true;
    if (st == lp::LpStatus::kOptimal && solver.objective() < best - 1e-12) {
      best = solver.objective();
      best_cols = solver.primal_values();
      rep.incumbent_history.push_back(red.sign * best);
    }
    std::size_t k = 0;
    while (k < digit.size() && ++digit[k] == span[k]) digit[k++] = 0;
    if (k == digit.size()) break;
  }
  rep.wall_time = detail::seconds_since(t0);
  if (unbounded) {
    rep.status = SolveStatus::kUnbounded;
    return rep;
  }
  if (!best_cols) {
    rep.status = SolveStatus::kInfeasible;
    return rep;
  }
  Solution sol;
  sol.values = detail::expand(red, *best_cols);
  sol.values.resize(model.num_variables());
  sol.objective = objective_value(model, sol.values);
  sol.status = SolveStatus::kOptimal;
  rep.best_bound = red.sign * best;
  rep.gap = 0.0;
  rep.status = SolveStatus::kOptimal;
  rep.incumbent = std::move(sol);
  return rep;
}

// Seam for swapping in other MILP engines.
class MilpBackend {
 public:
  virtual ~MilpBackend() = default;
  virtual SolveReport solve(const Model& model, const SolveOptions& options) const = 0;
};

class BuiltinBackend final : public MilpBackend {
 public:
  SolveReport solve(const Model& model, const SolveOptions& options) const override {
    return solve_milp(model, options);
  }
};

}  // namespace pamso
