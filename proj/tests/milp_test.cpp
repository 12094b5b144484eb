#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pamso/milp.hpp"

using namespace pamso;

namespace {

// Random mixed problem around a feasible integer point.
Model random_milp(std::mt19937_64& rng, int nint, int ncont, int nrows) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> P(0.0, 1.0);
  Model m;
  std::vector<VarId> v;
  std::vector<double> x0;
  for (int i = 0; i < nint; ++i) {
    bool general = i % 4 == 3;
    v.push_back(m.add_variable("i" + std::to_string(i), general ? VarKind::kInteger : VarKind::kBinary, 0,
                               general ? 3 : 1));
    x0.push_back(static_cast<double>(rng() % (general ? 4 : 2)));
  }
  for (int i = 0; i < ncont; ++i) {
    double hi = 0.5 + 9.5 * P(rng);
    v.push_back(m.add_variable("c" + std::to_string(i), VarKind::kContinuous, 0, hi));
    x0.push_back(hi * P(rng));
  }
  for (int r = 0; r < nrows; ++r) {
    LinearExpr e;
    for (VarId x : v) {
      if (rng() % 3 == 0) e.add(x, std::round(50.0 * U(rng)) / 10.0);
    }
    double act = e.evaluate(x0);
    int k = static_cast<int>(rng() % 5);
    if (k == 4 && ncont > 0) {
      m.add_constraint(e, Sense::kEqual, act, "r" + std::to_string(r));
    } else if (k < 3) {
      m.add_constraint(e, Sense::kLessEqual, act + P(rng), "r" + std::to_string(r));
    } else {
      m.add_constraint(e, Sense::kGreaterEqual, act - P(rng), "r" + std::to_string(r));
    }
  }
  LinearExpr o;
  for (VarId x : v) o.add(x, std::round(100.0 * U(rng)) / 10.0);
  m.set_objective(o, rng() % 2 ? ObjectiveSense::kMinimize : ObjectiveSense::kMaximize);
  m.seal();
  return m;
}

double sense_sign(const Model& m) { return m.objective_sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0; }

// Exhaustive enumeration of a pure-integer model with no LP involvement.
std::optional<double> enumerate_pure_integer(const Model& m) {
  const std::size_t n = m.num_variables();
  std::vector<double> x(n);
  std::vector<long> lo(n), span(n), digit(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = static_cast<long>(m.variables()[j].lower);
    span[j] = static_cast<long>(m.variables()[j].upper) - lo[j] + 1;
  }
  std::optional<double> best;
  const double s = sense_sign(m);
  while (true) {
    for (std::size_t j = 0; j < n; ++j) x[j] = static_cast<double>(lo[j] + digit[j]);
    Evaluation ev = evaluate_solution(m, x);
    if (ev.max_violation <= 1e-9 && (!best || s * ev.objective < s * *best)) best = ev.objective;
    std::size_t k = 0;
    while (k < n && ++digit[k] == span[k]) digit[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace

TEST(Milp, Knapsack) {
  Model m;
  VarId a = m.add_variable("a", VarKind::kBinary, 0, 1);
  VarId b = m.add_variable("b", VarKind::kBinary, 0, 1);
  LinearExpr c;
  c.add(a, 2).add(b, 2);
  m.add_constraint(c, Sense::kLessEqual, 3, "cap");
  LinearExpr o;
  o.add(a, 3).add(b, 2);
  m.set_objective(o, ObjectiveSense::kMaximize);
  m.seal();
  SolveReport r = solve_milp(m);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective(), 3.0, 1e-9);
  EXPECT_NEAR(r.incumbent->value(a), 1.0, 1e-9);
  EXPECT_NEAR(r.incumbent->value(b), 0.0, 1e-9);
  EXPECT_LE(r.gap, 1e-4);
}

TEST(Milp, InfeasibleIntegerProblem) {
  Model m;
  VarId a = m.add_variable("a", VarKind::kInteger, 0, 10);
  LinearExpr e;
  e.add(a, 2);
  m.add_constraint(e, Sense::kEqual, 3, "odd");
  m.set_objective(e);
  m.seal();
  EXPECT_EQ(solve_milp(m).status, SolveStatus::kInfeasible);
  EXPECT_EQ(brute_force_milp(m).status, SolveStatus::kInfeasible);
}

TEST(Milp, UnboundedRelaxation) {
  Model m;
  VarId a = m.add_variable("a", VarKind::kInteger, 0, kInf);
  LinearExpr o;
  o.add(a, -1);
  m.set_objective(o);
  m.seal();
  EXPECT_EQ(solve_milp(m).status, SolveStatus::kUnbounded);
  EXPECT_THROW(brute_force_milp(m), Error);
}

TEST(Milp, BruteForceCap) {
  Model m;
  for (int i = 0; i < 23; ++i) m.add_variable("b" + std::to_string(i), VarKind::kBinary, 0, 1);
  m.seal();
  try {
    brute_force_milp(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSearchSpaceTooLarge);
  }
}

TEST(Milp, GapDefinition) {
  EXPECT_DOUBLE_EQ(relative_gap(100.0, 99.0), 0.01);
  EXPECT_DOUBLE_EQ(relative_gap(0.5, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(relative_gap(-200.0, -202.0), 0.01);
}

TEST(Milp, RejectsBadOptions) {
  Model m;
  m.add_variable("a", VarKind::kBinary, 0, 1);
  m.seal();
  SolveOptions o;
  o.mip_gap = -1;
  EXPECT_THROW(solve_milp(m, o), Error);
  o = {};
  o.time_limit = 0;
  EXPECT_THROW(solve_milp(m, o), Error);
}

TEST(Milp, PureIntegerMatchesEnumeration) {
  std::mt19937_64 rng(31);
  int feasible = 0;
  for (int t = 0; t < 150; ++t) {
    Model m = random_milp(rng, 1 + static_cast<int>(rng() % 9), 0, 1 + static_cast<int>(rng() % 8));
    std::optional<double> truth = enumerate_pure_integer(m);
    SolveOptions opt;
    opt.mip_gap = 0.0;
    SolveReport bb = solve_milp(m, opt);
    SolveReport bf = brute_force_milp(m, opt);
    if (!truth) {
      EXPECT_EQ(bb.status, SolveStatus::kInfeasible);
      EXPECT_EQ(bf.status, SolveStatus::kInfeasible);
      continue;
    }
    ++feasible;
    ASSERT_EQ(bb.status, SolveStatus::kOptimal) << t;
    EXPECT_NEAR(bb.objective(), *truth, 1e-6) << t;
    EXPECT_NEAR(bf.objective(), *truth, 1e-6) << t;
  }
  EXPECT_GT(feasible, 50);
}

// The reported bound never cuts off the true optimum, and the incumbent is
// feasible and within the requested gap of the bound.
TEST(Milp, BoundValidityAgainstBruteForce) {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    Model m = random_milp(rng, 1 + static_cast<int>(rng() % 10), static_cast<int>(rng() % 16),
                          1 + static_cast<int>(rng() % 20));
    SolveOptions opt;
    opt.mip_gap = (t % 3 == 0) ? 0.05 : 0.0;
    SolveReport bb = solve_milp(m, opt);
    SolveReport bf = brute_force_milp(m);
    ASSERT_EQ(has_solution(bb.status), has_solution(bf.status)) << t;
    if (!has_solution(bf.status)) continue;
    ++compared;
    const double s = sense_sign(m);
    const double opt_val = bf.objective();
    EXPECT_LE(s * bb.best_bound, s * opt_val + 1e-6 * std::max(1.0, std::abs(opt_val))) << t;
    EXPECT_GE(s * bb.objective(), s * opt_val - 1e-6 * std::max(1.0, std::abs(opt_val))) << t;
    EXPECT_LE(evaluate_solution(m, bb.incumbent->values).max_violation, 1e-6) << t;
    EXPECT_LE(bb.gap, opt.mip_gap + 1e-9) << t;
    if (opt.mip_gap == 0.0) EXPECT_NEAR(bb.objective(), opt_val, 1e-6 * std::max(1.0, std::abs(opt_val))) << t;
  }
  EXPECT_GT(compared, 80);
}

TEST(Milp, IncumbentHistoryIsMonotone) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 60; ++t) {
    Model m = random_milp(rng, 10, 8, 15);
    SolveReport r = solve_milp(m);
    const double s = sense_sign(m);
    for (std::size_t k = 1; k < r.incumbent_history.size(); ++k) {
      EXPECT_LT(s * r.incumbent_history[k], s * r.incumbent_history[k - 1]);
    }
    if (r.incumbent) EXPECT_NEAR(r.incumbent_history.back(), r.objective(), 1e-6);
  }
}

TEST(Milp, Deterministic) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 20; ++t) {
    Model m = random_milp(rng, 10, 10, 15);
    SolveReport a = solve_milp(m);
    SolveReport b = solve_milp(m);
    ASSERT_EQ(a.status, b.status);
    EXPECT_EQ(a.nodes_explored, b.nodes_explored);
    EXPECT_EQ(a.lp_iterations, b.lp_iterations);
    if (a.incumbent) EXPECT_EQ(a.incumbent->values, b.incumbent->values);
  }
}

TEST(Milp, NodeLimitKeepsIncumbentOrReportsNone) {
  std::mt19937_64 rng(4);
  Model m = random_milp(rng, 10, 5, 12);
  SolveOptions o;
  o.node_limit = 1;
  SolveReport r = solve_milp(m, o);
  EXPECT_TRUE(r.status == SolveStatus::kOptimal || r.status == SolveStatus::kFeasibleGap ||
              r.status == SolveStatus::kTimeLimitNoIncumbent);
  EXPECT_LE(r.nodes_explored, 1);
}

// A concave piecewise cost minus a linear reward is minimized at a
// breakpoint, so the optimum is found by scanning breakpoints.
TEST(Milp, PiecewiseCostOptimum) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> P(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Model m;
    double cap = 1.0 + 20.0 * P(rng);
    VarId x = m.add_variable("x", VarKind::kContinuous, 0, cap);
    VarId z = m.add_variable("z", VarKind::kBinary, 0, 1);
    LinearExpr link;
    link.add(x, 1.0).add(z, -cap);
    m.add_constraint(link, Sense::kLessEqual, 0, "link");
    double reward = 3.0 * P(rng);
    double fixed = 2.0 * P(rng);
    LinearExpr o;
    o.add(x, -reward).add(z, fixed);
    m.set_objective(o);
    const auto& term = m.add_pwl_power_cost(x, 1.0 + 4.0 * P(rng), 0.6, 2 + static_cast<int>(rng() % 6));
    m.seal();
    double best = 0.0;  // x = 0, z = 0
    for (std::size_t k = 0; k < term.breakpoints.size(); ++k) {
      double b = term.breakpoints[k];
      double v = term.values[k] - reward * b + (b > 0 ? fixed : 0.0);
      best = std::min(best, v);
    }
    SolveOptions opt;
    opt.mip_gap = 0.0;
    SolveReport r = solve_milp(m, opt);
    ASSERT_EQ(r.status, SolveStatus::kOptimal);
    EXPECT_NEAR(r.objective(), best, 1e-7);
    EXPECT_NEAR(brute_force_milp(m).objective(), best, 1e-7);
    EXPECT_NEAR(evaluate_solution(m, r.incumbent->values).objective, r.objective(), 1e-9);
  }
}

TEST(Milp, LpRejectsPiecewiseTerms) {
  Model m;
  VarId x = m.add_variable("x", VarKind::kContinuous, 0, 1);
  m.add_pwl_power_cost(x, 1.0, 0.6, 3);
  m.seal();
  EXPECT_THROW(solve_lp(m), Error);
}

TEST(Milp, BackendInterface) {
  Model m;
  VarId a = m.add_variable("a", VarKind::kInteger, 0, 5);
  LinearExpr e;
  e.add(a, 1);
  m.add_constraint(e, Sense::kGreaterEqual, 2.5, "r");
  m.set_objective(e);
  m.seal();
  BuiltinBackend backend;
  const MilpBackend& iface = backend;
  SolveReport r = iface.solve(m, {});
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective(), 3.0, 1e-9);
}
