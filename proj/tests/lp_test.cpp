#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pamso/milp.hpp"

using namespace pamso;

namespace {

struct RandomLp {
  Model model;
  std::vector<double> witness;
};

// Random bounded LP built around a known feasible point; some columns are
// free and some rows are equalities.
RandomLp random_lp(std::mt19937_64& rng, int rows, int cols, double density) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> P(0.0, 1.0);
  RandomLp out;
  std::vector<VarId> vars;
  for (int j = 0; j < cols; ++j) {
    double lo = -5.0 * P(rng), hi = 5.0 * P(rng);
    if (j % 7 == 3) lo = -kInf;
    if (j % 11 == 5) hi = kInf;
    vars.push_back(out.model.add_variable("x" + std::to_string(j), VarKind::kContinuous, lo, hi));
    double a = std::isfinite(lo) ? lo : -5.0, b = std::isfinite(hi) ? hi : 5.0;
    out.witness.push_back(a + (b - a) * P(rng));
  }
  for (int i = 0; i < rows; ++i) {
    LinearExpr e;
    for (int j = 0; j < cols; ++j) {
      if (P(rng) < density) e.add(vars[j], std::round(20.0 * U(rng)) / 4.0);
    }
    double act = e.evaluate(out.witness);
    int kind = static_cast<int>(rng() % 6);
    if (kind == 0) {
      out.model.add_constraint(e, Sense::kEqual, act, "r" + std::to_string(i));
    } else if (kind < 4) {
      out.model.add_constraint(e, Sense::kLessEqual, act + 2.0 * P(rng), "r" + std::to_string(i));
    } else {
      out.model.add_constraint(e, Sense::kGreaterEqual, act - 2.0 * P(rng), "r" + std::to_string(i));
    }
  }
  // Box every free column through a row so the LP stays bounded.
  for (int j = 0; j < cols; ++j) {
    const auto& v = out.model.variable(vars[j]);
    if (std::isfinite(v.lower) && std::isfinite(v.upper)) continue;
    LinearExpr e;
    e.add(vars[j], 1.0);
    out.model.add_constraint(e, Sense::kLessEqual, 10.0, "ub" + std::to_string(j));
    out.model.add_constraint(e, Sense::kGreaterEqual, -10.0, "lb" + std::to_string(j));
  }
  LinearExpr obj;
  for (int j = 0; j < cols; ++j) obj.add(vars[j], std::round(40.0 * U(rng)) / 8.0);
  out.model.set_objective(obj, rng() % 2 ? ObjectiveSense::kMinimize : ObjectiveSense::kMaximize);
  out.model.seal();
  return out;
}

// Independent optimality certificate: primal feasibility, sign-correct
// duals, stationarity and complementary slackness.
void expect_kkt(const Model& m, const SolveReport& r, double tol) {
  ASSERT_TRUE(r.incumbent.has_value());
  const auto& x = r.incumbent->values;
  const double s = m.objective_sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;
  EXPECT_LE(evaluate_solution(m, x).max_violation, 1e-6);
  ASSERT_EQ(r.duals.size(), m.num_constraints());
  std::vector<double> grad(m.num_variables(), 0.0);
  for (const auto& t : m.objective().terms()) grad[t.var.index] = t.coef;
  for (std::size_t i = 0; i < m.num_constraints(); ++i) {
    const auto& c = m.constraints()[i];
    double y = s * r.duals[i];  // minimization convention
    double act = c.expr.evaluate(x);
    if (c.sense == Sense::kLessEqual) {
      EXPECT_LE(y, tol) << c.label;
    }
    if (c.sense == Sense::kGreaterEqual) {
      EXPECT_GE(y, -tol) << c.label;
    }
    if (c.sense != Sense::kEqual) {
      EXPECT_LE(std::abs(y * (act - c.rhs)), tol) << c.label;
    }
    for (const auto& t : c.expr.terms()) grad[t.var.index] -= r.duals[i] * t.coef;
  }
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const auto& v = m.variables()[j];
    EXPECT_NEAR(grad[j], r.reduced_costs[j], tol);
    double d = s * r.reduced_costs[j];
    if (x[j] > v.lower + 1e-7) {
      EXPECT_LE(d, tol) << v.name;
    }
    if (x[j] < v.upper - 1e-7) {
      EXPECT_GE(d, -tol) << v.name;
    }
    double dist = std::min(std::abs(x[j] - v.lower), std::abs(x[j] - v.upper));
    EXPECT_LE(std::abs(d) * std::min(dist, 1e6), tol) << v.name;
  }
}

}  // namespace

TEST(Lp, TextbookProblem) {
  Model m;
  VarId x = m.add_variable("x", VarKind::kContinuous, 0, kInf);
  VarId y = m.add_variable("y", VarKind::kContinuous, 0, kInf);
  LinearExpr a, b;
  a.add(x, 1).add(y, 2);
  b.add(x, 3).add(y, 1);
  m.add_constraint(a, Sense::kLessEqual, 4, "a");
  m.add_constraint(b, Sense::kLessEqual, 6, "b");
  LinearExpr o;
  o.add(x, 1).add(y, 1);
  m.set_objective(o, ObjectiveSense::kMaximize);
  m.seal();
  SolveReport r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective(), 2.8, 1e-9);
  EXPECT_NEAR(r.incumbent->value(x), 1.6, 1e-9);
  EXPECT_NEAR(r.incumbent->value(y), 1.2, 1e-9);
  expect_kkt(m, r, 1e-7);
}

TEST(Lp, GreaterEqualLowerBound) {
  Model m;
  VarId x = m.add_variable("x", VarKind::kContinuous, -kInf, kInf);
  LinearExpr e;
  e.add(x, 1);
  m.add_constraint(e, Sense::kGreaterEqual, 3, "r");
  m.set_objective(e);
  m.seal();
  SolveReport r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective(), 3.0, 1e-12);
}

TEST(Lp, DetectsInfeasible) {
  Model m;
  VarId x = m.add_variable("x", VarKind::kContinuous, 0, 10);
  VarId y = m.add_variable("y", VarKind::kContinuous, 0, 10);
  LinearExpr a, b;
  a.add(x, 1).add(y, 1);
  b.add(x, 1).add(y, -1);
  m.add_constraint(a, Sense::kGreaterEqual, 8, "a");
  m.add_constraint(b, Sense::kGreaterEqual, 13, "b");
  m.set_objective(a);
  m.seal();
  EXPECT_EQ(solve_lp(m).status, SolveStatus::kInfeasible);
}

TEST(Lp, DetectsUnbounded) {
  Model m;
  VarId x = m.add_variable("x", VarKind::kContinuous, 0, kInf);
  VarId y = m.add_variable("y", VarKind::kContinuous, 0, kInf);
  LinearExpr a;
  a.add(x, 1).add(y, -1);
  m.add_constraint(a, Sense::kLessEqual, 1, "a");
  LinearExpr o;
  o.add(y, -1);
  m.set_objective(o);
  m.seal();
  EXPECT_EQ(solve_lp(m).status, SolveStatus::kUnbounded);
}

TEST(Lp, RequiresSealedModel) {
  Model m;
  m.add_variable("x", VarKind::kContinuous, 0, 1);
  EXPECT_THROW(solve_lp(m), Error);
}

TEST(Lp, DegenerateProblem) {
  // Many constraints active at the optimum vertex.
  Model m;
  std::vector<VarId> v;
  for (int j = 0; j < 6; ++j) v.push_back(m.add_variable("x" + std::to_string(j), VarKind::kContinuous, 0, kInf));
  for (int i = 0; i < 12; ++i) {
    LinearExpr e;
    for (int j = 0; j < 6; ++j) e.add(v[j], 1.0 + ((i + j) % 3));
    m.add_constraint(e, Sense::kLessEqual, 0.0 + (i % 2 == 0 ? 0.0 : 0.0), "d" + std::to_string(i));
  }
  LinearExpr o;
  for (int j = 0; j < 6; ++j) o.add(v[j], -1.0);
  m.set_objective(o);
  m.seal();
  SolveReport r = solve_lp(m);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.objective(), 0.0, 1e-12);
  expect_kkt(m, r, 1e-7);
}

class RandomLpKkt : public ::testing::TestWithParam<int> {};

TEST_P(RandomLpKkt, ComplementarySlackness) {
  std::mt19937_64 rng(1000 + GetParam());
  int rows = 5 + GetParam() * 7;
  int cols = 5 + GetParam() * 9;
  for (int rep = 0; rep < 6; ++rep) {
    RandomLp lp = random_lp(rng, rows, cols, std::min(0.6, 4.0 / cols + 0.05));
    SolveReport r = solve_lp(lp.model);
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << "rep " << rep;
    expect_kkt(lp.model, r, 1e-7);
  }
}

INSTANTIATE_TEST_SUITE_P(Sizes, RandomLpKkt, ::testing::Range(0, 12));

TEST(Simplex, WarmStartAfterBoundChangeMatchesColdSolve) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    RandomLp lp = random_lp(rng, 30, 40, 0.15);
    detail::Reduction red = detail::reduce(lp.model, false, false);
    lp::SimplexSolver warm(red.lp);
    ASSERT_EQ(warm.solve(), lp::LpStatus::kOptimal);
    for (int k = 0; k < 5; ++k) {
      int j = static_cast<int>(rng() % red.lp.num_cols);
      double x = warm.primal_values()[j];
      double lo = red.lp.col_lo[j], hi = red.lp.col_hi[j];
      if (rng() % 2) hi = std::max(lo, x - 0.5); else lo = std::min(hi, x + 0.5);
      warm.set_col_bounds(j, lo, hi);
      red.lp.col_lo[j] = lo;
      red.lp.col_hi[j] = hi;
      lp::LpStatus ws = warm.solve();
      lp::SimplexSolver cold(red.lp);
      lp::LpStatus cs = cold.solve();
      ASSERT_EQ(ws, cs);
      if (cs != lp::LpStatus::kOptimal) break;
      EXPECT_NEAR(warm.objective(), cold.objective(), 1e-7 * std::max(1.0, std::abs(cold.objective())));
    }
  }
}

TEST(Simplex, SetBasisRestoresOptimum) {
  std::mt19937_64 rng(5);
  RandomLp lp = random_lp(rng, 25, 30, 0.2);
  detail::Reduction red = detail::reduce(lp.model, false, false);
  lp::SimplexSolver a(red.lp);
  ASSERT_EQ(a.solve(), lp::LpStatus::kOptimal);
  lp::SimplexSolver b(red.lp);
  b.set_basis(a.basis());
  ASSERT_EQ(b.solve(), lp::LpStatus::kOptimal);
  EXPECT_EQ(b.iterations(), 0);
  EXPECT_NEAR(a.objective(), b.objective(), 1e-9);
}
