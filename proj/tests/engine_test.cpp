#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pamso/engine.hpp"
#include "pamso/rtn_problem.hpp"
#include "rtn_fixtures.hpp"

using namespace pamso;
using namespace pamso::engine;

namespace {

// High level: max y subject to y <= 10 rho_1, so y* = 10 rho_1. Low level
// with y fixed: min |y - 4|. The black box is therefore |10 rho_1 - 4|;
// rho_2 has no effect. Setting low_cap below 10 makes large y infeasible.
struct Toy {
  std::shared_ptr<std::atomic<int>> high_builds = std::make_shared<std::atomic<int>>(0);
  double low_cap = 10.0;
  bool contradictory_high = false;
  double fixed_y = -1.0;  // when >= 0 the high level can only pick this value

  HierarchyProblem problem() const {
    HierarchyProblem p;
    p.box = {{0.0, 0.0}, {1.0, 1.0}};
    auto builds = high_builds;
    bool contra = contradictory_high;
    double fy = fixed_y;
    p.build_high = [builds, contra, fy](const Params& r) {
      ++*builds;
      Model m;
      VarId y = fy >= 0 ? m.add_variable("y", VarKind::kContinuous, fy, fy)
                        : m.add_variable("y", VarKind::kContinuous, 0.0, 10.0);
      LinearExpr cap;
      cap.add(y, 1.0);
      m.add_constraint(cap, Sense::kLessEqual, fy >= 0 ? 10.0 : 10.0 * r[0], "cap");
      if (contra) {
        LinearExpr a, b;
        a.add(y, 1.0);
        b.add(y, 1.0);
        m.add_constraint(a, Sense::kGreaterEqual, 2.0, "contra_lo");
        m.add_constraint(b, Sense::kLessEqual, 1.0, "contra_hi");
      }
      LinearExpr obj;
      obj.add(y, -1.0);
      m.set_objective(obj);
      m.seal();
      return m;
    };
    p.extract = [](const Model& m, const Solution& s) { return Fixing{{"y", s.value(m.variable_id("y"))}}; };
    double lc = low_cap;
    p.build_low = [lc](const Fixing& f) {
      Model m;
      double y = f.at("y");
      VarId yv = m.add_variable("y", VarKind::kContinuous, y, y);
      VarId w = m.add_variable("w", VarKind::kContinuous, 0.0, kInf);
      LinearExpr a, b, c;
      a.add(w, 1.0).add(yv, -1.0);
      m.add_constraint(a, Sense::kGreaterEqual, -4.0, "above");
      b.add(w, 1.0).add(yv, 1.0);
      m.add_constraint(b, Sense::kGreaterEqual, 4.0, "below");
      c.add(yv, 1.0);
      m.add_constraint(c, Sense::kLessEqual, lc, "lowcap");
      LinearExpr obj;
      obj.add(w, 1.0);
      m.set_objective(obj);
      m.seal();
      std::vector<LowLevelPart> parts;
      parts.push_back({std::move(m), 1.0});
      return parts;
    };
    return p;
  }
};

TuneOptions tune_options(dfo::Algorithm a, int budget, std::uint64_t seed, Params initial) {
  TuneOptions o;
  o.dfo.algorithm = a;
  o.dfo.budget = budget;
  o.dfo.seed = seed;
  o.initial = std::move(initial);
  return o;
}

rtn::RtnInstance tiny_instance(std::uint64_t seed, int weeks = 1, int days = 2) {
  rtn::RtnInstance inst;
  inst.network = fixtures::tiny_network(seed);
  inst.hours_per_day = fixtures::kTinyHours;
  for (int w = 0; w < weeks; ++w) inst.weeks.push_back(rtn::generate_demand(inst.network, days, seed * 31 + w));
  inst.weights = rtn::uniform_weights(weeks);
  return inst;
}

rtn::RtnProblemOptions tiny_options(rtn::Aggregation a = rtn::Aggregation::kSingle) {
  rtn::RtnProblemOptions o;
  o.aggregation = a;
  o.high.mip_gap = 0.0;
  o.low.mip_gap = 0.0;
  return o;
}

void expect_trace_invariants(const TuningTrace& t) {
  ASSERT_FALSE(t.evaluations.empty());
  EXPECT_LE(static_cast<int>(t.evaluations.size()), t.budget);
  ASSERT_EQ(t.best_so_far.size(), t.evaluations.size());
  double best = t.evaluations[0].objective;
  for (std::size_t k = 0; k < t.evaluations.size(); ++k) {
    best = std::min(best, t.evaluations[k].objective);
    EXPECT_EQ(t.best_so_far[k], best);
    EXPECT_TRUE(t.box.contains(t.evaluations[k].rho));
    if (!t.evaluations[k].feasible) {
      EXPECT_EQ(t.evaluations[k].objective, 1e10);
    }
  }
  EXPECT_EQ(t.best().objective, best);
  for (std::size_t k = 0; k < t.best_index; ++k) EXPECT_GT(t.evaluations[k].objective, best);
}

}  // namespace

TEST(Mbbf, ToyObjectiveIsAnalytic) {
  Toy toy;
  HierarchyProblem p = toy.problem();
  for (double r : {0.0, 0.25, 0.4, 0.9, 1.0}) {
    MbbfResult res = evaluate_mbbf(p, {r, 0.5});
    ASSERT_TRUE(res.feasible);
    EXPECT_NEAR(res.objective, std::abs(10 * r - 4), 1e-9);
    EXPECT_NEAR(res.fixing.at("y"), 10 * r, 1e-9);
    EXPECT_EQ(res.low.size(), 1u);
  }
}

TEST(Mbbf, ContradictoryHighLevelReturnsSentinel) {
  Toy toy;
  toy.contradictory_high = true;
  MbbfResult res = evaluate_mbbf(toy.problem(), {0.5, 0.5});
  EXPECT_FALSE(res.feasible);
  EXPECT_EQ(res.objective, 1e10);
  EXPECT_TRUE(res.low.empty());
  EXPECT_NE(res.failure.find("high-level"), std::string::npos);
}

TEST(Mbbf, InfeasibleLowLevelReturnsSentinel) {
  Toy toy;
  toy.low_cap = 8.0;
  HierarchyProblem p = toy.problem();
  MbbfResult bad = evaluate_mbbf(p, {0.9, 0.0});
  EXPECT_FALSE(bad.feasible);
  EXPECT_EQ(bad.objective, 1e10);
  EXPECT_NE(bad.failure.find("low-level"), std::string::npos);
  EXPECT_TRUE(evaluate_mbbf(p, {0.7, 0.0}).feasible);
  p.sentinel = 1e6;
  EXPECT_EQ(evaluate_mbbf(p, {0.9, 0.0}).objective, 1e6);
}

TEST(Mbbf, OutOfBoxRejectedBeforeSolving) {
  Toy toy;
  HierarchyProblem p = toy.problem();
  try {
    evaluate_mbbf(p, {1.5, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfBox);
  }
  EXPECT_EQ(*toy.high_builds, 0);
  EXPECT_THROW(evaluate_mbbf(p, {0.5}), Error);
}

TEST(Mbbf, SingleFeasibleDesignIsParameterIndependent) {
  Toy toy;
  toy.fixed_y = 5.0;
  HierarchyProblem p = toy.problem();
  for (double r : {0.0, 0.3, 1.0}) EXPECT_NEAR(evaluate_mbbf(p, {r, r}).objective, 1.0, 1e-9);
}

TEST(Mbbf, MaximizationIsNegated) {
  Toy toy;
  HierarchyProblem p = toy.problem();
  p.maximize = true;
  EXPECT_NEAR(evaluate_mbbf(p, {0.9, 0.0}).objective, -5.0, 1e-9);
}

TEST(Tune, FindsToyOptimum) {
  for (dfo::Algorithm a : {dfo::Algorithm::kPatternSearch, dfo::Algorithm::kPso}) {
    Toy toy;
    TuningTrace t = tune(toy.problem(), tune_options(a, 100, 3, {1.0, 0.5}));
    expect_trace_invariants(t);
    EXPECT_LE(t.best().objective, 0.1) << dfo::to_string(a);
    EXPECT_LE(t.best().objective, t.evaluations[0].objective);
    EXPECT_EQ(static_cast<std::size_t>(toy.high_builds->load()), t.distinct_evaluations);
  }
}

TEST(Tune, BudgetOneEvaluatesOnlyTheStart) {
  Toy toy;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kPatternSearch, 1, 1, {0.2, 0.2}));
  ASSERT_EQ(t.evaluations.size(), 1u);
  EXPECT_EQ(t.best_index, 0u);
  EXPECT_EQ(t.best().rho, (Params{0.2, 0.2}));
  EXPECT_NEAR(t.best().objective, 2.0, 1e-9);
  EXPECT_FALSE(t.evaluations[0].cached);
  EXPECT_EQ(toy.high_builds->load(), 1);
}

TEST(Tune, CacheServesRepeatedPoints) {
  Toy toy;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kPatternSearch, 80, 5, {1.0, 0.0}));
  expect_trace_invariants(t);
  std::size_t cached = 0;
  for (const MbbfResult& r : t.evaluations) cached += r.cached;
  EXPECT_EQ(cached + t.distinct_evaluations, t.evaluations.size());
  EXPECT_EQ(static_cast<std::size_t>(toy.high_builds->load()), t.distinct_evaluations);
}

TEST(Tune, DegenerateParametersTieToEarliest) {
  // Only rho_1 matters, so many rho vectors share the optimum.
  Toy toy;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kRandom, 50, 2, {0.4, 0.1}));
  EXPECT_EQ(t.best_index, 0u);
  EXPECT_EQ(t.best().objective, 0.0);
}

TEST(Tune, InfeasibleStartWidensExplorationAndRecovers) {
  Toy toy;
  toy.low_cap = 6.0;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kPatternSearch, 40, 1, {1.0, 1.0}));
  expect_trace_invariants(t);
  EXPECT_EQ(t.exploration, 2.0);
  EXPECT_FALSE(t.evaluations[0].feasible);
  EXPECT_TRUE(t.best().feasible);
  TuningTrace ok = tune(toy.problem(), tune_options(dfo::Algorithm::kPatternSearch, 5, 1, {0.3, 1.0}));
  EXPECT_EQ(ok.exploration, 1.0);
}

TEST(Tune, FinalResolveOnBest) {
  Toy toy;
  TuneOptions o = tune_options(dfo::Algorithm::kPatternSearch, 20, 1, {1.0, 0.0});
  SolveOptions tight;
  tight.mip_gap = 0.0;
  o.final_low_options = tight;
  TuningTrace t = tune(toy.problem(), o);
  ASSERT_TRUE(t.final.has_value());
  EXPECT_EQ(t.final->rho, t.best().rho);
  EXPECT_NEAR(t.final->objective, t.best().objective, 1e-9);
}

TEST(Tune, RejectsBadInputs) {
  Toy toy;
  EXPECT_THROW(tune(toy.problem(), tune_options(dfo::Algorithm::kPso, 0, 1, {0.5, 0.5})), Error);
  EXPECT_THROW(tune(toy.problem(), tune_options(dfo::Algorithm::kPso, 5, 1, {2.0, 0.5})), Error);
}

TEST(Transfer, RestrictedBoxGeometry) {
  dfo::Box box{{0, 0, 0}, {30, 30, 50}};
  TransferBox tb = restricted_box(box, {15, 0, 50}, 0.1);
  EXPECT_FALSE(tb.vacuous);
  EXPECT_DOUBLE_EQ(tb.box.lower[0], 13.5);
  EXPECT_DOUBLE_EQ(tb.box.upper[0], 16.5);
  EXPECT_DOUBLE_EQ(tb.box.lower[1], 0.0);
  EXPECT_DOUBLE_EQ(tb.box.upper[1], 1.5);
  EXPECT_DOUBLE_EQ(tb.box.lower[2], 47.5);
  EXPECT_DOUBLE_EQ(tb.box.upper[2], 50.0);
  EXPECT_NO_THROW(tb.box.validate());
  EXPECT_TRUE(restricted_box(box, {0, 0, 0}, 2.0).vacuous);
  EXPECT_TRUE(restricted_box(box, {15, 15, 25}, 1.0).vacuous);
  EXPECT_THROW(restricted_box(box, {31, 0, 0}, 0.1), Error);
  EXPECT_THROW(restricted_box(box, {1, 0, 0}, 0.0), Error);
}

TEST(Transfer, UsesExactBudgetInsideRestriction) {
  Toy toy;
  TransferResult tr = transfer_tune(toy.problem(), {0.5, 0.5}, 0.1,
                                    tune_options(dfo::Algorithm::kPatternSearch, 20, 4, {}));
  EXPECT_EQ(tr.trace.evaluations.size(), 20u);
  EXPECT_EQ(tr.trace.evaluations[0].rho, (Params{0.5, 0.5}));
  for (const MbbfResult& r : tr.trace.evaluations) {
    EXPECT_GE(r.rho[0], 0.45);
    EXPECT_LE(r.rho[0], 0.55);
  }
  EXPECT_LE(tr.trace.best().objective, 0.5 + 1e-9);
}

TEST(Transfer, VacuousRangeMatchesPlainTune) {
  Toy a, b;
  // A side of twice the width covers the box from any center.
  TransferResult tr = transfer_tune(a.problem(), {0.9, 0.1}, 2.0, tune_options(dfo::Algorithm::kPso, 30, 8, {}));
  TuningTrace t = tune(b.problem(), tune_options(dfo::Algorithm::kPso, 30, 8, {0.9, 0.1}));
  EXPECT_TRUE(tr.restriction.vacuous);
  ASSERT_EQ(tr.trace.evaluations.size(), t.evaluations.size());
  for (std::size_t k = 0; k < t.evaluations.size(); ++k) {
    EXPECT_EQ(tr.trace.evaluations[k].rho, t.evaluations[k].rho);
    EXPECT_EQ(tr.trace.evaluations[k].objective, t.evaluations[k].objective);
  }
}

TEST(Trace, CsvRoundTrip) {
  Toy toy;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kPatternSearch, 25, 6, {0.77, 0.31}));
  std::stringstream ss;
  write_trace_csv(ss, t, {"abc123", 42});
  std::string text = ss.str();
  EXPECT_EQ(text.rfind("# config_hash=abc123 root_seed=42", 0), 0u);
  std::vector<TraceRow> rows = parse_trace_csv(ss);
  ASSERT_EQ(rows.size(), t.evaluations.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].rho, t.evaluations[k].rho);
    EXPECT_EQ(rows[k].objective, t.evaluations[k].objective);
    if (k > 0) {
      EXPECT_LE(rows[k].best_so_far, rows[k - 1].best_so_far);
    }
    if (rows[k].objective < rows[best].objective) best = k;
  }
  EXPECT_EQ(best, t.best_index);
  EXPECT_EQ(rows[best].rho, t.best().rho);
}

TEST(Trace, SingleRowAndErrors) {
  Toy toy;
  TuningTrace t = tune(toy.problem(), tune_options(dfo::Algorithm::kRandom, 1, 6, {0.5, 0.5}));
  std::stringstream ss;
  write_trace_csv(ss, t, {});
  std::string line;
  int lines = 0;
  while (std::getline(ss, line)) ++lines;
  EXPECT_EQ(lines, 3);  // provenance comment, header, one row
  EXPECT_THROW(emit_trace(t, "/nonexistent-dir/trace.csv"), Error);
  std::stringstream bad("evaluation,rho1,objective,feasible,best_so_far,cumulative_wall_time,clipped,cached\n0,x,1,1,1,0,0,0\n");
  EXPECT_THROW(parse_trace_csv(bad), Error);
  TuningTrace empty;
  EXPECT_THROW(write_trace_csv(ss, empty, {}), Error);
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(derive_seed(7, "dfo"), derive_seed(7, "dfo"));
  EXPECT_NE(derive_seed(7, "dfo"), derive_seed(7, "gen"));
  EXPECT_NE(derive_seed(7, "dfo"), derive_seed(8, "dfo"));
  EXPECT_EQ(hex64(255), "00000000000000ff");
}

TEST(RtnBinding, BaselineMatchesFixThenEnumerate) {
  rtn::RtnInstance inst = tiny_instance(3);
  inst.network.tasks.pop_back();
  inst.weeks = {rtn::generate_demand(inst.network, 1, 5)};
  HierarchyProblem p = rtn::make_problem(inst, tiny_options());
  MbbfResult res = evaluate_mbbf(p, rtn::to_params(rtn::kBaselineRho));
  ASSERT_TRUE(res.feasible);
  rtn::RtnDesign d = rtn::design_from_fixing(inst.network, res.fixing);
  rtn::FullSpaceModel low = rtn::build_low_level(inst.network, inst.weeks[0], d, {inst.hours_per_day, 8});
  SolveReport brute = brute_force_milp(low.model);
  ASSERT_EQ(brute.status, SolveStatus::kOptimal);
  EXPECT_NEAR(res.objective, brute.objective(), 1e-6);
}

TEST(RtnBinding, ObjectiveAuditAndSandwich) {
  rtn::RtnInstance inst = tiny_instance(5, 2, 1);
  rtn::RtnProblemOptions o = tiny_options(rtn::Aggregation::kApproach2);
  HierarchyProblem p = rtn::make_problem(inst, o);
  SolveReport full = solve_milp(rtn::build_rtn_full_space(inst, o).model, o.low);
  ASSERT_EQ(full.status, SolveStatus::kOptimal);
  for (rtn::Rho rho : {rtn::kBaselineRho, rtn::kUnitRho, rtn::Rho{2, 0.5, 0.5, 0.5, 0.5, 3}}) {
    MbbfResult res = evaluate_mbbf(p, rtn::to_params(rho));
    ASSERT_TRUE(res.feasible);
    EXPECT_GE(res.objective, full.best_bound - 1e-6);
    std::vector<LowLevelPart> parts = p.build_low(res.fixing);
    ASSERT_EQ(parts.size(), res.low.size());
    double total = 0.0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Evaluation ev = evaluate_solution(parts[k].model, res.low[k].incumbent->values);
      EXPECT_LE(ev.max_violation, 1e-6);
      total += parts[k].weight * ev.objective;
    }
    EXPECT_NEAR(total, res.objective, 1e-6);
  }
}

TEST(RtnBinding, TunedBestBeatsBaseline) {
  rtn::RtnInstance inst = tiny_instance(9);
  HierarchyProblem p = rtn::make_problem(inst, tiny_options());
  TuningTrace t = tune(p, tune_options(dfo::Algorithm::kPatternSearch, 15, 1, rtn::to_params(rtn::kBaselineRho)));
  expect_trace_invariants(t);
  EXPECT_LE(t.best().objective, t.evaluations[0].objective);
}

TEST(RtnBinding, ParallelBatchMatchesSequential) {
  rtn::RtnInstance inst = tiny_instance(12);
  HierarchyProblem p = rtn::make_problem(inst, tiny_options());
  std::vector<Params> pts;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 6; ++k) {
    Params r(6);
    for (int j = 0; j < 6; ++j) r[j] = U(rng) * p.box.width(j);
    pts.push_back(r);
  }
  std::vector<MbbfResult> seq = evaluate_batch(p, pts, 1);
  std::vector<MbbfResult> par = evaluate_batch(p, pts, 4);
  ASSERT_EQ(seq.size(), par.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    EXPECT_EQ(seq[k].rho, par[k].rho);
    EXPECT_EQ(seq[k].objective, par[k].objective);
    EXPECT_EQ(seq[k].feasible, par[k].feasible);
    EXPECT_EQ(seq[k].fixing, par[k].fixing);
  }
}

TEST(RtnBinding, AggregationModesBuild) {
  rtn::RtnInstance inst = tiny_instance(14, 3);
  EXPECT_EQ(rtn::parse_aggregation("approach1"), rtn::Aggregation::kApproach1);
  EXPECT_THROW(rtn::parse_aggregation("weekly"), Error);
  rtn::RtnProblemOptions o = tiny_options(rtn::Aggregation::kApproach1);
  rtn::HighLevelModel a1 = rtn::build_rtn_high_level(inst, rtn::kUnitRho, o);
  EXPECT_EQ(a1.index.days, 2);
  o.aggregation = rtn::Aggregation::kApproach2;
  rtn::HighLevelModel a2 = rtn::build_rtn_high_level(inst, rtn::kUnitRho, o);
  EXPECT_EQ(a2.index.days, 6);
  EXPECT_EQ(a2.index.reset_days, (std::vector<int>{2, 4, 6}));
  EXPECT_EQ(rtn::make_problem(inst, o).build_low(rtn::fixing_from_design(
                inst.network, {std::vector<double>(2, 1.0), std::vector<double>(3, 1.0)})).size(), 3u);
}
