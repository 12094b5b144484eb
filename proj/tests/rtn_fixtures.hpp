#pragma once

// Shared helpers for tests that need small RTN instances and feasible
// hourly schedules built independently of the aggregated model.

#include <optional>
#include <random>
#include <vector>

#include "pamso/milp.hpp"
#include "pamso/rtn.hpp"

namespace fixtures {

using namespace pamso;
using namespace pamso::rtn;

// Hourly models with 24 slots a day are too large for exhaustive checks;
// the tiny instances use short days.
inline constexpr int kTinyHours = 6;

inline RtnNetwork tiny_network(std::uint64_t seed, int tasks = 3) {
  GeneratorOptions g;
  g.tasks = tasks;
  g.feeds = 1;
  g.intermediates = 1;
  g.products = 1;
  g.vessels = 2;
  g.max_duration = 3;
  return generate_network(seed, g);
}

// Random start pattern in which every task finishes inside the day it
// started and no vessel hosts two tasks at once.
inline std::vector<std::vector<int>> random_pattern(const RtnNetwork& net, int days, int H, std::mt19937_64& rng,
                                                    double density = 0.5) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<std::vector<int>> N(net.tasks.size(), std::vector<int>(days * H, 0));
  for (std::size_t u = 0; u < net.vessels.size(); ++u) {
    std::vector<int> hosted = net.tasks_in_vessel(static_cast<int>(u));
    if (hosted.empty()) continue;
    for (int n = 0; n < days; ++n) {
      int h = 1;
      while (h <= H) {
        int i = hosted[rng() % hosted.size()];
        if (U(rng) < density && h + net.tasks[i].duration <= H) {
          N[i][n * H + h - 1] = 1;
          h += net.tasks[i].duration;
        } else {
          ++h;
        }
      }
    }
  }
  return N;
}

// Fixes the start pattern, requires empty inventories at the given day
// ends, and lets an LP with a randomly perturbed objective choose batches,
// flows, inventories and the design. Returns values indexed like `fs`.
inline std::optional<std::vector<double>> random_schedule(const RtnNetwork& net, const FullSpaceModel& fs,
                                                          const std::vector<int>& reset_days, int H,
                                                          std::mt19937_64& rng) {
  const FullSpaceIndex& ix = fs.index;
  const Model& src = fs.model;
  std::vector<std::vector<int>> pattern = random_pattern(net, ix.days, H, rng);
  std::uniform_real_distribution<double> U(-1.0, 1.0);

  Model m;
  for (const Variable& v : src.variables()) m.add_variable(v.name, v.kind, v.lower, v.upper);
  for (const Constraint& c : src.constraints()) m.add_constraint(c.expr, c.sense, c.rhs, c.label);
  for (std::size_t r = 0; r < net.materials.size(); ++r) {
    for (int day : reset_days) {
      LinearExpr e;
      e.add(ix.X[0][r][day * H - 1], 1.0);
      m.add_constraint(std::move(e), Sense::kEqual, 0.0, "zero(" + std::to_string(r) + "," + std::to_string(day) + ")");
    }
  }
  LinearExpr obj = src.objective();
  for (std::size_t i = 0; i < net.tasks.size(); ++i) {
    for (int t = 0; t < ix.hours; ++t) {
      double v = pattern[i][t];
      m.set_bounds_unchecked(ix.N[0][i][t], v, v);
      obj.add(ix.E[0][i][t], U(rng));
    }
  }
  for (const auto& row : ix.X[0]) {
    for (VarId x : row) obj.add(x, 0.1 * U(rng));
  }
  for (VarId v : ix.vessel_size) obj.add(v, -1.0 - U(rng));
  for (VarId x : ix.storage_size) obj.add(x, -1.0 - U(rng));
  m.set_objective(std::move(obj));
  m.seal();
  SolveReport rep = solve_lp(m);
  if (rep.status != SolveStatus::kOptimal) return std::nullopt;
  return rep.incumbent->values;
}

// Maps an hourly solution onto the aggregated model's variables.
inline std::vector<double> aggregate_values(const RtnNetwork& net, const FullSpaceIndex& fi,
                                            const std::vector<double>& x, const HighLevelModel& hl, int H) {
  const HighLevelIndex& hi = hl.index;
  std::vector<double> y(hl.model.num_variables(), 0.0);
  for (std::size_t u = 0; u < net.vessels.size(); ++u) y[hi.vessel_size[u].index] = x[fi.vessel_size[u].index];
  for (std::size_t r = 0; r < net.materials.size(); ++r) y[hi.storage_size[r].index] = x[fi.storage_size[r].index];
  for (std::size_t i = 0; i < net.tasks.size(); ++i) {
    const double V = x[fi.vessel_size[net.tasks[i].vessel].index];
    for (int n = 0; n < hi.days; ++n) {
      double count = 0.0, batch = 0.0;
      for (int t = n * H; t < (n + 1) * H; ++t) {
        count += std::round(x[fi.N[0][i][t].index]);
        batch += x[fi.E[0][i][t].index];
      }
      y[hi.N[i][n].index] = count;
      y[hi.E[i][n].index] = batch;
      int c = static_cast<int>(count);
      for (std::size_t k = 0; k < hi.bits[i][n].size(); ++k) {
        double bit = (c >> k) & 1;
        y[hi.bits[i][n][k].index] = bit;
        y[hi.prod[i][n][k].index] = bit * V;
      }
    }
  }
  for (std::size_t r = 0; r < net.materials.size(); ++r) {
    for (int n = 0; n < hi.days; ++n) {
      double flow = 0.0;
      for (int t = n * H; t < (n + 1) * H; ++t) flow += x[fi.pi[0][r][t].index];
      y[hi.pi[r][n].index] = flow;
      y[hi.X[r][n].index] = x[fi.X[0][r][(n + 1) * H - 1].index];
      if (!hi.sl[r].empty()) y[hi.sl[r][n].index] = x[fi.sl[0][r][n].index];
    }
  }
  return y;
}

}  // namespace fixtures
