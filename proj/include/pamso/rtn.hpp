#pragma once

// Resource-task network (RTN) design-and-scheduling models: the hourly
// full-space MILP, the daily aggregated high-level MILP with tunable cost
// prefactors, and the fixed-design low-level model.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pamso/model.hpp"

namespace pamso::rtn {

enum class MaterialClass { kFeed, kProduct, kIntermediate };
enum class VesselClass { kFeedTask, kProductTask, kIntermediateTask };

inline const char* to_string(MaterialClass c) {
  switch (c) {
    case MaterialClass::kFeed: return "feed";
    case MaterialClass::kProduct: return "product";
    case MaterialClass::kIntermediate: return "intermediate";
  }
  return "?";
}

inline const char* to_string(VesselClass c) {
  switch (c) {
    case VesselClass::kFeedTask: return "feed-task";
    case VesselClass::kProductTask: return "product-task";
    case VesselClass::kIntermediateTask: return "intermediate-task";
  }
  return "?";
}

// Material consumed (value < 0) or produced (value > 0) per unit of batch
// size, theta hours after the task starts.
struct NuEntry {
  int material = 0;
  int theta = 0;
  double value = 0.0;
};

struct Task {
  std::string name;
  int duration = 1;  // hours
  double min_fraction = 0.0;
  double startup_cost = 0.0;
  int vessel = 0;
  std::vector<NuEntry> nu;
};

struct Material {
  std::string name;
  MaterialClass cls = MaterialClass::kIntermediate;
  double price = 0.0;
  double storage_cost = 0.0;  // amortized per unit capacity
  double storage_cap = 0.0;
};

struct Vessel {
  std::string name;
  double unit_cost = 0.0;  // amortized per unit capacity
  double capacity_cap = 0.0;
};

// Vessels occupy their resource from the start hour and release it after
// the task's duration; the constant interaction table follows from that.
struct RtnNetwork {
  std::vector<Task> tasks;
  std::vector<Material> materials;
  std::vector<Vessel> vessels;
  double penalty = 1.0;

  std::size_t num_resources() const { return materials.size() + vessels.size(); }

  double mu(int task, int vessel, int theta) const {
    const Task& t = tasks.at(task);
    if (t.vessel != vessel) return 0.0;
    if (theta == 0) return -1.0;
    if (theta == t.duration) return 1.0;
    return 0.0;
  }

  std::vector<int> tasks_in_vessel(int vessel) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].vessel == vessel) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  std::vector<int> products() const {
    std::vector<int> out;
    for (std::size_t m = 0; m < materials.size(); ++m) {
      if (materials[m].cls == MaterialClass::kProduct) out.push_back(static_cast<int>(m));
    }
    return out;
  }

  int material_index(const std::string& name) const {
    for (std::size_t m = 0; m < materials.size(); ++m) {
      if (materials[m].name == name) return static_cast<int>(m);
    }
    return -1;
  }

  int vessel_index(const std::string& name) const {
    for (std::size_t u = 0; u < vessels.size(); ++u) {
      if (vessels[u].name == name) return static_cast<int>(u);
    }
    return -1;
  }
};

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kValidation, path + ": " + what);
}

// Throws on the first invariant violation, naming it by a JSON-style path.
inline void validate(const RtnNetwork& net, int hours_per_day = 24) {
  require(std::isfinite(net.penalty) && net.penalty >= 0.0, "$.penalty", "must be a finite value >= 0");
  require(hours_per_day >= 1, "$.hours_per_day", "must be >= 1");
  std::map<std::string, int> names;
  for (std::size_t m = 0; m < net.materials.size(); ++m) {
    const Material& mat = net.materials[m];
    const std::string p = "$.materials[" + std::to_string(m) + "]";
    require(!mat.name.empty(), p + ".name", "must be non-empty");
    require(names.emplace(mat.name, 0).second, p + ".name", "duplicate resource name '" + mat.name + "'");
    require(std::isfinite(mat.price) && mat.price >= 0.0, p + ".price", "must be a finite value >= 0");
    require(std::isfinite(mat.storage_cost) && mat.storage_cost >= 0.0, p + ".storage_cost",
            "must be a finite value >= 0");
    require(std::isfinite(mat.storage_cap) && mat.storage_cap >= 0.0, p + ".storage_cap",
            "must be a finite value >= 0");
  }
  for (std::size_t u = 0; u < net.vessels.size(); ++u) {
    const Vessel& v = net.vessels[u];
    const std::string p = "$.vessels[" + std::to_string(u) + "]";
    require(!v.name.empty(), p + ".name", "must be non-empty");
    require(names.emplace(v.name, 0).second, p + ".name", "duplicate resource name '" + v.name + "'");
    require(std::isfinite(v.unit_cost) && v.unit_cost >= 0.0, p + ".unit_cost", "must be a finite value >= 0");
    require(std::isfinite(v.capacity_cap) && v.capacity_cap >= 0.0, p + ".capacity_cap",
            "must be a finite value >= 0");
  }
  std::map<std::string, int> task_names;
  for (std::size_t i = 0; i < net.tasks.size(); ++i) {
    const Task& t = net.tasks[i];
    const std::string p = "$.tasks[" + std::to_string(i) + "]";
    require(!t.name.empty(), p + ".name", "must be non-empty");
    require(task_names.emplace(t.name, 0).second, p + ".name", "duplicate task name '" + t.name + "'");
    require(t.duration >= 1, p + ".duration", "must be an integer >= 1");
    require(t.duration <= 24 && t.duration <= hours_per_day, p + ".duration",
            "must not exceed the hours in a day");
    require(t.min_fraction >= 0.0 && t.min_fraction <= 1.0, p + ".min_fraction", "must lie in [0, 1]");
    require(std::isfinite(t.startup_cost) && t.startup_cost >= 0.0, p + ".startup_cost",
            "must be a finite value >= 0");
    require(t.vessel >= 0 && t.vessel < static_cast<int>(net.vessels.size()), p + ".vessel",
            "must name a vessel");
    for (std::size_t k = 0; k < t.nu.size(); ++k) {
      const NuEntry& e = t.nu[k];
      const std::string q = p + ".nu[" + std::to_string(k) + "]";
      require(e.material >= 0 && e.material < static_cast<int>(net.materials.size()), q + ".material",
              "must name a material");
      require(e.theta >= 0 && e.theta <= t.duration, q + ".theta", "must lie in [0, duration]");
      require(std::isfinite(e.value), q + ".value", "must be finite");
    }
  }
}

// Sum of the variable interaction parameter over the task's lifetime.
inline double nu_overall(const RtnNetwork& net, int task, int material) {
  double s = 0.0;
  for (const NuEntry& e : net.tasks.at(task).nu) {
    if (e.material == material) s += e.value;
  }
  return s;
}

// Feed-task vessels host a task touching a feed; otherwise product-task
// vessels host a task touching a product; the rest are intermediate-task.
inline std::vector<VesselClass> classify_vessels(const RtnNetwork& net) {
  std::vector<bool> feed(net.vessels.size(), false), product(net.vessels.size(), false);
  for (const Task& t : net.tasks) {
    for (const NuEntry& e : t.nu) {
      if (e.value == 0.0) continue;
      MaterialClass c = net.materials[e.material].cls;
      if (c == MaterialClass::kFeed) feed[t.vessel] = true;
      if (c == MaterialClass::kProduct) product[t.vessel] = true;
    }
  }
  std::vector<VesselClass> out(net.vessels.size());
  for (std::size_t u = 0; u < out.size(); ++u) {
    out[u] = feed[u] ? VesselClass::kFeedTask
                     : (product[u] ? VesselClass::kProductTask : VesselClass::kIntermediateTask);
  }
  return out;
}

// Daily product demand; demand[m] is empty for non-products.
struct DemandProfile {
  int days = 0;
  std::vector<std::vector<double>> demand;  // [material][day]

  static DemandProfile zeros(const RtnNetwork& net, int days) {
    DemandProfile d;
    d.days = days;
    d.demand.assign(net.materials.size(), {});
    for (int p : net.products()) d.demand[p].assign(days, 0.0);
    return d;
  }

  double at(int material, int day) const {
    const auto& row = demand.at(material);
    return row.empty() ? 0.0 : row.at(day);
  }
};

inline void validate(const RtnNetwork& net, const DemandProfile& d, const std::string& path = "$.demand") {
  require(d.days >= 1, path + ".days", "must be >= 1");
  require(d.demand.size() == net.materials.size(), path, "must have one row per material");
  for (std::size_t m = 0; m < d.demand.size(); ++m) {
    const auto& row = d.demand[m];
    const std::string p = path + "." + net.materials[m].name;
    if (net.materials[m].cls != MaterialClass::kProduct) {
      for (double v : row) require(v == 0.0, p, "demand given for a non-product material");
      continue;
    }
    require(row.size() == static_cast<std::size_t>(d.days), p, "must list one value per day");
    for (std::size_t n = 0; n < row.size(); ++n) {
      require(std::isfinite(row[n]) && row[n] >= 0.0, p + "[" + std::to_string(n) + "]",
              "must be a finite value >= 0");
    }
  }
}

struct RtnDesign {
  std::vector<double> vessel_size;   // V^max per vessel
  std::vector<double> storage_size;  // X^max per material

  bool operator==(const RtnDesign&) const = default;
};

inline void validate(const RtnNetwork& net, const RtnDesign& d, double tol = 1e-6) {
  require(d.vessel_size.size() == net.vessels.size(), "$.design.vessel_size", "one entry per vessel");
  require(d.storage_size.size() == net.materials.size(), "$.design.storage_size", "one entry per material");
  for (std::size_t u = 0; u < d.vessel_size.size(); ++u) {
    require(d.vessel_size[u] >= -tol && d.vessel_size[u] <= net.vessels[u].capacity_cap + tol,
            "$.design.vessel_size[" + std::to_string(u) + "]", "outside [0, cap]");
  }
  for (std::size_t m = 0; m < d.storage_size.size(); ++m) {
    require(d.storage_size[m] >= -tol && d.storage_size[m] <= net.materials[m].storage_cap + tol,
            "$.design.storage_size[" + std::to_string(m) + "]", "outside [0, cap]");
  }
}

// ---------------------------------------------------------------------------
// Tunable parameters.

using Rho = std::array<double, 6>;

struct RhoBox {
  Rho lower{0, 0, 0, 0, 0, 0};
  Rho upper{30, 30, 30, 30, 30, 50};

  bool contains(const Rho& r) const {
    for (std::size_t k = 0; k < 6; ++k) {
      if (!(r[k] >= lower[k] && r[k] <= upper[k])) return false;
    }
    return true;
  }
};

inline constexpr Rho kUnitRho{1, 1, 1, 1, 1, 1};

// ---------------------------------------------------------------------------
// Model builders.

struct BuildOptions {
  int hours_per_day = 24;
  int pwl_breakpoints = 8;
};

struct FullSpaceIndex {
  int hours = 0;  // per block
  int days = 0;   // per block
  // [block][task][hour], [block][resource][hour] (materials then vessels),
  // [block][material][day].
  std::vector<std::vector<std::vector<VarId>>> N, E, pi, X, sl;
  std::vector<VarId> vessel_size, storage_size;
};

struct FullSpaceModel {
  Model model;
  FullSpaceIndex index;
};

struct WeightedDemand {
  double weight = 1.0;
  DemandProfile demand;
};

namespace detail {

inline std::string tag(const std::string& a, int b) { return a + "," + std::to_string(b); }

inline void add_design_variables(const RtnNetwork& net, Model& m, std::vector<VarId>& vs,
                                 std::vector<VarId>& xs) {
  for (const Vessel& v : net.vessels) {
    vs.push_back(m.add_variable("Vmax(" + v.name + ")", VarKind::kContinuous, 0.0, v.capacity_cap));
  }
  for (const Material& mat : net.materials) {
    xs.push_back(m.add_variable("Xmax(" + mat.name + ")", VarKind::kContinuous, 0.0, mat.storage_cap));
  }
}

inline void add_design_cost(const RtnNetwork& net, Model& m, const std::vector<VarId>& vs,
                            const std::vector<VarId>& xs, const std::vector<double>& vessel_factor,
                            double storage_factor, int breakpoints) {
  for (std::size_t u = 0; u < net.vessels.size(); ++u) {
    double pref = vessel_factor[u] * net.vessels[u].unit_cost;
    if (pref > 0.0 && net.vessels[u].capacity_cap > 0.0) m.add_pwl_power_cost(vs[u], pref, 0.6, breakpoints);
  }
  for (std::size_t r = 0; r < net.materials.size(); ++r) {
    double pref = storage_factor * net.materials[r].storage_cost;
    if (pref > 0.0 && net.materials[r].storage_cap > 0.0) m.add_pwl_power_cost(xs[r], pref, 0.6, breakpoints);
  }
}

inline std::pair<double, double> flow_bounds(MaterialClass c) {
  switch (c) {
    case MaterialClass::kFeed: return {0.0, kInf};
    case MaterialClass::kProduct: return {-kInf, 0.0};
    case MaterialClass::kIntermediate: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

}  // namespace detail

// Hourly model over independent blocks that share one design. Each block
// starts from empty inventories and available vessels, and only tasks
// started inside a block act on it. Operating costs are scaled by the
// block weight; the design cost is counted once.
inline FullSpaceModel build_full_space_blocks(const RtnNetwork& net, const std::vector<WeightedDemand>& blocks,
                                              const BuildOptions& opt = {}) {
  validate(net, opt.hours_per_day);
  require(!blocks.empty(), "$.demand", "at least one demand profile is required");
  const int H = opt.hours_per_day;
  const int days = blocks.front().demand.days;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    validate(net, blocks[b].demand, "$.demand[" + std::to_string(b) + "]");
    require(blocks[b].demand.days == days, "$.demand[" + std::to_string(b) + "].days", "horizons differ");
    require(std::isfinite(blocks[b].weight) && blocks[b].weight > 0.0,
            "$.demand[" + std::to_string(b) + "].weight", "must be positive");
  }
  const int T = days * H;
  const int I = static_cast<int>(net.tasks.size());
  const int M = static_cast<int>(net.materials.size());
  const int U = static_cast<int>(net.vessels.size());

  FullSpaceModel out;
  Model& m = out.model;
  FullSpaceIndex& ix = out.index;
  ix.hours = T;
  ix.days = days;
  detail::add_design_variables(net, m, ix.vessel_size, ix.storage_size);

  LinearExpr obj;
  const std::size_t B = blocks.size();
  ix.N.resize(B);
  ix.E.resize(B);
  ix.pi.resize(B);
  ix.X.resize(B);
  ix.sl.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::string bt = B > 1 ? "w" + std::to_string(b) + "," : "";
    const double w = blocks[b].weight;
    const DemandProfile& dem = blocks[b].demand;
    auto& N = ix.N[b];
    auto& E = ix.E[b];
    auto& pi = ix.pi[b];
    auto& X = ix.X[b];
    auto& sl = ix.sl[b];
    N.assign(I, {});
    E.assign(I, {});
    for (int i = 0; i < I; ++i) {
      const Task& task = net.tasks[i];
      const double vcap = net.vessels[task.vessel].capacity_cap;
      for (int t = 1; t <= T; ++t) {
        N[i].push_back(m.add_variable("N(" + bt + detail::tag(task.name, t) + ")", VarKind::kBinary, 0, 1));
        E[i].push_back(m.add_variable("E(" + bt + detail::tag(task.name, t) + ")", VarKind::kContinuous, 0, vcap));
        obj.add(N[i].back(), w * task.startup_cost);
      }
    }
    pi.assign(M + U, {});
    X.assign(M + U, {});
    for (int r = 0; r < M + U; ++r) {
      const bool vessel = r >= M;
      const std::string& name = vessel ? net.vessels[r - M].name : net.materials[r].name;
      auto fb = vessel ? std::pair<double, double>{0.0, 0.0} : detail::flow_bounds(net.materials[r].cls);
      double xhi = vessel ? 1.0 : net.materials[r].storage_cap;
      for (int t = 1; t <= T; ++t) {
        pi[r].push_back(m.add_variable("pi(" + bt + detail::tag(name, t) + ")", VarKind::kContinuous, fb.first,
                                       fb.second));
        X[r].push_back(m.add_variable("X(" + bt + detail::tag(name, t) + ")", VarKind::kContinuous, 0.0, xhi));
        if (!vessel) obj.add(pi[r].back(), w * net.materials[r].price);
      }
    }
    sl.assign(M, {});
    for (int p : net.products()) {
      for (int n = 1; n <= days; ++n) {
        sl[p].push_back(
            m.add_variable("sl(" + bt + detail::tag(net.materials[p].name, n) + ")", VarKind::kContinuous, 0, kInf));
        obj.add(sl[p].back(), w * net.penalty * net.materials[p].price);
      }
    }

    // Resource balance.
    std::vector<std::vector<std::pair<int, double>>> mu_terms(M + U), nu_terms(M + U);
    for (int r = 0; r < M + U; ++r) {
      const bool vessel = r >= M;
      for (int t = 1; t <= T; ++t) {
        LinearExpr e;
        e.add(X[r][t - 1], 1.0);
        if (t > 1) e.add(X[r][t - 2], -1.0);
        e.add(pi[r][t - 1], -1.0);
        for (int i = 0; i < I; ++i) {
          const Task& task = net.tasks[i];
          if (vessel) {
            if (task.vessel != r - M) continue;
            for (int theta : {0, task.duration}) {
              int s = t - theta;
              if (s >= 1) e.add(N[i][s - 1], -net.mu(i, r - M, theta));
            }
          } else {
            for (const NuEntry& nu : task.nu) {
              if (nu.material != r) continue;
              int s = t - nu.theta;
              if (s >= 1) e.add(E[i][s - 1], -nu.value);
            }
          }
        }
        double initial = (t == 1 && vessel) ? 1.0 : 0.0;
        const std::string& name = vessel ? net.vessels[r - M].name : net.materials[r].name;
        m.add_constraint(std::move(e), Sense::kEqual, initial, "bal(" + bt + detail::tag(name, t) + ")");
      }
    }
    // Demand satisfaction.
    for (int p : net.products()) {
      for (int n = 1; n <= days; ++n) {
        LinearExpr e;
        for (int t = (n - 1) * H + 1; t <= n * H; ++t) e.add(pi[p][t - 1], -1.0);
        e.add(sl[p][n - 1], 1.0);
        m.add_constraint(std::move(e), Sense::kEqual, dem.at(p, n - 1),
                         "dem(" + bt + detail::tag(net.materials[p].name, n) + ")");
      }
    }
    // Storage limits.
    for (int r = 0; r < M; ++r) {
      for (int t = 1; t <= T; ++t) {
        LinearExpr e;
        e.add(X[r][t - 1], 1.0).add(ix.storage_size[r], -1.0);
        m.add_constraint(std::move(e), Sense::kLessEqual, 0.0, "stor(" + bt + detail::tag(net.materials[r].name, t) + ")");
      }
    }
    // Batch size bounds, big-M on the vessel cap.
    for (int i = 0; i < I; ++i) {
      const Task& task = net.tasks[i];
      const double vcap = net.vessels[task.vessel].capacity_cap;
      const double vmin = task.min_fraction;
      VarId V = ix.vessel_size[task.vessel];
      for (int t = 1; t <= T; ++t) {
        const std::string lt = bt + detail::tag(task.name, t) + ")";
        LinearExpr a, c, d;
        a.add(E[i][t - 1], 1.0).add(N[i][t - 1], -vcap);
        m.add_constraint(std::move(a), Sense::kLessEqual, 0.0, "bon(" + lt);
        c.add(E[i][t - 1], 1.0).add(V, -1.0);
        m.add_constraint(std::move(c), Sense::kLessEqual, 0.0, "bmax(" + lt);
        d.add(E[i][t - 1], 1.0).add(V, -vmin).add(N[i][t - 1], -vmin * vcap);
        m.add_constraint(std::move(d), Sense::kGreaterEqual, -vmin * vcap, "bmin(" + lt);
      }
    }
  }
  m.set_objective(std::move(obj));
  detail::add_design_cost(net, m, ix.vessel_size, ix.storage_size, std::vector<double>(U, 1.0), 1.0,
                          opt.pwl_breakpoints);
  m.seal();
  return out;
}

inline FullSpaceModel build_full_space(const RtnNetwork& net, const DemandProfile& demand,
                                       const BuildOptions& opt = {}) {
  return build_full_space_blocks(net, {{1.0, demand}}, opt);
}

inline std::map<VarId, double> design_assignment(const FullSpaceIndex& ix, const RtnDesign& d) {
  std::map<VarId, double> fix;
  for (std::size_t u = 0; u < ix.vessel_size.size(); ++u) fix[ix.vessel_size[u]] = d.vessel_size.at(u);
  for (std::size_t r = 0; r < ix.storage_size.size(); ++r) fix[ix.storage_size[r]] = d.storage_size.at(r);
  return fix;
}

// Full-space model with the design pinned; the design cost stays in the
// objective as a constant.
inline FullSpaceModel build_low_level(const RtnNetwork& net, const DemandProfile& demand, const RtnDesign& design,
                                      const BuildOptions& opt = {}) {
  validate(net, design);
  FullSpaceModel fs = build_full_space(net, demand, opt);
  fs.model = fix_variables(fs.model, design_assignment(fs.index, design));
  return fs;
}

// One fixed-design model per week. With weights summing to one, the
// weighted mean of their objectives counts the design cost exactly once.
inline std::vector<FullSpaceModel> decompose_by_week(const RtnNetwork& net, const std::vector<DemandProfile>& weeks,
                                                     const RtnDesign& design, const BuildOptions& opt = {}) {
  std::vector<FullSpaceModel> out;
  out.reserve(weeks.size());
  for (const DemandProfile& w : weeks) out.push_back(build_low_level(net, w, design, opt));
  return out;
}

inline std::vector<double> uniform_weights(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

inline double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  require(values.size() == weights.size() && !values.empty(), "$.weights", "one weight per value");
  double s = 0.0, ws = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    s += weights[k] * values[k];
    ws += weights[k];
  }
  require(std::abs(ws - 1.0) <= 1e-9, "$.weights", "must sum to 1");
  return s;
}

struct HighLevelIndex {
  int days = 0;
  std::vector<std::vector<VarId>> N, E;           // [task][day]
  std::vector<std::vector<std::vector<VarId>>> bits, prod;  // [task][day][bit]
  std::vector<std::vector<VarId>> pi, X, sl;     // [material][day]
  std::vector<VarId> vessel_size, storage_size;
  std::vector<int> reset_days;                   // 1-based days whose closing inventory is zero
};

struct HighLevelModel {
  Model model;
  HighLevelIndex index;
};

inline int starts_per_day(const RtnNetwork& net, int task, int hours_per_day = 24) {
  return hours_per_day / net.tasks.at(task).duration;
}

// Daily aggregate of the full-space model. Start counts are general
// integers; their product with the vessel size is linearized exactly
// through a binary expansion of the count. Inventories return to zero at
// the end of every `block_days` days (and at the horizon end).
inline HighLevelModel build_high_level(const RtnNetwork& net, const DemandProfile& demand, const Rho& rho,
                                       int block_days = 7, const BuildOptions& opt = {},
                                       const RhoBox& box = {}) {
  validate(net, opt.hours_per_day);
  validate(net, demand);
  if (!box.contains(rho)) throw Error(ErrorCode::kOutOfBox, "rho outside its box");
  require(block_days >= 1, "$.block_days", "must be >= 1");
  const int H = opt.hours_per_day;
  const int D = demand.days;
  const int I = static_cast<int>(net.tasks.size());
  const int M = static_cast<int>(net.materials.size());
  const int U = static_cast<int>(net.vessels.size());

  HighLevelModel out;
  Model& m = out.model;
  HighLevelIndex& ix = out.index;
  ix.days = D;
  detail::add_design_variables(net, m, ix.vessel_size, ix.storage_size);
  LinearExpr obj;

  ix.N.assign(I, {});
  ix.E.assign(I, {});
  ix.bits.assign(I, {});
  ix.prod.assign(I, {});
  for (int i = 0; i < I; ++i) {
    const Task& task = net.tasks[i];
    const int cap = starts_per_day(net, i, H);
    const double vcap = net.vessels[task.vessel].capacity_cap;
    int nbits = 0;
    while ((1 << nbits) <= cap) ++nbits;
    ix.bits[i].assign(D, {});
    ix.prod[i].assign(D, {});
    for (int n = 1; n <= D; ++n) {
      const std::string lt = detail::tag(task.name, n);
      ix.N[i].push_back(m.add_variable("Nagg(" + lt + ")", VarKind::kInteger, 0, cap));
      ix.E[i].push_back(m.add_variable("Eagg(" + lt + ")", VarKind::kContinuous, 0, cap * vcap));
      obj.add(ix.N[i].back(), rho[5] * task.startup_cost);
      LinearExpr count, scaled;
      count.add(ix.N[i].back(), 1.0);
      for (int k = 0; k < nbits; ++k) {
        const std::string kt = lt + "," + std::to_string(k);
        VarId b = m.add_variable("Nbit(" + kt + ")", VarKind::kBinary, 0, 1);
        VarId p = m.add_variable("NV(" + kt + ")", VarKind::kContinuous, 0, vcap);
        ix.bits[i][n - 1].push_back(b);
        ix.prod[i][n - 1].push_back(p);
        const double pow2 = static_cast<double>(1 << k);
        count.add(b, -pow2);
        scaled.add(p, pow2);
        LinearExpr a, c, d;
        a.add(p, 1.0).add(b, -vcap);
        m.add_constraint(std::move(a), Sense::kLessEqual, 0.0, "nvon(" + kt + ")");
        c.add(p, 1.0).add(ix.vessel_size[task.vessel], -1.0);
        m.add_constraint(std::move(c), Sense::kLessEqual, 0.0, "nvmax(" + kt + ")");
        d.add(p, 1.0).add(ix.vessel_size[task.vessel], -1.0).add(b, -vcap);
        m.add_constraint(std::move(d), Sense::kGreaterEqual, -vcap, "nvmin(" + kt + ")");
      }
      m.add_constraint(std::move(count), Sense::kEqual, 0.0, "nbin(" + lt + ")");
      LinearExpr up, lo;
      up.add(ix.E[i].back(), 1.0).add(scaled, -1.0);
      m.add_constraint(std::move(up), Sense::kLessEqual, 0.0, "bmax(" + lt + ")");
      lo.add(ix.E[i].back(), 1.0).add(scaled, -task.min_fraction);
      m.add_constraint(std::move(lo), Sense::kGreaterEqual, 0.0, "bmin(" + lt + ")");
    }
  }

  ix.pi.assign(M, {});
  ix.X.assign(M, {});
  ix.sl.assign(M, {});
  for (int r = 0; r < M; ++r) {
    const Material& mat = net.materials[r];
    auto fb = detail::flow_bounds(mat.cls);
    for (int n = 1; n <= D; ++n) {
      const std::string lt = detail::tag(mat.name, n);
      ix.pi[r].push_back(m.add_variable("piagg(" + lt + ")", VarKind::kContinuous, fb.first, fb.second));
      ix.X[r].push_back(m.add_variable("Xagg(" + lt + ")", VarKind::kContinuous, 0.0, mat.storage_cap));
      obj.add(ix.pi[r].back(), mat.price);
      if (mat.cls == MaterialClass::kProduct) {
        ix.sl[r].push_back(m.add_variable("sl(" + lt + ")", VarKind::kContinuous, 0.0, kInf));
        obj.add(ix.sl[r].back(), rho[0] * net.penalty * mat.price);
      }
    }
  }
  for (int r = 0; r < M; ++r) {
    const Material& mat = net.materials[r];
    for (int n = 1; n <= D; ++n) {
      const std::string lt = detail::tag(mat.name, n);
      LinearExpr e;
      e.add(ix.X[r][n - 1], 1.0);
      if (n > 1) e.add(ix.X[r][n - 2], -1.0);
      e.add(ix.pi[r][n - 1], -1.0);
      for (int i = 0; i < I; ++i) {
        double nu = nu_overall(net, i, r);
        if (nu != 0.0) e.add(ix.E[i][n - 1], -nu);
      }
      m.add_constraint(std::move(e), Sense::kEqual, 0.0, "bal(" + lt + ")");
      if (mat.cls == MaterialClass::kProduct) {
        LinearExpr d;
        d.add(ix.pi[r][n - 1], -1.0).add(ix.sl[r][n - 1], 1.0);
        m.add_constraint(std::move(d), Sense::kEqual, demand.at(r, n - 1), "dem(" + lt + ")");
      }
      LinearExpr s;
      s.add(ix.X[r][n - 1], 1.0).add(ix.storage_size[r], -1.0);
      m.add_constraint(std::move(s), Sense::kLessEqual, 0.0, "stor(" + lt + ")");
    }
  }
  for (int n = block_days; ; n += block_days) {
    int day = std::min(n, D);
    ix.reset_days.push_back(day);
    if (day == D) break;
  }
  for (int r = 0; r < M; ++r) {
    for (int day : ix.reset_days) {
      LinearExpr e;
      e.add(ix.X[r][day - 1], 1.0);
      m.add_constraint(std::move(e), Sense::kEqual, 0.0, "reset(" + detail::tag(net.materials[r].name, day) + ")");
    }
  }
  for (int u = 0; u < U; ++u) {
    std::vector<int> hosted = net.tasks_in_vessel(u);
    if (hosted.empty()) continue;
    for (int n = 1; n <= D; ++n) {
      LinearExpr e;
      for (int i : hosted) e.add(ix.N[i][n - 1], net.tasks[i].duration);
      m.add_constraint(std::move(e), Sense::kLessEqual, H, "hours(" + detail::tag(net.vessels[u].name, n) + ")");
    }
  }

  m.set_objective(std::move(obj));
  std::vector<VesselClass> cls = classify_vessels(net);
  std::vector<double> factor(U);
  for (int u = 0; u < U; ++u) {
    factor[u] = cls[u] == VesselClass::kFeedTask ? rho[1] : cls[u] == VesselClass::kProductTask ? rho[2] : rho[3];
  }
  detail::add_design_cost(net, m, ix.vessel_size, ix.storage_size, factor, rho[4], opt.pwl_breakpoints);
  m.seal();
  return out;
}

inline bool is_reset_label(const std::string& label) { return label.rfind("reset(", 0) == 0; }

// Reads the design from a solved model's value vector.
inline RtnDesign extract_design(const RtnNetwork& net, const std::vector<VarId>& vessel_size,
                                const std::vector<VarId>& storage_size, const Solution& sol,
                                double tol = 1e-6) {
  if (!has_solution(sol.status)) {
    throw Error(ErrorCode::kInfeasibleSolution, std::string("no design in a solution with status ") +
                                                    pamso::to_string(sol.status));
  }
  auto clean = [&](double v, double cap) {
    if (v <= 0.0 && v >= -tol) v = 0.0;
    if (v > cap && v <= cap + tol) v = cap;
    return v;
  };
  RtnDesign d;
  for (std::size_t u = 0; u < vessel_size.size(); ++u) {
    d.vessel_size.push_back(clean(sol.values.at(vessel_size[u].index), net.vessels[u].capacity_cap));
  }
  for (std::size_t r = 0; r < storage_size.size(); ++r) {
    d.storage_size.push_back(clean(sol.values.at(storage_size[r].index), net.materials[r].storage_cap));
  }
  return d;
}

inline RtnDesign extract_design(const RtnNetwork& net, const HighLevelModel& hl, const Solution& sol,
                                double tol = 1e-6) {
  return extract_design(net, hl.index.vessel_size, hl.index.storage_size, sol, tol);
}

// ---------------------------------------------------------------------------
// Multi-week demand handling.

inline DemandProfile aggregate_demand_approach1(const std::vector<DemandProfile>& weeks) {
  require(!weeks.empty(), "$.weeks", "at least one profile is required");
  DemandProfile out = weeks.front();
  for (std::size_t w = 1; w < weeks.size(); ++w) {
    require(weeks[w].days == out.days && weeks[w].demand.size() == out.demand.size(),
            "$.weeks[" + std::to_string(w) + "]", "horizons differ");
  }
  const double k = static_cast<double>(weeks.size());
  for (std::size_t r = 0; r < out.demand.size(); ++r) {
    for (std::size_t n = 0; n < out.demand[r].size(); ++n) {
      double s = 0.0;
      for (const DemandProfile& w : weeks) s += w.demand[r].at(n);
      out.demand[r][n] = s / k;
    }
  }
  return out;
}

inline DemandProfile concat_demand_approach2(const std::vector<DemandProfile>& weeks) {
  require(!weeks.empty(), "$.weeks", "at least one profile is required");
  DemandProfile out;
  out.days = 0;
  out.demand.assign(weeks.front().demand.size(), {});
  for (std::size_t w = 0; w < weeks.size(); ++w) {
    require(weeks[w].days == weeks.front().days && weeks[w].demand.size() == out.demand.size(),
            "$.weeks[" + std::to_string(w) + "]", "horizons differ");
    out.days += weeks[w].days;
    for (std::size_t r = 0; r < out.demand.size(); ++r) {
      out.demand[r].insert(out.demand[r].end(), weeks[w].demand[r].begin(), weeks[w].demand[r].end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model dimension summary.

struct ModelSize {
  std::size_t continuous = 0;
  std::size_t binary = 0;
  std::size_t integer = 0;
  std::size_t constraints = 0;
};

inline ModelSize model_size(const Model& m) {
  return {m.count_kind(VarKind::kContinuous), m.count_kind(VarKind::kBinary), m.count_kind(VarKind::kInteger),
          m.num_constraints()};
}

// ---------------------------------------------------------------------------
// Seeded synthetic networks: feeds are turned into intermediates and then
// products by a layered set of tasks, each bound to one vessel.

struct GeneratorOptions {
  int tasks = 3;
  int feeds = 1;
  int intermediates = 1;
  int products = 1;
  int vessels = 2;
  int max_duration = 4;
  double capacity_cap = 20.0;
  double storage_cap = 40.0;
};

inline RtnNetwork generate_network(std::uint64_t seed, const GeneratorOptions& g = {}) {
  require(g.tasks >= 1 && g.feeds >= 1 && g.products >= 1 && g.intermediates >= 0 && g.vessels >= 1,
          "$.generator", "needs at least one task, feed, product and vessel");
  require(g.max_duration >= 1 && g.max_duration <= 24, "$.generator.max_duration", "must lie in [1, 24]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  RtnNetwork net;
  net.penalty = 1.5 + U(rng);
  for (int k = 0; k < g.feeds; ++k) {
    net.materials.push_back({"F" + std::to_string(k + 1), MaterialClass::kFeed, 1.0 + U(rng), 0.2 + 0.3 * U(rng),
                             g.storage_cap});
  }
  for (int k = 0; k < g.intermediates; ++k) {
    net.materials.push_back({"I" + std::to_string(k + 1), MaterialClass::kIntermediate, 0.0,
                             0.2 + 0.3 * U(rng), g.storage_cap});
  }
  for (int k = 0; k < g.products; ++k) {
    net.materials.push_back({"P" + std::to_string(k + 1), MaterialClass::kProduct, 6.0 + 4.0 * U(rng),
                             0.2 + 0.3 * U(rng), g.storage_cap});
  }
  for (int k = 0; k < g.vessels; ++k) {
    net.vessels.push_back({"U" + std::to_string(k + 1), 2.0 + 3.0 * U(rng), g.capacity_cap});
  }
  const int F = g.feeds, IM = g.intermediates, P = g.products;
  // Stages: feed -> intermediate, intermediate -> intermediate/product.
  // Every intermediate and product gets a producing task first.
  std::vector<int> outputs;
  for (int k = 0; k < IM; ++k) outputs.push_back(F + k);
  for (int k = 0; k < P; ++k) outputs.push_back(F + IM + k);
  for (int i = 0; i < g.tasks; ++i) {
    Task t;
    t.name = "T" + std::to_string(i + 1);
    t.duration = 1 + pick(g.max_duration);
    t.min_fraction = 0.1 + 0.3 * U(rng);
    t.startup_cost = 0.5 + 1.5 * U(rng);
    t.vessel = i < g.vessels ? i : pick(g.vessels);
    int out = i < static_cast<int>(outputs.size()) ? outputs[i] : outputs[pick(static_cast<int>(outputs.size()))];
    // Inputs come from feeds or from intermediates earlier in the chain.
    int in;
    if (out < F + IM) {
      int upstream = out - F;  // intermediates before this one
      in = upstream > 0 && rng() % 2 ? F + pick(upstream) : pick(F);
    } else {
      in = IM > 0 && rng() % 3 != 0 ? F + pick(IM) : pick(F);
    }
    t.nu.push_back({in, 0, -1.0});
    t.nu.push_back({out, t.duration, 0.8 + 0.2 * U(rng)});
    net.tasks.push_back(std::move(t));
  }
  validate(net);
  return net;
}

inline DemandProfile generate_demand(const RtnNetwork& net, int days, std::uint64_t seed, double scale = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  DemandProfile d = DemandProfile::zeros(net, days);
  for (int p : net.products()) {
    for (int n = 0; n < days; ++n) d.demand[p][n] = std::round(scale * U(rng) * 100.0) / 100.0;
  }
  return d;
}

}  // namespace pamso::rtn
