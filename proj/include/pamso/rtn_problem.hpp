#pragma once

// Binds RTN instances to the tuning engine: the high level is the daily
// aggregate with prefactors, the fixed decisions are vessel and storage
// sizes, and the low level is one hourly model per representative week.

#include <string>
#include <vector>

#include "pamso/engine.hpp"
#include "pamso/rtn.hpp"
#include "pamso/rtn_json.hpp"

namespace pamso::rtn {

enum class Aggregation { kSingle, kApproach1, kApproach2 };

inline const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kSingle: return "single";
    case Aggregation::kApproach1: return "approach1";
    case Aggregation::kApproach2: return "approach2";
  }
  return "?";
}

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "single") return Aggregation::kSingle;
  if (s == "approach1") return Aggregation::kApproach1;
  if (s == "approach2") return Aggregation::kApproach2;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation '" + s + "'");
}

inline constexpr Rho kBaselineRho{1, 0, 0, 0, 0, 0};

struct RtnProblemOptions {
  Aggregation aggregation = Aggregation::kApproach2;
  int pwl_breakpoints = 8;
  SolveOptions high;
  SolveOptions low;
  RhoBox box;
  double sentinel = 1e10;
};

inline dfo::Box to_box(const RhoBox& b) {
  return {std::vector<double>(b.lower.begin(), b.lower.end()), std::vector<double>(b.upper.begin(), b.upper.end())};
}

inline Rho to_rho(const engine::Params& p) {
  if (p.size() != 6) throw Error(ErrorCode::kInvalidArgument, "expected 6 prefactors");
  Rho r;
  std::copy(p.begin(), p.end(), r.begin());
  return r;
}

inline engine::Params to_params(const Rho& r) { return {r.begin(), r.end()}; }

inline std::string vessel_size_name(const Vessel& v) { return "Vmax(" + v.name + ")"; }
inline std::string storage_size_name(const Material& m) { return "Xmax(" + m.name + ")"; }

inline engine::Fixing fixing_from_design(const RtnNetwork& net, const RtnDesign& d) {
  engine::Fixing f;
  for (std::size_t u = 0; u < net.vessels.size(); ++u) f[vessel_size_name(net.vessels[u])] = d.vessel_size.at(u);
  for (std::size_t r = 0; r < net.materials.size(); ++r) f[storage_size_name(net.materials[r])] = d.storage_size.at(r);
  return f;
}

inline RtnDesign design_from_fixing(const RtnNetwork& net, const engine::Fixing& f) {
  RtnDesign d;
  auto get = [&](const std::string& name) {
    auto it = f.find(name);
    if (it == f.end()) throw Error(ErrorCode::kMissingValue, "fixing lacks " + name);
    return it->second;
  };
  for (const Vessel& v : net.vessels) d.vessel_size.push_back(get(vessel_size_name(v)));
  for (const Material& m : net.materials) d.storage_size.push_back(get(storage_size_name(m)));
  return d;
}

// Weeks and weights used by the low level for a given aggregation.
inline std::pair<std::vector<DemandProfile>, std::vector<double>> low_level_weeks(const RtnInstance& inst,
                                                                                  Aggregation a) {
  require(!inst.weeks.empty(), "$.weeks", "the instance has no demand");
  if (a == Aggregation::kSingle) return {{inst.weeks.front()}, {1.0}};
  return {inst.weeks, inst.weights};
}

inline HighLevelModel build_rtn_high_level(const RtnInstance& inst, const Rho& rho, const RtnProblemOptions& o) {
  BuildOptions b{inst.hours_per_day, o.pwl_breakpoints};
  switch (o.aggregation) {
    case Aggregation::kSingle:
      return build_high_level(inst.network, inst.weeks.front(), rho, inst.weeks.front().days, b, o.box);
    case Aggregation::kApproach1: {
      DemandProfile avg = aggregate_demand_approach1(inst.weeks);
      return build_high_level(inst.network, avg, rho, avg.days, b, o.box);
    }
    case Aggregation::kApproach2:
      return build_high_level(inst.network, concat_demand_approach2(inst.weeks), rho, inst.weeks.front().days, b,
                              o.box);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation");
}

inline engine::HierarchyProblem make_problem(const RtnInstance& inst, const RtnProblemOptions& o) {
  validate(inst.network, inst.hours_per_day);
  require(!inst.weeks.empty(), "$.weeks", "the instance has no demand");
  engine::HierarchyProblem p;
  p.box = to_box(o.box);
  p.sentinel = o.sentinel;
  p.high_options = o.high;
  p.low_options = o.low;
  p.build_high = [inst, o](const engine::Params& rho) { return build_rtn_high_level(inst, to_rho(rho), o).model; };
  p.extract = [net = inst.network](const Model& high, const Solution& sol) {
    std::vector<VarId> vs, xs;
    for (const Vessel& v : net.vessels) vs.push_back(high.variable_id(vessel_size_name(v)));
    for (const Material& m : net.materials) xs.push_back(high.variable_id(storage_size_name(m)));
    return fixing_from_design(net, extract_design(net, vs, xs, sol));
  };
  p.build_low = [inst, o](const engine::Fixing& f) {
    auto [weeks, weights] = low_level_weeks(inst, o.aggregation);
    RtnDesign d = design_from_fixing(inst.network, f);
    std::vector<FullSpaceModel> parts =
        decompose_by_week(inst.network, weeks, d, {inst.hours_per_day, o.pwl_breakpoints});
    std::vector<engine::LowLevelPart> out;
    for (std::size_t k = 0; k < parts.size(); ++k) out.push_back({std::move(parts[k].model), weights[k]});
    return out;
  };
  return p;
}

// The monolithic hourly model over the same weeks the low level uses.
inline FullSpaceModel build_rtn_full_space(const RtnInstance& inst, const RtnProblemOptions& o) {
  auto [weeks, weights] = low_level_weeks(inst, o.aggregation);
  std::vector<WeightedDemand> blocks;
  for (std::size_t k = 0; k < weeks.size(); ++k) blocks.push_back({weights[k], weeks[k]});
  return build_full_space_blocks(inst.network, blocks, {inst.hours_per_day, o.pwl_breakpoints});
}

}  // namespace pamso::rtn
