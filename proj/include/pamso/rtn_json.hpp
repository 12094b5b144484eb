#pragma once

// JSON instance files: network, hours per day, weekly demand profiles and
// optional scenario weights. Validation failures name the offending path.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamso/rtn.hpp"

namespace pamso::rtn {

struct RtnInstance {
  RtnNetwork network;
  int hours_per_day = 24;
  std::vector<DemandProfile> weeks;
  std::vector<double> weights;  // one per week, summing to 1
};

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& key, const std::string& path) {
  require(j.is_object(), path, "expected an object");
  auto it = j.find(key);
  require(it != j.end(), path + "." + key, "missing");
  return *it;
}

inline double get_number(const json& j, const std::string& key, const std::string& path) {
  const json& v = member(j, key, path);
  require(v.is_number(), path + "." + key, "expected a number");
  return v.get<double>();
}

inline double get_number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? get_number(j, key, path) : fallback;
}

inline int get_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = member(j, key, path);
  require(v.is_number_integer(), path + "." + key, "expected an integer");
  return v.get<int>();
}

inline std::string get_string(const json& j, const std::string& key, const std::string& path) {
  const json& v = member(j, key, path);
  require(v.is_string(), path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline const json& get_array(const json& j, const std::string& key, const std::string& path) {
  const json& v = member(j, key, path);
  require(v.is_array(), path + "." + key, "expected an array");
  return v;
}

inline MaterialClass parse_class(const std::string& s, const std::string& path) {
  if (s == "feed") return MaterialClass::kFeed;
  if (s == "product") return MaterialClass::kProduct;
  if (s == "intermediate") return MaterialClass::kIntermediate;
  throw Error(ErrorCode::kValidation, path + ": unknown material class '" + s + "'");
}

}  // namespace detail

inline DemandProfile parse_demand(const nlohmann::json& j, const RtnNetwork& net, const std::string& path) {
  using namespace detail;
  DemandProfile d;
  d.days = get_int(j, "days", path);
  require(d.days >= 1, path + ".days", "must be >= 1");
  d.demand.assign(net.materials.size(), {});
  for (int p : net.products()) d.demand[p].assign(d.days, 0.0);
  const json& table = member(j, "demand", path);
  require(table.is_object(), path + ".demand", "expected an object keyed by product");
  for (auto it = table.begin(); it != table.end(); ++it) {
    const std::string q = path + ".demand." + it.key();
    int m = net.material_index(it.key());
    require(m >= 0, q, "unknown material");
    require(net.materials[m].cls == MaterialClass::kProduct, q, "demand given for a non-product material");
    require(it.value().is_array() && it.value().size() == static_cast<std::size_t>(d.days), q,
            "expected one number per day");
    for (std::size_t n = 0; n < it.value().size(); ++n) {
      const json& v = it.value()[n];
      require(v.is_number(), q + "[" + std::to_string(n) + "]", "expected a number");
      d.demand[m][n] = v.get<double>();
    }
  }
  validate(net, d, path);
  return d;
}

inline RtnInstance parse_instance(const nlohmann::json& j) {
  using namespace detail;
  RtnInstance inst;
  RtnNetwork& net = inst.network;
  require(j.is_object(), "$", "expected an object");
  net.penalty = get_number(j, "penalty", "$");
  if (j.contains("hours_per_day")) inst.hours_per_day = get_int(j, "hours_per_day", "$");
  require(inst.hours_per_day >= 1 && inst.hours_per_day <= 24, "$.hours_per_day", "must lie in [1, 24]");

  const json& mats = get_array(j, "materials", "$");
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const std::string p = "$.materials[" + std::to_string(k) + "]";
    Material m;
    m.name = get_string(mats[k], "name", p);
    m.cls = parse_class(get_string(mats[k], "class", p), p + ".class");
    m.price = get_number_or(mats[k], "price", p, 0.0);
    m.storage_cost = get_number_or(mats[k], "storage_cost", p, 0.0);
    m.storage_cap = get_number(mats[k], "storage_cap", p);
    net.materials.push_back(std::move(m));
  }
  const json& vessels = get_array(j, "vessels", "$");
  for (std::size_t k = 0; k < vessels.size(); ++k) {
    const std::string p = "$.vessels[" + std::to_string(k) + "]";
    Vessel v;
    v.name = get_string(vessels[k], "name", p);
    v.unit_cost = get_number_or(vessels[k], "unit_cost", p, 0.0);
    v.capacity_cap = get_number(vessels[k], "capacity_cap", p);
    net.vessels.push_back(std::move(v));
  }
  const json& tasks = get_array(j, "tasks", "$");
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const std::string p = "$.tasks[" + std::to_string(k) + "]";
    Task t;
    t.name = get_string(tasks[k], "name", p);
    t.duration = get_int(tasks[k], "duration", p);
    t.min_fraction = get_number_or(tasks[k], "min_fraction", p, 0.0);
    t.startup_cost = get_number_or(tasks[k], "startup_cost", p, 0.0);
    std::string vessel = get_string(tasks[k], "vessel", p);
    t.vessel = net.vessel_index(vessel);
    require(t.vessel >= 0, p + ".vessel", "unknown vessel '" + vessel + "'");
    const json& nu = get_array(tasks[k], "nu", p);
    for (std::size_t e = 0; e < nu.size(); ++e) {
      const std::string q = p + ".nu[" + std::to_string(e) + "]";
      NuEntry entry;
      std::string mat = get_string(nu[e], "material", q);
      entry.material = net.material_index(mat);
      require(entry.material >= 0, q + ".material", "unknown material '" + mat + "'");
      entry.theta = get_int(nu[e], "theta", q);
      entry.value = get_number(nu[e], "value", q);
      t.nu.push_back(entry);
    }
    net.tasks.push_back(std::move(t));
  }
  validate(net, inst.hours_per_day);

  // Optional explicit occupancy table; it must follow the vessel convention.
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (!tasks[k].contains("mu")) continue;
    const std::string p = "$.tasks[" + std::to_string(k) + "]";
    const json& mu = get_array(tasks[k], "mu", p);
    const Task& t = net.tasks[k];
    bool start = false, end = false;
    for (std::size_t e = 0; e < mu.size(); ++e) {
      const std::string q = p + ".mu[" + std::to_string(e) + "]";
      std::string res = get_string(mu[e], "resource", q);
      int theta = get_int(mu[e], "theta", q);
      double value = get_number(mu[e], "value", q);
      int u = net.vessel_index(res);
      require(u >= 0 || net.material_index(res) >= 0, q + ".resource", "unknown resource '" + res + "'");
      double expected = u >= 0 ? net.mu(static_cast<int>(k), u, theta) : 0.0;
      require(value == expected, q + ".value",
              "occupancy must be -1 at start and +1 at completion on the hosting vessel only");
      if (u == t.vessel && theta == 0) start = true;
      if (u == t.vessel && theta == t.duration) end = true;
    }
    require(start && end, p + ".mu", "must list the start and completion entries of the hosting vessel");
  }

  if (j.contains("weeks")) {
    const json& weeks = get_array(j, "weeks", "$");
    require(!weeks.empty(), "$.weeks", "must not be empty");
    for (std::size_t w = 0; w < weeks.size(); ++w) {
      inst.weeks.push_back(parse_demand(weeks[w], net, "$.weeks[" + std::to_string(w) + "]"));
      require(inst.weeks.back().days == inst.weeks.front().days, "$.weeks[" + std::to_string(w) + "].days",
              "all weeks must share one horizon");
    }
  }
  if (j.contains("weights")) {
    const json& ws = get_array(j, "weights", "$");
    require(ws.size() == inst.weeks.size(), "$.weights", "one weight per week");
    double sum = 0.0;
    for (std::size_t w = 0; w < ws.size(); ++w) {
      require(ws[w].is_number() && ws[w].get<double>() > 0.0, "$.weights[" + std::to_string(w) + "]",
              "must be a positive number");
      inst.weights.push_back(ws[w].get<double>());
      sum += inst.weights.back();
    }
    require(std::abs(sum - 1.0) <= 1e-9, "$.weights", "must sum to 1");
  } else {
    inst.weights = uniform_weights(inst.weeks.size());
  }
  return inst;
}

inline nlohmann::json to_json(const RtnInstance& inst) {
  using nlohmann::json;
  const RtnNetwork& net = inst.network;
  json j;
  j["penalty"] = net.penalty;
  j["hours_per_day"] = inst.hours_per_day;
  j["materials"] = json::array();
  for (const Material& m : net.materials) {
    j["materials"].push_back({{"name", m.name},
                              {"class", to_string(m.cls)},
                              {"price", m.price},
                              {"storage_cost", m.storage_cost},
                              {"storage_cap", m.storage_cap}});
  }
  j["vessels"] = json::array();
  for (const Vessel& v : net.vessels) {
    j["vessels"].push_back({{"name", v.name}, {"unit_cost", v.unit_cost}, {"capacity_cap", v.capacity_cap}});
  }
  j["tasks"] = json::array();
  for (const Task& t : net.tasks) {
    json nu = json::array();
    for (const NuEntry& e : t.nu) {
      nu.push_back({{"material", net.materials[e.material].name}, {"theta", e.theta}, {"value", e.value}});
    }
    j["tasks"].push_back({{"name", t.name},
                          {"duration", t.duration},
                          {"min_fraction", t.min_fraction},
                          {"startup_cost", t.startup_cost},
                          {"vessel", net.vessels[t.vessel].name},
                          {"nu", nu}});
  }
  j["weeks"] = json::array();
  for (const DemandProfile& d : inst.weeks) {
    json table = json::object();
    for (int p : net.products()) table[net.materials[p].name] = d.demand[p];
    j["weeks"].push_back({{"days", d.days}, {"demand", table}});
  }
  j["weights"] = inst.weights;
  return j;
}

inline RtnInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return parse_instance(j);
}

inline void save_instance(const RtnInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json(inst).dump(2) << "\n";
}

}  // namespace pamso::rtn
