#pragma once

// Command-line driver. Each subcommand reads a JSON run configuration,
// applies flag overrides, and writes JSON/CSV artifacts stamped with the
// configuration hash and seeds.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pamso/engine.hpp"
#include "pamso/milp.hpp"
#include "pamso/rtn.hpp"
#include "pamso/rtn_json.hpp"
#include "pamso/rtn_problem.hpp"

namespace pamso::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolve = 3;
inline constexpr int kExitMismatch = 4;

// Raised for failures that map to a specific exit code.
struct Failure {
  int exit_code;
  std::string kind;
  std::string message;
};

struct Flags {
  std::string config;
  std::string instance;
  std::string model;
  std::string source;
  std::string out;
  std::string dfo;
  std::string aggregation;
  std::vector<std::string> summaries;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::optional<double> time_limit;
  std::optional<double> mip_gap;
  std::optional<double> range_length;
  std::optional<int> threads;
};

struct RunConfig {
  json raw;  // effective configuration, hashed for provenance
  fs::path base_dir;
  std::string instance;
  std::uint64_t seed = 0;
  int budget = 150;
  dfo::Algorithm dfo = dfo::Algorithm::kPatternSearch;
  int swarm_size = dfo::DfoConfig{}.swarm_size;
  rtn::Aggregation aggregation = rtn::Aggregation::kApproach2;
  std::vector<double> initial_rho{rtn::kBaselineRho.begin(), rtn::kBaselineRho.end()};
  SolveOptions high, low;
  std::optional<SolveOptions> final_low;
  double sentinel = 1e10;
  int threads = 1;
  fs::path out = ".";
  std::string transfer_source;
  double range_length = 0.1;
  int pwl_breakpoints = 8;
  json gen;
  std::string hash;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& msg) { throw Failure{kExitConfig, "config-error", msg}; }

inline void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) config_error(path + ": " + what);
}

inline SolveOptions parse_solve_options(const json& j, const std::string& path, SolveOptions o) {
  check(j.is_object(), path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string p = path + "." + it.key();
    check(it.value().is_number(), p, "expected a number");
    double v = it.value().get<double>();
    if (it.key() == "time_limit") o.time_limit = v;
    else if (it.key() == "mip_gap") o.mip_gap = v;
    else if (it.key() == "node_limit") o.node_limit = static_cast<std::int64_t>(v);
    else if (it.key() == "integrality_tolerance") o.integrality_tolerance = v;
    else if (it.key() == "feasibility_tolerance") o.feasibility_tolerance = v;
    else config_error(p + ": unknown solver option");
  }
  try {
    o.validate();
  } catch (const Error& e) {
    config_error(path + ": " + e.what());
  }
  return o;
}

inline json solve_options_json(const SolveOptions& o) { return engine::options_json(o); }

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path q(p);
  return q.is_absolute() ? p : (base / q).lexically_normal().string();
}

}  // namespace detail

inline RunConfig load_config(const Flags& flags) {
  RunConfig c;
  json j = json::object();
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) detail::config_error("cannot open config " + flags.config);
    try {
      in >> j;
    } catch (const json::exception& e) {
      detail::config_error(flags.config + ": " + e.what());
    }
    detail::check(j.is_object(), "$", "expected an object");
    c.base_dir = fs::path(flags.config).parent_path();
  }
  // Flags override file fields.
  if (!flags.instance.empty()) j["instance"] = fs::absolute(flags.instance).string();
  if (flags.seed) j["seed"] = *flags.seed;
  if (flags.budget) j["budget"] = *flags.budget;
  if (!flags.dfo.empty()) j["dfo"] = flags.dfo;
  if (!flags.aggregation.empty()) j["aggregation"] = flags.aggregation;
  if (flags.range_length) j["range_length"] = *flags.range_length;
  if (!flags.source.empty()) j["transfer_source"] = fs::absolute(flags.source).string();
  for (const char* stage : {"high", "low"}) {
    if (flags.time_limit) j[stage]["time_limit"] = *flags.time_limit;
    if (flags.mip_gap) j[stage]["mip_gap"] = *flags.mip_gap;
  }

  static const std::vector<std::string> known{"instance", "seed", "budget", "dfo", "swarm_size", "aggregation",
                                              "initial_rho", "high", "low", "final", "sentinel", "threads", "out",
                                              "transfer_source", "range_length", "pwl_breakpoints", "gen"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    detail::check(std::find(known.begin(), known.end(), it.key()) != known.end(), "$." + it.key(), "unknown field");
  }
  auto get_int = [&](const char* key, int lo) {
    detail::check(j[key].is_number_integer() && j[key].get<long long>() >= lo, std::string("$.") + key,
                  "expected an integer >= " + std::to_string(lo));
    return j[key].get<int>();
  };
  if (j.contains("instance")) {
    detail::check(j["instance"].is_string(), "$.instance", "expected a path");
    c.instance = detail::resolve(c.base_dir, j["instance"].get<std::string>());
  }
  if (j.contains("seed")) {
    detail::check(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0),
                  "$.seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("budget")) c.budget = get_int("budget", 1);
  if (j.contains("swarm_size")) c.swarm_size = get_int("swarm_size", 2);
  if (j.contains("pwl_breakpoints")) c.pwl_breakpoints = get_int("pwl_breakpoints", 2);
  if (j.contains("dfo")) {
    detail::check(j["dfo"].is_string(), "$.dfo", "expected pattern, pso or random");
    try {
      c.dfo = dfo::parse_algorithm(j["dfo"].get<std::string>());
    } catch (const Error& e) {
      detail::config_error(std::string("$.dfo: ") + e.what());
    }
  }
  if (j.contains("aggregation")) {
    detail::check(j["aggregation"].is_string(), "$.aggregation", "expected approach1, approach2 or single");
    try {
      c.aggregation = rtn::parse_aggregation(j["aggregation"].get<std::string>());
    } catch (const Error& e) {
      detail::config_error(std::string("$.aggregation: ") + e.what());
    }
  }
  if (j.contains("initial_rho")) {
    const json& r = j["initial_rho"];
    detail::check(r.is_array() && r.size() == 6, "$.initial_rho", "expected 6 numbers");
    for (std::size_t k = 0; k < 6; ++k) {
      detail::check(r[k].is_number(), "$.initial_rho[" + std::to_string(k) + "]", "expected a number");
      c.initial_rho[k] = r[k].get<double>();
    }
  }
  if (j.contains("high")) c.high = detail::parse_solve_options(j["high"], "$.high", c.high);
  if (j.contains("low")) c.low = detail::parse_solve_options(j["low"], "$.low", c.low);
  if (j.contains("final")) c.final_low = detail::parse_solve_options(j["final"], "$.final", c.low);
  if (j.contains("sentinel")) {
    detail::check(j["sentinel"].is_number() && j["sentinel"].get<double>() > 0, "$.sentinel", "expected a positive number");
    c.sentinel = j["sentinel"].get<double>();
  }
  if (j.contains("transfer_source")) {
    detail::check(j["transfer_source"].is_string(), "$.transfer_source", "expected a path");
    c.transfer_source = detail::resolve(c.base_dir, j["transfer_source"].get<std::string>());
  }
  if (j.contains("range_length")) {
    detail::check(j["range_length"].is_number() && j["range_length"].get<double>() > 0, "$.range_length",
                  "expected a positive number");
    c.range_length = j["range_length"].get<double>();
  }
  if (j.contains("gen")) {
    detail::check(j["gen"].is_object(), "$.gen", "expected an object");
    c.gen = j["gen"];
  }
  // Output location and thread count do not change results and are left
  // out of the hash.
  json hashed = j;
  hashed.erase("out");
  hashed.erase("threads");
  c.raw = j;
  c.hash = engine::hex64(engine::fnv1a(hashed.dump()));

  c.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (j.contains("threads")) c.threads = get_int("threads", 1);
  if (flags.threads) {
    detail::check(*flags.threads >= 1, "--threads", "must be >= 1");
    c.threads = *flags.threads;
  }
  if (j.contains("out")) {
    detail::check(j["out"].is_string(), "$.out", "expected a directory");
    c.out = detail::resolve(c.base_dir, j["out"].get<std::string>());
  }
  if (!flags.out.empty()) c.out = flags.out;
  return c;
}

namespace detail {

inline json provenance(const RunConfig& c) {
  return {{"config_hash", c.hash}, {"seeds", {{"root", c.seed}, {"dfo", engine::derive_seed(c.seed, "dfo")}}}};
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Failure{kExitConfig, "io-error", "cannot write " + path.string()};
  out << j.dump(2) << "\n";
}

inline void ensure_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Failure{kExitConfig, "io-error", "cannot create " + c.out.string() + ": " + ec.message()};
}

inline rtn::RtnInstance load_instance(const RunConfig& c) {
  if (c.instance.empty()) config_error("$.instance: required for this subcommand");
  return rtn::load_instance(c.instance);
}

inline rtn::RtnProblemOptions problem_options(const RunConfig& c) {
  rtn::RtnProblemOptions o;
  o.aggregation = c.aggregation;
  o.pwl_breakpoints = c.pwl_breakpoints;
  o.high = c.high;
  o.low = c.low;
  o.sentinel = c.sentinel;
  return o;
}

inline engine::TuneOptions tune_options(const RunConfig& c) {
  engine::TuneOptions t;
  t.dfo.algorithm = c.dfo;
  t.dfo.budget = c.budget;
  t.dfo.seed = engine::derive_seed(c.seed, "dfo");
  t.dfo.swarm_size = c.swarm_size;
  t.initial = c.initial_rho;
  t.threads = c.threads;
  t.final_low_options = c.final_low;
  return t;
}

inline json report_json(const SolveReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["objective"] = r.incumbent ? json(r.objective()) : json(nullptr);
  j["best_bound"] = std::isfinite(r.best_bound) ? json(r.best_bound) : json(nullptr);
  j["gap"] = std::isfinite(r.gap) ? json(r.gap) : json(nullptr);
  j["nodes"] = r.nodes_explored;
  j["lp_iterations"] = r.lp_iterations;
  j["wall_time"] = r.wall_time;
  return j;
}

}  // namespace detail

inline int cmd_solve_full(const RunConfig& c, std::ostream& out) {
  rtn::RtnInstance inst = detail::load_instance(c);
  rtn::RtnProblemOptions o = detail::problem_options(c);
  rtn::FullSpaceModel fsm = rtn::build_rtn_full_space(inst, o);
  SolveReport rep = solve_milp(fsm.model, c.low);
  json j = detail::provenance(c);
  j["mode"] = "solve-full";
  j["aggregation"] = rtn::to_string(c.aggregation);
  j["report"] = detail::report_json(rep);
  rtn::ModelSize size = rtn::model_size(fsm.model);
  j["model_size"] = {{"continuous", size.continuous}, {"binary", size.binary}, {"constraints", size.constraints}};
  if (rep.incumbent) {
    rtn::RtnDesign d = rtn::extract_design(inst.network, fsm.index.vessel_size, fsm.index.storage_size, *rep.incumbent);
    j["design"] = rtn::fixing_from_design(inst.network, d);
  }
  detail::ensure_out(c);
  detail::write_json(c.out / "solve_full.json", j);
  out << "solve-full: " << to_string(rep.status) << " objective " << rep.objective() << "\n";
  return rep.incumbent ? kExitOk : kExitSolve;
}

inline int cmd_baseline(const RunConfig& c, std::ostream& out) {
  rtn::RtnInstance inst = detail::load_instance(c);
  engine::HierarchyProblem p = rtn::make_problem(inst, detail::problem_options(c));
  engine::MbbfResult r = engine::evaluate_mbbf(p, c.initial_rho);
  json j = detail::provenance(c);
  j["mode"] = "baseline";
  j["aggregation"] = rtn::to_string(c.aggregation);
  j["result"] = engine::result_json(r);
  detail::ensure_out(c);
  detail::write_json(c.out / "baseline.json", j);
  out << "baseline: objective " << r.objective << (r.feasible ? "" : " (infeasible)") << "\n";
  return r.feasible ? kExitOk : kExitSolve;
}

inline int finish_tuning(const RunConfig& c, const engine::HierarchyProblem& p, const engine::TuningTrace& t,
                         json extra, std::ostream& out) {
  detail::ensure_out(c);
  engine::TraceMeta meta{c.hash, c.seed};
  engine::emit_trace(t, (c.out / "trace.csv").string(), meta);
  json j = engine::summary_json(t, p, meta);
  j["aggregation"] = rtn::to_string(c.aggregation);
  j["instance"] = c.instance;
  j["threads"] = c.threads;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  detail::write_json(c.out / "summary.json", j);
  out << j["mode"].get<std::string>() << ": best objective " << t.best().objective << " after "
      << t.evaluations.size() << " evaluations\n";
  return t.best().feasible ? kExitOk : kExitSolve;
}

inline int cmd_tune(const RunConfig& c, std::ostream& out) {
  rtn::RtnInstance inst = detail::load_instance(c);
  engine::HierarchyProblem p = rtn::make_problem(inst, detail::problem_options(c));
  if (!p.box.contains(c.initial_rho)) detail::config_error("$.initial_rho: outside the parameter box");
  engine::TuningTrace t = engine::tune(p, detail::tune_options(c));
  return finish_tuning(c, p, t, {{"mode", "tune"}}, out);
}

inline int cmd_transfer(const RunConfig& c, std::ostream& out) {
  if (c.transfer_source.empty()) detail::config_error("$.transfer_source: required for transfer");
  json src;
  {
    std::ifstream in(c.transfer_source);
    if (!in) detail::config_error("cannot open transfer source " + c.transfer_source);
    try {
      in >> src;
    } catch (const json::exception& e) {
      detail::config_error(c.transfer_source + ": " + e.what());
    }
  }
  detail::check(src.contains("best_rho") && src["best_rho"].is_array(), "$.best_rho", "missing in transfer source");
  std::vector<double> prior = src["best_rho"].get<std::vector<double>>();
  rtn::RtnInstance inst = detail::load_instance(c);
  engine::HierarchyProblem p = rtn::make_problem(inst, detail::problem_options(c));
  if (!p.box.contains(prior)) detail::config_error("$.best_rho: transfer source lies outside the parameter box");
  RunConfig cc = c;
  if (!c.raw.contains("budget")) cc.budget = 20;
  engine::TransferResult tr = engine::transfer_tune(p, prior, c.range_length, detail::tune_options(cc));
  json extra = {{"mode", "transfer"},
                {"transfer",
                 {{"source", c.transfer_source},
                  {"prior", prior},
                  {"range_length", c.range_length},
                  {"vacuous", tr.restriction.vacuous}}}};
  return finish_tuning(cc, p, tr.trace, extra, out);
}

// Two binaries, one capacity row: max 3a + 2b + 4c with 2a + b + 3c <= 4
// and c continuous in [0, 0.5].
inline Model knapsack_fixture() {
  Model m;
  VarId a = m.add_variable("a", VarKind::kBinary, 0, 1);
  VarId b = m.add_variable("b", VarKind::kBinary, 0, 1);
  VarId c = m.add_variable("c", VarKind::kContinuous, 0, 0.5);
  LinearExpr row;
  row.add(a, 2).add(b, 1).add(c, 3);
  m.add_constraint(row, Sense::kLessEqual, 4, "capacity");
  LinearExpr obj;
  obj.add(a, 3).add(b, 2).add(c, 4);
  m.set_objective(obj, ObjectiveSense::kMaximize);
  m.seal();
  return m;
}

inline int cmd_oracle_check(const RunConfig& c, const Flags& flags, std::ostream& out) {
  Model m;
  std::string source = "knapsack-fixture";
  if (!flags.model.empty()) {
    std::ifstream in(flags.model);
    if (!in) detail::config_error("cannot open model " + flags.model);
    m = read_model(in);
    source = flags.model;
  } else if (!c.instance.empty()) {
    rtn::RtnInstance inst = detail::load_instance(c);
    m = rtn::build_rtn_full_space(inst, detail::problem_options(c)).model;
    source = c.instance;
  } else {
    m = knapsack_fixture();
  }
  if (!m.sealed()) m.seal();
  SolveOptions tight = c.low;
  tight.mip_gap = 0.0;
  SolveReport backend = solve_milp(m, tight);
  SolveReport brute;
  try {
    brute = brute_force_milp(m, tight);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSearchSpaceTooLarge) detail::config_error(std::string("model too large: ") + e.what());
    throw;
  }
  bool match = backend.status == brute.status ||
               (has_solution(backend.status) && has_solution(brute.status));
  if (match && brute.incumbent && backend.incumbent) {
    match = std::abs(brute.objective() - backend.objective()) <= 1e-6 * std::max(1.0, std::abs(brute.objective()));
  }
  json j = detail::provenance(c);
  j["mode"] = "oracle-check";
  j["source"] = source;
  j["verdict"] = match ? "match" : "mismatch";
  j["backend"] = detail::report_json(backend);
  j["brute_force"] = detail::report_json(brute);
  detail::ensure_out(c);
  detail::write_json(c.out / "oracle.json", j);
  out << "oracle-check: " << (match ? "match" : "mismatch") << "\n";
  return match ? kExitOk : kExitMismatch;
}

inline int cmd_gen(const RunConfig& c, std::ostream& out) {
  const json& g = c.gen;
  auto num = [&](const char* key, double fallback) {
    if (!g.contains(key)) return fallback;
    detail::check(g[key].is_number(), std::string("$.gen.") + key, "expected a number");
    return g[key].get<double>();
  };
  auto integer = [&](const char* key, int fallback) {
    if (!g.contains(key)) return fallback;
    detail::check(g[key].is_number_integer(), std::string("$.gen.") + key, "expected an integer");
    return g[key].get<int>();
  };
  static const std::vector<std::string> known{"tasks", "feeds", "intermediates", "products", "vessels",
                                              "max_duration", "capacity_cap", "storage_cap", "weeks", "days",
                                              "hours_per_day", "demand_scale"};
  for (auto it = g.begin(); it != g.end(); ++it) {
    detail::check(std::find(known.begin(), known.end(), it.key()) != known.end(), "$.gen." + it.key(),
                  "unknown field");
  }
  rtn::GeneratorOptions go;
  go.tasks = integer("tasks", go.tasks);
  go.feeds = integer("feeds", go.feeds);
  go.intermediates = integer("intermediates", go.intermediates);
  go.products = integer("products", go.products);
  go.vessels = integer("vessels", go.vessels);
  go.max_duration = integer("max_duration", go.max_duration);
  go.capacity_cap = num("capacity_cap", go.capacity_cap);
  go.storage_cap = num("storage_cap", go.storage_cap);
  const int weeks = integer("weeks", 1), days = integer("days", 7), hours = integer("hours_per_day", 24);
  detail::check(weeks >= 1, "$.gen.weeks", "must be >= 1");
  detail::check(days >= 1, "$.gen.days", "must be >= 1");
  detail::check(go.max_duration <= hours, "$.gen.max_duration", "must not exceed hours_per_day");
  rtn::RtnInstance inst;
  inst.network = rtn::generate_network(engine::derive_seed(c.seed, "gen-network"), go);
  inst.hours_per_day = hours;
  for (int w = 0; w < weeks; ++w) {
    inst.weeks.push_back(rtn::generate_demand(inst.network, days,
                                              engine::derive_seed(c.seed, "gen-demand-" + std::to_string(w)),
                                              num("demand_scale", 5.0)));
  }
  inst.weights = rtn::uniform_weights(weeks);
  detail::ensure_out(c);
  json j = rtn::to_json(inst);
  j["provenance"] = detail::provenance(c);
  rtn::parse_instance(j);
  detail::write_json(c.out / "instance.json", j);
  out << "gen: wrote " << (c.out / "instance.json").string() << "\n";
  return kExitOk;
}

inline int cmd_report(const RunConfig& c, const Flags& flags, std::ostream& out) {
  if (flags.summaries.empty()) detail::config_error("report needs at least one summary path");
  std::vector<std::string> paths = flags.summaries;
  std::sort(paths.begin(), paths.end());
  struct Row {
    std::string run, best, rho, evals, wall;
  };
  std::vector<Row> rows;
  for (const std::string& p : paths) {
    std::ifstream in(p);
    if (!in) detail::config_error("cannot open summary " + p);
    json s;
    try {
      in >> s;
    } catch (const json::exception& e) {
      detail::config_error(p + ": " + e.what());
    }
    for (const char* key : {"best_objective", "best_rho", "evaluations", "wall_time"}) {
      detail::check(s.is_object() && s.contains(key), p + ": $." + key, "missing");
    }
    std::string rho = s["best_rho"].dump();
    std::replace(rho.begin(), rho.end(), ',', ' ');
    rows.push_back({p, s["best_objective"].dump(), rho, s["evaluations"].dump(), s["wall_time"].dump()});
  }
  std::vector<std::string> header{"run", "best_objective", "best_rho", "evaluations", "wall_time"};
  std::vector<std::size_t> width(header.size());
  for (std::size_t k = 0; k < header.size(); ++k) width[k] = header[k].size();
  for (const Row& r : rows) {
    std::vector<std::string> cells{r.run, r.best, r.rho, r.evals, r.wall};
    for (std::size_t k = 0; k < cells.size(); ++k) width[k] = std::max(width[k], cells[k].size());
  }
  auto print = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      out << std::left << std::setw(static_cast<int>(width[k])) << cells[k] << (k + 1 < cells.size() ? "  " : "\n");
    }
  };
  print(header);
  for (const Row& r : rows) print({r.run, r.best, r.rho, r.evals, r.wall});
  detail::ensure_out(c);
  std::ofstream csv(c.out / "report.csv");
  if (!csv) throw Failure{kExitConfig, "io-error", "cannot write report.csv"};
  csv << "run,best_objective,best_rho,evaluations,wall_time\n";
  for (const Row& r : rows) csv << r.run << "," << r.best << "," << r.rho << "," << r.evals << "," << r.wall << "\n";
  return kExitOk;
}

inline json error_record(const Failure& f) {
  return {{"error", f.kind}, {"message", f.message}, {"exit_code", f.exit_code}};
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Parameter tuning for multi-time-scale RTN design and scheduling"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Run configuration JSON");
    sub->add_option("--instance", flags.instance, "Instance JSON (overrides the config)");
    sub->add_option("--seed", flags.seed, "Root seed");
    sub->add_option("--budget", flags.budget, "Evaluation budget");
    sub->add_option("--dfo", flags.dfo, "pattern | pso | random");
    sub->add_option("--aggregation", flags.aggregation, "approach1 | approach2 | single");
    sub->add_option("--time-limit", flags.time_limit, "Per-solve time limit in seconds");
    sub->add_option("--mip-gap", flags.mip_gap, "Relative MIP gap");
    sub->add_option("--threads", flags.threads, "Parallel evaluations");
    sub->add_option("--out", flags.out, "Output directory");
  };
  CLI::App* solve_full = app.add_subcommand("solve-full", "Solve the monolithic hourly model");
  CLI::App* baseline = app.add_subcommand("baseline", "Evaluate the black box at the initial parameters");
  CLI::App* tune = app.add_subcommand("tune", "Tune the parameters with a DFO");
  CLI::App* transfer = app.add_subcommand("transfer", "Tune in a box around a prior run's best parameters");
  CLI::App* oracle = app.add_subcommand("oracle-check", "Compare branch and bound against enumeration");
  CLI::App* gen = app.add_subcommand("gen", "Generate a seeded synthetic instance");
  CLI::App* report = app.add_subcommand("report", "Tabulate run summaries");
  for (CLI::App* sub : {solve_full, baseline, tune, transfer, oracle, gen, report}) add_common(sub);
  transfer->add_option("--source", flags.source, "Run summary providing the prior parameters");
  transfer->add_option("--range-length", flags.range_length, "Side of the search box as a fraction of each width");
  oracle->add_option("--model", flags.model, "Model in the text format");
  report->add_option("summaries", flags.summaries, "Run summary JSON files");

  fs::path out_dir;
  auto fail = [&](const Failure& f) {
    err << error_record(f).dump() << "\n";
    if (!out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      std::ofstream rec(out_dir / "error.json");
      if (rec) rec << error_record(f).dump(2) << "\n";
    }
    return f.exit_code;
  };
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw Failure{kExitConfig, "config-error", e.what()};
    }
    out_dir = flags.out;
    RunConfig c = load_config(flags);
    out_dir = c.out;
    if (solve_full->parsed()) return cmd_solve_full(c, out);
    if (baseline->parsed()) return cmd_baseline(c, out);
    if (tune->parsed()) return cmd_tune(c, out);
    if (transfer->parsed()) return cmd_transfer(c, out);
    if (oracle->parsed()) return cmd_oracle_check(c, flags, out);
    if (gen->parsed()) return cmd_gen(c, out);
    return cmd_report(c, flags, out);
  } catch (const Failure& f) {
    return fail(f);
  } catch (const Error& e) {
    // Malformed instances and models are configuration errors; anything
    // raised while solving is a solve failure.
    bool input = e.code() == ErrorCode::kValidation || e.code() == ErrorCode::kParse || e.code() == ErrorCode::kIo ||
                 e.code() == ErrorCode::kOutOfBox;
    return fail({input ? kExitConfig : kExitSolve, to_string(e.code()), e.what()});
  } catch (const std::exception& e) {
    return fail({kExitSolve, "internal-error", e.what()});
  }
}

}  // namespace pamso::cli
