#pragma once

// Parameter tuning for two-level models: the black-box map from cost
// prefactors to the true objective (solve the parameterized high level,
// fix its decisions, solve the low level), the tuning loop that drives a
// DFO over it, and transfer of tuned prefactors to a restricted box.

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pamso/dfo.hpp"
#include "pamso/milp.hpp"
#include "pamso/model.hpp"

namespace pamso::engine {

using Params = std::vector<double>;
using Fixing = std::map<std::string, double>;  // high-level variable name -> value

struct LowLevelPart {
  Model model;
  double weight = 1.0;
};

struct HierarchyProblem {
  std::function<Model(const Params&)> build_high;
  std::function<Fixing(const Model&, const Solution&)> extract;
  std::function<std::vector<LowLevelPart>(const Fixing&)> build_low;
  dfo::Box box;
  double sentinel = 1e10;
  bool maximize = false;  // low-level objectives are negated so tuning always minimizes
  SolveOptions high_options;
  SolveOptions low_options;
  std::shared_ptr<const MilpBackend> backend = std::make_shared<BuiltinBackend>();
};

struct MbbfResult {
  Params rho;
  double objective = 0.0;  // minimization orientation
  bool feasible = false;
  std::string failure;     // stage that failed when infeasible
  Fixing fixing;
  std::optional<SolveReport> high;
  std::vector<SolveReport> low;
  double high_time = 0.0;
  double low_time = 0.0;
  bool cached = false;
  bool clipped = false;
};

namespace detail {

inline double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_in_box(const HierarchyProblem& p, const Params& rho) {
  if (!p.box.contains(rho)) throw Error(ErrorCode::kOutOfBox, "parameters outside the declared box");
}

}  // namespace detail

inline MbbfResult evaluate_mbbf(const HierarchyProblem& problem, const Params& rho) {
  detail::check_in_box(problem, rho);
  MbbfResult out;
  out.rho = rho;
  auto fail = [&](std::string why) {
    out.feasible = false;
    out.objective = problem.sentinel;
    out.failure = std::move(why);
    return out;
  };
  auto t0 = std::chrono::steady_clock::now();
  Model high = problem.build_high(rho);
  out.high = problem.backend->solve(high, problem.high_options);
  out.high_time = detail::since(t0);
  if (!has_solution(out.high->status)) return fail(std::string("high-level ") + to_string(out.high->status));
  try {
    out.fixing = problem.extract(high, *out.high->incumbent);
  } catch (const Error& e) {
    return fail(std::string("extract: ") + e.what());
  }

  auto t1 = std::chrono::steady_clock::now();
  std::vector<LowLevelPart> parts = problem.build_low(out.fixing);
  double total = 0.0, weights = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    SolveReport rep = problem.backend->solve(parts[k].model, problem.low_options);
    const bool ok = has_solution(rep.status);
    if (ok) total += parts[k].weight * (problem.maximize ? -rep.objective() : rep.objective());
    weights += parts[k].weight;
    out.low.push_back(std::move(rep));
    if (!ok) {
      out.low_time = detail::since(t1);
      return fail("low-level part " + std::to_string(k) + " " + to_string(out.low.back().status));
    }
  }
  out.low_time = detail::since(t1);
  if (parts.empty() || std::abs(weights - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "low-level weights must be positive and sum to 1");
  }
  out.feasible = true;
  out.objective = total;
  return out;
}

// Evaluates distinct parameter vectors on up to `threads` workers. Results
// come back in request order regardless of completion order.
inline std::vector<MbbfResult> evaluate_batch(const HierarchyProblem& problem, const std::vector<Params>& points,
                                              int threads) {
  std::vector<MbbfResult> out(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        out[k] = evaluate_mbbf(problem, points[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(std::max(1, threads), points.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct TuneOptions {
  dfo::DfoConfig dfo;
  Params initial;
  int threads = 1;
  // Exploration multiplier applied when the initial point is infeasible.
  double infeasible_start_exploration = 2.0;
  // When set, the best parameters are re-evaluated with these options.
  std::optional<SolveOptions> final_high_options;
  std::optional<SolveOptions> final_low_options;
};

struct TuningTrace {
  std::vector<MbbfResult> evaluations;  // one per DFO request, in order
  std::vector<double> best_so_far;
  std::vector<double> cumulative_time;
  std::size_t best_index = 0;  // earliest evaluation attaining the best value
  std::uint64_t seed = 0;
  std::string dfo;
  int budget = 0;
  double exploration = 1.0;
  dfo::Box box;
  std::optional<MbbfResult> final;
  std::size_t distinct_evaluations = 0;

  const MbbfResult& best() const { return evaluations.at(best_index); }
};

namespace detail {

inline std::vector<std::uint64_t> key_of(const Params& p) {
  std::vector<std::uint64_t> k;
  k.reserve(p.size());
  for (double v : p) k.push_back(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  return k;
}

}  // namespace detail

inline TuningTrace tune(const HierarchyProblem& problem, const TuneOptions& options) {
  problem.box.validate();
  options.dfo.validate();
  detail::check_in_box(problem, options.initial);
  TuningTrace trace;
  trace.seed = options.dfo.seed;
  trace.dfo = dfo::to_string(options.dfo.algorithm);
  trace.budget = options.dfo.budget;
  trace.box = problem.box;

  std::map<std::vector<std::uint64_t>, MbbfResult> cache;
  auto t0 = std::chrono::steady_clock::now();

  // The start point is evaluated once up front to choose the exploration
  // scale; the DFO's own request for it is then served from the cache.
  MbbfResult first = evaluate_mbbf(problem, options.initial);
  dfo::DfoConfig cfg = options.dfo;
  if (!first.feasible) cfg.exploration *= options.infeasible_start_exploration;
  trace.exploration = cfg.exploration;
  cache.emplace(detail::key_of(options.initial), std::move(first));

  dfo::BatchObjective objective = [&](const std::vector<dfo::Point>& raw) {
    std::vector<MbbfResult> batch(raw.size());
    std::vector<Params> todo;
    std::vector<std::size_t> todo_index;
    std::map<std::vector<std::uint64_t>, std::size_t> pending;
    std::vector<bool> clipped(raw.size());
    std::vector<Params> pts(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      pts[k] = raw[k];
      clipped[k] = problem.box.clip(pts[k]);
      auto key = detail::key_of(pts[k]);
      if (cache.contains(key) || pending.contains(key)) continue;
      pending.emplace(key, todo.size());
      todo.push_back(pts[k]);
      todo_index.push_back(k);
    }
    std::vector<MbbfResult> fresh = evaluate_batch(problem, todo, options.threads);
    for (std::size_t j = 0; j < fresh.size(); ++j) cache.emplace(detail::key_of(todo[j]), fresh[j]);
    std::vector<double> values(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
      auto key = detail::key_of(pts[k]);
      MbbfResult r = cache.at(key);
      auto it = pending.find(key);
      // The first request of a newly evaluated point is not a cache hit.
      bool first_use = it != pending.end() && todo_index[it->second] == k;
      r.cached = !first_use;
      r.clipped = clipped[k];
      values[k] = r.objective;
      trace.evaluations.push_back(std::move(r));
      trace.cumulative_time.push_back(detail::since(t0));
    }
    trace.distinct_evaluations += fresh.size();
    return values;
  };
  dfo::DfoResult res = dfo::minimize(objective, problem.box, options.initial, cfg);
  // The up-front evaluation of the start point counts as its first use.
  if (!trace.evaluations.empty()) {
    trace.evaluations[0].cached = false;
    trace.distinct_evaluations += 1;
  }
  trace.best_so_far = res.best_so_far;
  trace.best_index = res.best_index;

  if (options.final_high_options || options.final_low_options) {
    HierarchyProblem tight = problem;
    if (options.final_high_options) tight.high_options = *options.final_high_options;
    if (options.final_low_options) tight.low_options = *options.final_low_options;
    trace.final = evaluate_mbbf(tight, trace.best().rho);
  }
  return trace;
}

struct TransferBox {
  dfo::Box box;
  bool vacuous = false;  // the restriction leaves the original box unchanged
};

// Hypercube of side range_length (as a fraction of each dimension's width)
// centered at prior, intersected with the original box.
inline TransferBox restricted_box(const dfo::Box& box, const Params& prior, double range_length) {
  box.validate();
  if (!(range_length > 0.0) || !std::isfinite(range_length)) {
    throw Error(ErrorCode::kInvalidArgument, "range length must be positive");
  }
  if (!box.contains(prior)) throw Error(ErrorCode::kOutOfBox, "prior parameters outside the box");
  TransferBox out;
  out.box = box;
  out.vacuous = true;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    double half = 0.5 * range_length * box.width(k);
    out.box.lower[k] = std::max(box.lower[k], prior[k] - half);
    out.box.upper[k] = std::min(box.upper[k], prior[k] + half);
    if (out.box.upper[k] <= out.box.lower[k]) {
      // A prior on a face with a vanishing range keeps a sliver of width.
      out.box.upper[k] = std::min(box.upper[k], out.box.lower[k] + half);
      out.box.lower[k] = std::max(box.lower[k], out.box.upper[k] - 2 * half);
    }
    if (out.box.lower[k] != box.lower[k] || out.box.upper[k] != box.upper[k]) out.vacuous = false;
  }
  return out;
}

struct TransferResult {
  TuningTrace trace;
  TransferBox restriction;
  Params prior;
  double range_length = 0.0;
};

inline TransferResult transfer_tune(const HierarchyProblem& problem, const Params& prior, double range_length,
                                    TuneOptions options) {
  TransferResult out;
  out.prior = prior;
  out.range_length = range_length;
  out.restriction = restricted_box(problem.box, prior, range_length);
  HierarchyProblem restricted = problem;
  restricted.box = out.restriction.box;
  options.initial = prior;
  out.trace = tune(restricted, options);
  return out;
}

// ---------------------------------------------------------------------------
// Artifacts.

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Independent per-component seed derived from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, const std::string& component) {
  std::uint64_t z = root ^ fnv1a(component);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct TraceMeta {
  std::string config_hash;
  std::uint64_t root_seed = 0;
};

inline void write_trace_csv(std::ostream& os, const TuningTrace& trace, const TraceMeta& meta) {
  if (trace.evaluations.empty()) throw Error(ErrorCode::kInvalidArgument, "empty trace");
  os << "# config_hash=" << meta.config_hash << " root_seed=" << meta.root_seed << " dfo_seed=" << trace.seed
     << " dfo=" << trace.dfo << " budget=" << trace.budget << "\n";
  os << "evaluation";
  for (std::size_t k = 0; k < trace.evaluations[0].rho.size(); ++k) os << ",rho" << (k + 1);
  os << ",objective,feasible,best_so_far,cumulative_wall_time,clipped,cached\n";
  for (std::size_t e = 0; e < trace.evaluations.size(); ++e) {
    const MbbfResult& r = trace.evaluations[e];
    os << e;
    for (double v : r.rho) os << "," << format_double(v);
    char tbuf[32];
    std::snprintf(tbuf, sizeof tbuf, "%.6f", trace.cumulative_time[e]);
    os << "," << format_double(r.objective) << "," << (r.feasible ? 1 : 0) << ","
       << format_double(trace.best_so_far[e]) << "," << tbuf << "," << (r.clipped ? 1 : 0) << ","
       << (r.cached ? 1 : 0) << "\n";
  }
}

inline void emit_trace(const TuningTrace& trace, const std::string& path, const TraceMeta& meta = {}) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_trace_csv(out, trace, meta);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

struct TraceRow {
  std::size_t evaluation = 0;
  Params rho;
  double objective = 0.0;
  bool feasible = false;
  double best_so_far = 0.0;
  double cumulative_time = 0.0;
  bool clipped = false;
  bool cached = false;
};

inline std::vector<TraceRow> parse_trace_csv(std::istream& is) {
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t nrho = 0;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      if (cells.size() < 7 || cells[0] != "evaluation") throw Error(ErrorCode::kParse, "bad trace header");
      nrho = cells.size() - 7;
      header = true;
      continue;
    }
    if (cells.size() != nrho + 7) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": wrong width");
    try {
      TraceRow r;
      r.evaluation = std::stoul(cells[0]);
      for (std::size_t k = 0; k < nrho; ++k) r.rho.push_back(std::stod(cells[1 + k]));
      r.objective = std::stod(cells[nrho + 1]);
      r.feasible = cells[nrho + 2] == "1";
      r.best_so_far = std::stod(cells[nrho + 3]);
      r.cumulative_time = std::stod(cells[nrho + 4]);
      r.clipped = cells[nrho + 5] == "1";
      r.cached = cells[nrho + 6] == "1";
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (!header) throw Error(ErrorCode::kParse, "missing trace header");
  return rows;
}

inline nlohmann::json options_json(const SolveOptions& o) {
  return {{"time_limit", o.time_limit},
          {"mip_gap", o.mip_gap},
          {"node_limit", o.node_limit},
          {"integrality_tolerance", o.integrality_tolerance},
          {"feasibility_tolerance", o.feasibility_tolerance}};
}

inline nlohmann::json result_json(const MbbfResult& r) {
  nlohmann::json j;
  j["rho"] = r.rho;
  j["objective"] = r.objective;
  j["feasible"] = r.feasible;
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["fixing"] = r.fixing;
  j["high_time"] = r.high_time;
  j["low_time"] = r.low_time;
  if (r.high) {
    j["high_status"] = to_string(r.high->status);
    j["high_objective"] = r.high->incumbent ? nlohmann::json(r.high->objective()) : nlohmann::json(nullptr);
  }
  nlohmann::json low = nlohmann::json::array();
  for (const SolveReport& rep : r.low) {
    low.push_back({{"status", to_string(rep.status)},
                   {"objective", rep.incumbent ? nlohmann::json(rep.objective()) : nlohmann::json(nullptr)},
                   {"gap", std::isfinite(rep.gap) ? nlohmann::json(rep.gap) : nlohmann::json(nullptr)}});
  }
  j["low"] = low;
  return j;
}

inline nlohmann::json summary_json(const TuningTrace& trace, const HierarchyProblem& problem, const TraceMeta& meta) {
  nlohmann::json j;
  j["config_hash"] = meta.config_hash;
  j["seeds"] = {{"root", meta.root_seed}, {"dfo", trace.seed}};
  j["dfo"] = trace.dfo;
  j["budget"] = trace.budget;
  j["evaluations"] = trace.evaluations.size();
  j["distinct_evaluations"] = trace.distinct_evaluations;
  j["exploration"] = trace.exploration;
  j["box"] = {{"lower", trace.box.lower}, {"upper", trace.box.upper}};
  j["best_index"] = trace.best_index;
  j["best_rho"] = trace.best().rho;
  j["best_objective"] = trace.best().objective;
  j["best_feasible"] = trace.best().feasible;
  j["best"] = result_json(trace.best());
  if (trace.final) j["final"] = result_json(*trace.final);
  j["wall_time"] = trace.cumulative_time.empty() ? 0.0 : trace.cumulative_time.back();
  j["sentinel"] = problem.sentinel;
  j["options"] = {{"high", options_json(problem.high_options)}, {"low", options_json(problem.low_options)}};
  return j;
}

}  // namespace pamso::engine
