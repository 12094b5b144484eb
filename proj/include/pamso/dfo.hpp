#pragma once

// Derivative-free minimizers over a box: pattern search with coordinate and
// random poll directions, global-best particle swarm, and uniform random
// search. Objectives are evaluated in batches so callers can parallelize.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pamso/model.hpp"

namespace pamso::dfo {

using Point = std::vector<double>;
using BatchObjective = std::function<std::vector<double>(const std::vector<Point>&)>;

struct Box {
  std::vector<double> lower, upper;

  std::size_t dim() const { return lower.size(); }
  double width(std::size_t k) const { return upper[k] - lower[k]; }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
      throw Error(ErrorCode::kInvalidArgument, "box needs matching, nonempty bounds");
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]) || !(lower[k] < upper[k])) {
        throw Error(ErrorCode::kInvalidArgument, "box dimension " + std::to_string(k) + " needs finite lower < upper");
      }
    }
  }

  bool contains(const Point& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
    }
    return true;
  }

  // Returns true when any component moved.
  bool clip(Point& x) const {
    bool moved = false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double c = std::clamp(x[k], lower[k], upper[k]);
      if (c != x[k]) moved = true;
      x[k] = c;
    }
    return moved;
  }

  Point center() const {
    Point c(dim());
    for (std::size_t k = 0; k < dim(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
    return c;
  }
};

enum class Algorithm { kPatternSearch, kPso, kRandom };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kPatternSearch: return "pattern";
    case Algorithm::kPso: return "pso";
    case Algorithm::kRandom: return "random";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "pattern") return Algorithm::kPatternSearch;
  if (s == "pso") return Algorithm::kPso;
  if (s == "random") return Algorithm::kRandom;
  throw Error(ErrorCode::kInvalidArgument, "unknown DFO '" + s + "'");
}

struct DfoConfig {
  Algorithm algorithm = Algorithm::kPatternSearch;
  int budget = 150;
  std::uint64_t seed = 0;
  // Pattern search.
  double mesh_fraction = 0.25;
  double contraction = 0.5;
  double expansion = 2.0;
  double min_mesh = 1e-6;
  // Particle swarm.
  int swarm_size = 8;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  // Multiplies the initial mesh or velocity scale.
  double exploration = 1.0;

  void validate() const {
    if (budget < 1) throw Error(ErrorCode::kInvalidArgument, "budget must be >= 1");
    if (!(mesh_fraction > 0.0 && mesh_fraction <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "mesh fraction must lie in (0, 1]");
    }
    if (!(contraction > 0.0 && contraction < 1.0) || !(expansion >= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < contraction < 1 <= expansion");
    }
    if (swarm_size < 2) throw Error(ErrorCode::kInvalidArgument, "swarm size must be >= 2");
    if (!(exploration > 0.0) || !std::isfinite(exploration)) {
      throw Error(ErrorCode::kInvalidArgument, "exploration must be positive");
    }
  }
};

struct Sample {
  Point x;
  double value = 0.0;
  bool clipped = false;  // the algorithm proposed a point outside the box
};

struct DfoResult {
  std::vector<Sample> log;
  std::vector<double> best_so_far;
  std::size_t best_index = 0;  // earliest evaluation attaining the best value
  double final_mesh = 0.0;     // pattern search only

  const Point& best_x() const { return log.at(best_index).x; }
  double best_value() const { return log.at(best_index).value; }
};

inline BatchObjective serial(std::function<double(const Point&)> f) {
  return [f = std::move(f)](const std::vector<Point>& xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const Point& x : xs) out.push_back(f(x));
    return out;
  };
}

namespace detail {

// Evaluates up to the remaining budget and appends to the log. Returns the
// values of the points actually evaluated.
class Recorder {
 public:
  Recorder(const BatchObjective& f, int budget) : f_(f), budget_(budget) {}

  int remaining() const { return budget_ - static_cast<int>(result_.log.size()); }

  std::vector<double> evaluate(std::vector<Sample> batch) {
    if (static_cast<int>(batch.size()) > remaining()) batch.resize(std::max(0, remaining()));
    if (batch.empty()) return {};
    std::vector<Point> xs;
    xs.reserve(batch.size());
    for (const Sample& s : batch) xs.push_back(s.x);
    std::vector<double> values = f_(xs);
    if (values.size() != xs.size()) throw Error(ErrorCode::kInvalidArgument, "objective returned wrong batch size");
    for (std::size_t k = 0; k < batch.size(); ++k) {
      batch[k].value = values[k];
      double prev = result_.log.empty() ? std::numeric_limits<double>::infinity() : result_.best_so_far.back();
      if (result_.log.empty() || values[k] < prev) result_.best_index = result_.log.size();
      result_.log.push_back(std::move(batch[k]));
      result_.best_so_far.push_back(result_.log[result_.best_index].value);
    }
    return values;
  }

  DfoResult& result() { return result_; }

 private:
  const BatchObjective& f_;
  int budget_;
  DfoResult result_;
};

inline Sample make_sample(const Box& box, Point x) {
  Sample s;
  s.clipped = box.clip(x);
  s.x = std::move(x);
  return s;
}

inline void check_inputs(const Box& box, const Point& x0, const DfoConfig& cfg) {
  box.validate();
  cfg.validate();
  if (x0.size() != box.dim()) throw Error(ErrorCode::kInvalidArgument, "start point has the wrong dimension");
}

}  // namespace detail

inline DfoResult pattern_search(const BatchObjective& f, const Box& box, const Point& x0, const DfoConfig& cfg) {
  detail::check_inputs(box, x0, cfg);
  const std::size_t n = box.dim();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  detail::Recorder rec(f, cfg.budget);

  Sample start = detail::make_sample(box, x0);
  Point x = start.x;
  double fx = rec.evaluate({start}).at(0);
  double mesh = std::min(1.0, cfg.mesh_fraction * cfg.exploration);

  while (rec.remaining() > 0 && mesh >= cfg.min_mesh) {
    std::vector<Sample> poll;
    auto propose = [&](const Point& dir) {
      Point y = x;
      for (std::size_t k = 0; k < n; ++k) y[k] += mesh * box.width(k) * dir[k];
      Sample s = detail::make_sample(box, std::move(y));
      if (s.x == x) return;
      for (const Sample& p : poll) {
        if (p.x == s.x) return;
      }
      poll.push_back(std::move(s));
    };
    for (std::size_t k = 0; k < n; ++k) {
      for (double sign : {1.0, -1.0}) {
        Point dir(n, 0.0);
        dir[k] = sign;
        propose(dir);
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      Point dir(n);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& d : dir) {
          d = normal(rng);
          norm += d * d;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (double& d : dir) d /= norm;
      propose(dir);
    }
    if (poll.empty()) {
      mesh *= cfg.contraction;
      continue;
    }
    std::vector<double> values = rec.evaluate(poll);
    std::size_t best = values.size();
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] < fx && (best == values.size() || values[k] < values[best])) best = k;
    }
    if (best < values.size()) {
      x = poll[best].x;
      fx = values[best];
      mesh = std::min(1.0, mesh * cfg.expansion);
    } else {
      mesh *= cfg.contraction;
    }
  }
  rec.result().final_mesh = mesh;
  return std::move(rec.result());
}

inline DfoResult pso(const BatchObjective& f, const Box& box, const Point& x0, const DfoConfig& cfg) {
  detail::check_inputs(box, x0, cfg);
  const std::size_t n = box.dim();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  detail::Recorder rec(f, cfg.budget);
  const std::size_t S = static_cast<std::size_t>(std::min(cfg.swarm_size, cfg.budget));

  std::vector<Point> pos(S, Point(n)), vel(S, Point(n));
  for (std::size_t p = 0; p < S; ++p) {
    for (std::size_t k = 0; k < n; ++k) {
      pos[p][k] = p == 0 ? x0[k] : box.lower[k] + U(rng) * box.width(k);
      vel[p][k] = (2.0 * U(rng) - 1.0) * 0.25 * cfg.exploration * box.width(k);
    }
  }
  std::vector<Point> pbest(S);
  std::vector<double> pval(S, std::numeric_limits<double>::infinity());
  Point gbest;
  double gval = std::numeric_limits<double>::infinity();
  std::vector<bool> clipped(S, false);
  for (std::size_t p = 0; p < S; ++p) clipped[p] = box.clip(pos[p]);

  while (rec.remaining() > 0) {
    std::vector<Sample> batch(S);
    for (std::size_t p = 0; p < S; ++p) batch[p] = {pos[p], 0.0, clipped[p]};
    std::vector<double> values = rec.evaluate(std::move(batch));
    for (std::size_t p = 0; p < values.size(); ++p) {
      if (values[p] < pval[p]) {
        pval[p] = values[p];
        pbest[p] = pos[p];
      }
      if (values[p] < gval) {
        gval = values[p];
        gbest = pos[p];
      }
    }
    if (rec.remaining() <= 0) break;
    for (std::size_t p = 0; p < S; ++p) {
      clipped[p] = false;
      for (std::size_t k = 0; k < n; ++k) {
        double r1 = U(rng), r2 = U(rng);
        double v = cfg.inertia * vel[p][k] + cfg.cognitive * r1 * (pbest[p][k] - pos[p][k]) +
                   cfg.social * r2 * (gbest[k] - pos[p][k]);
        v = std::clamp(v, -box.width(k), box.width(k));
        double y = pos[p][k] + v;
        if (y < box.lower[k] || y > box.upper[k]) {
          y = std::clamp(y, box.lower[k], box.upper[k]);
          v = 0.0;
          clipped[p] = true;
        }
        pos[p][k] = y;
        vel[p][k] = v;
      }
    }
  }
  return std::move(rec.result());
}

inline DfoResult random_search(const BatchObjective& f, const Box& box, const Point& x0, const DfoConfig& cfg,
                               bool include_start = true) {
  detail::check_inputs(box, x0, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  detail::Recorder rec(f, cfg.budget);
  std::vector<Sample> batch;
  if (include_start) batch.push_back(detail::make_sample(box, x0));
  while (static_cast<int>(batch.size()) < cfg.budget) {
    Point y(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) y[k] = box.lower[k] + U(rng) * box.width(k);
    batch.push_back(detail::make_sample(box, std::move(y)));
  }
  rec.evaluate(std::move(batch));
  return std::move(rec.result());
}

inline DfoResult minimize(const BatchObjective& f, const Box& box, const Point& x0, const DfoConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::kPatternSearch: return pattern_search(f, box, x0, cfg);
    case Algorithm::kPso: return pso(f, box, x0, cfg);
    case Algorithm::kRandom: return random_search(f, box, x0, cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown DFO");
}

}  // namespace pamso::dfo
