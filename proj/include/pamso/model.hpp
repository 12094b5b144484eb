#pragma once

// Mixed-integer linear models with piecewise-linearized power cost terms.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pamso {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  kDuplicateName,
  kInvertedBounds,
  kUnknownVariable,
  kDuplicateLabel,
  kSealed,
  kInvalidArgument,
  kUnboundedVariable,
  kFixingOutOfBounds,
  kMissingValue,
  kSearchSpaceTooLarge,
  kInfeasibleSolution,
  kOutOfBox,
  kParse,
  kIo,
  kValidation,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateName: return "duplicate-name";
    case ErrorCode::kInvertedBounds: return "inverted-bounds";
    case ErrorCode::kUnknownVariable: return "unknown-variable";
    case ErrorCode::kDuplicateLabel: return "duplicate-label";
    case ErrorCode::kSealed: return "model-sealed";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kUnboundedVariable: return "unbounded-variable";
    case ErrorCode::kFixingOutOfBounds: return "fixing-out-of-bounds";
    case ErrorCode::kMissingValue: return "missing-value";
    case ErrorCode::kSearchSpaceTooLarge: return "search-space-too-large";
    case ErrorCode::kInfeasibleSolution: return "infeasible-solution";
    case ErrorCode::kOutOfBox: return "out-of-box";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kValidation: return "validation-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct VarId {
  std::uint32_t index = 0;
  auto operator<=>(const VarId&) const = default;
};

struct ConstraintId {
  std::uint32_t index = 0;
  auto operator<=>(const ConstraintId&) const = default;
};

enum class VarKind { kContinuous, kBinary, kInteger };
enum class Sense { kLessEqual, kEqual, kGreaterEqual };
enum class ObjectiveSense { kMinimize, kMaximize };

inline bool is_integral_kind(VarKind kind) { return kind != VarKind::kContinuous; }

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInf;
};

class LinearExpr {
 public:
  struct Term {
    VarId var;
    double coef;
  };

  LinearExpr() = default;
  explicit LinearExpr(double constant) : constant_(constant) {}

  LinearExpr& add(VarId var, double coef) {
    if (!std::isfinite(coef)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite coefficient");
    }
    terms_.push_back({var, coef});
    normalized_ = false;
    return *this;
  }

  LinearExpr& add(const LinearExpr& other, double scale = 1.0) {
    for (const Term& t : other.terms_) add(t.var, scale * t.coef);
    constant_ += scale * other.constant_;
    return *this;
  }

  LinearExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }

  // Sorts by variable, merges duplicates and drops zero coefficients.
  LinearExpr& normalize() {
    if (normalized_) return *this;
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms_.size());
    for (const Term& t : terms_) {
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    terms_ = std::move(merged);
    normalized_ = true;
    return *this;
  }

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }
  void set_constant(double c) { constant_ = c; }
  bool empty() const { return terms_.empty(); }

  double evaluate(std::span<const double> values) const {
    double sum = constant_;
    for (const Term& t : terms_) sum += t.coef * values[t.var.index];
    return sum;
  }

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
  bool normalized_ = true;
};

struct Constraint {
  LinearExpr expr;  // constant is folded into rhs on insertion
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
  std::string label;
};

struct PiecewiseCostTerm {
  VarId variable;
  std::vector<double> breakpoints;
  std::vector<double> values;
  double prefactor = 0.0;
  double exponent = 1.0;

  // Linear interpolation, clamped to the breakpoint range.
  double evaluate(double x) const {
    if (x <= breakpoints.front()) return values.front();
    if (x >= breakpoints.back()) return values.back();
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    std::size_t k = static_cast<std::size_t>(it - breakpoints.begin());
    double b0 = breakpoints[k - 1], b1 = breakpoints[k];
    double w = (x - b0) / (b1 - b0);
    return values[k - 1] + w * (values[k] - values[k - 1]);
  }
};

enum class SolveStatus { kOptimal, kFeasibleGap, kInfeasible, kUnbounded, kTimeLimitNoIncumbent, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasibleGap: return "feasible-gap";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kTimeLimitNoIncumbent: return "time-limit-no-incumbent";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

inline bool has_solution(SolveStatus s) {
  return s == SolveStatus::kOptimal || s == SolveStatus::kFeasibleGap;
}

struct Solution {
  std::vector<double> values;  // indexed by VarId::index
  double objective = 0.0;
  SolveStatus status = SolveStatus::kInfeasible;

  double value(VarId v) const { return values.at(v.index); }
};

struct SolveOptions {
  double time_limit = 60.0;  // seconds
  double mip_gap = 1e-4;
  double integrality_tolerance = 1e-6;
  double feasibility_tolerance = 1e-6;
  std::int64_t node_limit = 1'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(time_limit > 0) || node_limit <= 0 || !(integrality_tolerance > 0) ||
        !(feasibility_tolerance > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "solve limits must be positive");
    }
    if (!(mip_gap >= 0.0 && mip_gap < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "mip gap must lie in [0,1)");
    }
  }
};

class Model {
 public:
  VarId add_variable(std::string name, VarKind kind, double lower, double upper) {
    check_mutable();
    if (std::isnan(lower) || std::isnan(upper)) {
      throw Error(ErrorCode::kInvalidArgument, "NaN bound on " + name);
    }
    if (lower > upper) {
      throw Error(ErrorCode::kInvertedBounds, name);
    }
    if (kind == VarKind::kBinary && (lower < 0.0 || upper > 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "binary bounds outside [0,1] for " + name);
    }
    if (var_index_.contains(name)) throw Error(ErrorCode::kDuplicateName, name);
    VarId id{static_cast<std::uint32_t>(variables_.size())};
    var_index_.emplace(name, id);
    variables_.push_back({std::move(name), kind, lower, upper});
    return id;
  }

  ConstraintId add_constraint(LinearExpr expr, Sense sense, double rhs, std::string label) {
    check_mutable();
    if (!std::isfinite(rhs)) throw Error(ErrorCode::kInvalidArgument, "non-finite rhs in " + label);
    expr.normalize();
    for (const auto& t : expr.terms()) check_var(t.var);
    if (con_index_.contains(label)) throw Error(ErrorCode::kDuplicateLabel, label);
    rhs -= expr.constant();
    expr.set_constant(0.0);
    ConstraintId id{static_cast<std::uint32_t>(constraints_.size())};
    con_index_.emplace(label, id);
    constraints_.push_back({std::move(expr), sense, rhs, std::move(label)});
    return id;
  }

  void set_objective(LinearExpr expr, ObjectiveSense sense = ObjectiveSense::kMinimize) {
    check_mutable();
    expr.normalize();
    for (const auto& t : expr.terms()) check_var(t.var);
    objective_ = std::move(expr);
    sense_ = sense;
  }

  // Adds prefactor * x^exponent over uniform breakpoints on [0, U].
  const PiecewiseCostTerm& add_pwl_power_cost(VarId var, double prefactor, double exponent,
                                              int n_breakpoints) {
    check_mutable();
    check_var(var);
    const Variable& v = variables_[var.index];
    if (v.kind != VarKind::kContinuous) {
      throw Error(ErrorCode::kInvalidArgument, "piecewise term needs a continuous variable: " + v.name);
    }
    if (v.lower != 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "piecewise variable must have lower bound 0: " + v.name);
    }
    if (!std::isfinite(v.upper) || !(v.upper > 0.0)) {
      throw Error(ErrorCode::kUnboundedVariable, v.name);
    }
    if (n_breakpoints < 2) {
      throw Error(ErrorCode::kInvalidArgument, "need at least 2 breakpoints");
    }
    if (!(prefactor >= 0.0) || !std::isfinite(prefactor)) {
      throw Error(ErrorCode::kInvalidArgument, "prefactor must be finite and >= 0");
    }
    if (!(exponent > 0.0 && exponent <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "exponent must lie in (0,1]");
    }
    PiecewiseCostTerm term;
    term.variable = var;
    term.prefactor = prefactor;
    term.exponent = exponent;
    const int segments = n_breakpoints - 1;
    for (int k = 0; k < n_breakpoints; ++k) {
      double b = k == segments ? v.upper : v.upper * static_cast<double>(k) / segments;
      term.breakpoints.push_back(b);
      term.values.push_back(prefactor * std::pow(b, exponent));
    }
    piecewise_.push_back(std::move(term));
    return piecewise_.back();
  }

  // Inserts a pre-built term; used by deserialization and transforms.
  void add_piecewise_term(PiecewiseCostTerm term) {
    check_mutable();
    check_var(term.variable);
    if (term.breakpoints.size() < 2 || term.breakpoints.size() != term.values.size()) {
      throw Error(ErrorCode::kInvalidArgument, "malformed piecewise term");
    }
    for (std::size_t k = 1; k < term.breakpoints.size(); ++k) {
      if (!(term.breakpoints[k] > term.breakpoints[k - 1])) {
        throw Error(ErrorCode::kInvalidArgument, "breakpoints must be strictly ascending");
      }
    }
    piecewise_.push_back(std::move(term));
  }

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(VarId id) const { return variables_.at(id.index); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Constraint& constraint(ConstraintId id) const { return constraints_.at(id.index); }
  const LinearExpr& objective() const { return objective_; }
  ObjectiveSense objective_sense() const { return sense_; }
  const std::vector<PiecewiseCostTerm>& piecewise_terms() const { return piecewise_; }

  std::optional<VarId> find_variable(const std::string& name) const {
    auto it = var_index_.find(name);
    if (it == var_index_.end()) return std::nullopt;
    return it->second;
  }
  VarId variable_id(const std::string& name) const {
    auto v = find_variable(name);
    if (!v) throw Error(ErrorCode::kUnknownVariable, name);
    return *v;
  }
  std::optional<ConstraintId> find_constraint(const std::string& label) const {
    auto it = con_index_.find(label);
    if (it == con_index_.end()) return std::nullopt;
    return it->second;
  }

  // Bound edits bypass sealing on purpose: they are only reachable through
  // fix_variables, which always operates on a private copy.
  void set_bounds_unchecked(VarId id, double lower, double upper) {
    variables_[id.index].lower = lower;
    variables_[id.index].upper = upper;
  }

  std::size_t count_kind(VarKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        variables_.begin(), variables_.end(), [&](const Variable& v) { return v.kind == kind; }));
  }

 private:
  void check_mutable() const {
    if (sealed_) throw Error(ErrorCode::kSealed, "model is sealed");
  }
  void check_var(VarId id) const {
    if (id.index >= variables_.size()) {
      throw Error(ErrorCode::kUnknownVariable, "id " + std::to_string(id.index));
    }
  }

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<PiecewiseCostTerm> piecewise_;
  LinearExpr objective_;
  ObjectiveSense sense_ = ObjectiveSense::kMinimize;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, ConstraintId> con_index_;
  bool sealed_ = false;
};

struct FixTolerances {
  double integrality = 1e-6;
  double feasibility = 1e-6;
};

// Returns a copy with each listed variable pinned to its assigned value.
inline Model fix_variables(const Model& model, const std::map<VarId, double>& assignments,
                           FixTolerances tol = {}) {
  Model fixed = model;
  for (const auto& [id, raw] : assignments) {
    if (id.index >= model.num_variables()) {
      throw Error(ErrorCode::kUnknownVariable, "id " + std::to_string(id.index));
    }
    const Variable& v = model.variable(id);
    double value = raw;
    if (is_integral_kind(v.kind)) {
      double r = std::round(value);
      if (std::abs(value - r) <= tol.integrality) value = r;
    }
    if (value < v.lower - tol.feasibility || value > v.upper + tol.feasibility || std::isnan(value)) {
      std::ostringstream os;
      os << v.name << " := " << value << " outside [" << v.lower << ", " << v.upper << "]";
      throw Error(ErrorCode::kFixingOutOfBounds, os.str());
    }
    value = std::clamp(value, v.lower, v.upper);
    fixed.set_bounds_unchecked(id, value, value);
  }
  return fixed;
}

struct Evaluation {
  double objective = 0.0;
  double max_violation = 0.0;
};

inline double constraint_residual(const Constraint& c, std::span<const double> values) {
  double lhs = c.expr.evaluate(values);
  switch (c.sense) {
    case Sense::kLessEqual: return std::max(0.0, lhs - c.rhs);
    case Sense::kGreaterEqual: return std::max(0.0, c.rhs - lhs);
    case Sense::kEqual: return std::abs(lhs - c.rhs);
  }
  return 0.0;
}

inline double objective_value(const Model& model, std::span<const double> values) {
  double obj = model.objective().evaluate(values);
  for (const auto& term : model.piecewise_terms()) obj += term.evaluate(values[term.variable.index]);
  return obj;
}

inline Evaluation evaluate_solution(const Model& model, std::span<const double> values) {
  if (values.size() != model.num_variables()) {
    throw Error(ErrorCode::kMissingValue, "expected " + std::to_string(model.num_variables()) +
                                              " values, got " + std::to_string(values.size()));
  }
  Evaluation ev;
  ev.objective = objective_value(model, values);
  for (const auto& c : model.constraints()) {
    ev.max_violation = std::max(ev.max_violation, constraint_residual(c, values));
  }
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    double x = values[j];
    if (std::isnan(x)) {
      ev.max_violation = kInf;
      continue;
    }
    ev.max_violation = std::max({ev.max_violation, v.lower - x, x - v.upper});
    if (is_integral_kind(v.kind)) ev.max_violation = std::max(ev.max_violation, std::abs(x - std::round(x)));
  }
  return ev;
}

// Replaces every piecewise term by the incremental formulation:
//   x = b0 + sum_k len_k d_k,  d_{k+1} <= y_k <= d_k,  y_k binary,
//   cost = v0 + sum_k (v_k - v_{k-1}) d_k.
// Terms on fixed variables collapse into an objective constant. Original
// variables keep their ids; auxiliaries are appended.
inline Model lower_piecewise(const Model& model) {
  Model out;
  for (const auto& v : model.variables()) out.add_variable(v.name, v.kind, v.lower, v.upper);
  for (const auto& c : model.constraints()) out.add_constraint(c.expr, c.sense, c.rhs, c.label);
  LinearExpr obj = model.objective();
  int term_index = 0;
  for (const auto& term : model.piecewise_terms()) {
    const Variable& x = model.variable(term.variable);
    const std::string tag = "__pwl" + std::to_string(term_index++) + "_";
    if (x.lower == x.upper) {
      obj.add_constant(term.evaluate(x.lower));
      continue;
    }
    const std::size_t segments = term.breakpoints.size() - 1;
    std::vector<VarId> fill(segments);
    std::vector<VarId> order(segments > 0 ? segments - 1 : 0);
    for (std::size_t k = 0; k < segments; ++k) {
      fill[k] = out.add_variable(tag + "d" + std::to_string(k), VarKind::kContinuous, 0.0, 1.0);
    }
    for (std::size_t k = 0; k + 1 < segments; ++k) {
      order[k] = out.add_variable(tag + "y" + std::to_string(k), VarKind::kBinary, 0.0, 1.0);
    }
    LinearExpr link;
    link.add(term.variable, 1.0);
    for (std::size_t k = 0; k < segments; ++k) {
      link.add(fill[k], -(term.breakpoints[k + 1] - term.breakpoints[k]));
    }
    out.add_constraint(link, Sense::kEqual, term.breakpoints.front(), tag + "link");
    for (std::size_t k = 0; k + 1 < segments; ++k) {
      LinearExpr upper;  // y_k <= d_k
      upper.add(order[k], 1.0).add(fill[k], -1.0);
      out.add_constraint(upper, Sense::kLessEqual, 0.0, tag + "fill" + std::to_string(k));
      LinearExpr lower;  // d_{k+1} <= y_k
      lower.add(fill[k + 1], 1.0).add(order[k], -1.0);
      out.add_constraint(lower, Sense::kLessEqual, 0.0, tag + "next" + std::to_string(k));
    }
    obj.add_constant(term.values.front());
    for (std::size_t k = 0; k < segments; ++k) obj.add(fill[k], term.values[k + 1] - term.values[k]);
  }
  out.set_objective(std::move(obj), model.objective_sense());
  if (model.sealed()) out.seal();
  return out;
}

// ---------------------------------------------------------------------------
// Text format: one record per line, deterministic ordering, full precision.

namespace detail {

inline std::string escape_token(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '%' || ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      static const char* hex = "0123456789ABCDEF";
      out += '%';
      out += hex[(static_cast<unsigned char>(ch) >> 4) & 0xF];
      out += hex[static_cast<unsigned char>(ch) & 0xF];
    } else {
      out += ch;
    }
  }
  return out.empty() ? std::string("%00") : out;
}

inline std::string unescape_token(const std::string& s) {
  if (s == "%00") return {};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::string fmt_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw Error(ErrorCode::kParse, "bad number '" + s + "'");
  return v;
}

inline const char* kind_token(VarKind k) {
  switch (k) {
    case VarKind::kContinuous: return "C";
    case VarKind::kBinary: return "B";
    case VarKind::kInteger: return "I";
  }
  return "C";
}

inline const char* sense_token(Sense s) {
  switch (s) {
    case Sense::kLessEqual: return "<=";
    case Sense::kEqual: return "=";
    case Sense::kGreaterEqual: return ">=";
  }
  return "<=";
}

}  // namespace detail

inline void write_model(std::ostream& os, const Model& m) {
  using detail::fmt_double;
  os << "pamso-model 1\n";
  os << "sense " << (m.objective_sense() == ObjectiveSense::kMinimize ? "min" : "max") << "\n";
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    const auto& v = m.variables()[j];
    os << "var " << detail::escape_token(v.name) << ' ' << detail::kind_token(v.kind) << ' '
       << fmt_double(v.lower) << ' ' << fmt_double(v.upper) << "\n";
  }
  os << "obj " << fmt_double(m.objective().constant()) << ' ' << m.objective().terms().size();
  for (const auto& t : m.objective().terms()) os << ' ' << t.var.index << ' ' << fmt_double(t.coef);
  os << "\n";
  for (const auto& c : m.constraints()) {
    os << "con " << detail::escape_token(c.label) << ' ' << detail::sense_token(c.sense) << ' '
       << fmt_double(c.rhs) << ' ' << c.expr.terms().size();
    for (const auto& t : c.expr.terms()) os << ' ' << t.var.index << ' ' << fmt_double(t.coef);
    os << "\n";
  }
  for (const auto& p : m.piecewise_terms()) {
    os << "pwl " << p.variable.index << ' ' << fmt_double(p.prefactor) << ' ' << fmt_double(p.exponent)
       << ' ' << p.breakpoints.size();
    for (std::size_t k = 0; k < p.breakpoints.size(); ++k) {
      os << ' ' << fmt_double(p.breakpoints[k]) << ' ' << fmt_double(p.values[k]);
    }
    os << "\n";
  }
  os << "sealed " << (m.sealed() ? 1 : 0) << "\n";
}

inline std::string to_text(const Model& m) {
  std::ostringstream os;
  write_model(os, m);
  return os.str();
}

inline Model read_model(std::istream& is) {
  using detail::parse_double;
  Model m;
  std::string line;
  bool header = false, seal = false;
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  std::optional<LinearExpr> objective;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto next = [&]() {
      std::string tok;
      if (!(ls >> tok)) fail("truncated record");
      return tok;
    };
    auto read_terms = [&](LinearExpr& e) {
      std::size_t n = std::stoul(next());
      for (std::size_t k = 0; k < n; ++k) {
        std::uint32_t idx = static_cast<std::uint32_t>(std::stoul(next()));
        e.add(VarId{idx}, parse_double(next()));
      }
    };
    try {
      if (tag == "pamso-model") {
        if (next() != "1") fail("unsupported version");
        header = true;
      } else if (!header) {
        fail("missing header");
      } else if (tag == "sense") {
        std::string s = next();
        if (s != "min" && s != "max") fail("unknown objective sense '" + s + "'");
        sense = s == "max" ? ObjectiveSense::kMaximize : ObjectiveSense::kMinimize;
      } else if (tag == "var") {
        std::string name = detail::unescape_token(next());
        std::string kind = next();
        if (kind != "C" && kind != "B" && kind != "I") fail("unknown variable kind '" + kind + "'");
        VarKind k = kind == "B" ? VarKind::kBinary : kind == "I" ? VarKind::kInteger : VarKind::kContinuous;
        double lo = parse_double(next());
        double hi = parse_double(next());
        m.add_variable(std::move(name), k, lo, hi);
      } else if (tag == "obj") {
        LinearExpr e(parse_double(next()));
        read_terms(e);
        objective = std::move(e);
      } else if (tag == "con") {
        std::string label = detail::unescape_token(next());
        std::string s = next();
        if (s != "<=" && s != ">=" && s != "=") fail("unknown sense '" + s + "'");
        Sense sn = s == "<=" ? Sense::kLessEqual : s == ">=" ? Sense::kGreaterEqual : Sense::kEqual;
        double rhs = parse_double(next());
        LinearExpr e;
        read_terms(e);
        m.add_constraint(std::move(e), sn, rhs, std::move(label));
      } else if (tag == "pwl") {
        PiecewiseCostTerm p;
        p.variable = VarId{static_cast<std::uint32_t>(std::stoul(next()))};
        p.prefactor = parse_double(next());
        p.exponent = parse_double(next());
        std::size_t n = std::stoul(next());
        for (std::size_t k = 0; k < n; ++k) {
          p.breakpoints.push_back(parse_double(next()));
          p.values.push_back(parse_double(next()));
        }
        m.add_piecewise_term(std::move(p));
      } else if (tag == "sealed") {
        seal = next() == "1";
      } else {
        fail("unknown record '" + tag + "'");
      }
    } catch (const std::invalid_argument&) {
      fail("malformed number");
    } catch (const std::out_of_range&) {
      fail("number out of range");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParse) throw;
      fail(e.what());
    }
  }
  if (!header) throw Error(ErrorCode::kParse, "empty input");
  m.set_objective(objective.value_or(LinearExpr{}), sense);
  if (seal) m.seal();
  return m;
}

inline Model from_text(const std::string& text) {
  std::istringstream is(text);
  return read_model(is);
}

}  // namespace pamso
