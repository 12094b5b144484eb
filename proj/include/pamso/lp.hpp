#pragma once

// Bounded-variable revised simplex (primal and dual) over a column-wise
// sparse matrix. The basis is factorized with a sparse LU and updated in
// product form between refactorizations.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace pamso::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// min cost.x + offset  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
struct LpProblem {
  int num_rows = 0;
  int num_cols = 0;
  std::vector<double> cost;
  std::vector<double> col_lo, col_hi;
  std::vector<double> row_lo, row_hi;
  std::vector<int> col_start{0};  // size num_cols + 1
  std::vector<int> row_index;
  std::vector<double> value;
  double offset = 0.0;

  int add_column(double c, double lo, double hi, const std::vector<std::pair<int, double>>& entries) {
    cost.push_back(c);
    col_lo.push_back(lo);
    col_hi.push_back(hi);
    for (const auto& [r, v] : entries) {
      row_index.push_back(r);
      value.push_back(v);
    }
    col_start.push_back(static_cast<int>(row_index.size()));
    return num_cols++;
  }

  int add_row(double lo, double hi) {
    row_lo.push_back(lo);
    row_hi.push_back(hi);
    return num_rows++;
  }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kTimeLimit, kNumericalFailure };

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree, kFixed };

struct Basis {
  std::vector<int> head;
  std::vector<VarStatus> status;
};

struct SimplexSettings {
  double primal_tol = 1e-7;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 80;
  std::int64_t max_iterations = -1;  // -1: scaled to problem size
  int degenerate_switch = 60;        // consecutive degenerate pivots before Bland's rule
};

class SimplexSolver {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SimplexSolver(LpProblem problem, SimplexSettings settings = {})
      : p_(std::move(problem)), s_(settings), m_(p_.num_rows), n_(p_.num_cols), total_(m_ + n_) {
    lo_.resize(total_);
    hi_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = p_.col_lo[j];
      hi_[j] = p_.col_hi[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = p_.row_lo[i];
      hi_[n_ + i] = p_.row_hi[i];
    }
    x_.assign(total_, 0.0);
    d_.assign(total_, 0.0);
    y_.assign(m_, 0.0);
    status_.assign(total_, VarStatus::kAtLower);
    pos_.assign(total_, -1);
    head_.resize(m_);
    slack_basis();
  }

  const LpProblem& problem() const { return p_; }
  int num_rows() const { return m_; }
  int num_cols() const { return n_; }

  void set_deadline(Clock::time_point deadline) { deadline_ = deadline; }

  void set_col_bounds(int j, double lo, double hi) {
    lo_[j] = lo;
    hi_[j] = hi;
    if (status_[j] != VarStatus::kBasic) place_nonbasic(j);
    values_dirty_ = true;
  }
  double col_lower(int j) const { return lo_[j]; }
  double col_upper(int j) const { return hi_[j]; }

  Basis basis() const { return {head_, status_}; }

  void set_basis(const Basis& b) {
    head_ = b.head;
    status_ = b.status;
    std::fill(pos_.begin(), pos_.end(), -1);
    for (int k = 0; k < m_; ++k) pos_[head_[k]] = k;
    for (int j = 0; j < total_; ++j) {
      if (status_[j] != VarStatus::kBasic) place_nonbasic(j);
    }
    dse_.assign(m_, 1.0);
    need_refactor_ = true;
    values_dirty_ = true;
  }

  LpStatus solve() {
    iterations_ = 0;
    const std::int64_t limit =
        s_.max_iterations > 0 ? s_.max_iterations : 200LL * (m_ + n_) + 20000;
    for (int attempt = 0; attempt < 4; ++attempt) {
      if (!refactor()) {
        slack_basis();
        if (!refactor()) return status_code_ = LpStatus::kNumericalFailure;
      }
      compute_primal();
      compute_duals(false);
      LpStatus st;
      if (primal_infeasibility() <= s_.primal_tol) {
        st = primal(limit);
      } else {
        // Dual simplex from a dual feasible start; unbounded directions get
        // temporary bounds that are removed before the primal cleanup.
        std::vector<Artificial> boxed = make_dual_feasible();
        st = dual(limit);
        if (!boxed.empty()) {
          for (const Artificial& a : boxed) {
            lo_[a.j] = a.lo;
            hi_[a.j] = a.hi;
            if (status_[a.j] != VarStatus::kBasic) place_nonbasic(a.j);
          }
          values_dirty_ = true;
          if (st == LpStatus::kInfeasible) st = LpStatus::kOptimal;
        }
        if (st == LpStatus::kOptimal) st = primal(limit);
      }
      if (st != LpStatus::kOptimal) return status_code_ = st;
      // Verify with a fresh factorization before accepting.
      if (!refactor()) continue;
      compute_primal();
      compute_duals(false);
      if (primal_infeasibility() <= 10 * s_.primal_tol && dual_infeasibility() <= 1e3 * s_.dual_tol) {
        return status_code_ = LpStatus::kOptimal;
      }
    }
    return status_code_ = LpStatus::kNumericalFailure;
  }

  LpStatus status() const { return status_code_; }
  std::int64_t iterations() const { return iterations_; }

  double objective() const {
    double obj = p_.offset;
    for (int j = 0; j < n_; ++j) obj += p_.cost[j] * x_[j];
    return obj;
  }
  std::vector<double> primal_values() const { return {x_.begin(), x_.begin() + n_}; }
  std::vector<double> row_activity() const { return {x_.begin() + n_, x_.end()}; }
  // y with reduced cost d_j = c_j - y.A_j; for logicals d_{n+i} = y_i.
  const std::vector<double>& row_duals() const { return y_; }
  std::vector<double> reduced_costs() const { return {d_.begin(), d_.begin() + n_}; }
  VarStatus col_status(int j) const { return status_[j]; }

 private:
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  struct Eta {
    int pos;
    double pivot;
    std::vector<int> idx;
    std::vector<double> val;
  };

  void slack_basis() {
    for (int j = 0; j < n_; ++j) {
      status_[j] = VarStatus::kAtLower;
      pos_[j] = -1;
      place_nonbasic(j);
    }
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      status_[n_ + i] = VarStatus::kBasic;
      pos_[n_ + i] = i;
    }
    dse_.assign(m_, 1.0);
    need_refactor_ = true;
    values_dirty_ = true;
  }

  // Chooses a nonbasic status/value consistent with the current bounds.
  void place_nonbasic(int j) {
    const double lo = lo_[j], hi = hi_[j];
    VarStatus st = status_[j];
    if (lo == hi) {
      st = VarStatus::kFixed;
    } else if (st == VarStatus::kAtUpper && std::isfinite(hi)) {
      st = VarStatus::kAtUpper;
    } else if (std::isfinite(lo)) {
      st = VarStatus::kAtLower;
    } else if (std::isfinite(hi)) {
      st = VarStatus::kAtUpper;
    } else {
      st = VarStatus::kFree;
    }
    status_[j] = st;
    switch (st) {
      case VarStatus::kFixed:
      case VarStatus::kAtLower: x_[j] = lo; break;
      case VarStatus::kAtUpper: x_[j] = hi; break;
      default: x_[j] = 0.0; break;
    }
  }

  bool refactor() {
    if (!need_refactor_ && etas_.empty()) return true;
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 3);
    for (int k = 0; k < m_; ++k) {
      int j = head_[k];
      if (j >= n_) {
        trip.emplace_back(j - n_, k, -1.0);
      } else {
        for (int e = p_.col_start[j]; e < p_.col_start[j + 1]; ++e) {
          trip.emplace_back(p_.row_index[e], k, p_.value[e]);
        }
      }
    }
    SpMat b(m_, m_);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    etas_.clear();
    if (m_ == 0) {
      need_refactor_ = false;
      return true;
    }
    lu_.analyzePattern(b);
    lu_.factorize(b);
    if (lu_.info() != Eigen::Success) return false;
    need_refactor_ = false;
    values_dirty_ = true;
    return true;
  }

  void ftran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    v = lu_.solve(v);
    for (const Eta& e : etas_) {
      double vp = v[e.pos] / e.pivot;
      if (vp != 0.0) {
        for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * vp;
      }
      v[e.pos] = vp;
    }
  }

  void btran(Eigen::VectorXd& w) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const Eta& e = *it;
      double dot = 0.0;
      for (std::size_t k = 0; k < e.idx.size(); ++k) dot += e.val[k] * w[e.idx[k]];
      w[e.pos] = (w[e.pos] - dot) / e.pivot;
    }
    w = lu_.transpose().solve(w);
  }

  Eigen::VectorXd column(int j) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_);
    if (j >= n_) {
      v[j - n_] = -1.0;
    } else {
      for (int e = p_.col_start[j]; e < p_.col_start[j + 1]; ++e) v[p_.row_index[e]] = p_.value[e];
    }
    return v;
  }

  double dot_column(const Eigen::VectorXd& y, int j) const {
    if (j >= n_) return -y[j - n_];
    double s = 0.0;
    for (int e = p_.col_start[j]; e < p_.col_start[j + 1]; ++e) s += p_.value[e] * y[p_.row_index[e]];
    return s;
  }

  void compute_primal() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic || x_[j] == 0.0) continue;
      if (j >= n_) {
        rhs[j - n_] += x_[j];
      } else {
        for (int e = p_.col_start[j]; e < p_.col_start[j + 1]; ++e) {
          rhs[p_.row_index[e]] -= p_.value[e] * x_[j];
        }
      }
    }
    ftran(rhs);
    for (int k = 0; k < m_; ++k) x_[head_[k]] = rhs[k];
    values_dirty_ = false;
  }

  double cost_of(int j) const { return j < n_ ? p_.cost[j] : 0.0; }

  double infeasibility_of(int j) const {
    if (x_[j] < lo_[j] - s_.primal_tol) return lo_[j] - x_[j];
    if (x_[j] > hi_[j] + s_.primal_tol) return x_[j] - hi_[j];
    return 0.0;
  }

  double primal_infeasibility() const {
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) worst = std::max(worst, infeasibility_of(head_[k]));
    return worst;
  }

  // phase1: costs are -1/+1 on basics below/above their bounds.
  void compute_duals(bool phase1) {
    Eigen::VectorXd w(m_);
    for (int k = 0; k < m_; ++k) {
      int j = head_[k];
      if (phase1) {
        w[k] = x_[j] < lo_[j] - s_.primal_tol ? -1.0 : (x_[j] > hi_[j] + s_.primal_tol ? 1.0 : 0.0);
      } else {
        w[k] = cost_of(j);
      }
    }
    btran(w);
    for (int i = 0; i < m_; ++i) y_[i] = w[i];
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::kBasic) {
        d_[j] = 0.0;
      } else {
        d_[j] = (phase1 ? 0.0 : cost_of(j)) - dot_column(w, j);
      }
    }
  }

  double dual_infeasibility() const {
    double worst = 0.0;
    for (int j = 0; j < total_; ++j) {
      switch (status_[j]) {
        case VarStatus::kAtLower: worst = std::max(worst, -d_[j]); break;
        case VarStatus::kAtUpper: worst = std::max(worst, d_[j]); break;
        case VarStatus::kFree: worst = std::max(worst, std::abs(d_[j])); break;
        default: break;
      }
    }
    return worst;
  }

  struct Artificial {
    int j;
    double lo, hi;
  };

  // Moves every nonbasic variable to the bound its reduced cost prefers,
  // inventing a bound where the preferred side is infinite.
  std::vector<Artificial> make_dual_feasible() {
    constexpr double kBox = 1e6;
    std::vector<Artificial> boxed;
    bool moved = false;
    for (int j = 0; j < total_; ++j) {
      VarStatus st = status_[j];
      if (st == VarStatus::kBasic || st == VarStatus::kFixed) continue;
      const double d = d_[j];
      if (d < -s_.dual_tol && st != VarStatus::kAtUpper) {
        if (!std::isfinite(hi_[j])) {
          boxed.push_back({j, lo_[j], hi_[j]});
          hi_[j] = (std::isfinite(lo_[j]) ? lo_[j] : 0.0) + kBox;
          if (!std::isfinite(lo_[j])) lo_[j] = -kBox;
        }
        status_[j] = VarStatus::kAtUpper;
        x_[j] = hi_[j];
        moved = true;
      } else if (d > s_.dual_tol && st != VarStatus::kAtLower) {
        if (!std::isfinite(lo_[j])) {
          boxed.push_back({j, lo_[j], hi_[j]});
          lo_[j] = (std::isfinite(hi_[j]) ? hi_[j] : 0.0) - kBox;
          if (!std::isfinite(hi_[j])) hi_[j] = kBox;
        }
        status_[j] = VarStatus::kAtLower;
        x_[j] = lo_[j];
        moved = true;
      }
    }
    if (moved) compute_primal();
    return boxed;
  }

  bool out_of_time() const {
    return deadline_ && (iterations_ & 63) == 0 && Clock::now() > *deadline_;
  }

  void pivot(int pos, int entering, const Eigen::VectorXd& alpha, int leaving, VarStatus leave_status) {
    Eta eta;
    eta.pos = pos;
    eta.pivot = alpha[pos];
    for (int i = 0; i < m_; ++i) {
      if (i != pos && alpha[i] != 0.0) {
        eta.idx.push_back(i);
        eta.val.push_back(alpha[i]);
      }
    }
    etas_.push_back(std::move(eta));
    head_[pos] = entering;
    pos_[entering] = pos;
    status_[entering] = VarStatus::kBasic;
    pos_[leaving] = -1;
    status_[leaving] = leave_status;
    if (lo_[leaving] == hi_[leaving]) status_[leaving] = VarStatus::kFixed;
    if (static_cast<int>(etas_.size()) >= s_.refactor_interval) {
      need_refactor_ = true;
      if (!refactor()) {
        slack_basis();
        refactor();
      }
      compute_primal();
    }
  }

  LpStatus primal(std::int64_t limit) {
    int degenerate = 0;
    bool bland = false;
    Eigen::VectorXd alpha;
    while (true) {
      if (iterations_ >= limit) return LpStatus::kIterationLimit;
      if (out_of_time()) return LpStatus::kTimeLimit;
      if (values_dirty_) compute_primal();
      const bool phase1 = primal_infeasibility() > s_.primal_tol;
      compute_duals(phase1);

      // Pricing.
      int q = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < total_; ++j) {
        VarStatus st = status_[j];
        if (st == VarStatus::kBasic || st == VarStatus::kFixed) continue;
        double dj = d_[j];
        int dj_dir = 0;
        if ((st == VarStatus::kAtLower || st == VarStatus::kFree) && dj < -s_.dual_tol) dj_dir = 1;
        if ((st == VarStatus::kAtUpper || st == VarStatus::kFree) && dj > s_.dual_tol) dj_dir = -1;
        if (dj_dir == 0) continue;
        if (bland) {
          q = j;
          dir = dj_dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
          dir = dj_dir;
        }
      }
      if (q < 0) {
        return phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal;
      }

      alpha = column(q);
      ftran(alpha);

      // Harris two-pass ratio test. rate_i is d x_Bi / dt.
      auto limit_for = [&](int k, double tol, double& bound_hit, VarStatus& leave) -> double {
        int j = head_[k];
        double rate = -dir * alpha[k];
        if (std::abs(alpha[k]) <= s_.pivot_tol) return kInf;
        double xv = x_[j];
        if (rate < 0) {
          if (xv > hi_[j] + s_.primal_tol) {  // above, moving toward feasibility
            bound_hit = hi_[j];
            leave = VarStatus::kAtUpper;
            return (xv - hi_[j] + tol) / -rate;
          }
          if (xv < lo_[j] - s_.primal_tol || !std::isfinite(lo_[j])) return kInf;
          bound_hit = lo_[j];
          leave = VarStatus::kAtLower;
          return (xv - lo_[j] + tol) / -rate;
        }
        if (xv < lo_[j] - s_.primal_tol) {
          bound_hit = lo_[j];
          leave = VarStatus::kAtLower;
          return (lo_[j] - xv + tol) / rate;
        }
        if (xv > hi_[j] + s_.primal_tol || !std::isfinite(hi_[j])) return kInf;
        bound_hit = hi_[j];
        leave = VarStatus::kAtUpper;
        return (hi_[j] - xv + tol) / rate;
      };

      double tmax = kInf;
      for (int k = 0; k < m_; ++k) {
        double bh;
        VarStatus ls;
        tmax = std::min(tmax, limit_for(k, s_.primal_tol, bh, ls));
      }
      double own = std::isfinite(hi_[q]) && std::isfinite(lo_[q]) ? hi_[q] - lo_[q] : kInf;
      int leave_pos = -1;
      double leave_bound = 0.0;
      VarStatus leave_status = VarStatus::kAtLower;
      double step = kInf;
      if (own <= tmax) {
        step = own;
      } else if (std::isfinite(tmax)) {
        double best_alpha = -1.0;
        for (int k = 0; k < m_; ++k) {
          double bh = 0.0;
          VarStatus ls = VarStatus::kAtLower;
          double t = limit_for(k, 0.0, bh, ls);
          if (t > tmax) continue;
          double a = std::abs(alpha[k]);
          bool take = bland ? (leave_pos < 0 || head_[k] < head_[leave_pos]) : a > best_alpha;
          if (take) {
            best_alpha = a;
            leave_pos = k;
            leave_bound = bh;
            leave_status = ls;
            step = std::max(t, 0.0);
          }
        }
      }
      if (!std::isfinite(step)) {
        if (phase1) return LpStatus::kNumericalFailure;
        return LpStatus::kUnbounded;
      }

      ++iterations_;
      if (step <= 1e-12) {
        if (++degenerate > s_.degenerate_switch) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }

      x_[q] += dir * step;
      for (int k = 0; k < m_; ++k) {
        if (alpha[k] != 0.0) x_[head_[k]] -= dir * alpha[k] * step;
      }
      if (leave_pos < 0) {
        status_[q] = dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      int leaving = head_[leave_pos];
      x_[leaving] = leave_bound;
      pivot(leave_pos, q, alpha, leaving, leave_status);
    }
  }

  LpStatus dual(std::int64_t limit) {
    Eigen::VectorXd rho, alpha;
    while (true) {
      if (iterations_ >= limit) return LpStatus::kIterationLimit;
      if (out_of_time()) return LpStatus::kTimeLimit;
      if (values_dirty_) compute_primal();
      compute_duals(false);

      int p = -1;
      double worst = 0.0;
      for (int k = 0; k < m_; ++k) {
        double inf = infeasibility_of(head_[k]);
        if (inf > s_.primal_tol && inf * inf > worst * dse_[k]) {
          worst = inf * inf / dse_[k];
          p = k;
        }
      }
      if (p < 0) return LpStatus::kOptimal;
      const int leaving = head_[p];
      const bool below = x_[leaving] < lo_[leaving];

      rho = Eigen::VectorXd::Zero(m_);
      rho[p] = 1.0;
      btran(rho);

      // Two-pass ratio test on |d_j| / |alpha_pj|.
      struct Cand {
        int j;
        double a;
      };
      std::vector<Cand> cands;
      double tmax = kInf;
      for (int j = 0; j < total_; ++j) {
        VarStatus st = status_[j];
        if (st == VarStatus::kBasic || st == VarStatus::kFixed) continue;
        double a = dot_column(rho, j);
        if (std::abs(a) <= s_.pivot_tol) continue;
        // x_Bp changes by -a * dx_j.
        bool ok;
        if (below) {
          ok = (st == VarStatus::kAtLower && a < 0) || (st == VarStatus::kAtUpper && a > 0) ||
               st == VarStatus::kFree;
        } else {
          ok = (st == VarStatus::kAtLower && a > 0) || (st == VarStatus::kAtUpper && a < 0) ||
               st == VarStatus::kFree;
        }
        if (!ok) continue;
        cands.push_back({j, a});
        tmax = std::min(tmax, (std::abs(d_[j]) + s_.dual_tol) / std::abs(a));
      }
      if (cands.empty()) return LpStatus::kInfeasible;
      int q = -1;
      double best_a = -1.0;
      for (const Cand& c : cands) {
        if (std::abs(d_[c.j]) / std::abs(c.a) <= tmax && std::abs(c.a) > best_a) {
          best_a = std::abs(c.a);
          q = c.j;
        }
      }

      alpha = column(q);
      ftran(alpha);
      if (std::abs(alpha[p]) <= s_.pivot_tol) {
        need_refactor_ = true;
        if (!refactor()) return LpStatus::kNumericalFailure;
        compute_primal();
        ++iterations_;
        continue;
      }
      {
        Eigen::VectorXd tau = rho;
        ftran(tau);
        const double wp = std::max(rho.squaredNorm(), 1e-12);
        for (int k = 0; k < m_; ++k) {
          if (k == p || alpha[k] == 0.0) continue;
          double r = alpha[k] / alpha[p];
          dse_[k] = std::max(dse_[k] - 2.0 * r * tau[k] + r * r * wp, 1e-6);
        }
        dse_[p] = std::max(wp / (alpha[p] * alpha[p]), 1e-6);
      }
      const double bound = below ? lo_[leaving] : hi_[leaving];
      const double dx = (x_[leaving] - bound) / alpha[p];
      x_[q] += dx;
      for (int k = 0; k < m_; ++k) {
        if (alpha[k] != 0.0) x_[head_[k]] -= alpha[k] * dx;
      }
      x_[leaving] = bound;
      ++iterations_;
      pivot(p, q, alpha, leaving, below ? VarStatus::kAtLower : VarStatus::kAtUpper);
    }
  }

  LpProblem p_;
  SimplexSettings s_;
  int m_, n_, total_;
  std::vector<double> lo_, hi_, x_, d_, y_;
  std::vector<VarStatus> status_;
  std::vector<int> pos_, head_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  std::vector<double> dse_;  // dual steepest-edge weights by basis position
  bool need_refactor_ = true;
  bool values_dirty_ = true;
  std::int64_t iterations_ = 0;
  LpStatus status_code_ = LpStatus::kNumericalFailure;
  std::optional<Clock::time_point> deadline_;
};

}  // namespace pamso::lp
