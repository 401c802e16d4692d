#include "fcp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;
constexpr double kDegenStep = 1e-12;
}  // namespace

struct SimplexSolver::Work {
  const StandardLp& lp;
  int m;       // rows
  int n;       // structural columns
  int ncols;   // n + m (artificials appended)

  std::vector<int> basic;              // per row
  std::vector<VarStatus> stat;         // per column (structural + artificial)
  Eigen::MatrixXd Binv;
  Eigen::VectorXd xB;                  // per row
  Eigen::VectorXd xN;                  // per structural column (nonbasic value; basic entries stale)
  double feas_tol;
  double opt_tol;
  long iters = 0;
  long pivots_since_refactor = 0;
  long degen_streak = 0;
  bool bland = false;
  bool had_breakdown = false;

  explicit Work(const StandardLp& problem)
      : lp(problem),
        m(problem.rows()),
        n(problem.cols()),
        ncols(problem.rows() + problem.cols()) {
    feas_tol = 1e-9 * (1.0 + (m ? lp.f.cwiseAbs().maxCoeff() : 0.0));
    opt_tol = 1e-9;
  }

  double lo(int j) const { return j < n ? lp.lower(j) : 0.0; }
  double up(int j) const { return j < n ? lp.upper(j) : 0.0; }
  bool fixed(int j) const { return lo(j) >= up(j) - 0.0; }

  double nonbasic_value(int j) const {
    switch (stat[j]) {
      case VarStatus::AtLower: return lo(j);
      case VarStatus::AtUpper: return up(j);
      default: return 0.0;  // Free nonbasic rests at zero
    }
  }

  // alpha = Binv * A_j
  Eigen::VectorXd ftran(int j) const {
    if (j < n) return Binv * lp.E.col(j);
    return Binv.col(j - n);
  }

  void compute_xB() {
    Eigen::VectorXd r = lp.f;
    Eigen::VectorXd xs = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (stat[j] != VarStatus::Basic) xs(j) = nonbasic_value(j);
    r.noalias() -= lp.E * xs;
    // nonbasic artificials sit at zero
    xB.noalias() = Binv * r;
    xN = xs;
  }

  bool refactor() {
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) {
      int j = basic[i];
      if (j < n) B.col(i) = lp.E.col(j);
      else { B.col(i).setZero(); B(j - n, i) = 1.0; }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::MatrixXd inv = lu.inverse();
    Eigen::VectorXd probe = Eigen::VectorXd::Ones(m);
    double resid = (B * (inv * probe) - probe).cwiseAbs().maxCoeff();
    if (std::isfinite(resid) && resid <= 1e-7 * (1.0 + static_cast<double>(m))) {
      Binv = std::move(inv);
      pivots_since_refactor = 0;
      return true;
    }
    return repair_and_invert();
  }

  // Gauss-Jordan inversion that swaps dependent basic columns for artificials.
  bool repair_and_invert() {
    for (int attempt = 0; attempt <= m; ++attempt) {
      Eigen::MatrixXd B(m, m);
      for (int i = 0; i < m; ++i) {
        int j = basic[i];
        if (j < n) B.col(i) = lp.E.col(j);
        else { B.col(i).setZero(); B(j - n, i) = 1.0; }
      }
      Eigen::MatrixXd A(m, 2 * m);
      A << B, Eigen::MatrixXd::Identity(m, m);
      std::vector<int> pivot_row_of_col(m, -1);
      std::vector<bool> row_used(m, false);
      int bad_col = -1;
      for (int k = 0; k < m; ++k) {
        int pr = -1;
        double best = kPivotTol;
        for (int i = 0; i < m; ++i) {
          if (row_used[i]) continue;
          double v = std::abs(A(i, k));
          if (v > best) { best = v; pr = i; }
        }
        if (pr < 0) { bad_col = k; break; }
        row_used[pr] = true;
        pivot_row_of_col[k] = pr;
        A.row(pr) /= A(pr, k);
        for (int i = 0; i < m; ++i) {
          if (i == pr) continue;
          double fkt = A(i, k);
          if (fkt != 0.0) A.row(i) -= fkt * A.row(pr);
        }
      }
      if (bad_col < 0) {
        // Binv rows must be permuted so that Binv * B = I with column order kept.
        Eigen::MatrixXd inv(m, m);
        for (int k = 0; k < m; ++k) inv.row(k) = A.row(pivot_row_of_col[k]).tail(m);
        Binv = std::move(inv);
        pivots_since_refactor = 0;
        return true;
      }
      // Replace the dependent basic column by the artificial of a free row.
      int free_row = -1;
      for (int i = 0; i < m; ++i)
        if (!row_used[i]) { free_row = i; break; }
      if (free_row < 0) return false;
      int old = basic[bad_col];
      stat[old] = nearest_bound_status(old);
      basic[bad_col] = n + free_row;
      stat[n + free_row] = VarStatus::Basic;
      had_breakdown = true;
    }
    return false;
  }

  VarStatus nearest_bound_status(int j) const {
    double l = lo(j), u = up(j);
    if (std::isfinite(l) && std::isfinite(u))
      return std::abs(l) <= std::abs(u) ? VarStatus::AtLower : VarStatus::AtUpper;
    if (std::isfinite(l)) return VarStatus::AtLower;
    if (std::isfinite(u)) return VarStatus::AtUpper;
    return VarStatus::Free;
  }

  void update_inverse(const Eigen::VectorXd& alpha, int r) {
    double piv = alpha(r);
    Eigen::RowVectorXd br = Binv.row(r) / piv;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      double a = alpha(i);
      if (a != 0.0) Binv.row(i) -= a * br;
    }
    Binv.row(r) = br;
    ++pivots_since_refactor;
  }

  double total_infeasibility() const {
    double w = 0.0;
    for (int i = 0; i < m; ++i) {
      int j = basic[i];
      double v = xB(i);
      if (v < lo(j)) w += lo(j) - v;
      else if (v > up(j)) w += v - up(j);
    }
    return w;
  }
};

SimplexSolver::SimplexSolver(StandardLp lp) : lp_(std::move(lp)) {}

void SimplexSolver::set_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  lp_.lower = lower;
  lp_.upper = upper;
}

void SimplexSolver::set_objective(const Eigen::VectorXd& c) { lp_.c = c; }

LpSolution SimplexSolver::solve() { return run(nullptr); }

LpSolution SimplexSolver::solve_warm(const Basis& warm) { return run(&warm); }

namespace {

struct RatioEvent {
  double t = kInf;
  int row = -1;          // leaving row, -1 => entering bound flip
  bool leave_at_upper = false;
};

// Primal ratio test. In phase 1 basic variables outside their bounds block
// when they reach the violated bound (short-step composite rule).
RatioEvent primal_ratio(const SimplexSolver::Work& w, const Eigen::VectorXd& alpha,
                        int q, int s, bool phase1, bool bland) {
  RatioEvent ev;
  double range = w.up(q) - w.lo(q);
  if (std::isfinite(range)) ev.t = range;
  double best_piv = 0.0;
  for (int i = 0; i < w.m; ++i) {
    double a = alpha(i);
    if (std::abs(a) <= kPivotTol) continue;
    int j = w.basic[i];
    double delta = -s * a;  // movement rate of x_B(i)
    double v = w.xB(i);
    double l = w.lo(j), u = w.up(j);
    double t = kInf;
    bool at_upper = false;
    if (phase1 && v < l - w.feas_tol) {
      if (delta > 0) { t = (l - v) / delta; at_upper = false; }
    } else if (phase1 && v > u + w.feas_tol) {
      if (delta < 0) { t = (v - u) / (-delta); at_upper = true; }
    } else {
      if (delta > 0 && std::isfinite(u)) { t = (u - v) / delta; at_upper = true; }
      else if (delta < 0 && std::isfinite(l)) { t = (v - l) / (-delta); at_upper = false; }
    }
    if (t == kInf) continue;
    if (t < 0) t = 0;
    bool take = false;
    if (t < ev.t - 1e-12) take = true;
    else if (t <= ev.t + 1e-12 && ev.row >= 0) {
      if (bland) take = w.basic[i] < w.basic[ev.row];
      else take = std::abs(a) > best_piv;
    } else if (t <= ev.t + 1e-12 && ev.row < 0 && t < ev.t) {
      take = true;
    }
    if (take) { ev.t = std::min(ev.t, t); ev.row = i; ev.leave_at_upper = at_upper; best_piv = std::abs(a); }
  }
  return ev;
}

}  // namespace

LpSolution SimplexSolver::run(const Basis* warm) {
  Work w(lp_);
  LpSolution out;
  const int m = w.m, n = w.n;
  if (m == 0) {
    // Pure bound minimization.
    out.x = Eigen::VectorXd::Zero(n);
    bool ok = true;
    for (int j = 0; j < n; ++j) {
      double cj = lp_.c(j);
      if (cj > 0) out.x(j) = lp_.lower(j);
      else if (cj < 0) out.x(j) = lp_.upper(j);
      else out.x(j) = std::isfinite(lp_.lower(j)) ? lp_.lower(j) : (std::isfinite(lp_.upper(j)) ? lp_.upper(j) : 0.0);
      if (!std::isfinite(out.x(j))) { out.status = LpStatus::Unbounded; return out; }
      if (lp_.lower(j) > lp_.upper(j)) { ok = false; }
    }
    if (!ok) { out.status = LpStatus::Infeasible; return out; }
    out.objective = lp_.c.dot(out.x);
    out.status = LpStatus::Optimal;
    out.duals = Eigen::VectorXd();
    out.reduced_costs = lp_.c;
    return out;
  }
  for (int j = 0; j < n; ++j)
    if (lp_.lower(j) > lp_.upper(j) + 1e-12) { out.status = LpStatus::Infeasible; return out; }

  // ---- basis setup ----
  bool warm_ok = false;
  if (warm && static_cast<int>(warm->basic.size()) == m &&
      static_cast<int>(warm->status.size()) == w.ncols) {
    w.basic = warm->basic;
    w.stat = warm->status;
    // sanity: each listed basic column marked Basic, within range
    warm_ok = true;
    std::vector<bool> seen(w.ncols, false);
    for (int i = 0; i < m && warm_ok; ++i) {
      int j = w.basic[i];
      if (j < 0 || j >= w.ncols || seen[j]) warm_ok = false;
      else seen[j] = true;
    }
    if (warm_ok) {
      for (int j = 0; j < w.ncols; ++j) {
        bool listed = seen[j];
        if (listed != (w.stat[j] == VarStatus::Basic)) { warm_ok = false; break; }
      }
    }
    if (warm_ok) {
      // nonbasic statuses must reference finite bounds
      for (int j = 0; j < w.ncols && warm_ok; ++j) {
        if (w.stat[j] == VarStatus::AtLower && !std::isfinite(w.lo(j))) w.stat[j] = w.nearest_bound_status(j);
        if (w.stat[j] == VarStatus::AtUpper && !std::isfinite(w.up(j))) w.stat[j] = w.nearest_bound_status(j);
      }
      warm_ok = w.refactor();
    }
  }
  if (!warm_ok) {
    w.basic.resize(m);
    w.stat.assign(w.ncols, VarStatus::Free);
    for (int j = 0; j < n; ++j) w.stat[j] = w.nearest_bound_status(j);
    for (int i = 0; i < m; ++i) { w.basic[i] = n + i; w.stat[n + i] = VarStatus::Basic; }
    w.Binv = Eigen::MatrixXd::Identity(m, m);
    w.pivots_since_refactor = 0;
  }
  w.compute_xB();

  const long max_iters = 20000 + 200L * (m + n);
  const long bland_trigger = 5L * (m + n);
  int breakdown_retries = 0;
  Eigen::VectorXd cost_full = Eigen::VectorXd::Zero(w.ncols);
  cost_full.head(n) = lp_.c;

  enum class Mode { Dual, Phase1, Phase2 };
  Mode mode = Mode::Phase1;
  if (warm_ok) {
    // If the warm basis is already primal feasible go straight to phase 2,
    // otherwise try the dual simplex (typical after bound tightening).
    mode = (w.total_infeasibility() <= w.feas_tol) ? Mode::Phase2 : Mode::Dual;
  }

  auto price_duals = [&](const Eigen::VectorXd& cb) -> Eigen::VectorXd {
    return w.Binv.transpose() * cb;
  };

  auto basic_cost_vector = [&](bool phase1) {
    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) {
      int j = w.basic[i];
      if (phase1) {
        double v = w.xB(i);
        if (v < w.lo(j) - w.feas_tol) cb(i) = -1.0;
        else if (v > w.up(j) + w.feas_tol) cb(i) = 1.0;
        else cb(i) = 0.0;
      } else {
        cb(i) = cost_full(j);
      }
    }
    return cb;
  };

  auto finish = [&](LpStatus st) {
    out.status = st;
    out.iterations = w.iters;
    if (st == LpStatus::Optimal || st == LpStatus::Unbounded) {
      w.refactor();
      w.compute_xB();
    }
    Eigen::VectorXd xfull = Eigen::VectorXd::Zero(w.ncols);
    for (int j = 0; j < w.ncols; ++j)
      if (w.stat[j] != VarStatus::Basic) xfull(j) = w.nonbasic_value(j);
    for (int i = 0; i < m; ++i) xfull(w.basic[i]) = w.xB(i);
    out.x = xfull.head(n);
    out.objective = lp_.c.dot(out.x);
    Eigen::VectorXd cb = basic_cost_vector(false);
    out.duals = price_duals(cb);
    out.reduced_costs = lp_.c - lp_.E.transpose() * out.duals;
    out.basis.basic = w.basic;
    out.basis.status = w.stat;
    out.redundant_rows = 0;
    for (int i = 0; i < m; ++i)
      if (w.basic[i] >= n && std::abs(w.xB(i)) <= w.feas_tol) ++out.redundant_rows;
    return out;
  };

  // ---- main loop ----
  long dual_iters = 0;
  while (true) {
    if (w.iters++ > max_iters) {
      if (breakdown_retries++ == 0 && w.refactor()) { w.compute_xB(); w.iters = 0; w.bland = true; continue; }
      return finish(LpStatus::NumericalFailure);
    }
    if (w.pivots_since_refactor >= 100) {
      if (!w.refactor()) return finish(LpStatus::NumericalFailure);
      w.compute_xB();
    }

    if (mode == Mode::Dual) {
      // dual feasibility check
      Eigen::VectorXd cb = basic_cost_vector(false);
      Eigen::VectorXd y = price_duals(cb);
      Eigen::VectorXd d = lp_.c - lp_.E.transpose() * y;
      bool dual_feasible = true;
      for (int j = 0; j < n && dual_feasible; ++j) {
        if (w.stat[j] == VarStatus::Basic) continue;
        if (w.fixed(j)) continue;
        if (w.stat[j] == VarStatus::AtLower && d(j) < -1e-7) dual_feasible = false;
        else if (w.stat[j] == VarStatus::AtUpper && d(j) > 1e-7) dual_feasible = false;
        else if (w.stat[j] == VarStatus::Free && std::abs(d(j)) > 1e-7) dual_feasible = false;
      }
      if (!dual_feasible || dual_iters > 4 * (m + n)) { mode = Mode::Phase1; continue; }
      // leaving: most violated basic
      int r = -1;
      double worst = w.feas_tol;
      bool above = false;
      for (int i = 0; i < m; ++i) {
        int j = w.basic[i];
        double v = w.xB(i);
        if (w.lo(j) - v > worst) { worst = w.lo(j) - v; r = i; above = false; }
        if (v - w.up(j) > worst) { worst = v - w.up(j); r = i; above = true; }
      }
      if (r < 0) { mode = Mode::Phase2; continue; }
      ++dual_iters;
      Eigen::VectorXd rho = w.Binv.row(r).transpose();
      Eigen::VectorXd arow = lp_.E.transpose() * rho;
      // entering selection via dual ratio test
      int q = -1;
      int s = 0;
      double best_ratio = kInf;
      double best_piv = 0.0;
      for (int j = 0; j < n; ++j) {
        if (w.stat[j] == VarStatus::Basic || w.fixed(j)) continue;
        double a = arow(j);
        if (std::abs(a) <= kPivotTol) continue;
        // movement of x_B(r) when x_j moves by +1 is -a
        int sj;
        if (!above) {               // need x_B(r) to increase
          if (w.stat[j] == VarStatus::AtLower || w.stat[j] == VarStatus::Free) { if (a < 0) sj = +1; else if (w.stat[j] == VarStatus::Free) sj = -1; else continue; }
          else { if (a > 0) sj = -1; else continue; }
        } else {                    // need x_B(r) to decrease
          if (w.stat[j] == VarStatus::AtLower || w.stat[j] == VarStatus::Free) { if (a > 0) sj = +1; else if (w.stat[j] == VarStatus::Free) sj = -1; else continue; }
          else { if (a < 0) sj = -1; else continue; }
        }
        double ratio = std::abs(d(j)) / std::abs(a);
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && std::abs(a) > best_piv)) {
          best_ratio = ratio; q = j; s = sj; best_piv = std::abs(a);
        }
      }
      if (q < 0) return finish(LpStatus::Infeasible);
      Eigen::VectorXd alpha = w.ftran(q);
      double arq = alpha(r);
      if (std::abs(arq) <= kPivotTol) { mode = Mode::Phase1; continue; }
      double target = above ? w.up(w.basic[r]) : w.lo(w.basic[r]);
      double t = (w.xB(r) - target) / (s * arq);  // x_q moves by s*t, xB(r) moves by -s*t*arq
      if (t < -1e-9) { mode = Mode::Phase1; continue; }
      if (t < 0) t = 0;
      int leaving = w.basic[r];
      double xq_new = w.nonbasic_value(q) + s * t;
      w.xB.noalias() -= (s * t) * alpha;
      w.stat[leaving] = above ? VarStatus::AtUpper : VarStatus::AtLower;
      w.basic[r] = q;
      w.stat[q] = VarStatus::Basic;
      w.xB(r) = xq_new;
      w.update_inverse(alpha, r);
      continue;
    }

    bool phase1 = (mode == Mode::Phase1);
    if (phase1 && w.total_infeasibility() <= w.feas_tol) { mode = Mode::Phase2; continue; }

    Eigen::VectorXd cb = basic_cost_vector(phase1);
    Eigen::VectorXd y = price_duals(cb);
    Eigen::VectorXd d(n);
    if (phase1) d = -(lp_.E.transpose() * y);
    else d = lp_.c - lp_.E.transpose() * y;

    int q = -1, s = 0;
    double best = phase1 ? 1e-9 : w.opt_tol;
    for (int j = 0; j < n; ++j) {
      if (w.stat[j] == VarStatus::Basic || w.fixed(j)) continue;
      double dj = d(j);
      int sj = 0;
      if (w.stat[j] == VarStatus::AtLower) { if (dj < -best) sj = +1; }
      else if (w.stat[j] == VarStatus::AtUpper) { if (dj > best) sj = -1; }
      else { if (dj < -best) sj = +1; else if (dj > best) sj = -1; }
      if (sj == 0) continue;
      if (w.bland) { q = j; s = sj; break; }
      if (q < 0 || std::abs(dj) > std::abs(d(q))) { q = j; s = sj; }
    }
    if (q < 0) {
      if (phase1) return finish(LpStatus::Infeasible);
      return finish(LpStatus::Optimal);
    }

    Eigen::VectorXd alpha = w.ftran(q);
    RatioEvent ev = primal_ratio(w, alpha, q, s, phase1, w.bland);
    if (ev.t == kInf) {
      if (phase1) {  // cannot happen with a bounded-below merit; treat as breakdown
        if (breakdown_retries++ == 0 && w.refactor()) { w.compute_xB(); continue; }
        return finish(LpStatus::NumericalFailure);
      }
      return finish(LpStatus::Unbounded);
    }

    if (ev.t <= kDegenStep) {
      if (++w.degen_streak > bland_trigger) w.bland = true;
    } else {
      w.degen_streak = 0;
      w.bland = false;
    }

    if (ev.row < 0) {
      // bound flip of the entering variable
      w.xB.noalias() -= (s * ev.t) * alpha;
      w.stat[q] = (w.stat[q] == VarStatus::AtLower) ? VarStatus::AtUpper : VarStatus::AtLower;
      continue;
    }

    int r = ev.row;
    int leaving = w.basic[r];
    double xq_new = w.nonbasic_value(q) + s * ev.t;
    w.xB.noalias() -= (s * ev.t) * alpha;
    w.stat[leaving] = ev.leave_at_upper ? VarStatus::AtUpper : VarStatus::AtLower;
    if (!std::isfinite(ev.leave_at_upper ? w.up(leaving) : w.lo(leaving)))
      w.stat[leaving] = w.nearest_bound_status(leaving);
    w.basic[r] = q;
    w.stat[q] = VarStatus::Basic;
    w.xB(r) = xq_new;
    w.update_inverse(alpha, r);
  }
}

std::optional<double> brute_force_lp_minimum(const StandardLp& lp, double feas_tol) {
  const int m = lp.rows();
  const int n = lp.cols();
  const int ncols = n + m;
  auto lo = [&](int j) { return j < n ? lp.lower(j) : 0.0; };
  auto up = [&](int j) { return j < n ? lp.upper(j) : 0.0; };
  auto col = [&](int j) -> Eigen::VectorXd {
    if (j < n) return lp.E.col(j);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e(j - n) = 1.0;
    return e;
  };

  std::optional<double> best;
  std::vector<int> idx(m);
  // enumerate all m-subsets of columns
  std::vector<int> comb(m);
  for (int i = 0; i < m; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = m - 1;
    while (i >= 0 && comb[i] == ncols - m + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int k = i + 1; k < m; ++k) comb[k] = comb[k - 1] + 1;
    return true;
  };
  do {
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = col(comb[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (lu.rank() < m) continue;
    std::vector<int> nonbasic;
    std::vector<bool> isbasic(ncols, false);
    for (int i = 0; i < m; ++i) isbasic[comb[i]] = true;
    for (int j = 0; j < ncols; ++j)
      if (!isbasic[j]) nonbasic.push_back(j);
    // enumerate bound assignments of nonbasics (free vars pinned at 0)
    std::vector<std::vector<double>> choices;
    for (int j : nonbasic) {
      std::vector<double> ch;
      if (std::isfinite(lo(j))) ch.push_back(lo(j));
      if (std::isfinite(up(j)) && up(j) != lo(j)) ch.push_back(up(j));
      if (ch.empty()) ch.push_back(0.0);
      choices.push_back(ch);
    }
    std::vector<size_t> pick(nonbasic.size(), 0);
    while (true) {
      Eigen::VectorXd r = lp.f;
      for (size_t k = 0; k < nonbasic.size(); ++k) {
        double v = choices[k][pick[k]];
        if (v != 0.0) r -= v * col(nonbasic[k]);
      }
      Eigen::VectorXd xb = lu.solve(r);
      bool feas = true;
      for (int i = 0; i < m && feas; ++i) {
        int j = comb[i];
        if (xb(i) < lo(j) - feas_tol || xb(i) > up(j) + feas_tol) feas = false;
      }
      if (feas) {
        double obj = 0.0;
        for (int i = 0; i < m; ++i)
          if (comb[i] < n) obj += lp.c(comb[i]) * xb(i);
        for (size_t k = 0; k < nonbasic.size(); ++k)
          if (nonbasic[k] < n) obj += lp.c(nonbasic[k]) * choices[k][pick[k]];
        if (!best || obj < *best) best = obj;
      }
      size_t kk = 0;
      while (kk < pick.size() && ++pick[kk] == choices[kk].size()) { pick[kk] = 0; ++kk; }
      if (kk == pick.size()) break;
    }
  } while (advance());
  return best;
}

}  // namespace fcp
