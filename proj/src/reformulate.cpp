#include "fcp/reformulate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fcp/eigs.hpp"

namespace fcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_scad(const ProblemInstance& inst) { return inst.penalty.family == PenaltyFamily::Scad; }

double g_upper_bound(const ProblemInstance& inst) {
  return is_scad(inst) ? inst.penalty.lambda : inst.penalty.a * inst.penalty.lambda;
}
}  // namespace

QpForm build_qp_form(const ProblemInstance& inst) {
  const InstanceDiagnostics diag = validate_instance(inst);
  if (!diag.ok) throw std::invalid_argument("build_qp_form: invalid instance: " + diag.failures.front());
  QpForm qp;
  qp.dim = inst.dim();
  qp.pen_idx = inst.penalized_indices();
  qp.p = inst.penalty.lambda > 0 ? static_cast<int>(qp.pen_idx.size()) : 0;
  if (qp.p == 0) qp.pen_idx.clear();
  const int d = qp.dim, p = qp.p;
  const double n = inst.loss.n, a = inst.penalty.a, lam = inst.penalty.lambda;
  qp.H = Eigen::MatrixXd::Zero(d + 2 * p, d + 2 * p);
  qp.H.topLeftCorner(d, d) = inst.loss.Q;
  qp.c = Eigen::VectorXd::Zero(d + 2 * p);
  qp.c.head(d) = inst.loss.q;
  for (int k = 0; k < p; ++k) {
    int gi = d + k, hi = d + p + k;
    if (is_scad(inst)) {
      qp.H(gi, gi) = n * (a - 1.0);
      qp.H(gi, hi) = n;
      qp.H(hi, gi) = n;
      qp.c(gi) = -n * a * lam;
    } else {
      qp.H(gi, gi) = n / a;
      qp.H(gi, hi) = -n / a;
      qp.H(hi, gi) = -n / a;
      qp.c(hi) = n * lam;
    }
  }
  qp.g_upper = g_upper_bound(inst);
  qp.h_upper = inst.box_c;
  qp.offset_to_loss = instance_offset_to_loss(inst);
  return qp;
}

double estimate_big_m(const ProblemInstance& inst) {
  if (!(inst.box_c > 0) || !std::isfinite(inst.box_c))
    throw std::invalid_argument("estimate_big_m: gradient bound unbounded (missing box)");
  const int d = inst.dim();
  const double n = inst.loss.n, a = inst.penalty.a, lam = inst.penalty.lambda;
  const double C = inst.box_c;
  double c1_beta = 0.0;
  for (int i = 0; i < d; ++i) {
    double v = std::abs(inst.loss.q(i));
    for (int j = 0; j < d; ++j) v += std::abs(inst.loss.Q(i, j)) * C;
    c1_beta = std::max(c1_beta, v);
  }
  double c1_h, c1_g;
  if (is_scad(inst)) {
    c1_h = n * lam;  // grad_h = n g, g in [0, lambda]
    double lo = -n * a * lam;
    double hi = n * (a - 1.0) * lam + n * C - n * a * lam;
    c1_g = std::max(std::abs(lo), std::abs(hi));
  } else {
    c1_h = n * lam;  // grad_h = n (lambda - g/a) in [0, n lambda]
    c1_g = std::max(n * lam, (n / a) * C);
  }
  double c1 = std::max(c1_beta, std::max(c1_h, c1_g));
  return 10.0 * std::max(std::max(3.0 * c1, lam), std::max(a * lam, C));
}

HessianDiagnostics hessian_diagnostics(const ProblemInstance& inst) {
  QpForm qp = build_qp_form(inst);
  HessianDiagnostics diag;
  diag.eigenvalues = symmetric_eigs(qp.H);
  diag.min_eig = diag.eigenvalues(0);
  double scale = std::max(1.0, qp.H.cwiseAbs().maxCoeff());
  diag.num_negative = 0;
  for (int i = 0; i < diag.eigenvalues.size(); ++i)
    if (diag.eigenvalues(i) < -1e-9 * scale) ++diag.num_negative;
  return diag;
}

LpccModel build_lpcc(const ProblemInstance& inst) {
  const InstanceDiagnostics diag = validate_instance(inst);
  if (!diag.ok) throw std::invalid_argument("build_lpcc: invalid instance: " + diag.failures.front());

  LpccModel mdl;
  mdl.penalty = inst.penalty;
  mdl.n_scale = inst.loss.n;
  mdl.box_c = inst.box_c;
  mdl.dim = inst.dim();
  mdl.pen_idx = inst.penalized_indices();
  mdl.p = inst.penalty.lambda > 0 ? static_cast<int>(mdl.pen_idx.size()) : 0;
  if (mdl.p == 0) mdl.pen_idx.clear();
  mdl.m_ext = inst.feasible.m();
  mdl.offset_to_loss = instance_offset_to_loss(inst);
  mdl.big_m = estimate_big_m(inst);

  const int d = mdl.dim, p = mdl.p, mext = mdl.m_ext;
  const int mtot = mext + 2 * d;
  const double n = inst.loss.n, a = inst.penalty.a, lam = inst.penalty.lambda;
  const double C = inst.box_c, gub = g_upper_bound(inst);
  const bool scad = is_scad(inst);

  mdl.col_beta = 0;
  mdl.col_g = d;
  mdl.col_h = d + p;
  for (int b = 0; b < 4; ++b) mdl.col_mu[b] = d + 2 * p + b * p;
  mdl.col_rho = d + 6 * p;
  mdl.col_slack = d + 6 * p + mtot;
  const int n_slack = 3 * p + mtot;
  mdl.n_cols = mdl.col_slack + n_slack;

  const int rows = d + 5 * p + mtot;
  mdl.E = Eigen::MatrixXd::Zero(rows, mdl.n_cols);
  mdl.f = Eigen::VectorXd::Zero(rows);
  mdl.c = Eigen::VectorXd::Zero(mdl.n_cols);

  const int row_stat_beta = 0;
  const int row_stat_h = d;
  const int row_stat_g = d + p;
  const int row_expr_hm = d + 2 * p;
  const int row_expr_hp = d + 3 * p;
  const int row_expr_g = d + 4 * p;
  const int row_rho = d + 5 * p;
  const int s1 = mdl.col_slack, s2 = s1 + p, s4 = s2 + p, srho = s4 + p;

  // stationarity in beta: Q beta + mu1 - mu2 + A rho = -q
  mdl.E.block(row_stat_beta, mdl.col_beta, d, d) = inst.loss.Q;
  mdl.f.segment(row_stat_beta, d) = -inst.loss.q;
  for (int k = 0; k < p; ++k) {
    int i = mdl.pen_idx[k];
    mdl.E(row_stat_beta + i, mdl.col_mu[0] + k) = 1.0;
    mdl.E(row_stat_beta + i, mdl.col_mu[1] + k) = -1.0;
  }
  if (mext > 0)
    mdl.E.block(row_stat_beta, mdl.col_rho, d, mext) = inst.feasible.A;
  for (int i = 0; i < d; ++i) {
    mdl.E(row_stat_beta + i, mdl.col_rho + mext + i) = 1.0;       // beta_i <= C
    mdl.E(row_stat_beta + i, mdl.col_rho + mext + d + i) = -1.0;  // -beta_i <= C
  }

  for (int k = 0; k < p; ++k) {
    if (scad) {
      mdl.E(row_stat_h + k, mdl.col_g + k) = n;
      mdl.E(row_stat_h + k, mdl.col_mu[0] + k) = -1.0;
      mdl.E(row_stat_h + k, mdl.col_mu[1] + k) = -1.0;
      mdl.E(row_stat_g + k, mdl.col_g + k) = n * (a - 1.0);
      mdl.E(row_stat_g + k, mdl.col_h + k) = n;
      mdl.E(row_stat_g + k, mdl.col_mu[2] + k) = -1.0;
      mdl.E(row_stat_g + k, mdl.col_mu[3] + k) = 1.0;
      mdl.f(row_stat_g + k) = n * a * lam;
    } else {
      // n (lambda 1 - g/a) - eta1 - eta2 = 0, the proof-side sign
      mdl.E(row_stat_h + k, mdl.col_g + k) = -n / a;
      mdl.E(row_stat_h + k, mdl.col_mu[0] + k) = -1.0;
      mdl.E(row_stat_h + k, mdl.col_mu[1] + k) = -1.0;
      mdl.f(row_stat_h + k) = -n * lam;
      mdl.E(row_stat_g + k, mdl.col_g + k) = n / a;
      mdl.E(row_stat_g + k, mdl.col_h + k) = -n / a;
      mdl.E(row_stat_g + k, mdl.col_mu[2] + k) = -1.0;
      mdl.E(row_stat_g + k, mdl.col_mu[3] + k) = 1.0;
    }
    // h - beta - s1 = 0 ; h + beta - s2 = 0 ; gub - g - s4 = 0
    int i = mdl.pen_idx[k];
    mdl.E(row_expr_hm + k, mdl.col_h + k) = 1.0;
    mdl.E(row_expr_hm + k, mdl.col_beta + i) = -1.0;
    mdl.E(row_expr_hm + k, s1 + k) = -1.0;
    mdl.E(row_expr_hp + k, mdl.col_h + k) = 1.0;
    mdl.E(row_expr_hp + k, mdl.col_beta + i) = 1.0;
    mdl.E(row_expr_hp + k, s2 + k) = -1.0;
    mdl.E(row_expr_g + k, mdl.col_g + k) = -1.0;
    mdl.E(row_expr_g + k, s4 + k) = -1.0;
    mdl.f(row_expr_g + k) = -gub;
  }

  // feasible-set rows: A_j' x + s = b_j, then the box rows
  Eigen::VectorXd b_all(mtot);
  for (int j = 0; j < mext; ++j) {
    mdl.E.block(row_rho + j, mdl.col_beta, 1, d) = inst.feasible.A.col(j).transpose();
    mdl.E(row_rho + j, srho + j) = 1.0;
    mdl.f(row_rho + j) = inst.feasible.b(j);
    b_all(j) = inst.feasible.b(j);
  }
  for (int i = 0; i < d; ++i) {
    int ju = mext + i, jl = mext + d + i;
    mdl.E(row_rho + ju, mdl.col_beta + i) = 1.0;
    mdl.E(row_rho + ju, srho + ju) = 1.0;
    mdl.f(row_rho + ju) = C;
    b_all(ju) = C;
    mdl.E(row_rho + jl, mdl.col_beta + i) = -1.0;
    mdl.E(row_rho + jl, srho + jl) = 1.0;
    mdl.f(row_rho + jl) = C;
    b_all(jl) = C;
  }

  // LPCC linear objective
  mdl.c.segment(mdl.col_beta, d) = 0.5 * inst.loss.q;
  mdl.c.segment(mdl.col_rho, mtot) = -0.5 * b_all;
  if (scad) {
    for (int k = 0; k < p; ++k) {
      mdl.c(mdl.col_g + k) = -0.5 * n * a * lam;
      mdl.c(mdl.col_mu[3] + k) = -0.5 * lam;
    }
  } else {
    for (int k = 0; k < p; ++k) {
      mdl.c(mdl.col_h + k) = 0.5 * lam * n;
      mdl.c(mdl.col_mu[3] + k) = -0.5 * a * lam;
    }
  }

  for (int k = 0; k < p; ++k) {
    mdl.pairs.push_back({mdl.col_mu[0] + k, s1 + k, PairKind::HMinus, mdl.pen_idx[k]});
    mdl.pairs.push_back({mdl.col_mu[1] + k, s2 + k, PairKind::HPlus, mdl.pen_idx[k]});
    mdl.pairs.push_back({mdl.col_mu[2] + k, mdl.col_g + k, PairKind::GLower, mdl.pen_idx[k]});
    mdl.pairs.push_back({mdl.col_mu[3] + k, s4 + k, PairKind::GUpper, mdl.pen_idx[k]});
  }
  for (int j = 0; j < mext; ++j)
    mdl.pairs.push_back({mdl.col_rho + j, srho + j, PairKind::External, j});
  for (int i = 0; i < d; ++i)
    mdl.pairs.push_back({mdl.col_rho + mext + i, srho + mext + i, PairKind::BoxUpper, i});
  for (int i = 0; i < d; ++i)
    mdl.pairs.push_back({mdl.col_rho + mext + d + i, srho + mext + d + i, PairKind::BoxLower, i});

  // bounds
  const double M = mdl.big_m;
  mdl.lower = Eigen::VectorXd::Zero(mdl.n_cols);
  mdl.lower.segment(mdl.col_beta, d).setConstant(-C);
  mdl.upper_plain = Eigen::VectorXd::Constant(mdl.n_cols, M);
  mdl.upper_plain.segment(mdl.col_beta, d).setConstant(C);
  for (int k = 0; k < p; ++k) {
    mdl.upper_plain(mdl.col_g + k) = gub;
    mdl.upper_plain(mdl.col_h + k) = kInf;  // capped through s1/s2 <= M
  }

  // Valid LPCC-wide bounds: complementarity plus the stationarity rows pin
  // gamma1+gamma2 = n*g (eta1+eta2 = n(lambda - g/a)), and a positive mu3/mu4
  // forces g to the opposite end of its range.
  mdl.upper_tight = mdl.upper_plain;
  double mu12 = n * lam;
  double mu3 = scad ? std::max(0.0, n * (C - a * lam)) : 0.0;
  double mu4 = scad ? n * lam : std::max(0.0, (n / a) * (C - a * lam));
  for (int k = 0; k < p; ++k) {
    mdl.upper_tight(mdl.col_h + k) = C;
    mdl.upper_tight(mdl.col_mu[0] + k) = mu12;
    mdl.upper_tight(mdl.col_mu[1] + k) = mu12;
    mdl.upper_tight(mdl.col_mu[2] + k) = std::min(mu3, M);
    mdl.upper_tight(mdl.col_mu[3] + k) = std::min(mu4, M);
    mdl.upper_tight(s1 + k) = 2 * C;
    mdl.upper_tight(s2 + k) = 2 * C;
    mdl.upper_tight(s4 + k) = gub;
  }
  std::vector<bool> pen_mask(d, false);
  for (int i : mdl.pen_idx) pen_mask[i] = true;
  for (int i = 0; i < d; ++i) {
    double c1 = std::abs(inst.loss.q(i));
    for (int j = 0; j < d; ++j) c1 += std::abs(inst.loss.Q(i, j)) * C;
    double bound = std::min(c1 + (pen_mask[i] ? mu12 : 0.0), M);
    mdl.upper_tight(mdl.col_rho + mext + i) = bound;
    mdl.upper_tight(mdl.col_rho + mext + d + i) = bound;
    mdl.upper_tight(srho + mext + i) = 2 * C;
    mdl.upper_tight(srho + mext + d + i) = 2 * C;
  }
  for (int j = 0; j < mext; ++j) {
    double sb = inst.feasible.b(j);
    for (int i = 0; i < d; ++i) sb += std::abs(inst.feasible.A(i, j)) * C;
    mdl.upper_tight(srho + j) = std::max(0.0, sb);
  }
  return mdl;
}

MipModel build_mip(const ProblemInstance& inst, double big_m) {
  if (!(big_m > 0)) throw std::invalid_argument("build_mip: big-M must be positive");
  MipModel mip;
  mip.lpcc = build_lpcc(inst);
  mip.m_big = big_m;
  for (int k = 0; k < mip.lpcc.n_cols; ++k) {
    if (mip.lpcc.upper_plain(k) == mip.lpcc.big_m) mip.lpcc.upper_plain(k) = big_m;
    if (mip.lpcc.upper_tight(k) > big_m) mip.lpcc.upper_tight(k) = big_m;
  }
  mip.lpcc.big_m = big_m;
  return mip;
}

StandardLp assemble_relaxation(const LpccModel& model, bool tight) {
  StandardLp lp;
  const int base_rows = static_cast<int>(model.E.rows());
  const int base_cols = model.n_cols;
  if (!tight) {
    lp.E = model.E;
    lp.f = model.f;
    lp.c = model.c;
    lp.lower = model.lower;
    lp.upper = model.upper_plain;
    return lp;
  }
  const int np = static_cast<int>(model.pairs.size());
  lp.E = Eigen::MatrixXd::Zero(base_rows + np, base_cols + np);
  lp.E.topLeftCorner(base_rows, base_cols) = model.E;
  lp.f.resize(base_rows + np);
  lp.f.head(base_rows) = model.f;
  lp.c = Eigen::VectorXd::Zero(base_cols + np);
  lp.c.head(base_cols) = model.c;
  lp.lower = Eigen::VectorXd::Zero(base_cols + np);
  lp.lower.head(base_cols) = model.lower;
  lp.upper = Eigen::VectorXd::Constant(base_cols + np, kInf);
  lp.upper.head(base_cols) = model.upper_tight;
  for (int k = 0; k < np; ++k) {
    const auto& pr = model.pairs[k];
    double phi_ub = model.upper_tight(pr.phi);
    double del_ub = model.upper_tight(pr.delta);
    int row = base_rows + k;
    // phi/PHI + delta/DELTA + s = 1; sides pinned at zero drop out
    if (phi_ub > 1e-12 && std::isfinite(phi_ub)) lp.E(row, pr.phi) = 1.0 / phi_ub;
    if (del_ub > 1e-12 && std::isfinite(del_ub)) lp.E(row, pr.delta) = 1.0 / del_ub;
    lp.E(row, base_cols + k) = 1.0;
    lp.f(row) = 1.0;
    lp.upper(base_cols + k) = 1.0;
  }
  return lp;
}

void tighten_with_incumbent(LpccModel& model, const ProblemInstance& inst, double ub_loss) {
  if (inst.kind != LossKind::LeastSquares || !inst.X || !std::isfinite(ub_loss)) return;
  const Eigen::MatrixXd& X = *inst.X;
  const double r2 = std::sqrt(2.0 * std::max(0.0, ub_loss));
  const double mu12 = model.n_scale * model.penalty.lambda;
  std::vector<bool> pen_mask(model.dim, false);
  for (int i : model.pen_idx) pen_mask[i] = true;
  for (int i = 0; i < model.dim; ++i) {
    double grad = X.col(i).norm() * r2;
    double bound = (grad + (pen_mask[i] ? mu12 : 0.0)) * (1.0 + 1e-9) + 1e-6;
    int ju = model.col_rho + model.m_ext + i;
    int jl = ju + model.dim;
    model.upper_tight(ju) = std::min(model.upper_tight(ju), bound);
    model.upper_tight(jl) = std::min(model.upper_tight(jl), bound);
  }
}

double max_complementarity_product(const LpccModel& model, const Eigen::VectorXd& x) {
  double worst = 0.0;
  for (const auto& pr : model.pairs)
    worst = std::max(worst, std::abs(x(pr.phi) * x(pr.delta)));
  return worst;
}

double stationarity_residual(const LpccModel& model, const Eigen::VectorXd& x) {
  const int stat_rows = model.dim + 2 * model.p;
  Eigen::VectorXd r = model.E.topRows(stat_rows) * x.head(model.n_cols) - model.f.head(stat_rows);
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace fcp
