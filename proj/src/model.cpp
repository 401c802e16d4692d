#include "fcp/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fcp/simplex.hpp"

namespace fcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const Eigen::MatrixXd& M, const char* what) {
  if (!M.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}
void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}
}  // namespace

int ProblemInstance::penalized_count() const {
  int p = 0;
  for (bool b : penalized) p += b ? 1 : 0;
  return p;
}

std::vector<int> ProblemInstance::penalized_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < dim(); ++i)
    if (penalized[i]) idx.push_back(i);
  return idx;
}

double default_box_c(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q) {
  double qinf = q.size() ? q.cwiseAbs().maxCoeff() : 0.0;
  double dmin = Q.rows() ? Q.diagonal().minCoeff() : 0.0;
  double denom = std::max(1.0, std::max(dmin, 1e-6));
  return 10.0 * (1.0 + qinf / denom);
}

ProblemInstance build_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const PenaltySpec& penalty, double box_c,
                                    const std::vector<bool>* beta_mask) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("build_least_squares: empty design");
  if (X.rows() != y.size()) throw std::invalid_argument("build_least_squares: X/y dimension mismatch");
  require_finite(X, "X");
  require_finite(y, "y");
  penalty.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  ProblemInstance inst;
  inst.kind = LossKind::LeastSquares;
  inst.loss.dim = d;
  inst.loss.Q = X.transpose() * X;
  inst.loss.q = -(X.transpose() * y);
  inst.loss.constant = 0.5 * y.squaredNorm();
  inst.loss.n = n;
  inst.feasible.A.resize(d, 0);
  inst.feasible.b.resize(0);
  if (beta_mask) {
    if (static_cast<int>(beta_mask->size()) != d)
      throw std::invalid_argument("build_least_squares: mask length mismatch");
    inst.penalized = *beta_mask;
  } else {
    inst.penalized.assign(d, true);
  }
  inst.box_c = box_c > 0 ? box_c : default_box_c(inst.loss.Q, inst.loss.q);
  inst.penalty = penalty;
  inst.X = X;
  inst.y = y;
  return inst;
}

namespace {
// Shared layout for the auxiliary-variable losses: decision (beta, psi).
ProblemInstance aux_loss_shell(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const PenaltySpec& penalty, double box_c, LossKind kind) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("builder: empty design");
  if (X.rows() != y.size()) throw std::invalid_argument("builder: X/y dimension mismatch");
  require_finite(X, "X");
  require_finite(y, "y");
  penalty.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  ProblemInstance inst;
  inst.kind = kind;
  inst.loss.dim = d + n;
  inst.loss.Q = Eigen::MatrixXd::Zero(d + n, d + n);
  inst.loss.q = Eigen::VectorXd::Zero(d + n);
  inst.loss.constant = 0.0;
  inst.loss.n = n;
  inst.penalized.assign(d + n, false);
  for (int i = 0; i < d; ++i) inst.penalized[i] = true;
  inst.penalty = penalty;
  inst.X = X;
  inst.y = y;
  inst.box_c = box_c;  // finalized by the caller once q is known
  return inst;
}
}  // namespace

ProblemInstance build_lad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty, double box_c) {
  ProblemInstance inst = aux_loss_shell(X, y, penalty, box_c, LossKind::Lad);
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  inst.loss.q.tail(n).setOnes();
  // -psi <= y - X beta <= psi as 2n rows of A'x <= b
  inst.feasible.A = Eigen::MatrixXd::Zero(d + n, 2 * n);
  inst.feasible.b.resize(2 * n);
  for (int t = 0; t < n; ++t) {
    // x_t' beta - psi_t <= y_t
    inst.feasible.A.col(2 * t).head(d) = X.row(t).transpose();
    inst.feasible.A(d + t, 2 * t) = -1.0;
    inst.feasible.b(2 * t) = y(t);
    // -x_t' beta - psi_t <= -y_t
    inst.feasible.A.col(2 * t + 1).head(d) = -X.row(t).transpose();
    inst.feasible.A(d + t, 2 * t + 1) = -1.0;
    inst.feasible.b(2 * t + 1) = -y(t);
  }
  if (inst.box_c <= 0) inst.box_c = default_box_c(inst.loss.Q, inst.loss.q) + y.cwiseAbs().maxCoeff();
  return inst;
}

ProblemInstance build_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                               const PenaltySpec& penalty, double box_c) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("build_quantile: tau must be in (0,1)");
  ProblemInstance inst = aux_loss_shell(X, y, penalty, box_c, LossKind::Quantile);
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  inst.tau = tau;
  // objective 1'[(y - X beta) tau + psi] = tau*1'y - tau*(X'1)'beta + 1'psi
  inst.loss.q.head(d) = -tau * (X.transpose() * Eigen::VectorXd::Ones(n));
  inst.loss.q.tail(n).setOnes();
  inst.loss.constant = tau * y.sum();
  inst.feasible.A = Eigen::MatrixXd::Zero(d + n, 2 * n);
  inst.feasible.b.resize(2 * n);
  for (int t = 0; t < n; ++t) {
    // psi_t >= x_t' beta - y_t
    inst.feasible.A.col(2 * t).head(d) = X.row(t).transpose();
    inst.feasible.A(d + t, 2 * t) = -1.0;
    inst.feasible.b(2 * t) = y(t);
    // psi_t >= 0
    inst.feasible.A(d + t, 2 * t + 1) = -1.0;
    inst.feasible.b(2 * t + 1) = 0.0;
  }
  if (inst.box_c <= 0) inst.box_c = default_box_c(inst.loss.Q, inst.loss.q) + y.cwiseAbs().maxCoeff();
  return inst;
}

ProblemInstance build_hinge_svm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const PenaltySpec& penalty, double box_c) {
  for (int t = 0; t < y.size(); ++t)
    if (y(t) != 1.0 && y(t) != -1.0)
      throw std::invalid_argument("build_hinge_svm: labels must be in {-1,+1}");
  ProblemInstance inst = aux_loss_shell(X, y, penalty, box_c, LossKind::Hinge);
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  inst.loss.q.tail(n).setOnes();
  inst.feasible.A = Eigen::MatrixXd::Zero(d + n, 2 * n);
  inst.feasible.b.resize(2 * n);
  for (int t = 0; t < n; ++t) {
    // psi_t >= 1 - y_t x_t' beta  <=>  -y_t x_t' beta - psi_t <= -1
    inst.feasible.A.col(2 * t).head(d) = -y(t) * X.row(t).transpose();
    inst.feasible.A(d + t, 2 * t) = -1.0;
    inst.feasible.b(2 * t) = -1.0;
    // psi_t >= 0
    inst.feasible.A(d + t, 2 * t + 1) = -1.0;
    inst.feasible.b(2 * t + 1) = 0.0;
  }
  if (inst.box_c <= 0) inst.box_c = default_box_c(inst.loss.Q, inst.loss.q) + 1.0;
  return inst;
}

InstanceDiagnostics validate_instance(const ProblemInstance& inst) {
  InstanceDiagnostics diag;
  const int dim = inst.dim();
  if (dim < 1) { diag.failures.push_back("empty instance"); return diag; }
  if (!inst.loss.Q.allFinite() || !inst.loss.q.allFinite() ||
      !inst.feasible.A.allFinite() || !inst.feasible.b.allFinite() ||
      !std::isfinite(inst.loss.constant)) {
    diag.failures.push_back("non-finite data");
    return diag;
  }
  if (inst.loss.Q.rows() != dim || inst.loss.Q.cols() != dim || inst.loss.q.size() != dim ||
      static_cast<int>(inst.penalized.size()) != dim || inst.feasible.A.rows() != dim ||
      inst.feasible.A.cols() != inst.feasible.b.size()) {
    diag.failures.push_back("dimension mismatch");
    return diag;
  }
  if (inst.loss.n < 1.0) diag.failures.push_back("sample scale n must be >= 1");
  try {
    inst.penalty.validate();
  } catch (const std::exception& e) {
    diag.failures.push_back(e.what());
  }
  if (inst.penalized_count() < 1 && inst.penalty.lambda > 0)
    diag.failures.push_back("no penalized coordinate");
  if (!(inst.box_c > 0.0) || !std::isfinite(inst.box_c))
    diag.failures.push_back("box constant must be positive and finite");

  double qmax = inst.loss.Q.size() ? inst.loss.Q.cwiseAbs().maxCoeff() : 0.0;
  diag.symmetry_defect =
      inst.loss.Q.size() ? (inst.loss.Q - inst.loss.Q.transpose()).cwiseAbs().maxCoeff() / (1.0 + qmax)
                         : 0.0;
  diag.symmetric = diag.symmetry_defect <= 1e-12;
  if (!diag.symmetric) diag.failures.push_back("Q is not symmetric");

  const int m = inst.feasible.m();
  diag.m_less_than_dim = m < dim;
  if (!diag.m_less_than_dim)
    diag.warnings.push_back("m >= dim: outside the standing assumption 0 <= m < d");
  if (m > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(inst.feasible.A);
    qr.setThreshold(1e-10);
    diag.rank_a = static_cast<int>(qr.rank());
    diag.full_column_rank = diag.rank_a == m;
    if (!diag.full_column_rank)
      diag.warnings.push_back("A is column-rank deficient (rank " + std::to_string(diag.rank_a) +
                              " of " + std::to_string(m) + ")");
  } else {
    diag.rank_a = 0;
    diag.full_column_rank = true;
  }

  // Feasibility probe: find x with A'x <= b, |x| <= box_c via one LP.
  if (diag.failures.empty()) {
    const int rows = m;
    StandardLp lp;
    lp.E.resize(rows, dim + rows);
    lp.f.resize(rows);
    if (m > 0) {
      lp.E.leftCols(dim) = inst.feasible.A.transpose();
      lp.E.rightCols(rows) = Eigen::MatrixXd::Identity(rows, rows);
      lp.f = inst.feasible.b;
    }
    lp.c = Eigen::VectorXd::Zero(dim + rows);
    lp.lower = Eigen::VectorXd::Constant(dim + rows, 0.0);
    lp.upper = Eigen::VectorXd::Constant(dim + rows, kInf);
    lp.lower.head(dim).setConstant(-inst.box_c);
    lp.upper.head(dim).setConstant(inst.box_c);
    SimplexSolver probe(lp);
    LpSolution sol = probe.solve();
    diag.feasible = sol.status == LpStatus::Optimal;
    if (diag.feasible) diag.feasible_point = sol.x.head(dim);
    else diag.failures.push_back("feasible set Lambda (within the box) is empty");
  }

  // Boundedness certificate: interval bound of the quadratic loss on the box.
  if (std::isfinite(inst.box_c) && inst.box_c > 0) {
    double c = inst.box_c;
    double bound = inst.loss.constant - inst.loss.q.cwiseAbs().sum() * c;
    if (inst.loss.Q.size()) bound -= 0.5 * inst.loss.Q.cwiseAbs().sum() * c * c;
    diag.bounded_below = std::isfinite(bound);
    diag.lower_bound_certificate = bound;
    if (!diag.bounded_below) diag.failures.push_back("loss not certifiably bounded below on the box");
  }

  diag.ok = diag.failures.empty();
  return diag;
}

double objective_eval(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw std::invalid_argument("objective_eval: non-finite input");
  if (x.size() != inst.dim()) throw std::invalid_argument("objective_eval: dimension mismatch");
  double val = 0.5 * x.dot(inst.loss.Q * x) + inst.loss.q.dot(x) + inst.loss.constant;
  if (inst.penalty.lambda > 0) {
    for (int i = 0; i < inst.dim(); ++i)
      if (inst.penalized[i]) val += inst.loss.n * penalty_value(std::abs(x(i)), inst.penalty);
  }
  return val;
}

double instance_offset_to_loss(const ProblemInstance& inst) {
  int p = inst.penalty.lambda > 0 ? inst.penalized_count() : 0;
  return decomposition_offset_to_loss(inst.loss.n, p, inst.penalty) + inst.loss.constant;
}

}  // namespace fcp
