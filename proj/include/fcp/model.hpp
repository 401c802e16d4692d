#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fcp/penalty.hpp"

namespace fcp {

// 0.5 * x'Qx + q'x + constant; n is the sample scale multiplying the penalty.
struct QuadraticLoss {
  int dim = 0;
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  double constant = 0.0;
  double n = 1.0;
};

// Lambda = { x : A' x <= b }, A is dim x m (columns are constraint normals).
struct LinearFeasibleSet {
  Eigen::MatrixXd A;   // dim x m
  Eigen::VectorXd b;   // m
  int m() const { return static_cast<int>(A.cols()); }
};

enum class LossKind { LeastSquares, Lad, Quantile, Hinge, Custom };

struct ProblemInstance {
  QuadraticLoss loss;
  LinearFeasibleSet feasible;
  PenaltySpec penalty;
  std::vector<bool> penalized;   // length loss.dim; auxiliaries are never penalized
  double box_c = 0.0;            // ||beta||_inf <= box_c
  LossKind kind = LossKind::Custom;

  // Raw data kept for least-squares-backed instances (local solvers, bounds).
  std::optional<Eigen::MatrixXd> X;
  std::optional<Eigen::VectorXd> y;
  double tau = 0.5;              // quantile level when kind == Quantile

  int dim() const { return loss.dim; }
  int penalized_count() const;
  std::vector<int> penalized_indices() const;
};

// Data-scaled default for the box constant (user-overridable everywhere).
double default_box_c(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q);

// Builders for the concrete statistical losses. box_c <= 0 picks the default.
// An optional mask marks unpenalized coordinates (e.g. an intercept); it
// applies to the beta block only, auxiliaries are never penalized.
ProblemInstance build_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const PenaltySpec& penalty, double box_c = 0.0,
                                    const std::vector<bool>* beta_mask = nullptr);
ProblemInstance build_lad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty, double box_c = 0.0);
ProblemInstance build_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                               const PenaltySpec& penalty, double box_c = 0.0);
ProblemInstance build_hinge_svm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const PenaltySpec& penalty, double box_c = 0.0);

struct InstanceDiagnostics {
  bool ok = false;                    // hard assumptions hold
  double symmetry_defect = 0.0;       // relative, max|Q - Q'| / (1 + max|Q|)
  bool symmetric = false;
  int rank_a = 0;
  bool full_column_rank = true;
  bool m_less_than_dim = true;
  bool feasible = false;
  Eigen::VectorXd feasible_point;     // witness when feasible
  bool bounded_below = false;
  double lower_bound_certificate = 0.0;  // interval bound of the loss on the box
  std::vector<std::string> failures;  // hard failures
  std::vector<std::string> warnings;  // standing-assumption warnings (rank, m < dim)
};

// Checks the standing assumptions: Q symmetric, A full column rank, Lambda
// nonempty, loss bounded below on Lambda intersect box. Rank deficiency and
// m >= dim are warnings, not failures: the paper's own auxiliary-variable
// losses violate them whenever n >= d, and KKT needs no constraint
// qualification for linear constraints.
InstanceDiagnostics validate_instance(const ProblemInstance& inst);

// L(x) = 0.5 x'Qx + q'x + constant + n * sum_{i penalized} P(|x_i|).
double objective_eval(const ProblemInstance& inst, const Eigen::VectorXd& x);

// Offset that recovers L from the decomposition/LPCC objective of this instance.
double instance_offset_to_loss(const ProblemInstance& inst);

}  // namespace fcp
