#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fcp/model.hpp"

namespace fcp {

enum class LocalInit { Zero, Random, Given, Lasso };

struct LocalOptions {
  LocalInit init = LocalInit::Zero;
  Eigen::VectorXd given;            // used when init == Given
  std::uint64_t seed = 0;           // Random init stream
  double random_lo = -10.0, random_hi = 10.0;
  double lasso_omega = 0.0;         // Lasso-init weight
  int max_outer = 500;
  int max_inner = 2000;
  double tol = 1e-8;
};

struct LocalResult {
  Eigen::VectorXd beta;
  std::vector<double> objective_trace;  // per outer iteration
  int iterations = 0;
  bool converged = false;
};

// min 0.5||y - X beta||^2 + omega * ||beta||_1 by cyclic coordinate descent
// with exact soft-threshold updates.
Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double omega,
                         const LocalOptions& opts = {});

// Global minimizer of 0.5*(x-c)^2/step + P_lambda(|x|); closed-form
// candidates compared by objective, ties toward smaller |x|.
double scalar_prox(double c, double step, const PenaltySpec& spec);

// Local linear approximation: iterated weighted LASSO with weights
// P'(|beta_i|). Requires an unconstrained least-squares instance.
LocalResult lla(const ProblemInstance& inst, const LocalOptions& opts = {});

// Cyclic exact coordinate minimization of the penalized least-squares loss.
LocalResult nonconvex_cd(const ProblemInstance& inst, const LocalOptions& opts = {});

// Composite gradient iteration with backtracking on the smooth part.
LocalResult proximal_gradient(const ProblemInstance& inst, const LocalOptions& opts = {});

// Minimum-norm least squares (used for the LSS initialization when n < d).
Eigen::VectorXd least_squares_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace fcp
