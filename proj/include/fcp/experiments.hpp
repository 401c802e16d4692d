#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fcp/model.hpp"

namespace fcp {

enum class ScenarioDesign { S4, S52, S6 };

struct Scenario {
  ScenarioDesign design = ScenarioDesign::S4;
  int d = 100;                 // total coefficient count (S6: includes intercept)
  int n = 20;
  double rho = 0.5;            // AR(1) parameter for S4
  std::uint64_t seed = 0;
};

struct ScenarioData {
  Eigen::MatrixXd X;           // n x d design (S6: last column is the all-ones intercept)
  Eigen::VectorXd y;
  Eigen::VectorXd beta_true;
  std::vector<bool> penalized; // false on the intercept column
};

// Deterministic given the seed; draws go through the counter-based generator
// so streams replay identically at any thread count.
ScenarioData generate_scenario(const Scenario& s);

struct RscResult {
  bool pass = false;
  int violations = 0;
  int evaluated = 0;
};

// Midpoint-convexity probe on random sparse two-dimensional slices:
// (L(b1)+L(b2))/2 > L((b1+b2)/2) must hold whenever b1 != b2.
RscResult rsc_random_test(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty, int k_test = 2, int reps = 10000,
                          std::uint64_t seed = 0);

struct MetricsReport {
  double ad = 0.0;
  int fp = 0;
  int fn = 0;
  double gap_abs = 0.0;
  double gap_pct = 0.0;
  double time_ms = 0.0;
  double aic = 0.0;
  double bic = 0.0;
};

// AD/FP/FN against beta_true (nonzero threshold 1e-6), objective gap against
// a reference solver, and AIC/BIC when the data matrices are supplied.
MetricsReport compute_metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                              double objective, double reference_objective, double time_ms,
                              const Eigen::MatrixXd* X = nullptr,
                              const Eigen::VectorXd* y = nullptr);

// Log-spaced grid from ||X'y||_inf / n downward.
std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                int count = 20, double min_ratio = 1e-2);

// Fits nonconvex coordinate descent along the grid (warm-started, descending)
// and selects by the high-dimensional BIC; ties go to the larger lambda.
PenaltySpec tune_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        PenaltyFamily family, double a, const std::vector<double>& grid,
                        const std::vector<bool>* penalized_mask = nullptr);

}  // namespace fcp
