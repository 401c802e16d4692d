#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fcp/model.hpp"
#include "fcp/simplex.hpp"

namespace fcp {

// Quadratic program over (beta, g, h): 0.5 z'Hz + c'z with the coupling
// blocks between g and h carrying all the nonconvexity. Adding
// offset_to_loss to the QP value at (beta, g*(|beta|), |beta|) recovers
// L(beta); for SCAD that offset is n*p*(a+1)*lambda^2/2 plus the loss
// constant, for MCP just the loss constant.
struct QpForm {
  int dim = 0;  // beta block
  int p = 0;    // penalized count (g and h blocks)
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  double g_upper = 0.0;          // lambda (SCAD) or a*lambda (MCP)
  double h_upper = 0.0;          // box constant
  double offset_to_loss = 0.0;
  std::vector<int> pen_idx;      // instance coordinate of each g/h slot

  int total_variables() const { return dim + 2 * p; }
  double value(const Eigen::VectorXd& z) const { return 0.5 * z.dot(H * z) + c.dot(z); }
};

enum class PairKind : unsigned char { HMinus, HPlus, GLower, GUpper, External, BoxUpper, BoxLower };

// KKT system of the QP form written as equality rows over
// x = (beta, g, h, mu1..mu4, rho, slacks) with one complementarity pair per
// inequality: (multiplier column, slack-or-variable column).
struct LpccModel {
  int dim = 0;
  int p = 0;
  int m_ext = 0;                      // external rows of A (box rows come after)
  std::vector<int> pen_idx;

  // column block starts
  int col_beta = 0, col_g = 0, col_h = 0;
  int col_mu[4] = {0, 0, 0, 0};       // gamma (SCAD) / eta (MCP) blocks
  int col_rho = 0;                    // m_ext + 2*dim columns
  int col_slack = 0;                  // expression slacks
  int n_cols = 0;

  Eigen::MatrixXd E;                  // equality rows (no hull rows)
  Eigen::VectorXd f;
  Eigen::VectorXd c;                  // LPCC linear objective

  struct Pair {
    int phi = -1;                     // multiplier column
    int delta = -1;                   // paired column (slack or g itself)
    PairKind kind = PairKind::External;
    int coord = -1;                   // instance coordinate or external row id
  };
  std::vector<Pair> pairs;

  Eigen::VectorXd lower;              // default bounds, plain big-M flavor
  Eigen::VectorXd upper_plain;        // nonnegativity + M bounds only
  Eigen::VectorXd upper_tight;        // valid LPCC-wide bounds per column

  double big_m = 0.0;
  double offset_to_loss = 0.0;
  PenaltySpec penalty;
  double n_scale = 1.0;
  double box_c = 0.0;

  int core_pair_count() const { return 4 * p + m_ext; }
  int core_variable_count() const { return dim + 6 * p; }

  Eigen::VectorXd beta_of(const Eigen::VectorXd& x) const { return x.segment(col_beta, dim); }
};

// LpccModel plus the Eq.(3.5) binary encoding; one binary per pair, ordered
// as model.pairs.
struct MipModel {
  LpccModel lpcc;
  double m_big = 0.0;
  int n_binaries() const { return static_cast<int>(lpcc.pairs.size()); }
};

QpForm build_qp_form(const ProblemInstance& inst);
LpccModel build_lpcc(const ProblemInstance& inst);
MipModel build_mip(const ProblemInstance& inst, double big_m);

// C1 from interval arithmetic of the QP-form gradients over the box, then
// M = 10 * max(3*C1, lambda, a*lambda, box_c).
double estimate_big_m(const ProblemInstance& inst);

struct HessianDiagnostics {
  double min_eig = 0.0;
  int num_negative = 0;  // the exponent r in the complexity bound
  Eigen::VectorXd eigenvalues;
};
HessianDiagnostics hessian_diagnostics(const ProblemInstance& inst);

// Node/relaxation assembly. Tight mode uses upper_tight and appends one
// static row per pair, phi/PHI + delta/DELTA <= 1, the linear shadow of the
// disjunction (identical to relaxing the big-M binaries with per-side
// constants). Plain mode keeps only nonnegativity and M bounds.
StandardLp assemble_relaxation(const LpccModel& model, bool tight);

// Level-set refinement of the beta-stationarity gradient bound for
// least-squares instances: every KKT point with L <= ub_loss has
// ||X'(X beta - y)||_inf <= max_i ||X_i||_2 * sqrt(2*ub_loss). Tightens
// upper_tight in place; no-op for other losses.
void tighten_with_incumbent(LpccModel& model, const ProblemInstance& inst, double ub_loss);

// max_k phi_k * delta_k at x (complementarity violation).
double max_complementarity_product(const LpccModel& model, const Eigen::VectorXd& x);

// Residual of the stationarity equality rows at x.
double stationarity_residual(const LpccModel& model, const Eigen::VectorXd& x);

}  // namespace fcp
