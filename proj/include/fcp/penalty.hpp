#pragma once

#include <string>

namespace fcp {

enum class PenaltyFamily { Scad, Mcp };

// Folded concave penalty: family plus tuning parameters (lambda, a).
// lambda = 0 is accepted as the degenerate convex case (penalty vanishes).
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::Scad;
  double lambda = 1.0;
  double a = 3.7;

  void validate() const;  // throws std::invalid_argument
};

// P_lambda(theta) for theta >= 0, closed form of the defining integral.
double penalty_value(double theta, const PenaltySpec& spec);

// First derivative of the penalty, right-continuous at the knots
// theta = lambda and theta = a*lambda (both families are in fact continuous
// there; the convention only pins the branch taken at the exact knot).
double penalty_deriv(double theta, const PenaltySpec& spec);

// Minimizer of the decomposition subproblem:
//   SCAD: argmin over [0, lambda]   of (theta - a*lambda)*k + (a-1)/2 * k^2
//   MCP:  argmin over [0, a*lambda] of k^2/(2a) - (k/a - lambda)*theta
double g_star(double theta, const PenaltySpec& spec);

// Reporting correction between the decomposition objective and the true loss:
//   F_SCAD(beta, g*(|beta|)) = L(beta) - n*p*(a+1)*lambda^2/2,  F_MCP exact.
// Returned value is what must be ADDED to the decomposition/LPCC objective to
// recover L(beta).
double decomposition_offset_to_loss(double n, int penalized_count, const PenaltySpec& spec);

std::string to_string(PenaltyFamily family);

}  // namespace fcp
