#include "fcp/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fcp {

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("penalty: lambda must be finite and >= 0");
  if (family == PenaltyFamily::Scad) {
    if (!(a > 1.0) || !std::isfinite(a))
      throw std::invalid_argument("penalty: SCAD requires a > 1");
  } else {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("penalty: MCP requires a > 0");
  }
}

double penalty_value(double theta, const PenaltySpec& spec) {
  if (theta < 0.0) throw std::invalid_argument("penalty_value: theta must be >= 0");
  const double lam = spec.lambda, a = spec.a;
  if (lam == 0.0) return 0.0;
  if (spec.family == PenaltyFamily::Scad) {
    if (theta <= lam) return lam * theta;
    if (theta <= a * lam)
      return (2.0 * a * lam * theta - theta * theta - lam * lam) / (2.0 * (a - 1.0));
    return 0.5 * (a + 1.0) * lam * lam;
  }
  if (theta <= a * lam) return lam * theta - theta * theta / (2.0 * a);
  return 0.5 * a * lam * lam;
}

double penalty_deriv(double theta, const PenaltySpec& spec) {
  if (theta < 0.0) throw std::invalid_argument("penalty_deriv: theta must be >= 0");
  const double lam = spec.lambda, a = spec.a;
  if (lam == 0.0) return 0.0;
  if (spec.family == PenaltyFamily::Scad) {
    if (theta <= lam) return lam;
    return std::max(0.0, a * lam - theta) / (a - 1.0);
  }
  return std::max(0.0, a * lam - theta) / a;
}

double g_star(double theta, const PenaltySpec& spec) {
  if (theta < 0.0) throw std::invalid_argument("g_star: theta must be >= 0");
  const double lam = spec.lambda, a = spec.a;
  if (lam == 0.0) return 0.0;
  if (spec.family == PenaltyFamily::Scad)
    return std::clamp((a * lam - theta) / (a - 1.0), 0.0, lam);
  return std::min(theta, a * lam);
}

double decomposition_offset_to_loss(double n, int penalized_count, const PenaltySpec& spec) {
  if (spec.family == PenaltyFamily::Scad)
    return n * penalized_count * 0.5 * (spec.a + 1.0) * spec.lambda * spec.lambda;
  return 0.0;
}

std::string to_string(PenaltyFamily family) {
  return family == PenaltyFamily::Scad ? "scad" : "mcp";
}

}  // namespace fcp
