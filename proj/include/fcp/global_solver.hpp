#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "fcp/model.hpp"
#include "fcp/reformulate.hpp"
#include "fcp/simplex.hpp"

namespace fcp {

// Per-pair resolution: bit 0 fixes the multiplier side to zero, bit 1 the
// expression side. Both bits may be set (forced by propagation).
using Pattern = std::vector<std::uint8_t>;
constexpr std::uint8_t kPairFree = 0;
constexpr std::uint8_t kPairVarZero = 1;
constexpr std::uint8_t kPairExprZero = 2;

enum class SolveStatus { Certified, GapLimit, TimeLimit, NodeLimit, Infeasible, Error };

struct SolveResult {
  Eigen::VectorXd beta_hat;
  double objective = 0.0;           // L(beta_hat), evaluated directly
  double lower_bound = 0.0;         // offset-corrected, loss scale
  double gap = 0.0;                 // (UB - LB) / max(1, |UB|)
  long nodes_explored = 0;
  SolveStatus status = SolveStatus::Error;
  Eigen::VectorXd multipliers;      // full LPCC point at the incumbent
  double big_m_used = 0.0;
  int m_escalations = 0;
  double wall_time_s = 0.0;
  bool box_touched = false;
  double kkt_residual = 0.0;
  std::string message;
};

struct SolveOptions {
  double gap_tol_rel = 1e-6;
  double gap_tol_abs = 1e-8;
  long node_limit = -1;             // < 0: unlimited
  double time_limit_s = -1.0;       // < 0: unlimited
  int threads = 1;
  std::uint64_t seed = 0;
  bool tight_relaxation = true;     // per-side bounds + pair hull rows
  bool seed_local_incumbents = true;
  int max_m_escalations = 3;
  long rounding_interval = 25;      // pattern-rounding heuristic cadence
};

// Fully resolved pattern -> LP. status Infeasible means the pattern is
// legitimately pruned.
struct PatternLpOutcome {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;                // full LPCC point
  Eigen::VectorXd beta;
  double lp_objective = 0.0;        // LPCC linear objective
  double loss_value = 0.0;          // L(beta) via objective_eval
};
PatternLpOutcome solve_pattern_lp(const LpccModel& model, const ProblemInstance& inst,
                                  const Pattern& pattern);

// Pattern consistent with a given beta (h = |beta|, g = g*(|beta|)).
Pattern derive_pattern(const LpccModel& model, const ProblemInstance& inst,
                       const Eigen::VectorXd& beta, double tol = 1e-7);

struct KktReport {
  double stationarity = 0.0;        // max equality-row residual
  double complementarity = 0.0;     // max pair product
  double sign_violation = 0.0;      // most negative multiplier/slack
  double feasibility = 0.0;         // max row residual including feasible-set rows
  double c1 = 0.0;                  // gradient bound at the point
  double max_multiplier = 0.0;      // max over mu blocks and rho
  double a_rho_norm = 0.0;          // ||A rho||_inf including box columns
  bool multiplier_bounds_ok = false;
  double max_residual() const;
};
KktReport verify_kkt(const LpccModel& model, const ProblemInstance& inst,
                     const Eigen::VectorXd& x);

enum class BruteForceMode { Grid, PatternEnum };

SolveResult brute_force_global(const ProblemInstance& inst, BruteForceMode mode);

SolveResult solve_global(const ProblemInstance& inst, const SolveOptions& opts = {});

}  // namespace fcp
