#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace fcp {

// minimize c'x  subject to  E x = f,  l <= x <= u  (entries of l/u may be infinite).
struct StandardLp {
  Eigen::MatrixXd E;
  Eigen::VectorXd f;
  Eigen::VectorXd c;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int rows() const { return static_cast<int>(E.rows()); }
  int cols() const { return static_cast<int>(E.cols()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

enum class VarStatus : unsigned char { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<int> basic;             // size rows: column basic in each row
  std::vector<VarStatus> status;      // size cols + rows (structural, then artificial)
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  Eigen::VectorXd x;                  // structural variables
  double objective = 0.0;
  Eigen::VectorXd duals;              // y per row
  Eigen::VectorXd reduced_costs;      // per structural column
  Basis basis;
  long iterations = 0;
  int redundant_rows = 0;             // rows whose artificial stayed basic at zero
};

// Dense bounded-variable revised simplex. Cold solves run a composite
// (infeasibility-minimizing) phase 1 from an all-artificial basis; warm solves
// reuse a caller-provided basis and go through the dual simplex when only
// bounds changed since the basis was optimal. Bland's rule engages after
// 5*(rows+cols) degenerate pivots. Deterministic: identical inputs give
// identical pivot sequences.
class SimplexSolver {
 public:
  explicit SimplexSolver(StandardLp lp);

  const StandardLp& lp() const { return lp_; }

  // Replace variable bounds (structural columns only).
  void set_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  void set_objective(const Eigen::VectorXd& c);

  LpSolution solve();
  LpSolution solve_warm(const Basis& warm);

  struct Work;

 private:
  LpSolution run(const Basis* warm);

  StandardLp lp_;
};

// Enumerates all basic solutions of small LPs and returns the best feasible
// objective; test oracle for the simplex itself.
std::optional<double> brute_force_lp_minimum(const StandardLp& lp, double feas_tol = 1e-9);

}  // namespace fcp
