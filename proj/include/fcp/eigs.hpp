#pragma once

#include <Eigen/Dense>

namespace fcp {

// Full spectrum of a symmetric matrix, ascending. Rejects matrices whose
// symmetry defect exceeds 1e-10 relative.
Eigen::VectorXd symmetric_eigs(const Eigen::MatrixXd& M);

}  // namespace fcp
