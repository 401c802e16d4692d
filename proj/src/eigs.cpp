#include "fcp/eigs.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace fcp {

Eigen::VectorXd symmetric_eigs(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("symmetric_eigs: matrix not square");
  double scale = M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
  double defect = M.size() ? (M - M.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (defect > 1e-10 * (1.0 + scale))
    throw std::invalid_argument("symmetric_eigs: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_eigs: eigensolver failed");
  return es.eigenvalues();
}

}  // namespace fcp
