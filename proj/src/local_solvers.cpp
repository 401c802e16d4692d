#include "fcp/local_solvers.hpp"

#include <cmath>
#include <stdexcept>

#include "fcp/rng.hpp"

namespace fcp {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void require_ls(const ProblemInstance& inst, const char* who) {
  if (inst.kind != LossKind::LeastSquares || !inst.X || !inst.y)
    throw std::invalid_argument(std::string(who) + ": requires an unconstrained least-squares instance");
}

Eigen::VectorXd initial_point(const ProblemInstance& inst, const LocalOptions& opts) {
  const int d = static_cast<int>(inst.X->cols());
  switch (opts.init) {
    case LocalInit::Zero:
      return Eigen::VectorXd::Zero(d);
    case LocalInit::Given:
      if (opts.given.size() != d) throw std::invalid_argument("init: given point has wrong size");
      return opts.given;
    case LocalInit::Random: {
      CounterRng rng(opts.seed, 0x10ca1);
      Eigen::VectorXd b(d);
      for (int i = 0; i < d; ++i) b(i) = rng.uniform(i, opts.random_lo, opts.random_hi);
      return b;
    }
    case LocalInit::Lasso:
      return lasso_cd(*inst.X, *inst.y, opts.lasso_omega, LocalOptions{});
  }
  return Eigen::VectorXd::Zero(d);
}

// weighted lasso: min 0.5||y-Xb||^2 + sum_i w_i |b_i|
Eigen::VectorXd weighted_lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, Eigen::VectorXd beta,
                                  int max_iter, double tol) {
  const int d = static_cast<int>(X.cols());
  Eigen::VectorXd col_sq(d);
  for (int j = 0; j < d; ++j) col_sq(j) = X.col(j).squaredNorm();
  Eigen::VectorXd resid = y - X * beta;
  for (int it = 0; it < max_iter; ++it) {
    double max_change = 0.0;
    for (int j = 0; j < d; ++j) {
      if (col_sq(j) <= 1e-14) continue;  // zero-variance column: skip
      double rho = X.col(j).dot(resid) + beta(j) * col_sq(j);
      double next = soft_threshold(rho, w(j)) / col_sq(j);
      double change = next - beta(j);
      if (change != 0.0) {
        resid -= change * X.col(j);
        beta(j) = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change <= tol) break;
  }
  return beta;
}

}  // namespace

Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double omega,
                         const LocalOptions& opts) {
  if (omega < 0) throw std::invalid_argument("lasso_cd: omega must be >= 0");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(X.cols(), omega);
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(X.cols());
  return weighted_lasso_cd(X, y, w, beta0, opts.max_inner, opts.tol);
}

double scalar_prox(double c, double step, const PenaltySpec& spec) {
  if (!(step > 0)) throw std::invalid_argument("scalar_prox: step must be positive");
  const double lam = spec.lambda, a = spec.a;
  if (lam == 0.0) return c;
  auto objective = [&](double x) {
    return 0.5 * (x - c) * (x - c) / step + penalty_value(std::abs(x), spec);
  };
  double best_x = 0.0;
  double best_v = objective(0.0);
  auto consider = [&](double x) {
    double v = objective(x);
    if (v < best_v - 1e-15 || (std::abs(v - best_v) <= 1e-15 && std::abs(x) < std::abs(best_x))) {
      best_v = v;
      best_x = x;
    }
  };
  for (int sign = -1; sign <= 1; sign += 2) {
    double cc = sign * c;  // work on the positive axis of sign*x
    if (spec.family == PenaltyFamily::Scad) {
      // piece [0, lam]: P' = lam
      consider(sign * std::clamp(cc - step * lam, 0.0, lam));
      // piece [lam, a lam]: P' = (a lam - x)/(a-1)
      double denom = (a - 1.0) - step;
      if (std::abs(denom) > 1e-14) {
        double x = ((a - 1.0) * cc - step * a * lam) / denom;
        consider(sign * std::clamp(x, lam, a * lam));
      } else {
        consider(sign * lam);
        consider(sign * a * lam);
      }
      // piece [a lam, inf): flat
      consider(sign * std::max(a * lam, cc));
    } else {
      // MCP piece [0, a lam]: P' = lam - x/a
      double denom = a - step;
      if (std::abs(denom) > 1e-14) {
        double x = a * (cc - step * lam) / denom;
        consider(sign * std::clamp(x, 0.0, a * lam));
      } else {
        consider(sign * 0.0);
        consider(sign * a * lam);
      }
      consider(sign * std::max(a * lam, cc));
    }
  }
  return best_x;
}

Eigen::VectorXd least_squares_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.completeOrthogonalDecomposition().solve(y);
}

LocalResult lla(const ProblemInstance& inst, const LocalOptions& opts) {
  require_ls(inst, "lla");
  const Eigen::MatrixXd& X = *inst.X;
  const Eigen::VectorXd& y = *inst.y;
  const int d = static_cast<int>(X.cols());
  const double n = inst.loss.n;
  LocalResult res;
  Eigen::VectorXd beta = initial_point(inst, opts);
  res.objective_trace.push_back(objective_eval(inst, beta));
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    Eigen::VectorXd w(d);
    for (int j = 0; j < d; ++j)
      w(j) = inst.penalized[j] ? n * penalty_deriv(std::abs(beta(j)), inst.penalty) : 0.0;
    Eigen::VectorXd next = weighted_lasso_cd(X, y, w, beta, opts.max_inner, opts.tol);
    double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    res.objective_trace.push_back(objective_eval(inst, beta));
    res.iterations = outer + 1;
    if (change <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.beta = beta;
  return res;
}

LocalResult nonconvex_cd(const ProblemInstance& inst, const LocalOptions& opts) {
  require_ls(inst, "nonconvex_cd");
  const Eigen::MatrixXd& X = *inst.X;
  const Eigen::VectorXd& y = *inst.y;
  const int d = static_cast<int>(X.cols());
  const double n = inst.loss.n;
  LocalResult res;
  Eigen::VectorXd beta = initial_point(inst, opts);
  Eigen::VectorXd col_sq(d);
  for (int j = 0; j < d; ++j) col_sq(j) = X.col(j).squaredNorm();
  Eigen::VectorXd resid = y - X * beta;
  res.objective_trace.push_back(objective_eval(inst, beta));
  for (int cycle = 0; cycle < opts.max_outer; ++cycle) {
    double max_change = 0.0;
    for (int j = 0; j < d; ++j) {
      if (col_sq(j) <= 1e-14) continue;
      double cj = X.col(j).dot(resid) + beta(j) * col_sq(j);
      double next;
      if (inst.penalized[j]) {
        // 0.5 s (x - c/s)^2 + n P(|x|) == n [ (x - c/s)^2 s/(2n) + P(|x|) ]
        next = scalar_prox(cj / col_sq(j), n / col_sq(j), inst.penalty);
      } else {
        next = cj / col_sq(j);
      }
      double change = next - beta(j);
      if (change != 0.0) {
        resid -= change * X.col(j);
        beta(j) = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    res.objective_trace.push_back(objective_eval(inst, beta));
    res.iterations = cycle + 1;
    if (max_change <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.beta = beta;
  return res;
}

LocalResult proximal_gradient(const ProblemInstance& inst, const LocalOptions& opts) {
  require_ls(inst, "proximal_gradient");
  const Eigen::MatrixXd& X = *inst.X;
  const Eigen::VectorXd& y = *inst.y;
  const int d = static_cast<int>(X.cols());
  const double n = inst.loss.n;
  LocalResult res;
  Eigen::VectorXd beta = initial_point(inst, opts);
  double lip = inst.loss.Q.operatorNorm();
  double step = lip > 0 ? 1.0 / lip : 1.0;
  double fcur = objective_eval(inst, beta);
  res.objective_trace.push_back(fcur);
  for (int it = 0; it < 20 * opts.max_outer; ++it) {
    Eigen::VectorXd grad = inst.loss.Q * beta + inst.loss.q;  // X'(X beta - y)
    double t = step;
    Eigen::VectorXd next;
    double fnext = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      next.resize(d);
      for (int j = 0; j < d; ++j) {
        double c = beta(j) - t * grad(j);
        next(j) = inst.penalized[j] ? scalar_prox(c, n * t, inst.penalty) : c;
      }
      fnext = objective_eval(inst, next);
      if (fnext <= fcur + 1e-12) break;
      t *= 0.5;
    }
    double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    fcur = fnext;
    res.objective_trace.push_back(fcur);
    res.iterations = it + 1;
    if (change <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.beta = beta;
  return res;
}

}  // namespace fcp
