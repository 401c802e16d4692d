#include "fcp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fcp/local_solvers.hpp"
#include "fcp/penalty.hpp"
#include "fcp/rng.hpp"

namespace fcp {

namespace {

// AR(1) row: x_1 = z_1, x_i = rho x_{i-1} + sqrt(1-rho^2) z_i.
void fill_ar1_row(Eigen::MatrixXd& X, int row, double rho, const CounterRng& rng,
                  std::uint64_t base, int cols) {
  double w = std::sqrt(1.0 - rho * rho);
  double prev = rng.normal(base);
  X(row, 0) = prev;
  for (int j = 1; j < cols; ++j) {
    prev = rho * prev + w * rng.normal(base + j);
    X(row, j) = prev;
  }
}

}  // namespace

ScenarioData generate_scenario(const Scenario& s) {
  if (s.d < 2 || s.n < 1) throw std::invalid_argument("generate_scenario: bad sizes");
  ScenarioData out;
  switch (s.design) {
    case ScenarioDesign::S4: {
      const int d = s.d, n = s.n;
      CounterRng rx(s.seed, 1), re(s.seed, 2);
      out.beta_true = Eigen::VectorXd::Zero(d);
      out.beta_true(0) = 1.0;
      out.beta_true(1) = 1.0;
      out.X.resize(n, d);
      for (int t = 0; t < n; ++t)
        fill_ar1_row(out.X, t, s.rho, rx, static_cast<std::uint64_t>(t) * (d + 7), d);
      out.y.resize(n);
      for (int t = 0; t < n; ++t)
        out.y(t) = out.X.row(t).dot(out.beta_true) + 0.3 * re.normal(t);
      out.penalized.assign(d, true);
      break;
    }
    case ScenarioDesign::S52: {
      const int d = s.d, n = s.n;
      if (d < 10) throw std::invalid_argument("S52 requires d >= 10");
      CounterRng rt(s.seed, 3), rx(s.seed, 4), re(s.seed, 5);
      Eigen::MatrixXd T(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          T(i, j) = rt.uniform(static_cast<std::uint64_t>(i) * d + j) *
                    std::pow(0.5, std::abs(i - j));
      out.beta_true = Eigen::VectorXd::Zero(d);
      const double signal[10] = {3, 2, 10, 0, 1, 1, 2, 3, 1.6, 6};
      for (int i = 0; i < 10; ++i) out.beta_true(i) = signal[i];
      out.X.resize(n, d);
      Eigen::VectorXd z(d);
      for (int t = 0; t < n; ++t) {
        for (int j = 0; j < d; ++j) z(j) = rx.normal(static_cast<std::uint64_t>(t) * d + j);
        out.X.row(t) = (T.transpose() * z).transpose();  // cov = T'T
      }
      out.y.resize(n);
      for (int t = 0; t < n; ++t)
        out.y(t) = out.X.row(t).dot(out.beta_true) + 1.2 * re.normal(t);
      out.penalized.assign(d, true);
      break;
    }
    case ScenarioDesign::S6: {
      const int d = s.d;  // includes the intercept coordinate
      const int n = s.n;
      const int feat = d - 1;
      if (feat < 5) throw std::invalid_argument("S6 requires d >= 6");
      CounterRng rx(s.seed, 6), re(s.seed, 7), rs(s.seed, 8);
      out.beta_true = Eigen::VectorXd::Zero(d);
      // five random feature coordinates at 1.5; the intercept (last) stays 0
      std::vector<int> pool(feat);
      for (int i = 0; i < feat; ++i) pool[i] = i;
      for (int k = 0; k < 5; ++k) {
        int j = k + static_cast<int>(rs.below(k, feat - k));
        std::swap(pool[k], pool[j]);
        out.beta_true(pool[k]) = 1.5;
      }
      out.X.resize(n, d);
      for (int t = 0; t < n; ++t) {
        fill_ar1_row(out.X, t, 0.5, rx, static_cast<std::uint64_t>(t) * (feat + 3), feat);
        out.X(t, feat) = 1.0;  // intercept column
      }
      out.y.resize(n);
      for (int t = 0; t < n; ++t)
        out.y(t) = out.X.row(t).dot(out.beta_true) + 1.2 * re.normal(t);
      out.penalized.assign(d, true);
      out.penalized[feat] = false;
      break;
    }
  }
  return out;
}

RscResult rsc_random_test(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const PenaltySpec& penalty, int k_test, int reps,
                          std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("rsc_random_test: reps must be >= 1");
  const int d = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  if (k_test < 1 || k_test > d) throw std::invalid_argument("rsc_random_test: bad k_test");
  CounterRng rng(seed, 9);
  RscResult res;
  std::vector<int> dims(k_test);
  Eigen::VectorXd b1(k_test), b2(k_test), bm(k_test);
  Eigen::VectorXd r(n);
  auto loss = [&](const Eigen::VectorXd& coef) {
    r = y;
    for (int k = 0; k < k_test; ++k) r -= coef(k) * X.col(dims[k]);
    double val = 0.5 * r.squaredNorm();
    for (int k = 0; k < k_test; ++k)
      val += n * penalty_value(std::abs(coef(k)), penalty);
    return val;
  };
  for (int rep = 0; rep < reps; ++rep) {
    std::uint64_t base = static_cast<std::uint64_t>(rep) * (4 * k_test + 8);
    // distinct dimensions
    for (int k = 0; k < k_test; ++k) {
      bool fresh = false;
      int guard = 0;
      while (!fresh) {
        dims[k] = static_cast<int>(rng.below(base + k + 97 * guard, d));
        fresh = true;
        for (int j = 0; j < k; ++j)
          if (dims[j] == dims[k]) fresh = false;
        ++guard;
      }
    }
    bool equal = true;
    for (int k = 0; k < k_test; ++k) {
      b1(k) = rng.uniform(base + k_test + 2 * k, -5.0, 5.0);
      b2(k) = rng.uniform(base + k_test + 2 * k + 1, -5.0, 5.0);
      if (b1(k) != b2(k)) equal = false;
    }
    if (equal) continue;  // the proviso: only test b1 != b2
    ++res.evaluated;
    bm = 0.5 * (b1 + b2);
    double lhs = 0.5 * (loss(b1) + loss(b2));
    if (!(lhs > loss(bm))) ++res.violations;
  }
  res.pass = res.violations == 0;
  return res;
}

MetricsReport compute_metrics(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true,
                              double objective, double reference_objective, double time_ms,
                              const Eigen::MatrixXd* X, const Eigen::VectorXd* y) {
  if (beta_hat.size() != beta_true.size())
    throw std::invalid_argument("compute_metrics: dimension mismatch");
  MetricsReport rep;
  rep.ad = (beta_hat - beta_true).lpNorm<1>();
  const double thr = 1e-6;
  for (int i = 0; i < beta_hat.size(); ++i) {
    bool hat_nz = std::abs(beta_hat(i)) > thr;
    bool true_nz = beta_true(i) != 0.0;
    if (hat_nz && !true_nz) ++rep.fp;
    if (!hat_nz && true_nz) ++rep.fn;
  }
  rep.gap_abs = objective - reference_objective;
  rep.gap_pct = objective != 0.0 ? rep.gap_abs / objective * 100.0 : 0.0;
  rep.time_ms = time_ms;
  if (X && y) {
    const double n = static_cast<double>(X->rows());
    double rss = (*y - (*X) * beta_hat).squaredNorm();
    int k_hat = 0;
    for (int i = 0; i < beta_hat.size(); ++i)
      if (std::abs(beta_hat(i)) > thr) ++k_hat;
    double base = n * std::log(std::max(rss, 1e-300) / n);
    rep.aic = base + 2.0 * k_hat;
    rep.bic = base + k_hat * std::log(n);
  }
  return rep;
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                int count, double min_ratio) {
  if (count < 1) throw std::invalid_argument("lambda_grid: empty grid");
  double n = static_cast<double>(X.rows());
  double lam_max = (X.transpose() * y).cwiseAbs().maxCoeff() / n;
  if (!(lam_max > 0)) lam_max = 1.0;
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lam_max;
    return grid;
  }
  double lmin = std::log(lam_max * min_ratio), lmax = std::log(lam_max);
  for (int i = 0; i < count; ++i)
    grid[i] = std::exp(lmax + (lmin - lmax) * i / (count - 1.0));
  return grid;
}

PenaltySpec tune_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        PenaltyFamily family, double a, const std::vector<double>& grid,
                        const std::vector<bool>* penalized_mask) {
  if (grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
  std::vector<double> lams = grid;
  std::sort(lams.begin(), lams.end(), std::greater<double>());
  const double n = static_cast<double>(X.rows());
  const double d = static_cast<double>(X.cols());
  double best_score = std::numeric_limits<double>::infinity();
  double best_lam = lams.front();
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
  for (double lam : lams) {
    PenaltySpec spec{family, lam, a};
    ProblemInstance inst = build_least_squares(X, y, spec, 0.0, penalized_mask);
    LocalOptions opts;
    opts.init = LocalInit::Given;
    opts.given = warm;
    LocalResult fit = nonconvex_cd(inst, opts);
    warm = fit.beta;
    double rss = (y - X * fit.beta).squaredNorm();
    int k_hat = 0;
    for (int i = 0; i < fit.beta.size(); ++i)
      if (std::abs(fit.beta(i)) > 1e-6) ++k_hat;
    // high-dimensional BIC
    double score = std::log(std::max(rss, 1e-300) / n) +
                   k_hat * std::log(std::log(std::max(n, 3.0))) * std::log(std::max(d, 2.0)) / n;
    if (score < best_score - 1e-12) {
      best_score = score;
      best_lam = lam;
    }
  }
  return PenaltySpec{family, best_lam, a};
}

}  // namespace fcp
