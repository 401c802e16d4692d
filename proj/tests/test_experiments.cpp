#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "fcp/experiments.hpp"
#include "fcp/model.hpp"
#include "fcp/rng.hpp"

using namespace fcp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("scenario generators: supports, determinism, shapes") {
  Scenario s4{ScenarioDesign::S4, 100, 20, 0.5, 7};
  ScenarioData d4 = generate_scenario(s4);
  CHECK(d4.X.rows() == 20);
  CHECK(d4.X.cols() == 100);
  int nnz = 0;
  for (int i = 0; i < 100; ++i)
    if (d4.beta_true(i) != 0.0) ++nnz;
  CHECK(nnz == 2);
  CHECK(d4.beta_true(0) == 1.0);
  CHECK(d4.beta_true(1) == 1.0);

  Scenario s52{ScenarioDesign::S52, 20, 10, 0.5, 3};
  ScenarioData d52 = generate_scenario(s52);
  CHECK(d52.beta_true.head(10).sum() == doctest::Approx(3 + 2 + 10 + 0 + 1 + 1 + 2 + 3 + 1.6 + 6));
  CHECK(d52.beta_true.tail(10).cwiseAbs().sum() == 0.0);

  Scenario s6{ScenarioDesign::S6, 101, 80, 0.5, 11};
  ScenarioData d6 = generate_scenario(s6);
  int sig = 0;
  for (int i = 0; i < 100; ++i)
    if (d6.beta_true(i) != 0.0) {
      CHECK(d6.beta_true(i) == 1.5);
      ++sig;
    }
  CHECK(sig == 5);
  CHECK(d6.beta_true(100) == 0.0);      // intercept
  CHECK_FALSE(d6.penalized[100]);
  for (int t = 0; t < 80; ++t) CHECK(d6.X(t, 100) == 1.0);

  // bitwise reproducibility
  ScenarioData again = generate_scenario(s6);
  CHECK(std::memcmp(d6.X.data(), again.X.data(), sizeof(double) * d6.X.size()) == 0);
  CHECK(std::memcmp(d6.y.data(), again.y.data(), sizeof(double) * d6.y.size()) == 0);
}

TEST_CASE("rsc test: convex pass, nonconvex failure, proviso") {
  // lambda = 0 and a design whose 2-D restrictions are strictly convex
  MatrixXd X = MatrixXd::Identity(6, 6);
  VectorXd y = VectorXd::Ones(6);
  PenaltySpec zero{PenaltyFamily::Scad, 0.0, 3.7};
  RscResult ok = rsc_random_test(X, y, zero, 2, 2000, 5);
  CHECK(ok.pass);
  CHECK(ok.violations == 0);
  CHECK(ok.evaluated > 0);

  // small n, correlated design, SCAD lambda=0.2: expected to fail
  Scenario s4{ScenarioDesign::S4, 100, 20, 0.5, 19};
  ScenarioData d4 = generate_scenario(s4);
  PenaltySpec scad{PenaltyFamily::Scad, 0.2, 3.7};
  RscResult bad = rsc_random_test(d4.X, d4.y, scad, 2, 10000, 19);
  CHECK_FALSE(bad.pass);
  CHECK(bad.violations >= 1);
  // skipped draws are never counted as violations
  CHECK(bad.evaluated <= 10000);
}

TEST_CASE("rsc pass rate improves with n and degrades with rho") {
  PenaltySpec scad{PenaltyFamily::Scad, 0.2, 3.7};
  auto pass_rate = [&](double rho, int n) {
    int pass = 0;
    for (int inst = 0; inst < 30; ++inst) {
      Scenario s{ScenarioDesign::S4, 60, n, rho, 1000ull + inst};
      ScenarioData d = generate_scenario(s);
      RscResult r = rsc_random_test(d.X, d.y, scad, 2, 800, 77ull + inst);
      if (r.pass) ++pass;
    }
    return pass;
  };
  int p_low_n = pass_rate(0.5, 20);
  int p_high_n = pass_rate(0.5, 35);
  CHECK(p_high_n >= p_low_n);
}

TEST_CASE("compute_metrics") {
  VectorXd truth(5), hat(5);
  truth << 1.5, 1.5, 0, 0, 0;
  hat = truth;
  MetricsReport same = compute_metrics(hat, truth, 1.0, 1.0, 3.0);
  CHECK(same.ad == 0.0);
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.gap_pct == 0.0);

  VectorXd truth2 = VectorXd::Zero(8);
  for (int i = 0; i < 5; ++i) truth2(i) = 1.5;
  VectorXd zero = VectorXd::Zero(8);
  MetricsReport miss = compute_metrics(zero, truth2, 2.0, 1.0, 0.0);
  CHECK(miss.ad == doctest::Approx(7.5));
  CHECK(miss.fn == 5);
  CHECK(miss.fp == 0);

  MetricsReport gap = compute_metrics(zero, truth2, 0.900, 0.539, 0.0);
  CHECK(gap.gap_pct == doctest::Approx(40.1111).epsilon(1e-3));

  // AIC/BIC from data
  MatrixXd X = MatrixXd::Identity(4, 4);
  VectorXd y(4);
  y << 1, 2, 3, 4;
  VectorXd bh(4);
  bh << 1, 2, 0, 0;
  MetricsReport ab = compute_metrics(bh, y, 0, 0, 0, &X, &y);
  double rss = 9.0 + 16.0;
  CHECK(ab.aic == doctest::Approx(4 * std::log(rss / 4) + 2 * 2));
  CHECK(ab.bic == doctest::Approx(4 * std::log(rss / 4) + 2 * std::log(4.0)));
}

TEST_CASE("tune_lambda selects sparse fits") {
  // single-candidate grid returns that candidate
  MatrixXd X = MatrixXd::Identity(4, 4);
  VectorXd y(4);
  y << 3, 0, 0, 0;
  PenaltySpec one = tune_lambda(X, y, PenaltyFamily::Mcp, 2.0, {0.7});
  CHECK(one.lambda == doctest::Approx(0.7));
  CHECK_THROWS(tune_lambda(X, y, PenaltyFamily::Mcp, 2.0, {}));

  // pure-noise response: selected support is empty most of the time
  int zero_support = 0;
  for (int trial = 0; trial < 20; ++trial) {
    CounterRng rng(4000ull + trial);
    MatrixXd Xr(40, 12);
    VectorXd yr(40);
    for (int i = 0; i < 40; ++i) {
      yr(i) = rng.normal(9000 + i);
      for (int j = 0; j < 12; ++j) Xr(i, j) = rng.normal(13 * i + j);
    }
    PenaltySpec pick = tune_lambda(Xr, yr, PenaltyFamily::Mcp, 2.0, lambda_grid(Xr, yr, 15));
    ProblemInstance inst = build_least_squares(Xr, yr, pick);
    LocalOptions lo;
    LocalResult fit = nonconvex_cd(inst, lo);
    int k = 0;
    for (int j = 0; j < 12; ++j)
      if (std::abs(fit.beta(j)) > 1e-6) ++k;
    if (k == 0) ++zero_support;
  }
  CHECK(zero_support >= 19);  // >= 95% of trials

  // signal recovery: FN = 0 under the tuned lambda on S6-style data
  int fn_zero = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Scenario s{ScenarioDesign::S6, 21, 60, 0.5, 500ull + trial};
    ScenarioData d = generate_scenario(s);
    PenaltySpec pick = tune_lambda(d.X, d.y, PenaltyFamily::Mcp, 2.0,
                                   lambda_grid(d.X, d.y, 15), &d.penalized);
    ProblemInstance inst = build_least_squares(d.X, d.y, pick, 0.0, &d.penalized);
    LocalResult fit = nonconvex_cd(inst, {});
    MetricsReport m = compute_metrics(fit.beta, d.beta_true, 0, 0, 0);
    if (m.fn == 0) ++fn_zero;
  }
  CHECK(fn_zero >= 9);
}
