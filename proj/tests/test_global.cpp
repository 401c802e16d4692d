#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>

#include "fcp/global_solver.hpp"
#include "fcp/local_solvers.hpp"
#include "fcp/model.hpp"
#include "fcp/reformulate.hpp"
#include "fcp/rng.hpp"

using namespace fcp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
const PenaltySpec kScad{PenaltyFamily::Scad, 1.0, 3.7};
const PenaltySpec kMcp{PenaltyFamily::Mcp, 0.5, 2.0};

ProblemInstance one_dim_ls(double yval, const PenaltySpec& pen, double box = 10.0) {
  MatrixXd X(1, 1);
  X << 1;
  VectorXd y(1);
  y << yval;
  ProblemInstance inst = build_least_squares(X, y, pen, box);
  return inst;
}

// dense 1-D grid oracle, 1e6 points on [-10, 10] plus local refinement
double grid_1d(const ProblemInstance& inst) {
  double best = std::numeric_limits<double>::infinity();
  double best_x = 0.0;
  VectorXd x(1);
  for (int i = 0; i <= 1000000; ++i) {
    x(0) = -10.0 + 20.0 * i / 1000000.0;
    double v = objective_eval(inst, x);
    if (v < best) { best = v; best_x = x(0); }
  }
  for (int i = -1000; i <= 1000; ++i) {
    x(0) = best_x + i * 1e-8;
    double v = objective_eval(inst, x);
    if (v < best) best = v;
  }
  return best;
}
}  // namespace

TEST_CASE("1-D SCAD fixtures against the grid oracle") {
  struct Case { double y, beta, obj; };
  // frozen from the 1e6-point grid oracle (see grid_1d)
  for (auto c : {Case{0.5, 0.0, 0.125}, Case{1.5, 0.5, 1.0}, Case{5.0, 5.0, 2.35}}) {
    ProblemInstance inst = one_dim_ls(c.y, kScad);
    inst.loss.n = 1;
    double oracle = grid_1d(inst);
    CHECK(oracle == doctest::Approx(c.obj).epsilon(1e-6));
    SolveResult res = solve_global(inst);
    REQUIRE(res.status == SolveStatus::Certified);
    CHECK(res.objective == doctest::Approx(c.obj).epsilon(1e-8));
    CHECK(res.beta_hat(0) == doctest::Approx(c.beta).epsilon(1e-6));
    CHECK(res.objective >= res.lower_bound - 1e-9);
    CHECK(res.kkt_residual <= 1e-7);
  }
}

TEST_CASE("brute force modes agree on 1-D instances") {
  for (double yv : {0.5, 1.5, 5.0, -2.3}) {
    for (auto pen : {kScad, kMcp}) {
      ProblemInstance inst = one_dim_ls(yv, pen, 8.0);
      inst.loss.n = 1;
      SolveResult g = brute_force_global(inst, BruteForceMode::Grid);
      SolveResult p = brute_force_global(inst, BruteForceMode::PatternEnum);
      REQUIRE(g.status == SolveStatus::Certified);
      REQUIRE(p.status == SolveStatus::Certified);
      CHECK(g.objective == doctest::Approx(p.objective).epsilon(1e-5));
    }
  }
}

TEST_CASE("convex case lambda=0 matches the least-squares solution") {
  CounterRng rng(9);
  MatrixXd X(4, 2);
  VectorXd y(4);
  for (int i = 0; i < 4; ++i) {
    y(i) = rng.normal(100 + i);
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal(10 * i + j);
  }
  PenaltySpec zero{PenaltyFamily::Scad, 0.0, 3.7};
  ProblemInstance inst = build_least_squares(X, y, zero, 50.0);
  VectorXd ls = least_squares_point(X, y);
  double ls_obj = 0.5 * (y - X * ls).squaredNorm();
  SolveResult res = solve_global(inst);
  REQUIRE(res.status == SolveStatus::Certified);
  CHECK(res.objective == doctest::Approx(ls_obj).epsilon(1e-8));
  SolveResult g = brute_force_global(inst, BruteForceMode::Grid);
  CHECK(g.objective == doctest::Approx(ls_obj).epsilon(1e-4));
}

TEST_CASE("pattern LP preconditions and infeasible patterns") {
  ProblemInstance inst = one_dim_ls(0.5, kScad);
  inst.loss.n = 1;
  LpccModel mdl = build_lpcc(inst);
  Pattern all_free(mdl.pairs.size(), kPairFree);
  CHECK_THROWS(solve_pattern_lp(mdl, inst, all_free));

  // enumerate all resolved patterns: best equals the global optimum and the
  // LPCC objective at optima matches the loss minus the offset
  SolveResult ref = solve_global(inst);
  long feasible = 0, infeasible = 0;
  const int npairs = static_cast<int>(mdl.pairs.size());
  double best = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << npairs); ++mask) {
    Pattern pat(npairs);
    for (int k = 0; k < npairs; ++k)
      pat[k] = (mask >> k) & 1 ? kPairExprZero : kPairVarZero;
    PatternLpOutcome out = solve_pattern_lp(mdl, inst, pat);
    if (out.status == LpStatus::Optimal) {
      ++feasible;
      // the LPCC objective never undershoots the loss; KKT points whose
      // auxiliaries are not at their minimizers overshoot it
      CHECK(out.lp_objective + mdl.offset_to_loss >= out.loss_value - 1e-8);
      // gamma3 and gamma4 are never both strictly positive
      CHECK(out.x(mdl.col_mu[2]) * out.x(mdl.col_mu[3]) <= 1e-10);
      best = std::min(best, out.loss_value);
    } else {
      ++infeasible;
    }
  }
  CHECK(feasible > 0);
  CHECK(infeasible > 0);  // e.g. h-beta=0 and h+beta=0 with beta forced nonzero
  CHECK(best == doctest::Approx(ref.objective).epsilon(1e-7));

  // equality holds at the pattern carrying the optimal beta
  Pattern opt_pat = derive_pattern(mdl, inst, ref.beta_hat);
  PatternLpOutcome opt_out = solve_pattern_lp(mdl, inst, opt_pat);
  REQUIRE(opt_out.status == LpStatus::Optimal);
  CHECK(opt_out.lp_objective + mdl.offset_to_loss ==
        doctest::Approx(opt_out.loss_value).epsilon(1e-8));
  CHECK(opt_out.loss_value == doctest::Approx(ref.objective).epsilon(1e-8));
}

TEST_CASE("verify_kkt at and away from the optimum") {
  ProblemInstance inst = one_dim_ls(1.5, kScad);
  inst.loss.n = 1;
  LpccModel mdl = build_lpcc(inst);
  SolveResult res = solve_global(inst);
  REQUIRE(res.status == SolveStatus::Certified);
  REQUIRE(res.multipliers.size() == mdl.n_cols);
  KktReport rep = verify_kkt(mdl, inst, res.multipliers);
  CHECK(rep.max_residual() <= 1e-7);
  CHECK(rep.multiplier_bounds_ok);

  Eigen::VectorXd x = res.multipliers;
  x(mdl.col_beta) += 0.1;  // perturb beta only
  KktReport bad = verify_kkt(mdl, inst, x);
  CHECK(bad.stationarity > 1e-3);

  // zero instance: beta = 0 with matching multipliers gives residual 0
  ProblemInstance zi = one_dim_ls(0.0, kScad);
  zi.loss.n = 1;
  LpccModel zm = build_lpcc(zi);
  SolveResult zr = solve_global(zi);
  REQUIRE(zr.status == SolveStatus::Certified);
  CHECK(zr.objective == doctest::Approx(0.0));
  KktReport zrep = verify_kkt(zm, zi, zr.multipliers);
  CHECK(zrep.max_residual() <= 1e-9);
}

TEST_CASE("random small suite: solve_global vs brute force") {
  CounterRng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    std::uint64_t base = 100000ull * trial;
    int d = 1 + static_cast<int>(rng.below(base + 1, 3));
    int nobs = 1 + static_cast<int>(rng.below(base + 2, 4));
    MatrixXd X(nobs, d);
    VectorXd y(nobs);
    for (int i = 0; i < nobs; ++i) {
      y(i) = 2.0 * rng.normal(base + 700 + i);
      for (int j = 0; j < d; ++j) X(i, j) = rng.normal(base + 13 * i + j);
    }
    PenaltySpec pen = (trial % 2) ? kMcp : kScad;
    double box = 3.0 + rng.uniform(base + 5, 0.0, 3.0);
    ProblemInstance inst = build_least_squares(X, y, pen, box);
    if (trial % 3 == 0) {
      // one external constraint: sum beta <= b with 0 feasible
      inst.feasible.A = MatrixXd::Ones(d, 1);
      inst.feasible.b = VectorXd::Constant(1, rng.uniform(base + 6, 0.2, 2.0));
      inst.kind = LossKind::Custom;  // keep B&B from assuming unconstrained
    }
    SolveResult bb = solve_global(inst);
    REQUIRE(bb.status == SolveStatus::Certified);
    SolveResult ref = brute_force_global(inst, BruteForceMode::Grid);
    REQUIRE(ref.status == SolveStatus::Certified);
    CHECK(bb.objective <= ref.objective + 1e-6);
    CHECK(bb.objective >= ref.objective - 1e-5);
    // bound sandwich and feasibility
    CHECK(bb.objective >= bb.lower_bound - 1e-9);
    if (inst.feasible.m() > 0) {
      VectorXd slack = inst.feasible.b - inst.feasible.A.transpose() * bb.beta_hat;
      CHECK(slack.minCoeff() >= -1e-9);
    }
    CHECK(bb.beta_hat.cwiseAbs().maxCoeff() <= inst.box_c + 1e-9);
    ++checked;
  }
  CHECK(checked == 24);
}

TEST_CASE("deterministic with fixed seed in single-thread mode") {
  ProblemInstance inst = one_dim_ls(1.5, kScad, 7.0);
  CounterRng rng(3);
  MatrixXd X(3, 2);
  VectorXd y(3);
  for (int i = 0; i < 3; ++i) {
    y(i) = rng.normal(40 + i);
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal(10 * i + j);
  }
  ProblemInstance inst2 = build_least_squares(X, y, kMcp, 6.0);
  for (const ProblemInstance* pi : {&inst, &inst2}) {
    SolveOptions opts;
    opts.threads = 1;
    opts.seed = 42;
    SolveResult a = solve_global(*pi, opts);
    SolveResult b = solve_global(*pi, opts);
    REQUIRE(a.status == b.status);
    CHECK(a.nodes_explored == b.nodes_explored);
    CHECK(std::memcmp(&a.objective, &b.objective, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.lower_bound, &b.lower_bound, sizeof(double)) == 0);
    for (int i = 0; i < a.beta_hat.size(); ++i)
      CHECK(std::memcmp(&a.beta_hat(i), &b.beta_hat(i), sizeof(double)) == 0);
  }
}

TEST_CASE("plain relaxation mode still certifies small instances") {
  ProblemInstance inst = one_dim_ls(1.5, kScad, 6.0);
  inst.loss.n = 1;
  SolveOptions opts;
  opts.tight_relaxation = false;
  SolveResult res = solve_global(inst, opts);
  REQUIRE(res.status == SolveStatus::Certified);
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("finite node counts and limits") {
  CounterRng rng(5);
  MatrixXd X(2, 2);
  VectorXd y(2);
  for (int i = 0; i < 2; ++i) {
    y(i) = rng.normal(60 + i) * 2;
    for (int j = 0; j < 2; ++j) X(i, j) = rng.normal(10 * i + j);
  }
  ProblemInstance inst = build_least_squares(X, y, kScad, 5.0);
  SolveResult res = solve_global(inst);
  REQUIRE(res.status == SolveStatus::Certified);
  long npairs = static_cast<long>(build_lpcc(inst).pairs.size());
  double limit = std::pow(3.0, static_cast<double>(npairs));
  CHECK(static_cast<double>(res.nodes_explored) <= limit);

  SolveOptions tiny;
  tiny.node_limit = 1;
  SolveResult lim = solve_global(inst, tiny);
  CHECK((lim.status == SolveStatus::NodeLimit || lim.status == SolveStatus::Certified));
  CHECK(lim.gap >= 0.0);
}
