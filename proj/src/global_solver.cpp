#include "fcp/global_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>

#include "fcp/local_solvers.hpp"
#include "fcp/penalty.hpp"

namespace fcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shared per-model machinery: assembled relaxation + bounds application.
class NodeEngine {
 public:
  NodeEngine(const LpccModel& model, bool tight)
      : model_(&model), lp_(assemble_relaxation(model, tight)), solver_(lp_) {}

  const StandardLp& lp() const { return lp_; }
  int beta_start() const { return model_->col_beta; }

  LpSolution solve(const Pattern& pattern, const Basis* warm) {
    Eigen::VectorXd lo = lp_.lower;
    Eigen::VectorXd up = lp_.upper;
    const auto& pairs = model_->pairs;
    for (size_t k = 0; k < pairs.size(); ++k) {
      if (pattern[k] & kPairVarZero) up(pairs[k].phi) = 0.0;
      if (pattern[k] & kPairExprZero) up(pairs[k].delta) = 0.0;
    }
    solver_.set_bounds(lo, up);
    LpSolution sol = warm ? solver_.solve_warm(*warm) : solver_.solve();
    if (sol.status == LpStatus::NumericalFailure && warm) sol = solver_.solve();
    return sol;
  }

 private:
  const LpccModel* model_;
  StandardLp lp_;
  SimplexSolver solver_;
};

struct PairLookup {
  // per instance coordinate: indices into model.pairs, -1 if absent
  std::vector<int> hminus, hplus, glower, gupper, boxup, boxlo;
};

PairLookup build_lookup(const LpccModel& model) {
  PairLookup lk;
  lk.hminus.assign(model.dim, -1);
  lk.hplus.assign(model.dim, -1);
  lk.glower.assign(model.dim, -1);
  lk.gupper.assign(model.dim, -1);
  lk.boxup.assign(model.dim, -1);
  lk.boxlo.assign(model.dim, -1);
  for (size_t k = 0; k < model.pairs.size(); ++k) {
    const auto& pr = model.pairs[k];
    switch (pr.kind) {
      case PairKind::HMinus: lk.hminus[pr.coord] = static_cast<int>(k); break;
      case PairKind::HPlus: lk.hplus[pr.coord] = static_cast<int>(k); break;
      case PairKind::GLower: lk.glower[pr.coord] = static_cast<int>(k); break;
      case PairKind::GUpper: lk.gupper[pr.coord] = static_cast<int>(k); break;
      case PairKind::BoxUpper: lk.boxup[pr.coord] = static_cast<int>(k); break;
      case PairKind::BoxLower: lk.boxlo[pr.coord] = static_cast<int>(k); break;
      default: break;
    }
  }
  return lk;
}

// Logical implications of resolving one pair; sound on the LPCC set.
void propagate(const LpccModel& model, const PairLookup& lk, bool tight, Pattern& pat,
               int pair_idx, std::uint8_t bit) {
  pat[pair_idx] |= bit;
  if (bit != kPairExprZero) return;
  const auto& pr = model.pairs[pair_idx];
  auto add = [&](int k, std::uint8_t b) {
    if (k >= 0) pat[k] |= b;
  };
  switch (pr.kind) {
    case PairKind::GLower:  // g = 0 -> gub - g > 0 -> mu4 = 0
      add(lk.gupper[pr.coord], kPairVarZero);
      break;
    case PairKind::GUpper:  // g = gub > 0 -> mu3 = 0
      add(lk.glower[pr.coord], kPairVarZero);
      break;
    case PairKind::BoxUpper:  // beta = C -> C + beta = 2C > 0
      add(lk.boxlo[pr.coord], kPairVarZero);
      if (tight) {  // h <= C forces h = C: h - beta = 0, h + beta = 2C
        add(lk.hminus[pr.coord], kPairExprZero);
        add(lk.hplus[pr.coord], kPairVarZero);
      }
      break;
    case PairKind::BoxLower:  // beta = -C
      add(lk.boxup[pr.coord], kPairVarZero);
      if (tight) {
        add(lk.hplus[pr.coord], kPairExprZero);
        add(lk.hminus[pr.coord], kPairVarZero);
      }
      break;
    default:
      break;
  }
}

struct Incumbent {
  double loss = kInf;
  Eigen::VectorXd beta;
  Eigen::VectorXd x;  // full LPCC point when available
  bool has_x = false;
};

void offer_beta(Incumbent& inc, const ProblemInstance& inst, const Eigen::VectorXd& beta_raw) {
  Eigen::VectorXd beta = beta_raw;
  for (int i = 0; i < beta.size(); ++i) beta(i) = std::clamp(beta(i), -inst.box_c, inst.box_c);
  if (inst.feasible.m() > 0) {
    Eigen::VectorXd slack = inst.feasible.b - inst.feasible.A.transpose() * beta;
    if (slack.minCoeff() < -1e-9) return;  // not feasible, not a valid bound
  }
  double val = objective_eval(inst, beta);
  if (val < inc.loss) {
    inc.loss = val;
    inc.beta = beta;
    inc.has_x = false;
  }
}

void offer_point(Incumbent& inc, const ProblemInstance& inst, const LpccModel& model,
                 const Eigen::VectorXd& x_full) {
  Eigen::VectorXd beta = x_full.segment(model.col_beta, model.dim);
  double val = objective_eval(inst, beta);
  if (val < inc.loss) {
    inc.loss = val;
    inc.beta = beta;
    inc.x = x_full.head(model.n_cols);
    inc.has_x = true;
  }
}

}  // namespace

PatternLpOutcome solve_pattern_lp(const LpccModel& model, const ProblemInstance& inst,
                                  const Pattern& pattern) {
  if (pattern.size() != model.pairs.size())
    throw std::invalid_argument("solve_pattern_lp: pattern length mismatch");
  for (auto st : pattern)
    if (st == kPairFree)
      throw std::invalid_argument("solve_pattern_lp: pattern must resolve every pair");
  NodeEngine engine(model, true);
  LpSolution sol = engine.solve(pattern, nullptr);
  PatternLpOutcome out;
  out.status = sol.status;
  if (sol.status == LpStatus::Optimal) {
    out.x = sol.x.head(model.n_cols);
    out.beta = out.x.segment(model.col_beta, model.dim);
    out.lp_objective = model.c.dot(out.x);
    out.loss_value = objective_eval(inst, out.beta);
  }
  return out;
}

Pattern derive_pattern(const LpccModel& model, const ProblemInstance& inst,
                       const Eigen::VectorXd& beta, double tol) {
  Pattern pat(model.pairs.size(), kPairFree);
  const double gub = model.penalty.family == PenaltyFamily::Scad
                         ? model.penalty.lambda
                         : model.penalty.a * model.penalty.lambda;
  for (size_t k = 0; k < model.pairs.size(); ++k) {
    const auto& pr = model.pairs[k];
    switch (pr.kind) {
      case PairKind::HMinus:
        pat[k] = beta(pr.coord) >= -tol ? kPairExprZero : kPairVarZero;
        break;
      case PairKind::HPlus:
        pat[k] = beta(pr.coord) <= tol ? kPairExprZero : kPairVarZero;
        break;
      case PairKind::GLower: {
        double g = g_star(std::abs(beta(pr.coord)), model.penalty);
        pat[k] = g <= tol ? kPairExprZero : kPairVarZero;
        break;
      }
      case PairKind::GUpper: {
        double g = g_star(std::abs(beta(pr.coord)), model.penalty);
        pat[k] = g >= gub - tol ? kPairExprZero : kPairVarZero;
        break;
      }
      case PairKind::External: {
        double slack = inst.feasible.b(pr.coord) -
                       inst.feasible.A.col(pr.coord).dot(beta);
        pat[k] = slack <= tol ? kPairExprZero : kPairVarZero;
        break;
      }
      case PairKind::BoxUpper:
        pat[k] = beta(pr.coord) >= model.box_c - tol ? kPairExprZero : kPairVarZero;
        break;
      case PairKind::BoxLower:
        pat[k] = beta(pr.coord) <= -model.box_c + tol ? kPairExprZero : kPairVarZero;
        break;
    }
  }
  return pat;
}

double KktReport::max_residual() const {
  return std::max(std::max(stationarity, complementarity),
                  std::max(sign_violation, feasibility));
}

KktReport verify_kkt(const LpccModel& model, const ProblemInstance& inst,
                     const Eigen::VectorXd& x_in) {
  KktReport rep;
  Eigen::VectorXd x = x_in.head(model.n_cols);
  rep.stationarity = stationarity_residual(model, x);
  Eigen::VectorXd rows = model.E * x - model.f;
  rep.feasibility = rows.size() ? rows.cwiseAbs().maxCoeff() : 0.0;
  rep.complementarity = max_complementarity_product(model, x);
  double neg = 0.0;
  for (int j = model.col_g; j < model.n_cols; ++j) neg = std::min(neg, x(j));
  rep.sign_violation = -neg;

  // gradient bound C1 at the point per the QP form
  Eigen::VectorXd beta = x.segment(model.col_beta, model.dim);
  const double n = model.n_scale, a = model.penalty.a, lam = model.penalty.lambda;
  Eigen::VectorXd grad_b = inst.loss.Q * beta + inst.loss.q;
  double c1 = grad_b.size() ? grad_b.cwiseAbs().maxCoeff() : 0.0;
  for (int k = 0; k < model.p; ++k) {
    double g = x(model.col_g + k), h = x(model.col_h + k);
    double gg, gh;
    if (model.penalty.family == PenaltyFamily::Scad) {
      gg = n * (a - 1.0) * g + n * h - n * a * lam;
      gh = n * g;
    } else {
      gg = (n / a) * g - (n / a) * h;
      gh = n * lam - (n / a) * g;
    }
    c1 = std::max(c1, std::max(std::abs(gg), std::abs(gh)));
  }
  rep.c1 = c1;
  double max_mu = 0.0;
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < model.p; ++k) max_mu = std::max(max_mu, x(model.col_mu[b] + k));
  const int mtot = model.m_ext + 2 * model.dim;
  Eigen::VectorXd rho = x.segment(model.col_rho, mtot);
  for (int j = 0; j < mtot; ++j) max_mu = std::max(max_mu, rho(j));
  rep.max_multiplier = max_mu;
  Eigen::VectorXd a_rho = Eigen::VectorXd::Zero(model.dim);
  if (model.m_ext > 0) a_rho += inst.feasible.A * rho.head(model.m_ext);
  a_rho += rho.segment(model.m_ext, model.dim);
  a_rho -= rho.segment(model.m_ext + model.dim, model.dim);
  rep.a_rho_norm = a_rho.size() ? a_rho.cwiseAbs().maxCoeff() : 0.0;
  double tol = 1e-6 * (1.0 + c1);
  // mu blocks obey C1; ||A rho|| obeys 3 C1
  double max_mu_blocks = 0.0;
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < model.p; ++k)
      max_mu_blocks = std::max(max_mu_blocks, x(model.col_mu[b] + k));
  rep.multiplier_bounds_ok = max_mu_blocks <= c1 + tol && rep.a_rho_norm <= 3.0 * c1 + tol;
  return rep;
}

// ---------------------------------------------------------------------------
// brute force oracles
// ---------------------------------------------------------------------------

namespace {

SolveResult grid_search(const ProblemInstance& inst) {
  const int d = inst.dim();
  if (d > 3) throw std::invalid_argument("brute_force_global: grid mode requires dim <= 3");
  const double C = inst.box_c;
  const int m = inst.feasible.m();
  auto feasible = [&](const Eigen::Vector3d& x) {
    if (m == 0) return true;
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += inst.feasible.A(i, j) * x(i);
      if (acc > inst.feasible.b(j) + 1e-12) return false;
    }
    return true;
  };
  Eigen::VectorXd xe(d);
  auto value = [&](const Eigen::Vector3d& x) {
    for (int i = 0; i < d; ++i) xe(i) = x(i);
    return objective_eval(inst, xe);
  };

  struct Cand {
    Eigen::Vector3d x;
    double val;
  };
  std::vector<Cand> cands;
  const int kTop = 8;
  auto offer = [&](const Eigen::Vector3d& x, double v, double sep) {
    for (auto& c : cands) {
      if ((c.x - x).cwiseAbs().maxCoeff() <= sep) {
        if (v < c.val) { c.val = v; c.x = x; }
        return;
      }
    }
    cands.push_back({x, v});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.val < b.val; });
    if (static_cast<int>(cands.size()) > kTop) cands.resize(kTop);
  };

  const int n0 = 121;
  double step = 2 * C / (n0 - 1);
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int i0 = 0; i0 < n0; ++i0) {
    x(0) = -C + i0 * step;
    for (int i1 = 0; i1 < (d > 1 ? n0 : 1); ++i1) {
      if (d > 1) x(1) = -C + i1 * step;
      for (int i2 = 0; i2 < (d > 2 ? n0 : 1); ++i2) {
        if (d > 2) x(2) = -C + i2 * step;
        if (!feasible(x)) continue;
        offer(x, value(x), 2 * step);
      }
    }
  }
  if (cands.empty()) {
    SolveResult res;
    res.status = SolveStatus::Error;
    res.message = "grid: no feasible point";
    return res;
  }

  const int nr = 41;
  for (int pass = 0; pass < 7; ++pass) {
    double window = 1.5 * step;
    double rstep = 2 * window / (nr - 1);
    for (auto& c : cands) {
      Eigen::Vector3d base = c.x;
      Eigen::Vector3d y = base;
      for (int i0 = 0; i0 < nr; ++i0) {
        y(0) = base(0) - window + i0 * rstep;
        if (std::abs(y(0)) > C) continue;
        for (int i1 = 0; i1 < (d > 1 ? nr : 1); ++i1) {
          if (d > 1) {
            y(1) = base(1) - window + i1 * rstep;
            if (std::abs(y(1)) > C) continue;
          }
          for (int i2 = 0; i2 < (d > 2 ? nr : 1); ++i2) {
            if (d > 2) {
              y(2) = base(2) - window + i2 * rstep;
              if (std::abs(y(2)) > C) continue;
            }
            if (!feasible(y)) continue;
            double v = value(y);
            if (v < c.val) { c.val = v; c.x = y; }
          }
        }
      }
      // snap near-zero coordinates onto the kink and keep if it helps
      Eigen::Vector3d snap = c.x;
      bool snapped = false;
      for (int i = 0; i < d; ++i)
        if (std::abs(snap(i)) < rstep) { snap(i) = 0.0; snapped = true; }
      if (snapped && feasible(snap)) {
        double v = value(snap);
        if (v <= c.val) { c.val = v; c.x = snap; }
      }
    }
    step = rstep;
  }
  auto best = std::min_element(cands.begin(), cands.end(),
                               [](const Cand& a, const Cand& b) { return a.val < b.val; });
  SolveResult res;
  res.beta_hat.resize(d);
  for (int i = 0; i < d; ++i) res.beta_hat(i) = best->x(i);
  res.objective = best->val;
  res.lower_bound = best->val;
  res.gap = 0.0;
  res.status = SolveStatus::Certified;
  return res;
}

SolveResult pattern_enumeration(const ProblemInstance& inst) {
  LpccModel model = build_lpcc(inst);
  const long raw_pairs = 4L * model.p + model.m_ext + 2L * model.dim;
  if (raw_pairs > 22)
    throw std::invalid_argument("brute_force_global: pattern_enum size guard (4p+m+2d > 22)");

  // Groups of jointly consistent assignments.
  struct Group {
    std::vector<std::vector<std::pair<int, std::uint8_t>>> states;
  };
  std::vector<Group> groups;
  PairLookup lk = build_lookup(model);
  for (int k = 0; k < model.p; ++k) {
    int coord = model.pen_idx[k];
    Group grp;
    const std::uint8_t V = kPairVarZero, E = kPairExprZero;
    for (std::uint8_t hm : {V, E})
      for (std::uint8_t hp : {V, E})
        for (int gs = 0; gs < 3; ++gs) {
          std::vector<std::pair<int, std::uint8_t>> st{{lk.hminus[coord], hm},
                                                       {lk.hplus[coord], hp}};
          if (gs == 0) {
            st.push_back({lk.glower[coord], V});
            st.push_back({lk.gupper[coord], V});
          } else if (gs == 1) {
            st.push_back({lk.glower[coord], E});
            st.push_back({lk.gupper[coord], V});
          } else {
            st.push_back({lk.glower[coord], V});
            st.push_back({lk.gupper[coord], E});
          }
          grp.states.push_back(std::move(st));
        }
    groups.push_back(std::move(grp));
  }
  for (int j = 0; j < model.m_ext; ++j) {
    Group grp;
    int pidx = 4 * model.p + j;
    grp.states.push_back({{pidx, kPairVarZero}});
    grp.states.push_back({{pidx, kPairExprZero}});
    groups.push_back(std::move(grp));
  }
  for (int i = 0; i < model.dim; ++i) {
    Group grp;
    int up = lk.boxup[i], lo = lk.boxlo[i];
    grp.states.push_back({{up, kPairVarZero}, {lo, kPairVarZero}});
    grp.states.push_back({{up, kPairExprZero}, {lo, kPairVarZero}});
    grp.states.push_back({{up, kPairVarZero}, {lo, kPairExprZero}});
    groups.push_back(std::move(grp));
  }

  NodeEngine engine(model, true);
  Pattern pat(model.pairs.size(), kPairFree);
  std::vector<size_t> odo(groups.size(), 0);
  Incumbent inc;
  long explored = 0;
  std::optional<Basis> warm;
  while (true) {
    for (size_t gidx = 0; gidx < groups.size(); ++gidx)
      for (auto& [pidx, bit] : groups[gidx].states[odo[gidx]]) pat[pidx] = bit;
    LpSolution sol = warm ? engine.solve(pat, &*warm) : engine.solve(pat, nullptr);
    ++explored;
    if (sol.status == LpStatus::Optimal) {
      warm = sol.basis;
      Eigen::VectorXd x = sol.x;
      offer_point(inc, inst, model, x);
    }
    size_t g = 0;
    while (g < odo.size() && ++odo[g] == groups[g].states.size()) {
      odo[g] = 0;
      ++g;
    }
    if (g == odo.size()) break;
  }
  SolveResult res;
  res.nodes_explored = explored;
  if (!std::isfinite(inc.loss)) {
    res.status = SolveStatus::Error;
    res.message = "pattern enumeration found no feasible pattern";
    return res;
  }
  res.beta_hat = inc.beta;
  res.objective = inc.loss;
  res.lower_bound = inc.loss;
  res.gap = 0.0;
  res.status = SolveStatus::Certified;
  if (inc.has_x) res.multipliers = inc.x;
  return res;
}

}  // namespace

SolveResult brute_force_global(const ProblemInstance& inst, BruteForceMode mode) {
  return mode == BruteForceMode::Grid ? grid_search(inst) : pattern_enumeration(inst);
}

// ---------------------------------------------------------------------------
// branch and bound
// ---------------------------------------------------------------------------

namespace {

struct BnbNode {
  Pattern pattern;
  double lower_bound = -kInf;
  int depth = 0;
  long id = 0;
  std::shared_ptr<Basis> warm;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<BnbNode>& a, const std::shared_ptr<BnbNode>& b) const {
    if (a->lower_bound != b->lower_bound) return a->lower_bound > b->lower_bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->id > b->id;
  }
};

struct BnbShared {
  std::priority_queue<std::shared_ptr<BnbNode>, std::vector<std::shared_ptr<BnbNode>>, NodeOrder> open;
  Incumbent inc;
  double min_pruned_lb = kInf;
  long nodes = 0;
  long next_id = 1;
  int in_flight = 0;
  bool stop = false;
  std::string error;
  std::mutex mu;
  std::condition_variable cv;
};

struct BnbContext {
  const ProblemInstance* inst;
  const LpccModel* model;
  const SolveOptions* opts;
  PairLookup lookup;
  double offset = 0.0;
  Clock::time_point t0;
  double comp_tol = 1e-10;
};

double cutoff_internal(const BnbContext& ctx, double ub_loss) {
  double tol = std::max(ctx.opts->gap_tol_abs,
                        ctx.opts->gap_tol_rel * std::max(1.0, std::abs(ub_loss)));
  return ub_loss - ctx.offset - tol;
}

// Processes one node; expects shared.mu NOT held. Returns children.
void process_node(BnbContext& ctx, NodeEngine& engine, BnbShared& shared,
                  const std::shared_ptr<BnbNode>& node) {
  LpSolution sol = engine.solve(node->pattern, node->warm.get());
  if (sol.status == LpStatus::NumericalFailure) sol = engine.solve(node->pattern, nullptr);

  std::vector<std::shared_ptr<BnbNode>> children;
  double solved_value = kInf;
  bool pruned_by_bound = false;
  double pruned_lb = 0.0;
  Eigen::VectorXd candidate_x;
  bool have_candidate = false;
  Pattern rounding_pattern;
  bool do_rounding = false;

  if (sol.status == LpStatus::Infeasible) {
    if (node->id == 0) {
      std::lock_guard<std::mutex> lock(shared.mu);
      shared.error = "infeasible root relaxation";
    }
  } else if (sol.status != LpStatus::Optimal) {
    // numerical trouble: branch blindly on the first free pair to stay exact
    int pick = -1;
    for (size_t k = 0; k < node->pattern.size(); ++k)
      if (node->pattern[k] == kPairFree) { pick = static_cast<int>(k); break; }
    if (pick < 0) {
      // fully resolved and still failing: give up on this leaf, keep bound
      pruned_by_bound = true;
      pruned_lb = node->lower_bound;
    } else {
      for (std::uint8_t bit : {kPairVarZero, kPairExprZero}) {
        auto child = std::make_shared<BnbNode>();
        child->pattern = node->pattern;
        propagate(*ctx.model, ctx.lookup, ctx.opts->tight_relaxation, child->pattern, pick, bit);
        child->lower_bound = node->lower_bound;
        child->depth = node->depth + 1;
        child->warm = node->warm;
        children.push_back(std::move(child));
      }
    }
  } else {
    double node_lb = std::max(node->lower_bound, sol.objective);
    // find most violated free pair
    int branch_pair = -1;
    double worst = ctx.comp_tol * (1.0 + std::abs(sol.objective));
    for (size_t k = 0; k < ctx.model->pairs.size(); ++k) {
      if (node->pattern[k] != kPairFree) continue;
      const auto& pr = ctx.model->pairs[k];
      double prod = sol.x(pr.phi) * sol.x(pr.delta);
      if (prod > worst) { worst = prod; branch_pair = static_cast<int>(k); }
    }
    if (branch_pair < 0) {
      // complementary relaxation optimum: exact for this node
      candidate_x = sol.x;
      have_candidate = true;
      solved_value = sol.objective;
      pruned_by_bound = true;
      pruned_lb = node_lb;
    } else {
      auto warm = std::make_shared<Basis>(std::move(sol.basis));
      for (std::uint8_t bit : {kPairVarZero, kPairExprZero}) {
        auto child = std::make_shared<BnbNode>();
        child->pattern = node->pattern;
        propagate(*ctx.model, ctx.lookup, ctx.opts->tight_relaxation, child->pattern, branch_pair, bit);
        child->lower_bound = node_lb;
        child->depth = node->depth + 1;
        child->warm = warm;
        children.push_back(std::move(child));
      }
      // pattern rounding: zero the smaller side of each free pair
      if (ctx.opts->rounding_interval > 0 &&
          (node->id % ctx.opts->rounding_interval) == 0) {
        rounding_pattern = node->pattern;
        for (size_t k = 0; k < ctx.model->pairs.size(); ++k) {
          if (rounding_pattern[k] != kPairFree) continue;
          const auto& pr = ctx.model->pairs[k];
          std::uint8_t bit =
              sol.x(pr.phi) <= sol.x(pr.delta) ? kPairVarZero : kPairExprZero;
          propagate(*ctx.model, ctx.lookup, ctx.opts->tight_relaxation, rounding_pattern,
                    static_cast<int>(k), bit);
        }
        do_rounding = true;
      }
    }
  }

  LpSolution rsol;
  bool rsol_ok = false;
  if (do_rounding) {
    rsol = engine.solve(rounding_pattern, node->warm.get());
    rsol_ok = rsol.status == LpStatus::Optimal;
  }

  {
    std::lock_guard<std::mutex> lock(shared.mu);
    ++shared.nodes;
    if (have_candidate) offer_point(shared.inc, *ctx.inst, *ctx.model, candidate_x);
    if (rsol_ok) offer_point(shared.inc, *ctx.inst, *ctx.model, rsol.x);
    double cut = cutoff_internal(ctx, shared.inc.loss);
    if (pruned_by_bound) shared.min_pruned_lb = std::min(shared.min_pruned_lb, pruned_lb);
    for (auto& child : children) {
      if (child->lower_bound >= cut) {
        shared.min_pruned_lb = std::min(shared.min_pruned_lb, child->lower_bound);
        continue;
      }
      child->id = shared.next_id++;
      shared.open.push(child);
    }
    --shared.in_flight;
    shared.cv.notify_all();
  }
}

}  // namespace

SolveResult solve_global(const ProblemInstance& inst, const SolveOptions& opts) {
  SolveResult res;
  Clock::time_point t0 = Clock::now();
  InstanceDiagnostics diag = validate_instance(inst);
  if (!diag.ok) {
    res.status = SolveStatus::Error;
    res.message = "invalid instance: " + (diag.failures.empty() ? "" : diag.failures.front());
    return res;
  }

  LpccModel model = build_lpcc(inst);
  int escalations = 0;
  while (true) {
    BnbContext ctx;
    ctx.inst = &inst;
    ctx.model = &model;
    ctx.opts = &opts;
    ctx.lookup = build_lookup(model);
    ctx.offset = model.offset_to_loss;
    ctx.t0 = t0;

    BnbShared shared;
    // incumbent seeding: feasibility-probe point, then the local solvers
    offer_beta(shared.inc, inst, diag.feasible_point);
    if (opts.seed_local_incumbents && inst.kind == LossKind::LeastSquares &&
        inst.feasible.m() == 0 && inst.penalty.lambda > 0) {
      LocalOptions lopts;
      lopts.init = LocalInit::Lasso;
      lopts.lasso_omega = inst.loss.n * inst.penalty.lambda;
      LocalResult l1 = lla(inst, lopts);
      offer_beta(shared.inc, inst, l1.beta);
      LocalOptions copts;
      copts.init = LocalInit::Zero;
      LocalResult l2 = nonconvex_cd(inst, copts);
      offer_beta(shared.inc, inst, l2.beta);
    }
    if (opts.tight_relaxation && std::isfinite(shared.inc.loss))
      tighten_with_incumbent(model, inst, shared.inc.loss);

    auto root = std::make_shared<BnbNode>();
    root->pattern.assign(model.pairs.size(), kPairFree);
    root->lower_bound = -kInf;
    root->id = 0;
    shared.open.push(root);
    shared.next_id = 1;

    const int workers = std::max(1, opts.threads);
    auto deadline_hit = [&]() {
      return opts.time_limit_s > 0 && seconds_since(t0) > opts.time_limit_s;
    };
    auto node_limit_hit = [&]() {
      return opts.node_limit >= 0 && shared.nodes >= opts.node_limit;
    };

    auto worker = [&]() {
      NodeEngine engine(model, opts.tight_relaxation);
      std::unique_lock<std::mutex> lock(shared.mu);
      while (true) {
        shared.cv.wait(lock, [&] {
          return shared.stop || !shared.open.empty() || shared.in_flight == 0;
        });
        if (shared.stop) return;
        if (shared.open.empty()) {
          if (shared.in_flight == 0) return;
          continue;
        }
        if (deadline_hit() || node_limit_hit()) { shared.stop = true; shared.cv.notify_all(); return; }
        auto node = shared.open.top();
        shared.open.pop();
        double cut = cutoff_internal(ctx, shared.inc.loss);
        if (node->lower_bound >= cut) {
          shared.min_pruned_lb = std::min(shared.min_pruned_lb, node->lower_bound);
          continue;
        }
        ++shared.in_flight;
        lock.unlock();
        process_node(ctx, engine, shared, node);
        lock.lock();
      }
    };

    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    // final bound bookkeeping
    double ub = shared.inc.loss;
    double lb_int = std::min(shared.min_pruned_lb, ub - ctx.offset);
    bool limits = false;
    {
      std::lock_guard<std::mutex> lock(shared.mu);
      while (!shared.open.empty()) {
        lb_int = std::min(lb_int, shared.open.top()->lower_bound);
        limits = true;
        shared.open.pop();
      }
    }
    res.nodes_explored = shared.nodes;
    res.big_m_used = model.big_m;
    res.m_escalations = escalations;
    if (!shared.error.empty()) {
      res.status = SolveStatus::Error;
      res.message = shared.error;
      res.wall_time_s = seconds_since(t0);
      return res;
    }
    if (!std::isfinite(ub)) {
      res.status = SolveStatus::Error;
      res.message = "no feasible incumbent";
      res.wall_time_s = seconds_since(t0);
      return res;
    }
    res.beta_hat = shared.inc.beta;
    res.objective = ub;
    res.lower_bound = lb_int + ctx.offset;
    double tol = std::max(opts.gap_tol_abs, opts.gap_tol_rel * std::max(1.0, std::abs(ub)));
    res.gap = std::max(0.0, ub - res.lower_bound) / std::max(1.0, std::abs(ub));
    bool certified = (ub - res.lower_bound) <= tol + 1e-15;
    if (certified) res.status = SolveStatus::Certified;
    else if (opts.time_limit_s > 0 && seconds_since(t0) > opts.time_limit_s) res.status = SolveStatus::TimeLimit;
    else if (opts.node_limit >= 0 && shared.nodes >= opts.node_limit) res.status = SolveStatus::NodeLimit;
    else res.status = SolveStatus::GapLimit;


    // multipliers at the incumbent: reuse the complementary point or re-solve
    // the incumbent's own pattern
    Eigen::VectorXd x_at;
    bool have_x = shared.inc.has_x;
    if (have_x) {
      x_at = shared.inc.x;
    } else {
      Pattern pat = derive_pattern(model, inst, shared.inc.beta);
      PatternLpOutcome out = solve_pattern_lp(model, inst, pat);
      if (out.status == LpStatus::Optimal) {
        if (out.loss_value <= res.objective + 1e-12) {
          res.beta_hat = out.beta;
          res.objective = std::min(res.objective, out.loss_value);
        }
        x_at = out.x;
        have_x = true;
      }
    }
    if (have_x) {
      res.multipliers = x_at;
      KktReport kkt = verify_kkt(model, inst, x_at);
      res.kkt_residual = kkt.max_residual();
      // big-M saturation audit
      double max_side = 0.0;
      for (const auto& pr : model.pairs)
        max_side = std::max(max_side, std::max(x_at(pr.phi), x_at(pr.delta)));
      if (max_side >= model.big_m * (1.0 - 1e-6) && escalations < opts.max_m_escalations) {
        ++escalations;
        model = build_mip(inst, model.big_m * 10.0).lpcc;
        continue;  // re-solve with the larger constant
      }
    }
    res.box_touched =
        res.beta_hat.size() && res.beta_hat.cwiseAbs().maxCoeff() >= inst.box_c * (1.0 - 1e-7);
    res.wall_time_s = seconds_since(t0);
    return res;
  }
}

}  // namespace fcp
