#include "crelay/policy_opt.hpp"

#include <cmath>
#include <limits>

namespace crelay {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEmptyStateMass = 1e-12;

std::vector<double> mu_grid(const MuInterval& range, int interior) {
  if (range.upper - range.lower <= 1e-15) return {range.lower};
  std::vector<double> grid;
  const int segments = interior + 1;
  for (int k = 0; k <= segments; ++k)
    grid.push_back(k == segments ? range.upper
                                 : range.lower + (range.upper - range.lower) * k / segments);
  return grid;
}

OptimizationResult infeasible_result(const SystemModel& model, Method method) {
  OptimizationResult res;
  res.method = method;
  res.policy = AccessPolicy::constant(model.config.relay_queue_capacity, 0.0);
  res.evaluation = evaluate_policy(model, res.policy);
  res.swept_mu_p = res.evaluation.mu_p;
  res.mu_s = 0.0;
  res.pu_infeasible = true;
  return res;
}

OptimizationResult finish(const SystemModel& model, Method method, AccessPolicy policy,
                          std::vector<SearchRecord> diagnostics) {
  OptimizationResult res;
  res.method = method;
  res.policy = std::move(policy);
  res.evaluation = evaluate_policy(model, res.policy);
  res.mu_s = res.evaluation.mu_s;
  res.swept_mu_p = res.evaluation.mu_p;
  res.diagnostics = std::move(diagnostics);
  return res;
}

double score(const PolicyEvaluation& ev) { return ev.feasible ? ev.mu_s : kNegInf; }

// Relay quantities with mu_P pinned: q follows from mu_P, not from the policy.
struct PinnedOutcome {
  double departure;
  double mu_s;
};

PinnedOutcome pinned(const SystemModel& model, const AccessPolicy& policy, double q) {
  const Eigen::VectorXd r = relay_departure_probs(policy, model.budget);
  const Eigen::VectorXd pi = relay_occupancy(q, r);
  const int n_s = model.config.relay_queue_capacity;
  return {pu_departure_from_relay(pi(n_s), r(n_s - 1), model.budget),
          su_throughput(pi, policy, model.budget)};
}

double pinned_q(const SystemModel& model, double mu_p) {
  const auto& c = model.config;
  return relay_arrival_prob(pu_queue_summary(c.pu_arrival_rate, mu_p, c.pu_queue_capacity).busy,
                            model.budget);
}

// Largest p in [0, 1] for which `ok(p)` holds, given ok is monotone
// (true then false) and ok(0) holds.
template <typename Ok>
double last_true(Ok&& ok) {
  if (ok(1.0)) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Lp: return "lp";
    case Method::Cpt: return "cpt";
    case Method::St: return "st";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "lp") return Method::Lp;
  if (name == "cpt") return Method::Cpt;
  if (name == "st") return Method::St;
  return std::nullopt;
}

MuInterval feasible_mu_p_range(const SystemModel& model) {
  if (!model.mu_p_bar) return {};
  const LinkBudget& b = model.budget;
  const double relay_gain = b.theta_ps * (1.0 - b.theta_pd);
  return {std::max(*model.mu_p_bar, b.theta_pd + relay_gain * b.theta_sd_shared),
          b.theta_pd + relay_gain};
}

MuInterval attainable_mu_p_range(const SystemModel& model) {
  MuInterval range = feasible_mu_p_range(model);
  if (range.empty()) return range;
  const int n_s = model.config.relay_queue_capacity;
  const double slowest = evaluate_policy(model, AccessPolicy::constant(n_s, 1.0)).mu_p;
  const double fastest = evaluate_policy(model, AccessPolicy::constant(n_s, 0.0)).mu_p;
  range.lower = std::max(range.lower, slowest);
  range.upper = std::min(range.upper, fastest);
  return range;
}

lp::Problem<double> build_lp(const SystemModel& model, double mu_p) {
  const LinkBudget& b = model.budget;
  const int n_s = model.config.relay_queue_capacity;
  const LpLayout at{n_s};
  const double q = pinned_q(model, mu_p);
  const double gap = b.theta_sd - b.theta_sd_shared;
  const double relay_gain = b.theta_ps * (1.0 - b.theta_pd);
  const bool has_mu_row = relay_gain > 0.0;

  auto prob = lp::Problem<double>::with_variables(at.size());
  prob.objective(at.a(0)) = b.theta_sr;
  for (int n = 1; n <= n_s; ++n) prob.objective(at.a(n)) = b.theta_sr_shared;
  prob.upper.setOnes();

  const int eq_rows = 1 + n_s + (has_mu_row ? 1 : 0) + 1;
  prob.eq_matrix = Eigen::MatrixXd::Zero(eq_rows, at.size());
  prob.eq_rhs = Eigen::VectorXd::Zero(eq_rows);
  int row = 0;

  // sum pi = 1
  for (int n = 0; n <= n_s; ++n) prob.eq_matrix(row, at.pi(n)) = 1.0;
  prob.eq_rhs(row++) = 1.0;

  // theta_sd (1-q) pi_1 - q pi_0 = gap (1-q) a_1
  prob.eq_matrix(row, at.pi(1)) = b.theta_sd * (1.0 - q);
  prob.eq_matrix(row, at.pi(0)) = -q;
  prob.eq_matrix(row, at.a(1)) = -gap * (1.0 - q);
  ++row;

  // theta_sd (1-q) pi_{n+1} - q (1-theta_sd) pi_n = gap (1-q) a_{n+1} + q gap a_n
  for (int n = 1; n < n_s; ++n, ++row) {
    prob.eq_matrix(row, at.pi(n + 1)) = b.theta_sd * (1.0 - q);
    prob.eq_matrix(row, at.pi(n)) = -q * (1.0 - b.theta_sd);
    prob.eq_matrix(row, at.a(n + 1)) = -gap * (1.0 - q);
    prob.eq_matrix(row, at.a(n)) = -q * gap;
  }

  // (1-theta_sd) pi_N + gap a_N = 1 - (mu_P - theta_pd) / (theta_ps (1-theta_pd))
  if (has_mu_row) {
    prob.eq_matrix(row, at.pi(n_s)) = 1.0 - b.theta_sd;
    prob.eq_matrix(row, at.a(n_s)) = gap;
    prob.eq_rhs(row++) = 1.0 - (mu_p - b.theta_pd) / relay_gain;
  }

  // a_0 = pi_0
  prob.eq_matrix(row, at.a(0)) = 1.0;
  prob.eq_matrix(row, at.pi(0)) = -1.0;
  ++row;

  // sum a <= 1;  a_n - pi_n <= 0
  prob.ineq_matrix = Eigen::MatrixXd::Zero(1 + n_s, at.size());
  prob.ineq_rhs = Eigen::VectorXd::Zero(1 + n_s);
  for (int n = 0; n <= n_s; ++n) prob.ineq_matrix(0, at.a(n)) = 1.0;
  prob.ineq_rhs(0) = 1.0;
  for (int n = 1; n <= n_s; ++n) {
    prob.ineq_matrix(n, at.a(n)) = 1.0;
    prob.ineq_matrix(n, at.pi(n)) = -1.0;
  }
  return prob;
}

AccessPolicy recover_policy(const Eigen::VectorXd& values, int n_s) {
  const LpLayout at{n_s};
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n_s + 1);
  p(0) = 1.0;
  for (int n = 1; n <= n_s; ++n) {
    const double pi = values(at.pi(n));
    if (pi > kEmptyStateMass) p(n) = std::clamp(values(at.a(n)) / pi, 0.0, 1.0);
  }
  return AccessPolicy(std::move(p));
}

OptimizationResult optimal_policy(const SystemModel& model, const OptimizerOptions& options) {
  const MuInterval range = attainable_mu_p_range(model);
  if (range.empty()) return infeasible_result(model, Method::Lp);

  struct Point {
    double mu;
    lp::Solution<double> sol;
  };
  auto solve_at = [&](double mu) { return Point{mu, lp::solve(build_lp(model, mu))}; };
  auto objective_of = [](const Point& p) {
    return p.sol.status == lp::Status::Optimal ? p.sol.objective_value : kNegInf;
  };

  const std::vector<double> grid = mu_grid(range, options.grid_points);
  std::vector<SearchRecord> diagnostics;
  std::optional<Point> best;
  std::size_t best_index = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Point p = solve_at(grid[k]);
    const double obj = objective_of(p);
    diagnostics.push_back({grid[k], grid[k], obj == kNegInf ? 0.0 : obj, obj != kNegInf});
    // Strict comparison: ties keep the smaller mu_P.
    if (obj != kNegInf && (!best || obj > objective_of(*best))) {
      best = std::move(p);
      best_index = k;
    }
  }
  if (!best) {
    OptimizationResult res = infeasible_result(model, Method::Lp);
    res.diagnostics = std::move(diagnostics);
    return res;
  }

  if (options.refine && grid.size() > 2) {
    const double lo = grid[best_index == 0 ? 0 : best_index - 1];
    const double hi = grid[std::min(best_index + 1, grid.size() - 1)];
    const double mu = golden_section_max([&](double m) { return objective_of(solve_at(m)); }, lo, hi,
                                         1e-12);
    Point p = solve_at(mu);
    const double obj = objective_of(p);
    if (obj != kNegInf && obj > objective_of(*best)) {
      diagnostics.push_back({mu, mu, obj, true});
      best = std::move(p);
    }
  }

  OptimizationResult res =
      finish(model, Method::Lp, recover_policy(best->sol.values, model.config.relay_queue_capacity),
             std::move(diagnostics));
  res.swept_mu_p = best->mu;
  res.lp_objective = best->sol.objective_value;
  return res;
}

OptimizationResult cpt_policy(const SystemModel& model, const OptimizerOptions& options) {
  const int n_s = model.config.relay_queue_capacity;
  std::vector<SearchRecord> diagnostics;

  if (options.mode == SearchMode::MuSweep) {
    const MuInterval range = attainable_mu_p_range(model);
    if (range.empty()) return infeasible_result(model, Method::Cpt);
    double best_obj = kNegInf;
    double best_p = 0.0;
    for (double mu : mu_grid(range, options.grid_points)) {
      const double q = pinned_q(model, mu);
      auto admissible = [&](double p) {
        return pinned(model, AccessPolicy::constant(n_s, p), q).departure >= mu - kFeasibilityTolerance;
      };
      if (!admissible(0.0)) {
        diagnostics.push_back({mu, mu, 0.0, false});
        continue;
      }
      const double p_max = last_true(admissible);
      auto value = [&](double p) { return pinned(model, AccessPolicy::constant(n_s, p), q).mu_s; };
      double p_star = golden_section_max(value, 0.0, p_max);
      for (double p = 0.0; p <= p_max; p += options.cpt_grid_step)
        if (value(p) > value(p_star)) p_star = p;
      if (value(p_max) >= value(p_star)) p_star = p_max;
      const double obj = value(p_star);
      diagnostics.push_back({mu, mu, obj, true});
      if (obj > best_obj) {
        best_obj = obj;
        best_p = p_star;
      }
    }
    if (best_obj == kNegInf) {
      OptimizationResult res = infeasible_result(model, Method::Cpt);
      res.diagnostics = std::move(diagnostics);
      return res;
    }
    return finish(model, Method::Cpt, AccessPolicy::constant(n_s, best_p), std::move(diagnostics));
  }

  auto evaluate = [&](double p) { return evaluate_policy(model, AccessPolicy::constant(n_s, p)); };

  // Safety scan on a uniform grid.
  const int steps = static_cast<int>(std::lround(1.0 / options.cpt_grid_step));
  double grid_best_p = 0.0;
  double grid_best = kNegInf;
  std::vector<double> feasible_values;
  for (int k = 0; k <= steps; ++k) {
    const double p = std::min(1.0, k * options.cpt_grid_step);
    const PolicyEvaluation ev = evaluate(p);
    diagnostics.push_back({p, ev.mu_p, ev.mu_s, ev.feasible});
    if (ev.feasible) feasible_values.push_back(ev.mu_s);
    if (score(ev) > grid_best) {
      grid_best = score(ev);
      grid_best_p = p;
    }
  }
  if (grid_best == kNegInf && !evaluate(0.0).feasible) {
    OptimizationResult res = infeasible_result(model, Method::Cpt);
    res.diagnostics = std::move(diagnostics);
    return res;
  }

  // Interval search on the feasible prefix [0, p_max]; mu_P falls as p grows.
  const double p_max = last_true([&](double p) { return evaluate(p).feasible; });
  auto objective = [&](double p) { return score(evaluate(p)); };
  double p_star = golden_section_max(objective, 0.0, p_max);
  if (objective(p_max) >= objective(p_star)) p_star = p_max;
  if (grid_best > objective(p_star)) p_star = grid_best_p;

  int peaks = 0;
  for (std::size_t k = 0; k < feasible_values.size(); ++k) {
    const bool left = k == 0 || feasible_values[k] > feasible_values[k - 1];
    const bool right = k + 1 == feasible_values.size() || feasible_values[k] >= feasible_values[k + 1];
    if (left && right) ++peaks;
  }

  OptimizationResult res =
      finish(model, Method::Cpt, AccessPolicy::constant(n_s, p_star), std::move(diagnostics));
  res.unimodal = peaks <= 1;
  return res;
}

OptimizationResult st_policy(const SystemModel& model, const OptimizerOptions& options) {
  const int n_s = model.config.relay_queue_capacity;
  std::vector<SearchRecord> diagnostics;
  int best_threshold = -1;
  double best = kNegInf;

  if (options.mode == SearchMode::MuSweep) {
    const MuInterval range = attainable_mu_p_range(model);
    if (range.empty()) return infeasible_result(model, Method::St);
    for (double mu : mu_grid(range, options.grid_points)) {
      const double q = pinned_q(model, mu);
      double point_best = kNegInf;
      for (int th = 0; th <= n_s; ++th) {
        const PinnedOutcome out = pinned(model, AccessPolicy::step(n_s, th), q);
        if (out.departure < mu - kFeasibilityTolerance) continue;
        point_best = std::max(point_best, out.mu_s);
        if (out.mu_s > best) {
          best = out.mu_s;
          best_threshold = th;
        }
      }
      diagnostics.push_back({mu, mu, point_best == kNegInf ? 0.0 : point_best, point_best != kNegInf});
    }
  } else {
    for (int th = 0; th <= n_s; ++th) {
      const PolicyEvaluation ev = evaluate_policy(model, AccessPolicy::step(n_s, th));
      diagnostics.push_back({static_cast<double>(th), ev.mu_p, ev.mu_s, ev.feasible});
      if (score(ev) > best) {
        best = score(ev);
        best_threshold = th;
      }
    }
  }

  if (best_threshold < 0) {
    OptimizationResult res = infeasible_result(model, Method::St);
    res.diagnostics = std::move(diagnostics);
    return res;
  }
  return finish(model, Method::St, AccessPolicy::step(n_s, best_threshold), std::move(diagnostics));
}

OptimizationResult optimize(const SystemModel& model, Method method, const OptimizerOptions& options) {
  switch (method) {
    case Method::Lp: return optimal_policy(model, options);
    case Method::Cpt: return cpt_policy(model, options);
    case Method::St: return st_policy(model, options);
  }
  throw std::invalid_argument("optimize: unknown method");
}

}  // namespace crelay
