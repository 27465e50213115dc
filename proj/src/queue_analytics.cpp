#include "crelay/queue_analytics.hpp"

#include <cmath>
#include <string>

namespace crelay {

namespace {

constexpr double kUnitGammaBand = 1e-9;

void check_pu_args(double lambda_p, double mu_p, int n_p) {
  if (!(lambda_p >= 0.0 && lambda_p <= 1.0))
    throw std::invalid_argument("PU queue: lambda_p must lie in [0, 1]");
  if (!(mu_p >= 0.0 && mu_p <= 1.0)) throw std::invalid_argument("PU queue: mu_p must lie in [0, 1]");
  if (n_p < 1) throw std::invalid_argument("PU queue: capacity must be >= 1");
}

PuQueueSummary summary_from(double gamma, double empty, double full) {
  return {gamma, empty, 1.0 - empty, full};
}

}  // namespace

PuQueueSummary pu_queue_summary(double lambda_p, double mu_p, int n_p) {
  check_pu_args(lambda_p, mu_p, n_p);
  const double inf = std::numeric_limits<double>::infinity();

  if (lambda_p == 0.0) return summary_from(0.0, 1.0, 0.0);
  if (mu_p == 0.0) return summary_from(inf, 0.0, 1.0);
  if (lambda_p == 1.0) {
    // Never empties again. With mu = 1 the queue sits at one packet forever.
    if (mu_p == 1.0) return summary_from(0.0, 0.0, n_p == 1 ? 1.0 : 0.0);
    return summary_from(inf, 0.0, 1.0);
  }

  const double n = static_cast<double>(n_p);
  // w_1 / w_0 and 1 - gamma, the latter formed without cancellation.
  const double first_step = lambda_p / ((1.0 - lambda_p) * mu_p);
  const double one_minus_gamma = (mu_p - lambda_p) / ((1.0 - lambda_p) * mu_p);
  const double gamma = 1.0 - one_minus_gamma;

  if (std::abs(one_minus_gamma) < kUnitGammaBand) {
    const double empty = (1.0 - mu_p) / (n + 1.0 - mu_p);
    return summary_from(gamma, empty, 1.0 / (n + 1.0 - mu_p));
  }

  if (gamma < 1.0) {
    // sum_{k<N} gamma^k; gamma = 0 contributes only the k = 0 term.
    double geometric = 1.0;
    double tail = (n_p == 1) ? 1.0 : 0.0;  // gamma^{N-1}
    if (gamma > 0.0) {
      const double log_gamma = std::log1p(-one_minus_gamma);
      geometric = -std::expm1(n * log_gamma) / one_minus_gamma;
      tail = std::exp((n - 1.0) * log_gamma);
    }
    const double empty = 1.0 / (1.0 + first_step * geometric);
    return summary_from(gamma, empty, first_step * tail * empty);
  }

  // gamma > 1: normalize against w_N to avoid overflow of gamma^N.
  const double log_inv = -std::log(gamma);
  const double inv = std::exp(log_inv);
  const double geometric = -std::expm1(n * log_inv) / (1.0 - inv);  // sum_{j<N} gamma^{-j}
  const double empty_over_full = std::exp((n - 1.0) * log_inv) / first_step;
  const double full = 1.0 / (geometric + empty_over_full);
  return summary_from(gamma, full * empty_over_full, full);
}

PuSteadyState pu_steady_state(double lambda_p, double mu_p, int n_p) {
  const PuQueueSummary s = pu_queue_summary(lambda_p, mu_p, n_p);
  PuSteadyState out;
  out.gamma = s.gamma;
  out.busy = s.busy;
  out.full = s.full;
  out.occupancy = Eigen::VectorXd::Zero(n_p + 1);
  auto& w = out.occupancy;

  w(0) = s.empty;
  if (s.busy == 0.0) return out;
  if (s.empty == 0.0) {
    // lambda = 1 or mu = 0: mass on the absorbing state.
    if (s.full > 0.0)
      w(n_p) = 1.0;
    else
      w(1) = 1.0;
    return out;
  }

  if (std::abs(1.0 - s.gamma) < kUnitGammaBand) {
    for (int k = 1; k <= n_p; ++k) w(k) = s.full;
  } else if (s.gamma < 1.0) {
    w(1) = s.empty * lambda_p / ((1.0 - lambda_p) * mu_p);
    for (int k = 1; k < n_p; ++k) w(k + 1) = w(k) * s.gamma;
    w(n_p) = s.full;
  } else {
    w(n_p) = s.full;
    const double inv = 1.0 / s.gamma;
    for (int k = n_p; k > 1; --k) w(k - 1) = w(k) * inv;
  }
  return out;
}

std::optional<double> min_departure_rate(double lambda_p, int n_p, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("min_departure_rate: epsilon must lie in (0, 1)");
  check_pu_args(lambda_p, 1.0, n_p);
  if (lambda_p == 0.0) return 0.0;

  auto blocking = [&](double mu) { return pu_queue_summary(lambda_p, mu, n_p).full; };

  double lo = 1e-9;
  double hi = 1.0;
  if (blocking(lo) <= epsilon) return 0.0;
  if (blocking(hi) > epsilon) return std::nullopt;

  // Blocking decreases in mu: keep blocking(lo) > epsilon >= blocking(hi).
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double b = blocking(mid);
    if (std::abs(b - epsilon) <= 1e-13) return mid;
    if (b > epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

AccessPolicy::AccessPolicy(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw std::invalid_argument("AccessPolicy: need p_0 and at least p_1");
  if (probs_(0) != 1.0) throw std::invalid_argument("AccessPolicy: p_0 must equal 1");
  for (Eigen::Index n = 1; n < probs_.size(); ++n)
    if (!(probs_(n) >= 0.0 && probs_(n) <= 1.0))
      throw std::invalid_argument("AccessPolicy: p_" + std::to_string(n) + " outside [0, 1]");
}

AccessPolicy AccessPolicy::constant(int n_s, double p) {
  Eigen::VectorXd probs = Eigen::VectorXd::Constant(n_s + 1, p);
  probs(0) = 1.0;
  return AccessPolicy(std::move(probs));
}

AccessPolicy AccessPolicy::step(int n_s, int threshold) {
  Eigen::VectorXd probs(n_s + 1);
  for (int n = 0; n <= n_s; ++n) probs(n) = n <= threshold ? 1.0 : 0.0;
  return AccessPolicy(std::move(probs));
}

Eigen::VectorXd relay_departure_probs(const AccessPolicy& policy, const LinkBudget& budget) {
  const double gap = budget.theta_sd - budget.theta_sd_shared;
  return (budget.theta_sd - gap * policy.probs().tail(policy.capacity()).array()).matrix();
}

RelaySteadyState relay_steady_state(double q, const Eigen::VectorXd& r) {
  return {relay_occupancy(q, r), r, q};
}

double relay_arrival_prob(double pu_busy, const LinkBudget& budget) {
  return pu_busy * budget.theta_ps * (1.0 - budget.theta_pd);
}

double pu_departure_from_relay(double pi_full, double r_full, const LinkBudget& budget) {
  return budget.theta_pd +
         budget.theta_ps * (1.0 - budget.theta_pd) * (1.0 - pi_full * (1.0 - r_full));
}

double su_throughput(const Eigen::VectorXd& occupancy, const AccessPolicy& policy,
                     const LinkBudget& budget) {
  const Eigen::Index n_s = occupancy.size() - 1;
  return budget.theta_sr * occupancy(0) +
         budget.theta_sr_shared * occupancy.tail(n_s).dot(policy.probs().tail(n_s));
}

SystemModel::SystemModel(const SystemConfig& cfg) : config(cfg) {
  require_valid(config);
  budget = link_budget(config);
  mu_p_bar = min_departure_rate(config.pu_arrival_rate, config.pu_queue_capacity,
                                config.loss_threshold);
}

ConvergenceError::ConvergenceError(double mu, double res, int its)
    : std::runtime_error("evaluate_policy: fixed point did not converge (mu_p=" +
                         std::to_string(mu) + ", residual=" + std::to_string(res) + ")"),
      last_mu_p(mu),
      residual(res),
      iterations(its) {}

PolicyEvaluation evaluate_policy(const SystemModel& model, const AccessPolicy& policy,
                                 const FixedPointOptions& options) {
  const SystemConfig& cfg = model.config;
  const LinkBudget& b = model.budget;
  if (policy.capacity() != cfg.relay_queue_capacity)
    throw std::invalid_argument("evaluate_policy: policy size does not match relay capacity");

  const Eigen::VectorXd r = relay_departure_probs(policy, b);
  const double r_full = r(r.size() - 1);
  const double top = b.theta_pd + b.theta_ps * (1.0 - b.theta_pd);

  PolicyEvaluation ev;
  auto departure = [&](double mu) {
    ev.pu_state = pu_queue_summary(cfg.pu_arrival_rate, mu, cfg.pu_queue_capacity);
    const double q = relay_arrival_prob(ev.pu_state.busy, b);
    ev.relay_state.occupancy = relay_occupancy(q, r);
    ev.relay_state.arrival_prob = q;
    return pu_departure_from_relay(ev.relay_state.occupancy(cfg.relay_queue_capacity), r_full, b);
  };

  double mu = std::clamp(options.initial_mu_p.value_or(top), 0.0, 1.0);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double next = departure(mu);
    residual = std::abs(next - mu);
    if (residual <= options.tolerance) {
      mu = next;
      break;
    }
    mu = std::clamp((1.0 - options.damping) * next + options.damping * mu, 0.0, 1.0);
  }
  if (residual > options.tolerance) throw ConvergenceError(mu, residual, it);

  // Re-derive the state at the accepted rate so every field is consistent.
  departure(mu);
  ev.mu_p = mu;
  ev.iterations = it + 1;
  ev.relay_state.departure_probs = r;
  ev.mu_s = su_throughput(ev.relay_state.occupancy, policy, b);
  ev.mu_p_bar = model.mu_p_bar;
  ev.feasible = model.mu_p_bar.has_value() && mu >= *model.mu_p_bar - kFeasibilityTolerance;
  return ev;
}

PolicyEvaluation evaluate_policy(const SystemConfig& config, const AccessPolicy& policy) {
  return evaluate_policy(SystemModel(config), policy);
}

}  // namespace crelay
