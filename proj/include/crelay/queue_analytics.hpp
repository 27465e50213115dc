#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "crelay/link_model.hpp"

namespace crelay {

// ---------------------------------------------------------------------------
// PU queue: Bernoulli(lambda) arrivals, per-slot departure probability mu,
// capacity N. Service happens before arrival within a slot, so the chain
// moves 0 -> 1 w.p. lambda and n -> n+1 w.p. lambda (1 - mu) for n >= 1.
// ---------------------------------------------------------------------------

/// Scalar summary of the PU queue steady state; cheap for very large N.
struct PuQueueSummary {
  double gamma = 0.0;  // lambda (1 - mu) / ((1 - lambda) mu)
  double empty = 1.0;  // w_0
  double busy = 0.0;   // 1 - w_0
  double full = 0.0;   // w_N
};

struct PuSteadyState {
  Eigen::VectorXd occupancy;  // w_0 .. w_N
  double busy = 0.0;
  double full = 0.0;
  double gamma = 0.0;
};

/// Throws std::invalid_argument when lambda or mu leave [0, 1] or n_p < 1.
/// mu = 0 with lambda > 0 gives the absorbing-full chain (w_N = 1).
PuQueueSummary pu_queue_summary(double lambda_p, double mu_p, int n_p);

/// Full occupancy distribution. Allocates N+1 doubles.
PuSteadyState pu_steady_state(double lambda_p, double mu_p, int n_p);

/// Smallest departure rate that keeps the full-queue probability at epsilon.
/// Returns 0 when no departures are needed and std::nullopt when even mu = 1
/// leaves the queue full more often than epsilon.
std::optional<double> min_departure_rate(double lambda_p, int n_p, double epsilon);

// ---------------------------------------------------------------------------
// Relay queue.
// ---------------------------------------------------------------------------

/// Access probabilities p_0 .. p_{N_S}; p_0 = 1 always.
class AccessPolicy {
 public:
  /// Throws std::invalid_argument unless probs(0) == 1 and every entry is in
  /// [0, 1].
  explicit AccessPolicy(Eigen::VectorXd probs);

  static AccessPolicy constant(int n_s, double p);
  /// p_n = 1 for n <= threshold, 0 above.
  static AccessPolicy step(int n_s, int threshold);

  const Eigen::VectorXd& probs() const { return probs_; }
  double operator[](int n) const { return probs_(n); }
  int capacity() const { return static_cast<int>(probs_.size()) - 1; }

 private:
  Eigen::VectorXd probs_;
};

/// r(k) is the PU departure probability with k+1 packets in the relay queue:
/// r_n = theta_sd - p_n (theta_sd - theta_sd_shared).
Eigen::VectorXd relay_departure_probs(const AccessPolicy& policy, const LinkBudget& budget);

/// Stationary relay occupancy pi_0 .. pi_N of the birth-death chain with
/// arrival probability q and departure probabilities r (r(k) for state k+1),
/// using the product form
///   pi_1 = q / ((1-q) r_1) pi_0,  pi_{n+1} = q (1 - r_n) / ((1-q) r_{n+1}) pi_n.
///
/// Degenerate chains: if some r_k = 0 the states below the largest such k are
/// transient, so the mass sits on k..N and the product form restarts at k.
/// q >= 1 puts all mass on N.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> relay_occupancy(
    typename Derived::Scalar q, const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using std::log;
  using std::exp;

  const Eigen::Index n_s = r.size();
  if (n_s < 1) throw std::invalid_argument("relay_occupancy: empty departure vector");
  if (!(q >= Scalar(0))) throw std::invalid_argument("relay_occupancy: q must be >= 0");
  for (Eigen::Index k = 0; k < n_s; ++k)
    if (!(r(k) >= Scalar(0) && r(k) <= Scalar(1)))
      throw std::invalid_argument("relay_occupancy: departure probabilities must lie in [0, 1]");

  Vec pi = Vec::Zero(n_s + 1);
  if (q == Scalar(0)) {
    pi(0) = Scalar(1);
    return pi;
  }
  if (q >= Scalar(1)) {
    pi(n_s) = Scalar(1);
    return pi;
  }

  Eigen::Index base = 0;
  for (Eigen::Index n = n_s; n >= 1; --n)
    if (r(n - 1) == Scalar(0)) {
      base = n;
      break;
    }

  // Log-domain product form from `base` upward, then normalize.
  const Scalar log_odds = log(q) - log(Scalar(1) - q);
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  Vec log_u = Vec::Constant(n_s + 1, neg_inf);
  log_u(base) = Scalar(0);
  for (Eigen::Index n = base; n < n_s; ++n) {
    const Scalar stay = (n == 0) ? Scalar(1) : Scalar(1) - r(n - 1);
    log_u(n + 1) = (stay > Scalar(0)) ? log_u(n) + log_odds + log(stay) - log(r(n)) : neg_inf;
  }
  const Scalar peak = log_u.maxCoeff();
  for (Eigen::Index n = 0; n <= n_s; ++n) pi(n) = exp(log_u(n) - peak);
  pi /= pi.sum();
  return pi;
}

struct RelaySteadyState {
  Eigen::VectorXd occupancy;       // pi_0 .. pi_N
  Eigen::VectorXd departure_probs; // r_1 .. r_N
  double arrival_prob = 0.0;       // q
};

RelaySteadyState relay_steady_state(double q, const Eigen::VectorXd& r);

/// Probability a PU packet reaches the relay in a slot: busy * theta_ps * (1 - theta_pd).
double relay_arrival_prob(double pu_busy, const LinkBudget& budget);

/// PU departure rate given the relay is full-and-stuck with probability
/// pi_full (1 - r_full): theta_pd + theta_ps (1 - theta_pd) [1 - pi_full (1 - r_full)].
double pu_departure_from_relay(double pi_full, double r_full, const LinkBudget& budget);

/// SU throughput theta_sr pi_0 + theta_sr_shared sum_{n>=1} pi_n p_n.
double su_throughput(const Eigen::VectorXd& occupancy, const AccessPolicy& policy,
                     const LinkBudget& budget);

// ---------------------------------------------------------------------------
// Self-consistent policy evaluation.
// ---------------------------------------------------------------------------

/// Config plus the quantities every evaluation needs, computed once.
struct SystemModel {
  SystemConfig config;
  LinkBudget budget;
  std::optional<double> mu_p_bar;  // nullopt: no departure rate meets the loss threshold

  /// Validates `config` (std::invalid_argument on failure).
  explicit SystemModel(const SystemConfig& config);
};

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 10000;
  std::optional<double> initial_mu_p;  // default: the largest attainable rate
};

/// Slack applied when comparing an evaluated mu_P against mu_P_bar.
inline constexpr double kFeasibilityTolerance = 1e-9;

struct PolicyEvaluation {
  double mu_p = 0.0;
  double mu_s = 0.0;
  RelaySteadyState relay_state;
  PuQueueSummary pu_state;
  std::optional<double> mu_p_bar;
  bool feasible = false;
  int iterations = 0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double last_mu_p, double residual, int iterations);
  double last_mu_p;
  double residual;
  int iterations;
};

/// Closes the loop mu_P -> PU busy probability -> q -> relay occupancy ->
/// mu_P by damped fixed-point iteration and scores the policy. Throws
/// ConvergenceError when the residual stays above tolerance.
PolicyEvaluation evaluate_policy(const SystemModel& model, const AccessPolicy& policy,
                                 const FixedPointOptions& options = {});
PolicyEvaluation evaluate_policy(const SystemConfig& config, const AccessPolicy& policy);

}  // namespace crelay
