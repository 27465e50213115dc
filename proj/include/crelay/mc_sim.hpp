#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "crelay/queue_analytics.hpp"

namespace crelay {

/// Counter-based uniform generator. Draw `d` of slot `s` is
/// splitmix64(seed + (s * kDrawsPerSlot + d + 1) * 0x9E3779B97F4A7C15) mapped
/// to [0, 1) with 53 bits, so every slot consumes the same fixed set of draws
/// no matter which protocol branch is taken.
class SlotRng {
 public:
  static constexpr std::uint64_t kDrawsPerSlot = 6;
  enum Draw : std::uint64_t { Direct = 0, ToRelay = 1, Access = 2, RelayTx = 3, OwnTx = 4, Arrival = 5 };

  explicit SlotRng(std::uint64_t seed) : seed_(seed) {}
  double uniform(std::uint64_t slot, Draw draw) const;

 private:
  std::uint64_t seed_;
};

struct SimOptions {
  std::uint64_t warmup_slots = 10000;
};

struct SimStats {
  std::uint64_t slots = 0;  // measured slots, warm-up excluded
  std::uint64_t pu_arrivals = 0;
  std::uint64_t pu_drops = 0;
  std::uint64_t pu_delivered_direct = 0;
  std::uint64_t pu_handed_to_relay = 0;
  std::uint64_t pu_busy_slots = 0;
  std::uint64_t relay_delivered = 0;
  std::uint64_t su_packets_delivered = 0;
  int pu_queue_at_start = 0;  // occupancies when measurement began / ended
  int pu_queue_at_end = 0;
  std::vector<std::uint64_t> pu_queue_histogram;     // end of slot, 0..N_P
  std::vector<std::uint64_t> relay_queue_histogram;  // end of receiving phase, 0..N_S
  double measured_mu_p = 0.0;         // PU departures per busy slot
  double measured_mu_s = 0.0;         // SU deliveries per slot
  double measured_block_fraction = 0.0;  // dropped / arrived
  double measured_full_fraction = 0.0;   // slots ending with Q_P full
  std::uint64_t rng_seed = 0;

  Eigen::VectorXd relay_distribution() const;
  bool operator==(const SimStats&) const = default;
};

/// Slot-level simulation of the two-phase relaying protocol. Per slot:
/// receiving phase (direct delivery, else capture by the relay if Q_S is not
/// full), observation of |Q_S|, relaying phase (SU-only when empty, else time
/// sharing with probability p_n), then a Bernoulli PU arrival that is dropped
/// when Q_P is full. The SU always has a packet of its own. Deterministic in
/// (inputs, seed).
SimStats simulate(const SystemConfig& config, const LinkBudget& budget, const AccessPolicy& policy,
                  std::uint64_t n_slots, std::uint64_t seed, const SimOptions& options = {});
SimStats simulate(const SystemConfig& config, const AccessPolicy& policy, std::uint64_t n_slots,
                  std::uint64_t seed, const SimOptions& options = {});

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// 3-sigma binomial half-width for a proportion p estimated from n trials.
double binomial_half_width(double p, std::uint64_t n);

struct SeedComparison {
  SimStats stats;
  double tv_pi = 0.0;
  double tv_pi_bound = 0.0;
  double gap_full = 0.0;  // |w_N analytic - full fraction|
  double half_width_full = 0.0;
  double gap_mu_p = 0.0;  // NaN when the PU queue was never busy
  double half_width_mu_p = 0.0;
  double gap_mu_s = 0.0;
  double half_width_mu_s = 0.0;

  bool within_bounds() const;
};

struct ComparisonReport {
  PolicyEvaluation analytic;
  double analytic_full = 0.0;
  std::vector<SeedComparison> seeds;

  bool within_bounds() const;
  double max_tv() const;
  double max_gap_mu_s() const;
};

ComparisonReport compare(const SystemConfig& config, const AccessPolicy& policy,
                         std::uint64_t n_slots, const std::vector<std::uint64_t>& seeds,
                         const SimOptions& options = {});

}  // namespace crelay
