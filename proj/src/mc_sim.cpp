#include "crelay/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crelay {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double SlotRng::uniform(std::uint64_t slot, Draw draw) const {
  const std::uint64_t counter = slot * kDrawsPerSlot + static_cast<std::uint64_t>(draw) + 1;
  const std::uint64_t bits = splitmix64(seed_ + counter * 0x9E3779B97F4A7C15ULL);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Eigen::VectorXd SimStats::relay_distribution() const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(relay_queue_histogram.size()));
  for (std::size_t n = 0; n < relay_queue_histogram.size(); ++n)
    d(static_cast<Eigen::Index>(n)) = ratio(relay_queue_histogram[n], slots);
  return d;
}

SimStats simulate(const SystemConfig& config, const LinkBudget& b, const AccessPolicy& policy,
                  std::uint64_t n_slots, std::uint64_t seed, const SimOptions& options) {
  require_valid(config);
  if (n_slots < 1) throw std::invalid_argument("simulate: n_slots must be >= 1");
  const int n_p = config.pu_queue_capacity;
  const int n_s = config.relay_queue_capacity;
  if (policy.capacity() != n_s) throw std::invalid_argument("simulate: policy size != relay capacity");

  const SlotRng rng(seed);
  SimStats st;
  st.rng_seed = seed;
  st.pu_queue_histogram.assign(static_cast<std::size_t>(n_p) + 1, 0);
  st.relay_queue_histogram.assign(static_cast<std::size_t>(n_s) + 1, 0);

  int pu = 0;
  int relay = 0;
  const std::uint64_t total = options.warmup_slots + n_slots;
  for (std::uint64_t slot = 0; slot < total; ++slot) {
    const bool measure = slot >= options.warmup_slots;
    if (slot == options.warmup_slots) st.pu_queue_at_start = pu;
    auto u = [&](SlotRng::Draw d) { return rng.uniform(slot, d); };

    // Receiving phase.
    if (pu > 0) {
      if (measure) ++st.pu_busy_slots;
      if (u(SlotRng::Direct) < b.theta_pd) {
        --pu;
        if (measure) ++st.pu_delivered_direct;
      } else if (u(SlotRng::ToRelay) < b.theta_ps && relay < n_s) {
        --pu;
        ++relay;
        if (measure) ++st.pu_handed_to_relay;
      }
    }

    const int observed = relay;
    if (measure) ++st.relay_queue_histogram[static_cast<std::size_t>(observed)];

    // Relaying phase.
    bool own_success = false;
    if (observed == 0) {
      own_success = u(SlotRng::OwnTx) < b.theta_sr;
    } else if (u(SlotRng::Access) < policy[observed]) {
      if (u(SlotRng::RelayTx) < b.theta_sd_shared) {
        --relay;
        if (measure) ++st.relay_delivered;
      }
      own_success = u(SlotRng::OwnTx) < b.theta_sr_shared;
    } else if (u(SlotRng::RelayTx) < b.theta_sd) {
      --relay;
      if (measure) ++st.relay_delivered;
    }
    if (measure && own_success) ++st.su_packets_delivered;

    // Arrival after service.
    if (u(SlotRng::Arrival) < config.pu_arrival_rate) {
      if (measure) ++st.pu_arrivals;
      if (pu < n_p)
        ++pu;
      else if (measure)
        ++st.pu_drops;
    }
    if (measure) ++st.pu_queue_histogram[static_cast<std::size_t>(pu)];
  }

  st.slots = n_slots;
  st.pu_queue_at_end = pu;
  st.measured_mu_p = ratio(st.pu_delivered_direct + st.pu_handed_to_relay, st.pu_busy_slots);
  st.measured_mu_s = ratio(st.su_packets_delivered, st.slots);
  st.measured_block_fraction = ratio(st.pu_drops, st.pu_arrivals);
  st.measured_full_fraction = ratio(st.pu_queue_histogram.back(), st.slots);
  return st;
}

SimStats simulate(const SystemConfig& config, const AccessPolicy& policy, std::uint64_t n_slots,
                  std::uint64_t seed, const SimOptions& options) {
  return simulate(config, link_budget(config), policy, n_slots, seed, options);
}

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

double binomial_half_width(double p, std::uint64_t n) {
  if (n == 0) return std::numeric_limits<double>::infinity();
  const double dn = static_cast<double>(n);
  // Floor the variance at 1/n so degenerate proportions keep a nonzero band.
  return 3.0 * std::sqrt(std::max(p * (1.0 - p), 1.0 / dn) / dn);
}

bool SeedComparison::within_bounds() const {
  const bool mu_p_ok = std::isnan(gap_mu_p) || gap_mu_p <= half_width_mu_p;
  return tv_pi <= tv_pi_bound && gap_full <= half_width_full && mu_p_ok &&
         gap_mu_s <= half_width_mu_s;
}

bool ComparisonReport::within_bounds() const {
  return std::all_of(seeds.begin(), seeds.end(), [](const auto& s) { return s.within_bounds(); });
}

double ComparisonReport::max_tv() const {
  double m = 0.0;
  for (const auto& s : seeds) m = std::max(m, s.tv_pi);
  return m;
}

double ComparisonReport::max_gap_mu_s() const {
  double m = 0.0;
  for (const auto& s : seeds) m = std::max(m, s.gap_mu_s);
  return m;
}

ComparisonReport compare(const SystemConfig& config, const AccessPolicy& policy,
                         std::uint64_t n_slots, const std::vector<std::uint64_t>& seeds,
                         const SimOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("compare: need at least one seed");
  const SystemModel model(config);
  ComparisonReport report;
  report.analytic = evaluate_policy(model, policy);
  report.analytic_full = report.analytic.pu_state.full;
  const Eigen::VectorXd& pi = report.analytic.relay_state.occupancy;

  for (std::uint64_t seed : seeds) {
    SeedComparison c;
    c.stats = simulate(config, model.budget, policy, n_slots, seed, options);
    c.tv_pi = total_variation(c.stats.relay_distribution(), pi);
    for (Eigen::Index n = 0; n < pi.size(); ++n)
      c.tv_pi_bound += 0.5 * binomial_half_width(pi(n), c.stats.slots);
    c.gap_full = std::abs(c.stats.measured_full_fraction - report.analytic_full);
    c.half_width_full = binomial_half_width(report.analytic_full, c.stats.slots);
    if (c.stats.pu_busy_slots > 0) {
      c.gap_mu_p = std::abs(c.stats.measured_mu_p - report.analytic.mu_p);
      c.half_width_mu_p = binomial_half_width(report.analytic.mu_p, c.stats.pu_busy_slots);
    } else {
      c.gap_mu_p = std::numeric_limits<double>::quiet_NaN();
      c.half_width_mu_p = std::numeric_limits<double>::infinity();
    }
    c.gap_mu_s = std::abs(c.stats.measured_mu_s - report.analytic.mu_s);
    c.half_width_mu_s = binomial_half_width(report.analytic.mu_s, c.stats.slots);
    report.seeds.push_back(std::move(c));
  }
  return report;
}

}  // namespace crelay
