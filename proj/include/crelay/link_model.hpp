#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace crelay {

/// Point-to-point links of the relay topology: PU source P, relay S, PU
/// destination D and SU destination R.
enum class Link : std::size_t { PD = 0, PS = 1, SD = 2, SR = 3 };

inline constexpr std::array<Link, 4> kAllLinks{Link::PD, Link::PS, Link::SD, Link::SR};

std::string_view link_name(Link link);

/// Per-link quantity (distance, mean gain) indexed by Link.
template <typename T>
struct LinkTable {
  std::array<T, 4> values{};

  constexpr T& operator[](Link l) { return values[static_cast<std::size_t>(l)]; }
  constexpr const T& operator[](Link l) const { return values[static_cast<std::size_t>(l)]; }
  bool operator==(const LinkTable&) const = default;
};

/// Physical and protocol parameters of the cognitive relay system. All
/// quantities are in linear units; dB inputs are converted when parsed.
struct SystemConfig {
  double pu_power = 0.1;             // W
  double su_power = 0.1;             // W
  double slot_duration = 0.1;        // s
  double beta = 0.5;                 // receiving-phase fraction of the slot
  double alpha = 0.5;                // relaying fraction of the relaying phase when time sharing
  double bits_per_bandwidth = 3e-3;  // B/W
  double noise_power = 1e-5;         // W
  double path_loss_exponent = 2.0;
  LinkTable<double> distance{{200.0, 100.0, 100.0, 100.0}};  // m
  LinkTable<double> mean_gain{{0.1, 0.1, 0.1, 0.1}};         // linear
  double pu_arrival_rate = 0.5;      // packets/slot
  int pu_queue_capacity = 100;
  int relay_queue_capacity = 10;
  double loss_threshold = 0.01;

  bool operator==(const SystemConfig&) const = default;
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

/// Every violated invariant of `config`, empty when valid.
std::vector<ConfigIssue> validate(const SystemConfig& config);

/// Throws std::invalid_argument naming the first offending field.
void require_valid(const SystemConfig& config);

/// Packet success probabilities of the six link/phase combinations.
struct LinkBudget {
  double theta_pd = 0.0;
  double theta_ps = 0.0;
  double theta_sd = 0.0;
  double theta_sd_shared = 0.0;
  double theta_sr = 0.0;
  double theta_sr_shared = 0.0;
};

/// Probability that a packet of B bits sent on `link` over `tx_duration`
/// seconds is decoded under Rayleigh block fading:
///   exp(-N0 (2^{B/(W T)} - 1) / (P r^{-kappa} sigma^2)).
/// P is the PU power for links leaving P and the SU power otherwise. Durations
/// too short for the exponent to stay finite yield 0.
/// Throws std::domain_error when tx_duration <= 0.
double success_probability(const SystemConfig& config, Link link, double tx_duration);

/// Budget with durations beta*T (PD, PS), (1-beta)*T (SD, SR),
/// alpha*(1-beta)*T (shared SD) and (1-alpha)*(1-beta)*T (shared SR).
/// A link whose duration is zero gets probability 0.
LinkBudget link_budget(const SystemConfig& config);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace crelay
