#include "crelay/link_model.hpp"

#include <cmath>
#include <stdexcept>

namespace crelay {

std::string_view link_name(Link link) {
  switch (link) {
    case Link::PD: return "pd";
    case Link::PS: return "ps";
    case Link::SD: return "sd";
    case Link::SR: return "sr";
  }
  return "?";
}

std::vector<ConfigIssue> validate(const SystemConfig& c) {
  std::vector<ConfigIssue> issues;
  auto positive = [&](const std::string& field, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) issues.push_back({field, "must be finite and > 0"});
  };
  auto unit = [&](const std::string& field, double v) {
    if (!(v >= 0.0 && v <= 1.0)) issues.push_back({field, "must lie in [0, 1]"});
  };

  positive("pu_power", c.pu_power);
  positive("su_power", c.su_power);
  positive("slot_duration", c.slot_duration);
  unit("beta", c.beta);
  unit("alpha", c.alpha);
  if (!(c.bits_per_bandwidth >= 0.0) || !std::isfinite(c.bits_per_bandwidth))
    issues.push_back({"bits_per_bandwidth", "must be finite and >= 0"});
  positive("noise_power", c.noise_power);
  if (!(c.path_loss_exponent >= 0.0) || !std::isfinite(c.path_loss_exponent))
    issues.push_back({"path_loss_exponent", "must be finite and >= 0"});
  for (Link l : kAllLinks) {
    positive("distance_" + std::string(link_name(l)), c.distance[l]);
    positive("mean_gain_" + std::string(link_name(l)), c.mean_gain[l]);
  }
  unit("pu_arrival_rate", c.pu_arrival_rate);
  if (c.pu_queue_capacity < 1) issues.push_back({"pu_queue_capacity", "must be >= 1"});
  if (c.relay_queue_capacity < 1) issues.push_back({"relay_queue_capacity", "must be >= 1"});
  if (!(c.loss_threshold > 0.0 && c.loss_threshold < 1.0))
    issues.push_back({"loss_threshold", "must lie in (0, 1)"});
  return issues;
}

void require_valid(const SystemConfig& config) {
  const auto issues = validate(config);
  if (!issues.empty())
    throw std::invalid_argument(issues.front().field + ": " + issues.front().message);
}

double success_probability(const SystemConfig& config, Link link, double tx_duration) {
  if (!(tx_duration > 0.0)) throw std::domain_error("success_probability: tx_duration must be > 0");

  const double power = (link == Link::PD || link == Link::PS) ? config.pu_power : config.su_power;
  const double received =
      power * std::pow(config.distance[link], -config.path_loss_exponent) * config.mean_gain[link];
  const double required_snr = std::exp2(config.bits_per_bandwidth / tx_duration) - 1.0;
  if (!std::isfinite(required_snr)) return 0.0;
  return std::exp(-config.noise_power * required_snr / received);
}

LinkBudget link_budget(const SystemConfig& config) {
  const double t = config.slot_duration;
  const double receive = config.beta * t;
  const double relay = (1.0 - config.beta) * t;
  const double relay_shared = config.alpha * relay;
  const double own_shared = (1.0 - config.alpha) * relay;

  auto theta = [&](Link l, double duration) {
    return duration > 0.0 ? success_probability(config, l, duration) : 0.0;
  };

  LinkBudget b;
  b.theta_pd = theta(Link::PD, receive);
  b.theta_ps = theta(Link::PS, receive);
  b.theta_sd = theta(Link::SD, relay);
  b.theta_sd_shared = theta(Link::SD, relay_shared);
  b.theta_sr = theta(Link::SR, relay);
  b.theta_sr_shared = theta(Link::SR, own_shared);
  return b;
}

}  // namespace crelay
