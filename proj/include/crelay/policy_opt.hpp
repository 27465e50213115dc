#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "crelay/lp.hpp"
#include "crelay/queue_analytics.hpp"

namespace crelay {

enum class Method { Lp, Cpt, St };

std::string_view method_name(Method m);
/// Parses "lp", "cpt" or "st"; std::nullopt otherwise.
std::optional<Method> parse_method(std::string_view name);

/// How the suboptimal searches score a candidate policy.
enum class SearchMode {
  FixedPoint,  // self-consistent evaluate_policy
  MuSweep,     // pin mu_P on the feasible grid, require the relay-limited departure rate >= mu_P there
};

struct MuInterval {
  double lower = 1.0;
  double upper = 0.0;
  bool empty() const { return lower > upper; }
};

/// [max(mu_P_bar, theta_pd + theta_ps theta_sd_shared (1 - theta_pd)),
///  theta_pd + theta_ps (1 - theta_pd)], empty when mu_P_bar is unattainable
/// or exceeds the upper end.
MuInterval feasible_mu_p_range(const SystemModel& model);

/// The part of feasible_mu_p_range the LP can actually reach: a fixed mu_P
/// admits a policy only between the self-consistent rates of the all-ones and
/// all-zeros policies, so the sweep runs over
/// [max(lower, mu_P(all ones)), min(upper, mu_P(all zeros))].
MuInterval attainable_mu_p_range(const SystemModel& model);

/// Variable layout of the linearized problem at a fixed mu_P.
struct LpLayout {
  int n_s = 0;
  int pi(int n) const { return n; }
  int a(int n) const { return n_s + 1 + n; }
  int size() const { return 2 * (n_s + 1); }
};

/// The throughput LP at a fixed mu_P over (pi_0..pi_N, a_0..a_N), a_n = pi_n p_n:
/// maximize theta_sr a_0 + theta_sr_shared sum a_n subject to normalization,
/// the linearized balance equations, the mu_P consistency row, a_0 = pi_0,
/// a_n <= pi_n, sum a <= 1 and 0 <= pi, a <= 1. The relay arrival rate q is
/// derived from mu_P through the PU queue.
lp::Problem<double> build_lp(const SystemModel& model, double mu_p);

/// One point visited by a search: the swept parameter (mu_P for lp, p for
/// cpt, N_th for st), the PU departure rate there and the objective.
struct SearchRecord {
  double parameter = 0.0;
  double mu_p = 0.0;
  double objective = 0.0;
  bool feasible = false;
};

struct OptimizerOptions {
  int grid_points = 200;        // interior mu_P points of the attainable range, plus both ends
  bool refine = true;           // golden-section polish around the best mu_P
  SearchMode mode = SearchMode::FixedPoint;
  double cpt_grid_step = 1e-3;  // safety scan over p
};

struct OptimizationResult {
  Method method = Method::Lp;
  AccessPolicy policy = AccessPolicy::constant(1, 0.0);
  PolicyEvaluation evaluation;
  double mu_s = 0.0;              // reported throughput, 0 when PU-infeasible
  double swept_mu_p = 0.0;
  double lp_objective = 0.0;      // lp only: optimum at swept_mu_p
  bool pu_infeasible = false;
  bool unimodal = true;           // cpt only: grid scan had one local maximum
  std::vector<SearchRecord> diagnostics;
};

/// Recovers p_n = a_n / pi_n from an LP point; p_n = 0 where pi_n = 0.
AccessPolicy recover_policy(const Eigen::VectorXd& lp_values, int n_s);

OptimizationResult optimal_policy(const SystemModel& model, const OptimizerOptions& options = {});
OptimizationResult cpt_policy(const SystemModel& model, const OptimizerOptions& options = {});
OptimizationResult st_policy(const SystemModel& model, const OptimizerOptions& options = {});
OptimizationResult optimize(const SystemModel& model, Method method,
                            const OptimizerOptions& options = {});

/// Maximizes a function on [lo, hi] that is unimodal there; returns the argmax.
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double tolerance = 1e-10) {
  const double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tolerance) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace crelay
