// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented
// underneath. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "crelay/experiments.hpp"
#include "oracles.hpp"

using namespace crelay;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CRELAY_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void note(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    notes.emplace_back(buf);
  }
  void require(bool ok, const char* fmt, auto... args) {
    if (!ok) pass = false;
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    notes.emplace_back(std::string(ok ? "ok   " : "FAIL ") + buf);
  }
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> lp_curve(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.methods = {Method::Lp};
  std::vector<double> out;
  for (const SweepRow& r : sweep_rows(s)) out.push_back(r.mu_s);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + format_number(std::round(x * 1e4) / 1e4);
  return s;
}

// ---------------------------------------------------------------------------

Outcome analytic_vs_simulation() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lambda(0.0, 0.8);
  const int np_choices[] = {5, 50, 100};
  const int ns_choices[] = {1, 5, 10};
  const std::uint64_t slots = 1000000;

  double worst_mu = 0.0, worst_tv = 0.0, worst_exact_tv = 0.0, worst_model_tv = 0.0;
  int failures = 0;
  double timed = 0.0;
  for (int k = 0; k < 10; ++k) {
    SystemConfig c;
    c.pu_arrival_rate = lambda(rng);
    c.pu_queue_capacity = np_choices[rng() % 3];
    c.relay_queue_capacity = ns_choices[rng() % 3];
    const int ns = c.relay_queue_capacity;

    Timer t;
    const SystemModel model(c);
    const AccessPolicy policies[] = {AccessPolicy::constant(ns, 1.0), AccessPolicy::constant(ns, 0.0),
                                     optimal_policy(model).policy};
    const char* names[] = {"ones", "zeros", "lp"};
    struct Row {
      double mu_gap, tv;
      Eigen::VectorXd sim_pi, analytic_pi;
    };
    std::vector<Row> rows;
    for (int p = 0; p < 3; ++p) {
      const PolicyEvaluation ev = evaluate_policy(model, policies[p]);
      const SimStats st = simulate(c, model.budget, policies[p], slots, 100 + 3 * k + p);
      rows.push_back({std::abs(st.measured_mu_s - ev.mu_s), total_variation(st.relay_distribution(),
                                                                           ev.relay_state.occupancy),
                      st.relay_distribution(), ev.relay_state.occupancy});
    }
    timed += t.seconds();

    for (int p = 0; p < 3; ++p) {
      const Row& r = rows[p];
      const Eigen::VectorXd exact = oracle::joint_relay_distribution(c, model.budget, policies[p]);
      const double sim_exact = total_variation(r.sim_pi, exact);
      const double model_exact = total_variation(r.analytic_pi, exact);
      worst_mu = std::max(worst_mu, r.mu_gap);
      worst_tv = std::max(worst_tv, r.tv);
      worst_exact_tv = std::max(worst_exact_tv, sim_exact);
      worst_model_tv = std::max(worst_model_tv, model_exact);
      const bool ok = r.mu_gap <= 0.01 && r.tv <= 0.01;
      if (!ok) ++failures;
      o.note("%s lambda=%.3f N_P=%d N_S=%d %-5s |dmu_s|=%.4f TV=%.4f (sim vs exact chain %.4f, model vs exact %.4f)",
             ok ? "ok  " : "MISS", c.pu_arrival_rate, c.pu_queue_capacity, ns, names[p], r.mu_gap, r.tv, sim_exact,
             model_exact);
    }
  }
  o.require(worst_mu <= 0.01, "max |mu_s sim - analytic| = %.4f <= 0.01", worst_mu);
  o.require(worst_tv <= 0.01, "max TV(pi sim, pi analytic) = %.4f <= 0.01 (%d of 30 cases over)", worst_tv,
            failures);
  o.require(timed <= 60.0, "runtime %.1f s <= 60 s", timed);
  o.note("diagnostic: max TV(sim, exact joint chain) = %.4f, max TV(analytic, exact joint chain) = %.4f",
         worst_exact_tv, worst_model_tv);
  return o;
}

Outcome closed_form_vs_linear_solve() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  Timer t;
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const double q = 0.01 + 0.98 * u(rng);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r(i) = 0.01 + 0.98 * u(rng);
    const Eigen::VectorXd pi = relay_occupancy(q, r);
    const Eigen::VectorXd ref = oracle::stationary(oracle::relay_transition(q, r));
    worst = std::max(worst, (pi - ref).cwiseAbs().maxCoeff());
  }
  const double elapsed = t.seconds();
  o.require(worst <= 1e-10, "max |pi closed form - linear solve| = %.2e <= 1e-10 over 100 instances", worst);
  o.require(elapsed <= 1.0, "runtime %.3f s <= 1 s", elapsed);
  return o;
}

Outcome bisection() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int unattainable = 0, grid_violations = 0;
  for (int k = 0; k < 50; ++k) {
    const double lambda = 0.02 + 0.96 * u(rng);
    const int n = 1 + static_cast<int>(rng() % 200);
    const double eps = std::pow(10.0, -4.0 + 3.0 * u(rng));
    const auto mu = min_departure_rate(lambda, n, eps);
    if (mu) {
      worst = std::max(worst, std::abs(pu_queue_summary(lambda, *mu, n).full - eps));
    } else {
      ++unattainable;
      if (!(pu_queue_summary(lambda, 1.0, n).full > eps)) worst = 1.0;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 1000; ++i) {
      const double f = pu_queue_summary(lambda, i / 1000.0, n).full;
      if (!(f < prev || f == 0.0)) ++grid_violations;
      prev = f;
    }
  }
  o.require(worst <= 1e-9, "max |nu_N(mu_bar) - eps| = %.2e <= 1e-9 on 50 triples (%d unattainable, checked at mu=1)",
            worst, unattainable);
  o.require(grid_violations == 0, "nu_N strictly decreasing on 1000-point grids: %d violations", grid_violations);
  return o;
}

Outcome brute_force() {
  Outcome o;
  Timer t;
  for (int ns : {1, 2}) {
    SystemConfig c;
    c.relay_queue_capacity = ns;
    const SystemModel model(c);
    const double lp = optimal_policy(model).mu_s;
    double best = 0.0;
    std::vector<double> argbest;
    const int steps = 1000;
    Eigen::VectorXd p = Eigen::VectorXd::Ones(ns + 1);
    std::function<void(int)> scan = [&](int level) {
      if (level > ns) {
        const PolicyEvaluation ev = evaluate_policy(model, AccessPolicy(p));
        if (ev.feasible && ev.mu_s > best) {
          best = ev.mu_s;
          argbest.assign(p.data() + 1, p.data() + p.size());
        }
        return;
      }
      for (int i = 0; i <= steps; ++i) {
        p(level) = i / static_cast<double>(steps);
        scan(level + 1);
      }
    };
    scan(1);
    std::string arg;
    for (double v : argbest) arg += format_number(v) + " ";
    o.require(std::abs(lp - best) <= 2e-3, "N_S=%d: mu_s LP %.6f vs 0.001-grid best %.6f at p = %s(gap %.1e <= 2e-3)",
              ns, lp, best, arg.c_str(), std::abs(lp - best));
  }
  o.require(t.seconds() <= 300.0, "runtime %.1f s <= 300 s", t.seconds());
  return o;
}

Outcome dominance_and_fig3(Outcome& shape) {
  Outcome o;
  ExperimentSpec spec = load_experiment_spec(kSource / "specs/fig3.json");

  Timer t_lp;
  const std::vector<double> lp = lp_curve(spec);
  const double lp_seconds = t_lp.seconds();

  const std::vector<SweepRow> rows = sweep_rows(spec);
  double worst_violation = 0.0;
  int flagged = 0;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    const double l = rows[i].mu_s, cpt = rows[i + 1].mu_s, st = rows[i + 2].mu_s;
    worst_violation = std::max(worst_violation, std::max(cpt, st) - l);
    if (rows[i].feasible && l > 0) {
      const double gap = (l - std::min(cpt, st)) / l;
      worst_gap = std::max(worst_gap, gap);
      if (gap > 0.10) {
        ++flagged;
        o.note("flag lambda=%.3f: lp %.4f cpt %.4f (%.1f%%) st %.4f (%.1f%%)", rows[i].sweep_value, l, cpt,
               100 * (l - cpt) / l, st, 100 * (l - st) / l);
      }
    }
  }
  o.require(worst_violation <= 1e-6, "max(cpt, st) - lp <= 1e-6 over %zu points (worst %.2e)", rows.size() / 3,
            worst_violation);
  o.note("largest suboptimal gap %.1f%%, %d point(s) beyond 10%% flagged", 100 * worst_gap, flagged);

  // shape of the LP curve
  const std::vector<double>& x = spec.sweep_values;
  int rises = 0;
  for (std::size_t i = 1; i < lp.size(); ++i)
    if (lp[i] > lp[i - 1] + 1e-9) ++rises;
  std::size_t first_zero = lp.size(), first_empty = lp.size();
  bool zeros_are_suffix = true;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    SystemConfig c = spec.base;
    apply_sweep_value(c, spec.sweep_variable, x[i]);
    const bool empty = feasible_mu_p_range(SystemModel(c)).empty();
    if (empty && first_empty == lp.size()) first_empty = i;
    if (lp[i] == 0.0 && first_zero == lp.size()) first_zero = i;
    if (first_zero < i && lp[i] != 0.0) zeros_are_suffix = false;
    if (empty && lp[i] != 0.0) zeros_are_suffix = false;
  }
  shape.require(x.size() == 50, "%zu lambda points, N_S=%d, N_P=%d", x.size(), spec.base.relay_queue_capacity,
                spec.base.pu_queue_capacity);
  shape.require(rises == 0, "mu_s non-increasing in lambda (%d rises)", rises);
  shape.require(zeros_are_suffix && first_zero < lp.size(), "%s", "zeros form a tail and cover every empty-range point");
  const bool at_boundary = first_empty < lp.size() && first_zero + 1 >= first_empty && first_zero <= first_empty;
  shape.require(at_boundary, "cutoff at lambda=%.4f, range first empty at lambda=%.4f",
                first_zero < x.size() ? x[first_zero] : NAN, first_empty < x.size() ? x[first_empty] : NAN);
  const double before = first_zero > 0 && first_zero < lp.size() ? lp[first_zero - 1] : 0.0;
  shape.require(before >= 0.1 * lp.front(), "hard drop: last positive mu_s %.4f >= 10%% of mu_s(0) = %.4f", before,
                lp.front());
  shape.require(lp_seconds <= 30.0, "LP sweep runtime %.2f s <= 30 s", lp_seconds);

  const auto a = min_departure_rate(0.5, 1000000, 0.01);
  const auto b = min_departure_rate(0.5, 2000000, 0.01);
  shape.require(a && b && std::abs(*a - *b) < 1e-9, "N_P proxy: mu_bar(1e6) - mu_bar(2e6) = %.1e < 1e-9",
                a && b ? *a - *b : NAN);
  shape.note("lp: %s", join(lp).c_str());
  return o;
}

Outcome fig4b() {
  Outcome o;
  const ExperimentSpec low = load_experiment_spec(kSource / "specs/fig4b_sigma_pd_m20.json");
  const ExperimentSpec high = load_experiment_spec(kSource / "specs/fig4b_sigma_pd_m10.json");
  const std::vector<double> a = lp_curve(low);
  const std::vector<double> b = lp_curve(high);

  const auto peak = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
  const bool interior = peak > 0 && peak + 1 < a.size();
  const bool rises = a[peak] > a.front() + 1e-6;
  const bool falls = a.back() < a[peak] - 1e-6;
  o.require(interior && rises && falls,
            "-20 dB: rise then fall (peak at N_S=%zu of 1..20, mu_s(1)=%.4f peak=%.6f mu_s(20)=%.6f)", peak + 1,
            a.front(), a[peak], a.back());
  o.note("-20 dB lp: %s", join(a).c_str());

  int rises_after_one = 0;
  for (std::size_t i = 1; i < b.size(); ++i)
    if (b[i] > b[i - 1] + 1e-9) ++rises_after_one;
  o.require(rises_after_one == 0, "-10 dB: non-increasing from N_S=1 (%d rises)", rises_after_one);
  o.note("-10 dB lp: %s", join(b).c_str());
  return o;
}

Outcome fig6() {
  Outcome o;
  const ExperimentSpec beta = load_experiment_spec(kSource / "specs/fig6_beta.json");
  const ExperimentSpec alpha = load_experiment_spec(kSource / "specs/fig6_alpha.json");
  const std::vector<double> b = lp_curve(beta);
  const std::vector<double> a = lp_curve(alpha);

  auto shape = [](const std::vector<double>& v) {
    const auto peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    return std::make_tuple(peak, v[peak] > v.front() + 1e-6, v[peak] > v.back() + 1e-6);
  };
  const auto [bp, b_rise, b_fall] = shape(b);
  std::size_t leading_zeros = 0;
  while (leading_zeros < b.size() && b[leading_zeros] == 0.0) ++leading_zeros;
  o.require(b.size() == 21 && leading_zeros >= 1 && b_rise && b_fall,
            "beta: zero for beta < %.2f, peak %.4f at beta=%.2f, %.4f at beta=1", beta.sweep_values[leading_zeros],
            b[bp], beta.sweep_values[bp], b.back());
  o.note("beta lp: %s", join(b).c_str());
  const auto [ap, a_rise, a_fall] = shape(a);
  o.require(a.size() == 21 && a_rise && a_fall, "alpha: %.4f at 0, peak %.4f at alpha=%.2f, %.4f at 1", a.front(),
            a[ap], alpha.sweep_values[ap], a.back());
  o.note("alpha lp: %s", join(a).c_str());
  return o;
}

Outcome lp_vs_enumeration() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int optimal = 0, infeasible = 0, mismatched_status = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(rng() % 9);
    const int m_eq = static_cast<int>(rng() % 3);
    const int m_ub = 1 + static_cast<int>(rng() % 4);
    lp::Problem<double> p = lp::Problem<double>::with_variables(n);
    for (int j = 0; j < n; ++j) {
      p.objective(j) = u(rng);
      p.lower(j) = (rng() % 4 == 0) ? -1.0 : 0.0;
      p.upper(j) = 0.5 + std::abs(u(rng));
    }
    p.eq_matrix = Eigen::MatrixXd::NullaryExpr(m_eq, n, [&] { return u(rng); });
    p.eq_rhs = Eigen::VectorXd::NullaryExpr(m_eq, [&] { return 0.2 * u(rng); });
    p.ineq_matrix = Eigen::MatrixXd::NullaryExpr(m_ub, n, [&] { return u(rng); });
    p.ineq_rhs = Eigen::VectorXd::NullaryExpr(m_ub, [&] { return 0.5 + u(rng); });

    const auto s = lp::solve(p);
    const auto best = oracle::enumerate_vertices(p);
    if (!best) {
      ++infeasible;
      if (s.status != lp::Status::Infeasible) ++mismatched_status;
      continue;
    }
    if (s.status != lp::Status::Optimal) {
      ++mismatched_status;
      continue;
    }
    ++optimal;
    worst = std::max(worst, std::abs(s.objective_value - *best));
    worst = std::max(worst, lp::verify(p, s).max_violation());
  }
  o.require(worst <= 1e-8 && mismatched_status == 0,
            "200 instances (<= 10 variables): %d optimal, %d infeasible, status mismatches %d, max gap %.1e <= 1e-8",
            optimal, infeasible, mismatched_status, worst);
  return o;
}

Outcome determinism() {
  Outcome o;
  ExperimentSpec spec = load_experiment_spec(kSource / "specs/smoke_sim.json");
  const fs::path dir = fs::temp_directory_path();
  std::vector<std::string> outputs;
  for (int run = 0; run < 2; ++run) {
    spec.output_path = dir / ("crelay_acceptance_run" + std::to_string(run) + ".csv");
    run_sweep(spec);
    std::ifstream in(spec.output_path, std::ios::binary);
    outputs.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    fs::remove(spec.output_path);
  }
  o.require(!outputs[0].empty() && outputs[0] == outputs[1],
            "two sweep runs with simulation (seeds 1;2) byte-identical, %zu bytes", outputs[0].size());
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* title, const Outcome& o, double seconds) {
    std::printf("[%s] %2d %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, seconds);
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  auto run = [&](int id, const char* title, auto fn) {
    Timer t;
    const Outcome o = fn();
    report(id, title, o, t.seconds());
  };

  run(1, "analytic vs simulation agreement", analytic_vs_simulation);
  run(2, "closed form vs balance-equation solve", closed_form_vs_linear_solve);
  run(3, "minimum departure rate bisection", bisection);
  run(4, "LP vs exhaustive 0.001 policy grid", brute_force);
  {
    Timer t;
    Outcome shape;
    const Outcome dom = dominance_and_fig3(shape);
    const double s = t.seconds();
    report(5, "LP dominates CPT and ST over the lambda sweep", dom, s);
    report(6, "mu_s vs lambda: non-increasing with a hard cutoff", shape, s);
  }
  run(7, "mu_s vs relay buffer size", fig4b);
  run(8, "mu_s vs beta and alpha", fig6);
  run(9, "simplex vs vertex enumeration", lp_vs_enumeration);
  run(10, "byte-identical sweep output", determinism);

  std::printf("%d of 10 criteria failed\n", failed);
  return failed;
}
