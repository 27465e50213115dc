#include "doctest.h"

#include <cmath>

#include "crelay/policy_opt.hpp"

using namespace crelay;

namespace {

SystemConfig with_ns(int n_s) {
  SystemConfig c;
  c.relay_queue_capacity = n_s;
  return c;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::Lp, Method::Cpt, Method::St}) CHECK(parse_method(method_name(m)) == m);
  CHECK_FALSE(parse_method("greedy"));
}

TEST_CASE("feasible range at defaults") {
  const SystemModel m{SystemConfig{}};
  const MuInterval r = feasible_mu_p_range(m);
  CHECK(r.lower == doctest::Approx(0.49997491506362679).epsilon(1e-9));
  CHECK(r.upper == doctest::Approx(0.71728995379852128).epsilon(1e-12));
  const double second = m.budget.theta_pd + m.budget.theta_ps * m.budget.theta_sd_shared * (1 - m.budget.theta_pd);
  CHECK(second == doctest::Approx(0.40739754130846395).epsilon(1e-12));
}

TEST_CASE("feasible range without PU constraint and when unattainable") {
  SystemConfig c;
  c.pu_arrival_rate = 0.0;
  const SystemModel m(c);
  const MuInterval r = feasible_mu_p_range(m);
  const LinkBudget& b = m.budget;
  CHECK(r.lower == doctest::Approx(b.theta_pd + b.theta_ps * b.theta_sd_shared * (1 - b.theta_pd)));
  CHECK(r.upper == doctest::Approx(b.theta_pd + b.theta_ps * (1 - b.theta_pd)));

  SystemConfig d;
  d.pu_arrival_rate = 0.75;
  CHECK(feasible_mu_p_range(SystemModel(d)).empty());
}

TEST_CASE("smallest LP layout") {
  const SystemModel m{with_ns(1)};
  const lp::Problem<double> p = build_lp(m, 0.6);
  CHECK(p.num_variables() == 4);
  // normalization, one balance row, the mu_P row and a_0 = pi_0
  CHECK(p.eq_matrix.rows() == 4);
  // sum a <= 1 and a_1 <= pi_1
  CHECK(p.ineq_matrix.rows() == 2);
  CHECK(p.lower.isZero());
  CHECK(p.upper == Eigen::VectorXd::Ones(4));
}

TEST_CASE("mu_P row at the top of the range pins the full state") {
  const SystemModel m{with_ns(3)};
  const MuInterval r = feasible_mu_p_range(m);
  const lp::Problem<double> p = build_lp(m, r.upper);
  const LpLayout L{3};
  bool found = false;
  for (Eigen::Index i = 0; i < p.eq_matrix.rows(); ++i) {
    const auto row = p.eq_matrix.row(i);
    if (std::abs(row(L.pi(3)) - (1 - m.budget.theta_sd)) < 1e-12 &&
        std::abs(row(L.a(3)) - (m.budget.theta_sd - m.budget.theta_sd_shared)) < 1e-12) {
      CHECK(std::abs(p.eq_rhs(i)) < 1e-12);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("an evaluated policy satisfies its own LP") {
  const SystemModel m{with_ns(2)};
  const AccessPolicy pol((Eigen::VectorXd(3) << 1.0, 0.5, 0.5).finished());
  const PolicyEvaluation ev = evaluate_policy(m, pol);
  const lp::Problem<double> p = build_lp(m, ev.mu_p);
  const LpLayout L{2};
  Eigen::VectorXd x(L.size());
  for (int n = 0; n <= 2; ++n) {
    x(L.pi(n)) = ev.relay_state.occupancy(n);
    x(L.a(n)) = ev.relay_state.occupancy(n) * pol[n];
  }
  CHECK((p.eq_matrix * x - p.eq_rhs).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((p.ineq_matrix * x - p.ineq_rhs).maxCoeff() < 1e-8);
  CHECK(p.objective.dot(x) == doctest::Approx(ev.mu_s).epsilon(1e-10));
}

TEST_CASE("policy recovery") {
  const LpLayout L{2};
  Eigen::VectorXd x(L.size());
  x << 0.5, 0.5, 0.0, 0.5, 0.25, 0.0;
  const AccessPolicy p = recover_policy(x, 2);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
}

TEST_CASE("no PU traffic gives the full SU rate") {
  SystemConfig c;
  c.pu_arrival_rate = 0.0;
  const SystemModel m(c);
  for (Method meth : {Method::Lp, Method::Cpt, Method::St}) {
    const OptimizationResult r = optimize(m, meth);
    CHECK(r.mu_s == doctest::Approx(m.budget.theta_sr).epsilon(1e-9));
    CHECK_FALSE(r.pu_infeasible);
  }
  const OptimizationResult cpt = cpt_policy(m);
  CHECK(cpt.policy[c.relay_queue_capacity] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("methods at defaults are ordered and feasible") {
  for (int ns : {2, 10}) {
    const SystemModel m{with_ns(ns)};
    const OptimizationResult lp_r = optimal_policy(m);
    const OptimizationResult cpt = cpt_policy(m);
    const OptimizationResult st = st_policy(m);
    for (const auto* r : {&lp_r, &cpt, &st}) {
      CHECK(r->evaluation.feasible);
      CHECK(r->policy[0] == 1.0);
      CHECK(r->policy.probs().minCoeff() >= 0.0);
      CHECK(r->policy.probs().maxCoeff() <= 1.0);
    }
    CHECK(lp_r.mu_s >= cpt.mu_s - 1e-6);
    CHECK(lp_r.mu_s >= st.mu_s - 1e-6);
  }
}

TEST_CASE("recovered policy reproduces the LP point") {
  const SystemModel m{with_ns(10)};
  const OptimizationResult r = optimal_policy(m);
  REQUIRE_FALSE(r.pu_infeasible);
  const lp::Problem<double> p = build_lp(m, r.swept_mu_p);
  const auto sol = lp::solve(p);
  REQUIRE(sol.status == lp::Status::Optimal);
  const LpLayout L{10};
  Eigen::VectorXd pi(11);
  for (int n = 0; n <= 10; ++n) pi(n) = sol.values(L.pi(n));
  CHECK(0.5 * (pi - r.evaluation.relay_state.occupancy).cwiseAbs().sum() <= 1e-3);
  CHECK(std::abs(r.evaluation.mu_p - r.swept_mu_p) <= 1e-3);
  CHECK(r.lp_objective == doctest::Approx(sol.objective_value).epsilon(1e-9));
}

TEST_CASE("ST endpoints and tie-breaking") {
  const SystemModel m{with_ns(10)};
  const OptimizationResult st = st_policy(m);
  REQUIRE(st.diagnostics.size() == 11);
  const PolicyEvaluation ones = evaluate_policy(m, AccessPolicy::constant(10, 1.0));
  const PolicyEvaluation zeros = evaluate_policy(m, AccessPolicy::constant(10, 0.0));
  CHECK(st.diagnostics.back().objective == doctest::Approx(ones.mu_s).epsilon(1e-12));
  CHECK(st.diagnostics.front().objective == doctest::Approx(zeros.mu_s).epsilon(1e-12));
  CHECK(st.mu_s == doctest::Approx(0.447672).epsilon(1e-5));

  SystemConfig c = with_ns(4);
  c.pu_arrival_rate = 0.0;
  // every threshold gives theta_sr; the smallest wins
  const OptimizationResult flat = st_policy(SystemModel(c));
  CHECK(flat.policy.probs() == AccessPolicy::step(4, 0).probs());
}

TEST_CASE("CPT grid has a single peak at defaults") {
  const OptimizationResult r = cpt_policy(SystemModel{SystemConfig{}});
  CHECK(r.unimodal);
  CHECK(r.evaluation.feasible);
}

TEST_CASE("infeasible configuration is reported, not thrown") {
  SystemConfig c;
  c.pu_arrival_rate = 0.8;
  const SystemModel m(c);
  for (Method meth : {Method::Lp, Method::Cpt, Method::St}) {
    const OptimizationResult r = optimize(m, meth);
    CHECK(r.pu_infeasible);
    CHECK(r.mu_s == 0.0);
  }
}

TEST_CASE("mu sweep mode stays below the LP") {
  OptimizerOptions o;
  o.mode = SearchMode::MuSweep;
  for (int ns : {2, 10}) {
    const SystemModel m{with_ns(ns)};
    const double best = optimal_policy(m).mu_s;
    CHECK(cpt_policy(m, o).mu_s <= best + 1e-6);
    CHECK(st_policy(m, o).mu_s <= best + 1e-6);
  }
}

TEST_CASE("golden section") {
  const double x = golden_section_max([](double v) { return -(v - 0.3) * (v - 0.3); }, 0.0, 1.0);
  CHECK(x == doctest::Approx(0.3).epsilon(1e-8));
}
