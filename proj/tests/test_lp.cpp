#include "doctest.h"

#include <random>

#include "crelay/lp.hpp"
#include "oracles.hpp"

using namespace crelay;
using P = lp::Problem<double>;

TEST_CASE("single bounded variable") {
  P p = P::with_variables(1);
  p.objective << 1.0;
  p.ineq_matrix = Eigen::MatrixXd::Ones(1, 1);
  p.ineq_rhs = Eigen::VectorXd::Ones(1);
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.values(0) == doctest::Approx(1.0));
  CHECK(s.objective_value == doctest::Approx(1.0));
}

TEST_CASE("equality pinned objective") {
  P p = P::with_variables(2);
  p.objective << 1.0, 1.0;
  p.eq_matrix = Eigen::MatrixXd::Ones(1, 2);
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.upper.setOnes();
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(1.0));
  CHECK(lp::verify(p, s).max_violation() <= 1e-8);
}

TEST_CASE("infeasible and unbounded") {
  P p = P::with_variables(2);
  p.objective << 1.0, 0.0;
  p.eq_matrix = Eigen::MatrixXd::Ones(1, 2);
  p.eq_rhs = Eigen::VectorXd::Constant(1, 3.0);
  p.upper.setOnes();
  CHECK(lp::solve(p).status == lp::Status::Infeasible);

  P q = P::with_variables(2);
  q.objective << 1.0, 1.0;
  q.ineq_matrix = (Eigen::MatrixXd(1, 2) << 1.0, -1.0).finished();
  q.ineq_rhs = Eigen::VectorXd::Ones(1);
  CHECK(lp::solve(q).status == lp::Status::Unbounded);
}

TEST_CASE("free and upper-only variables") {
  // max -|x - 2| style: max y s.t. y <= x - 2, y <= 2 - x, x free, y <= 5 only
  P p = P::with_variables(2);
  p.objective << 0.0, 1.0;
  p.lower << -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity();
  p.upper << std::numeric_limits<double>::infinity(), 5.0;
  p.ineq_matrix = (Eigen::MatrixXd(2, 2) << -1.0, 1.0, 1.0, 1.0).finished();
  p.ineq_rhs = (Eigen::VectorXd(2) << -2.0, 2.0).finished();
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.values(0) == doctest::Approx(2.0));
  CHECK(s.values(1) == doctest::Approx(0.0));
}

TEST_CASE("malformed problems are rejected") {
  P p = P::with_variables(2);
  p.lower(0) = 1.0;
  p.upper(0) = 0.0;
  CHECK_THROWS_AS(lp::solve(p), std::invalid_argument);
  P q = P::with_variables(2);
  q.eq_matrix = Eigen::MatrixXd::Ones(1, 3);
  CHECK_THROWS_AS(lp::solve(q), std::invalid_argument);
}

TEST_CASE("verify reports perturbations") {
  P p = P::with_variables(2);
  p.objective << 1.0, 2.0;
  p.eq_matrix = Eigen::MatrixXd::Ones(1, 2);
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.upper.setOnes();
  auto s = lp::solve(p);
  CHECK(lp::verify(p, s).max_violation() <= 1e-8);
  CHECK(lp::verify(p, s).objective_gap <= 1e-8);
  s.values(0) += 0.01;
  CHECK(lp::verify(p, s).eq_violation == doctest::Approx(0.01));
  CHECK(lp::verify(p, s).objective_gap > 0.0);
}

TEST_CASE("degenerate vertices do not cycle") {
  // Klee-Minty-flavoured degenerate instance with many ties at zero
  P p = P::with_variables(4);
  p.objective << 10.0, -57.0, -9.0, -24.0;
  p.ineq_matrix.resize(3, 4);
  p.ineq_matrix << 0.5, -5.5, -2.5, 9.0, 0.5, -1.5, -0.5, 1.0, 1.0, 0.0, 0.0, 0.0;
  p.ineq_rhs = (Eigen::VectorXd(3) << 0.0, 0.0, 1.0).finished();
  const auto s = lp::solve(p);
  REQUIRE(s.status == lp::Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(1.0));
}

TEST_CASE("random instances agree with vertex enumeration") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int optimal = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m_eq = static_cast<int>(rng() % 2);
    const int m_ub = 1 + static_cast<int>(rng() % 4);
    P p = P::with_variables(n);
    for (int j = 0; j < n; ++j) {
      p.objective(j) = u(rng);
      p.lower(j) = (rng() % 3 == 0) ? -1.0 : 0.0;
      p.upper(j) = 1.0 + std::abs(u(rng));
    }
    p.eq_matrix = Eigen::MatrixXd::NullaryExpr(m_eq, n, [&] { return u(rng); });
    p.eq_rhs = Eigen::VectorXd::NullaryExpr(m_eq, [&] { return 0.3 * u(rng); });
    p.ineq_matrix = Eigen::MatrixXd::NullaryExpr(m_ub, n, [&] { return u(rng); });
    p.ineq_rhs = Eigen::VectorXd::NullaryExpr(m_ub, [&] { return 0.5 + u(rng); });

    const auto s = lp::solve(p);
    const auto best = oracle::enumerate_vertices(p);
    if (!best) {
      CHECK(s.status == lp::Status::Infeasible);
      continue;
    }
    REQUIRE(s.status == lp::Status::Optimal);
    ++optimal;
    CHECK(std::abs(s.objective_value - *best) <= 1e-8);
    CHECK(lp::verify(p, s).max_violation() <= 1e-8);
  }
  CHECK(optimal > 40);
}

TEST_CASE("deterministic") {
  P p = P::with_variables(3);
  p.objective << 1.0, 2.0, 0.5;
  p.ineq_matrix = Eigen::MatrixXd::Ones(1, 3);
  p.ineq_rhs = Eigen::VectorXd::Ones(1);
  p.upper.setOnes();
  const auto a = lp::solve(p);
  const auto b = lp::solve(p);
  CHECK(a.values == b.values);
  CHECK(a.iterations == b.iterations);
}
