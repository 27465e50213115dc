#pragma once

// Dense bounded-variable primal simplex for small linear programs.
//
//   maximize    c^T x
//   subject to  A_eq x  = b_eq
//               A_ub x <= b_ub
//               lower <= x <= upper
//
// Two phases over a full tableau. Nonbasic variables rest at either bound, so
// box constraints never become rows. Entering and leaving choices follow
// Bland's smallest-index rule, which rules out cycling on degenerate vertices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace crelay::lp {

enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "?";
}

template <typename Scalar>
struct Problem {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vec objective;
  Mat eq_matrix;
  Vec eq_rhs;
  Mat ineq_matrix;
  Vec ineq_rhs;
  Vec lower;
  Vec upper;

  Eigen::Index num_variables() const { return objective.size(); }

  /// Empty constraint blocks with the right column count, bounds [0, +inf).
  static Problem with_variables(Eigen::Index n) {
    Problem p;
    p.objective = Vec::Zero(n);
    p.eq_matrix = Mat::Zero(0, n);
    p.eq_rhs = Vec::Zero(0);
    p.ineq_matrix = Mat::Zero(0, n);
    p.ineq_rhs = Vec::Zero(0);
    p.lower = Vec::Zero(n);
    p.upper = Vec::Constant(n, std::numeric_limits<Scalar>::infinity());
    return p;
  }

  /// Throws std::invalid_argument on inconsistent dimensions or crossed bounds.
  void check() const {
    const Eigen::Index n = num_variables();
    auto fail = [](const std::string& what) { throw std::invalid_argument("lp::Problem: " + what); };
    if (eq_matrix.cols() != n || ineq_matrix.cols() != n) fail("constraint column count != variable count");
    if (eq_matrix.rows() != eq_rhs.size()) fail("eq_rhs size != eq_matrix rows");
    if (ineq_matrix.rows() != ineq_rhs.size()) fail("ineq_rhs size != ineq_matrix rows");
    if (lower.size() != n || upper.size() != n) fail("bound vectors must have one entry per variable");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j))
        fail("lower > upper for variable " + std::to_string(j));
      if (lower(j) == std::numeric_limits<Scalar>::infinity() ||
          upper(j) == -std::numeric_limits<Scalar>::infinity())
        fail("bound at the wrong infinity for variable " + std::to_string(j));
    }
  }
};

template <typename Scalar>
struct Solution {
  Status status = Status::Infeasible;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Scalar objective_value = Scalar(0);
  int iterations = 0;
};

struct SimplexOptions {
  double pivot_tolerance = 1e-9;
  double feasibility_tolerance = 1e-8;
  int max_iterations = 100000;
};

template <typename Scalar>
struct Residuals {
  Scalar eq_violation = 0;      // max |A_eq x - b_eq|
  Scalar ineq_violation = 0;    // max (A_ub x - b_ub)_+
  Scalar bound_violation = 0;   // max distance outside [lower, upper]
  Scalar objective_gap = 0;     // |c^T x - reported objective|

  Scalar max_violation() const {
    using std::max;
    return max(max(eq_violation, ineq_violation), bound_violation);
  }
};

namespace detail {

template <typename Scalar>
class Tableau {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tableau(Mat a, Vec b, Vec upper, Eigen::Index n_real, const SimplexOptions& opt)
      : opt_(opt), rows_(a.rows()), n_real_(n_real) {
    // Artificial identity appended; rows flipped so b >= 0.
    for (Eigen::Index i = 0; i < rows_; ++i)
      if (b(i) < Scalar(0)) {
        a.row(i) *= Scalar(-1);
        b(i) = -b(i);
      }
    cols_ = n_real_ + rows_;
    t_ = Mat::Zero(rows_, cols_);
    t_.leftCols(n_real_) = a;
    t_.rightCols(rows_).setIdentity();
    beta_ = b;
    upper_ = Vec::Constant(cols_, std::numeric_limits<Scalar>::infinity());
    upper_.head(n_real_) = upper;
    at_upper_.assign(static_cast<std::size_t>(cols_), false);
    basic_.assign(static_cast<std::size_t>(cols_), false);
    basis_.resize(static_cast<std::size_t>(rows_));
    for (Eigen::Index i = 0; i < rows_; ++i) {
      basis_[i] = n_real_ + i;
      basic_[n_real_ + i] = true;
    }
  }

  enum class Outcome { Optimal, Unbounded };

  /// Minimizes cost^T y over the current basis; columns >= `enter_limit` never enter.
  Outcome minimize(const Vec& cost, Eigen::Index enter_limit, int& iterations) {
    const Scalar dtol = Scalar(opt_.pivot_tolerance);
    const Scalar ptol = Scalar(opt_.pivot_tolerance);
    const Scalar inf = std::numeric_limits<Scalar>::infinity();

    while (true) {
      if (++iterations > opt_.max_iterations)
        throw std::runtime_error("lp::solve: iteration limit reached");

      Vec basic_cost(rows_);
      for (Eigen::Index i = 0; i < rows_; ++i) basic_cost(i) = cost(basis_[i]);

      Eigen::Index enter = -1;
      Scalar dir = 0;
      for (Eigen::Index j = 0; j < enter_limit; ++j) {
        if (basic_[j]) continue;
        const Scalar d = cost(j) - basic_cost.dot(t_.col(j));
        if (!at_upper_[j] && d < -dtol && upper_(j) > Scalar(0)) {
          enter = j;
          dir = Scalar(1);
          break;
        }
        if (at_upper_[j] && d > dtol) {
          enter = j;
          dir = Scalar(-1);
          break;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      // Ratio test. Moving the entering variable by `step` in direction `dir`
      // changes basic row i by -dir * t(i, enter) * step.
      Scalar best = upper_(enter);  // bound flip
      Eigen::Index leave_row = -1;
      Eigen::Index leave_var = std::numeric_limits<Eigen::Index>::max();
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const Scalar alpha = dir * t_(i, enter);
        Scalar limit;
        if (alpha > ptol) {
          limit = beta_(i) / alpha;
        } else if (alpha < -ptol && upper_(basis_[i]) < inf) {
          limit = (upper_(basis_[i]) - beta_(i)) / (-alpha);
        } else {
          continue;
        }
        if (limit < Scalar(0)) limit = Scalar(0);
        if (limit < best || (limit == best && leave_row >= 0 && basis_[i] < leave_var)) {
          best = limit;
          leave_row = i;
          leave_var = basis_[i];
        }
      }
      if (best == inf) return Outcome::Unbounded;

      beta_ -= (dir * best) * t_.col(enter);
      if (leave_row < 0) {
        at_upper_[enter] = !at_upper_[enter];
        continue;
      }
      const Scalar entering_value = at_upper_[enter] ? upper_(enter) - best : best;
      const Eigen::Index leaving = basis_[leave_row];
      at_upper_[leaving] = dir * t_(leave_row, enter) < Scalar(0);
      pivot(leave_row, enter, entering_value);
    }
  }

  /// Swap basic artificials for structural columns where possible. Any that
  /// remain sit on redundant rows and are pinned to zero.
  void expel_artificials() {
    const Scalar ptol = Scalar(opt_.pivot_tolerance);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (basis_[i] < n_real_) continue;
      for (Eigen::Index j = 0; j < n_real_; ++j) {
        if (basic_[j] || std::abs(t_(i, j)) <= ptol) continue;
        const Scalar value = at_upper_[j] ? upper_(j) : Scalar(0);
        at_upper_[basis_[i]] = false;
        pivot(i, j, value);
        break;
      }
    }
    for (Eigen::Index j = n_real_; j < cols_; ++j) upper_(j) = Scalar(0);
  }

  Scalar artificial_mass() const {
    Scalar s = 0;
    for (Eigen::Index i = 0; i < rows_; ++i)
      if (basis_[i] >= n_real_) s += beta_(i);
    return s;
  }

  Vec values() const {
    Vec y = Vec::Zero(n_real_);
    for (Eigen::Index j = 0; j < n_real_; ++j)
      if (!basic_[j] && at_upper_[j]) y(j) = upper_(j);
    for (Eigen::Index i = 0; i < rows_; ++i)
      if (basis_[i] < n_real_) y(basis_[i]) = beta_(i);
    return y;
  }

  Eigen::Index columns() const { return cols_; }

 private:
  void pivot(Eigen::Index row, Eigen::Index col, Scalar entering_value) {
    const Eigen::Index leaving = basis_[row];
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (i == row) continue;
      const Scalar f = t_(i, col);
      if (f != Scalar(0)) t_.row(i) -= f * t_.row(row);
    }
    beta_(row) = entering_value;
    basic_[leaving] = false;
    basic_[col] = true;
    at_upper_[col] = false;
    basis_[row] = col;
  }

  SimplexOptions opt_;
  Eigen::Index rows_;
  Eigen::Index n_real_;
  Eigen::Index cols_ = 0;
  Mat t_;
  Vec beta_;
  Vec upper_;
  std::vector<bool> at_upper_;
  std::vector<bool> basic_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar>& problem, const SimplexOptions& options = {}) {
  using Vec = typename Problem<Scalar>::Vec;
  using Mat = typename Problem<Scalar>::Mat;
  problem.check();

  const Eigen::Index n = problem.num_variables();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  // x = offset + map * y with y >= 0. Free variables take two columns.
  std::vector<std::pair<Eigen::Index, Scalar>> columns;  // (variable, sign)
  Vec offset = Vec::Zero(n);
  std::vector<Scalar> y_upper;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar lo = problem.lower(j);
    const Scalar hi = problem.upper(j);
    if (lo > -inf) {
      offset(j) = lo;
      columns.emplace_back(j, Scalar(1));
      y_upper.push_back(hi - lo);
    } else if (hi < inf) {
      offset(j) = hi;
      columns.emplace_back(j, Scalar(-1));
      y_upper.push_back(inf);
    } else {
      columns.emplace_back(j, Scalar(1));
      columns.emplace_back(j, Scalar(-1));
      y_upper.push_back(inf);
      y_upper.push_back(inf);
    }
  }
  const Eigen::Index n_y = static_cast<Eigen::Index>(columns.size());
  Mat map = Mat::Zero(n, n_y);
  for (Eigen::Index k = 0; k < n_y; ++k) map(columns[k].first, k) = columns[k].second;

  const Eigen::Index m_eq = problem.eq_matrix.rows();
  const Eigen::Index m_ub = problem.ineq_matrix.rows();
  const Eigen::Index n_real = n_y + m_ub;  // structural + slacks
  Mat a = Mat::Zero(m_eq + m_ub, n_real);
  Vec b(m_eq + m_ub);
  a.topLeftCorner(m_eq, n_y) = problem.eq_matrix * map;
  b.head(m_eq) = problem.eq_rhs - problem.eq_matrix * offset;
  a.bottomLeftCorner(m_ub, n_y) = problem.ineq_matrix * map;
  a.bottomRightCorner(m_ub, m_ub).setIdentity();
  b.tail(m_ub) = problem.ineq_rhs - problem.ineq_matrix * offset;

  Vec upper = Vec::Constant(n_real, inf);
  for (Eigen::Index k = 0; k < n_y; ++k) upper(k) = y_upper[k];

  Solution<Scalar> sol;
  detail::Tableau<Scalar> tab(a, b, upper, n_real, options);

  Vec phase1 = Vec::Zero(tab.columns());
  phase1.tail(tab.columns() - n_real).setOnes();
  tab.minimize(phase1, tab.columns(), sol.iterations);
  Scalar scale = Scalar(1);
  if (b.size() > 0) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  if (tab.artificial_mass() > Scalar(options.feasibility_tolerance) * scale) {
    sol.status = Status::Infeasible;
    return sol;
  }
  tab.expel_artificials();

  Vec phase2 = Vec::Zero(tab.columns());
  phase2.head(n_y) = -(map.transpose() * problem.objective);
  if (tab.minimize(phase2, n_real, sol.iterations) ==
      detail::Tableau<Scalar>::Outcome::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  sol.status = Status::Optimal;
  sol.values = offset + map * tab.values().head(n_y);
  sol.objective_value = problem.objective.dot(sol.values);
  return sol;
}

template <typename Scalar>
Residuals<Scalar> verify(const Problem<Scalar>& problem, const Solution<Scalar>& solution) {
  using std::max;
  Residuals<Scalar> r;
  const auto& x = solution.values;
  if (problem.eq_matrix.rows() > 0)
    r.eq_violation = (problem.eq_matrix * x - problem.eq_rhs).cwiseAbs().maxCoeff();
  if (problem.ineq_matrix.rows() > 0)
    r.ineq_violation =
        max(Scalar(0), (problem.ineq_matrix * x - problem.ineq_rhs).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    r.bound_violation = max(r.bound_violation, problem.lower(j) - x(j));
    r.bound_violation = max(r.bound_violation, x(j) - problem.upper(j));
  }
  r.objective_gap = std::abs(problem.objective.dot(x) - solution.objective_value);
  return r;
}

}  // namespace crelay::lp
