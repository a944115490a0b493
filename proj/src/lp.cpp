#include "anm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <cstdio>
#include <cstdlib>

#include <Eigen/Dense>

namespace anm::lp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-10;   // pivot-element sanity floor
constexpr double kRatioPivotTol = 1e-7;  // entering eligibility floor
constexpr int kRefactorEvery = 60;
constexpr int kStallLimit = 400;  // degenerate pivots before Bland's rule

}  // namespace

int Problem::add_variable(double lo, double hi, double c) {
  lower.push_back(lo);
  upper.push_back(hi);
  cost.push_back(c);
  return num_vars() - 1;
}

int Problem::add_row(Sense sense, double rhs) {
  rows.push_back({sense, rhs});
  row_terms.emplace_back();
  return num_rows() - 1;
}

void Problem::add_term(int row, int var, double coeff) {
  if (coeff != 0.0) row_terms[row].emplace_back(var, coeff);
}

DualSimplex::DualSimplex(const Problem& p) {
  n_ = p.num_vars();
  m_ = p.num_rows();
  cost_ = p.cost;
  lo_ = p.lower;
  hi_ = p.upper;
  rhs_.resize(m_);
  cols_.assign(n_ + m_, {});
  for (int i = 0; i < m_; ++i) {
    rhs_[i] = p.rows[i].rhs;
    for (auto [v, a] : p.row_terms[i]) cols_[v].emplace_back(i, a);
    // slack column: row sense decides its bounds
    cols_[n_ + i].emplace_back(i, 1.0);
    cost_.push_back(0.0);
    switch (p.rows[i].sense) {
      case Sense::le: lo_.push_back(0.0); hi_.push_back(kInf); break;
      case Sense::ge: lo_.push_back(-kInf); hi_.push_back(0.0); break;
      case Sense::eq: lo_.push_back(0.0); hi_.push_back(0.0); break;
    }
  }
  basis_.resize(m_);
  for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
  status_.assign(n_ + m_, VarStatus::at_lower);
  for (int i = 0; i < m_; ++i) status_[n_ + i] = VarStatus::basic;
  binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
  factorized_ = true;
}

void DualSimplex::set_rhs(int row, double rhs) { rhs_[row] = rhs; }

void DualSimplex::set_bounds(int var, double lo, double hi) {
  lo_[var] = lo;
  hi_[var] = hi;
}

double DualSimplex::bound_value(int col) const {
  switch (status_[col]) {
    case VarStatus::at_lower: return lo_[col];
    case VarStatus::at_upper: return hi_[col];
    case VarStatus::free_zero: return 0.0;
    case VarStatus::basic: return 0.0;  // not used
  }
  return 0.0;
}

void DualSimplex::refactorize() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
  for (int k = 0; k < m_; ++k)
    for (auto [i, a] : cols_[basis_[k]]) b(i, k) = a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
  factorized_ = lu.isInvertible();
  if (!factorized_) return;
  // binv_ maps equation space to basis positions: row k of binv_ recovers
  // the k-th basic variable, i.e. binv_ = B^{-1} with column order basis_.
  Eigen::MatrixXd inv = lu.inverse();
  for (int k = 0; k < m_; ++k)
    for (int i = 0; i < m_; ++i)
      binv_[static_cast<size_t>(k) * m_ + i] = inv(k, i);
  pivots_since_refactor_ = 0;
}

bool DualSimplex::price_and_status() {
  // y' = c_B' B^{-1}; duals d_j = c_j - y'a_j. Nonbasic placement follows
  // the reduced-cost sign so the start is dual-feasible when possible.
  y_.assign(m_, 0.0);
  for (int k = 0; k < m_; ++k) {
    const double cb = cost_[basis_[k]];
    if (cb == 0.0) continue;
    const double* row = &binv_[static_cast<size_t>(k) * m_];
    for (int i = 0; i < m_; ++i) y_[i] += cb * row[i];
  }
  double y_scale = 1.0;
  for (int i = 0; i < m_; ++i) y_scale = std::max(y_scale, std::abs(y_[i]));
  const double dual_tol = kDualTol * y_scale * 10.0;
  duals_.assign(n_ + m_, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic) continue;
    double d = cost_[j];
    for (auto [i, a] : cols_[j]) d -= y_[i] * a;
    duals_[j] = d;
    const bool lo_fin = std::isfinite(lo_[j]);
    const bool hi_fin = std::isfinite(hi_[j]);
    if (lo_fin && hi_fin && lo_[j] == hi_[j]) {
      status_[j] = VarStatus::at_lower;  // fixed: any dual sign is fine
    } else if (d > dual_tol) {
      if (!lo_fin) {
        if (std::getenv("ANM_LP_DEBUG"))
          std::fprintf(stderr, "[lp] dual-infeasible col=%d d=%.3e c=%.3e lo=%g hi=%g\n",
                       j, d, cost_[j], lo_[j], hi_[j]);
        return false;
      }
      status_[j] = VarStatus::at_lower;
    } else if (d < -dual_tol) {
      if (!hi_fin) {
        if (std::getenv("ANM_LP_DEBUG"))
          std::fprintf(stderr, "[lp] dual-infeasible col=%d d=%.3e c=%.3e lo=%g hi=%g\n",
                       j, d, cost_[j], lo_[j], hi_[j]);
        return false;
      }
      status_[j] = VarStatus::at_upper;
    } else if (status_[j] == VarStatus::free_zero) {
      // keep
    } else if (lo_fin) {
      if (status_[j] == VarStatus::at_upper && hi_fin) {
        // keep the warm-start placement
      } else {
        status_[j] = VarStatus::at_lower;
      }
    } else if (hi_fin) {
      status_[j] = VarStatus::at_upper;
    } else {
      status_[j] = VarStatus::free_zero;
    }
  }
  return true;
}

void DualSimplex::reset_to_slack_basis() {
  for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
  for (int j = 0; j < n_ + m_; ++j) status_[j] = VarStatus::at_lower;
  for (int i = 0; i < m_; ++i) status_[n_ + i] = VarStatus::basic;
  binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) binv_[static_cast<size_t>(i) * m_ + i] = 1.0;
  factorized_ = true;
  pivots_since_refactor_ = 0;
}

Solution DualSimplex::solve(int max_iterations) {
  // A warm basis occasionally strands the dual method in a degenerate
  // corner; a conclusion other than optimality is re-verified from a fresh
  // slack basis before it is reported.
  Solution sol = run(max_iterations);
  if (sol.status != SolveStatus::optimal) {
    reset_to_slack_basis();
    sol = run(max_iterations);
  }
  return sol;
}

Solution DualSimplex::run(int max_iterations) {
  Solution sol;
  if (!factorized_ || pivots_since_refactor_ >= kRefactorEvery) refactorize();
  if (!factorized_) {
    sol.status = SolveStatus::numerical_failure;
    return sol;
  }
  if (!price_and_status()) {
    // duals computed against a drifted factorization can report spurious
    // sign conflicts; only a freshly factorized basis may certify them
    refactorize();
    if (!factorized_) {
      sol.status = SolveStatus::numerical_failure;
      return sol;
    }
    if (!price_and_status()) {
      sol.status = SolveStatus::dual_infeasible;
      return sol;
    }
  }

  int recoveries = 0;
  std::vector<double> work(m_);
  auto compute_xb = [&]() {
    for (int i = 0; i < m_; ++i) work[i] = rhs_[i];
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::basic) continue;
      const double v = bound_value(j);
      if (v == 0.0) continue;
      for (auto [i, a] : cols_[j]) work[i] -= a * v;
    }
    xb_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      const double* row = &binv_[static_cast<size_t>(k) * m_];
      double acc = 0.0;
      for (int i = 0; i < m_; ++i) acc += row[i] * work[i];
      xb_[k] = acc;
    }
  };
  compute_xb();

  int stall = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    // leaving: the worst bound violation among basic variables
    int p = -1;
    double worst = kPrimalTol;
    bool below = false;
    for (int k = 0; k < m_; ++k) {
      const int j = basis_[k];
      const double v = xb_[k];
      if (v < lo_[j] - worst) {
        worst = lo_[j] - v;
        p = k;
        below = true;
      } else if (v > hi_[j] + worst) {
        worst = v - hi_[j];
        p = k;
        below = false;
      }
    }
    if (p < 0) {  // primal feasible (and dual feasible throughout): optimal
      sol.status = SolveStatus::optimal;
      sol.iterations = iter;
      break;
    }

    const double* rho = &binv_[static_cast<size_t>(p) * m_];
    // entering: dual ratio test over sign-eligible nonbasics
    int enter = -1;
    double best_ratio = kInf;
    double best_alpha = 0.0;
    const bool use_bland = stall > kStallLimit;
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::basic) continue;
      if (lo_[j] == hi_[j]) continue;  // fixed never enters
      double alpha = 0.0;
      for (auto [i, a] : cols_[j]) alpha += rho[i] * a;
      if (std::abs(alpha) < kRatioPivotTol) continue;
      // leaving variable moves toward its violated bound:
      //   below lower -> x_B[p] must increase; above upper -> decrease.
      const double dir = below ? -alpha : alpha;  // required sign of x_j move
      bool eligible = false;
      if (status_[j] == VarStatus::at_lower || status_[j] == VarStatus::free_zero)
        eligible = dir > 0 ? true : eligible;
      if (status_[j] == VarStatus::at_upper || status_[j] == VarStatus::free_zero)
        eligible = dir < 0 ? true : eligible;
      if (!eligible) continue;
      const double ratio = std::abs(duals_[j]) / std::abs(alpha);
      const bool better =
          use_bland
              ? (enter < 0 || (ratio < best_ratio - 1e-12) ||
                 (ratio < best_ratio + 1e-12 && j < enter))
              : (ratio < best_ratio - 1e-12 ||
                 (ratio < best_ratio + 1e-9 &&
                  std::abs(alpha) > std::abs(best_alpha)));
      if (better) {
        enter = j;
        best_ratio = ratio;
        best_alpha = alpha;
      }
    }
    if (enter < 0 && recoveries < 5) {
      // A stale factorization or drifted duals can masquerade as
      // infeasibility after long degenerate runs: restore and re-verify.
      ++recoveries;
      refactorize();
      if (!factorized_) {
        sol.status = SolveStatus::numerical_failure;
        return sol;
      }
      if (!price_and_status()) {
        sol.status = SolveStatus::dual_infeasible;
        return sol;
      }
      compute_xb();
      stall = 0;
      continue;
    }
    if (enter < 0) {
      if (std::getenv("ANM_LP_DEBUG")) {
        int alphas = 0;
        double amax = 0;
        for (int j = 0; j < n_ + m_; ++j) {
          if (status_[j] == VarStatus::basic) continue;
          double alpha = 0.0;
          for (auto [i, a] : cols_[j]) alpha += rho[i] * a;
          if (std::abs(alpha) > kPivotTol) ++alphas;
          amax = std::max(amax, std::abs(alpha));
        }
        std::fprintf(stderr,
                     "[lp] infeasible conclusion: iter=%d row=%d leave=%d "
                     "below=%d viol=%.3e nonzero_alphas=%d max_alpha=%.3e "
                     "pivots_since_refactor=%d\n",
                     iter, p, basis_[p], below ? 1 : 0, worst, alphas, amax,
                     pivots_since_refactor_);
      }
      sol.status = SolveStatus::infeasible;
      sol.iterations = iter;
      return sol;
    }
    if (best_ratio < 1e-12) ++stall; else stall = 0;

    // basis change
    const int leave = basis_[p];
    status_[leave] = below ? VarStatus::at_lower : VarStatus::at_upper;
    if (!std::isfinite(bound_value(leave)))
      status_[leave] = VarStatus::free_zero;  // cannot happen for violated var
    basis_[p] = enter;
    status_[enter] = VarStatus::basic;

    // update B^{-1}: w = B^{-1} a_enter, pivot on w_p
    std::vector<double>& w = work;
    std::fill(w.begin(), w.end(), 0.0);
    for (auto [i, a] : cols_[enter])
      for (int k = 0; k < m_; ++k)
        w[k] += binv_[static_cast<size_t>(k) * m_ + i] * a;
    const double piv = w[p];
    if (std::abs(piv) < kPivotTol) {
      refactorize();
      if (!factorized_) {
        sol.status = SolveStatus::numerical_failure;
        return sol;
      }
    } else {
      double* prow = &binv_[static_cast<size_t>(p) * m_];
      for (int i = 0; i < m_; ++i) prow[i] /= piv;
      for (int k = 0; k < m_; ++k) {
        if (k == p || w[k] == 0.0) continue;
        double* krow = &binv_[static_cast<size_t>(k) * m_];
        const double f = w[k];
        for (int i = 0; i < m_; ++i) krow[i] -= f * prow[i];
      }
      if (++pivots_since_refactor_ >= kRefactorEvery) refactorize();
    }

    // refresh duals (full recompute keeps drift bounded) and basic values
    y_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      const double cb = cost_[basis_[k]];
      if (cb == 0.0) continue;
      const double* row = &binv_[static_cast<size_t>(k) * m_];
      for (int i = 0; i < m_; ++i) y_[i] += cb * row[i];
    }
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::basic) {
        duals_[j] = 0.0;
        continue;
      }
      double d = cost_[j];
      for (auto [i, a] : cols_[j]) d -= y_[i] * a;
      duals_[j] = d;
    }
    compute_xb();
    if (iter + 1 == max_iterations) {
      sol.status = SolveStatus::iteration_limit;
      sol.iterations = max_iterations;
      return sol;
    }
  }

  if (sol.status != SolveStatus::optimal) {
    sol.status = SolveStatus::iteration_limit;
    return sol;
  }

  // assemble solution
  sol.x.assign(n_, 0.0);
  for (int j = 0; j < n_; ++j)
    if (status_[j] != VarStatus::basic) sol.x[j] = bound_value(j);
  for (int k = 0; k < m_; ++k)
    if (basis_[k] < n_) sol.x[basis_[k]] = xb_[k];
  sol.objective = 0.0;
  for (int j = 0; j < n_; ++j) sol.objective += cost_[j] * sol.x[j];
  sol.y = y_;
  // dual objective: y'b + sum of reduced costs at active bounds
  double dual = 0.0;
  for (int i = 0; i < m_; ++i) dual += y_[i] * rhs_[i];
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == VarStatus::basic || duals_[j] == 0.0) continue;
    const double v = bound_value(j);
    if (v != 0.0 && std::isfinite(v)) dual += duals_[j] * v;
  }
  sol.dual_objective = dual;
  return sol;
}

Solution solve(const Problem& p, int max_iterations) {
  DualSimplex s(p);
  return s.solve(max_iterations);
}

std::string to_lp_format(const Problem& p) {
  std::ostringstream out;
  out.precision(17);
  out << "Minimize\n obj:";
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.cost[j] == 0.0) continue;
    out << (p.cost[j] >= 0 ? " + " : " - ") << std::abs(p.cost[j]) << " x"
        << j;
  }
  out << "\nSubject To\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    out << " c" << i << ":";
    for (auto [v, a] : p.row_terms[i])
      out << (a >= 0 ? " + " : " - ") << std::abs(a) << " x" << v;
    switch (p.rows[i].sense) {
      case Sense::le: out << " <= "; break;
      case Sense::ge: out << " >= "; break;
      case Sense::eq: out << " = "; break;
    }
    out << p.rows[i].rhs << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < p.num_vars(); ++j) {
    const double lo = p.lower[j], hi = p.upper[j];
    if (!std::isfinite(lo) && !std::isfinite(hi))
      out << " x" << j << " free\n";
    else if (!std::isfinite(lo))
      out << " -inf <= x" << j << " <= " << hi << "\n";
    else if (!std::isfinite(hi))
      out << " x" << j << " >= " << lo << "\n";
    else
      out << " " << lo << " <= x" << j << " <= " << hi << "\n";
  }
  out << "End\n";
  return out.str();
}

}  // namespace anm::lp
