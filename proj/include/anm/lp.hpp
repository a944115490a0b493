#pragma once

#include <string>
#include <vector>

namespace anm::lp {

enum class Sense { le, eq, ge };

enum class SolveStatus {
  optimal,
  infeasible,
  dual_infeasible,  // covers primal-unbounded instances
  iteration_limit,
  numerical_failure,
};

// min cost'x  s.t. rows, bounds. Infinite bounds are allowed.
struct Problem {
  std::vector<double> cost, lower, upper;
  struct Row {
    Sense sense;
    double rhs;
  };
  std::vector<Row> rows;
  std::vector<std::vector<std::pair<int, double>>> row_terms;

  int add_variable(double lo, double hi, double c);
  int add_row(Sense sense, double rhs);
  void add_term(int row, int var, double coeff);
  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
};

struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> x;  // structural variables
  std::vector<double> y;  // row duals
  int iterations = 0;
};

// Bounded-variable dual simplex with a dense basis inverse.
//
// The start basis is the slack basis; dual feasibility is established by
// placing each nonbasic at the bound matching its reduced-cost sign. A free
// variable with nonzero cost therefore yields dual_infeasible (such
// instances are primal-unbounded or need a different start, which this
// solver does not provide).
//
// The instance is reusable: set_rhs/set_bounds keep the factorized basis,
// so a re-solve after data changes runs a short warm-started dual pass.
// That is the receding-horizon fast path.
class DualSimplex {
 public:
  explicit DualSimplex(const Problem& p);

  void set_rhs(int row, double rhs);
  void set_bounds(int var, double lo, double hi);

  Solution solve(int max_iterations = 50000);

 private:
  Solution run(int max_iterations);
  void reset_to_slack_basis();
  enum class VarStatus : unsigned char { basic, at_lower, at_upper, free_zero };

  double bound_value(int col) const;
  void refactorize();
  bool price_and_status();  // recompute duals + start statuses; false if dual-infeasible

  int n_ = 0;  // structural
  int m_ = 0;  // rows (slack count)
  std::vector<double> cost_, lo_, hi_;
  std::vector<std::vector<std::pair<int, double>>> cols_;  // n_+m_ sparse cols
  std::vector<double> rhs_;

  std::vector<int> basis_;            // size m_, column index per row
  std::vector<VarStatus> status_;     // size n_+m_
  std::vector<double> binv_;          // dense m_*m_, row-major
  std::vector<double> xb_, duals_, y_;
  bool factorized_ = false;
  int pivots_since_refactor_ = 0;
};

Solution solve(const Problem& p, int max_iterations = 50000);

// CPLEX-LP-format dump for cross-checking against external solvers.
std::string to_lp_format(const Problem& p);

}  // namespace anm::lp
