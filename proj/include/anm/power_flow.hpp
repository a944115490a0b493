#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "anm/network.hpp"

namespace anm {

class SingularBranch : public std::runtime_error {
 public:
  explicit SingularBranch(int idx)
      : std::runtime_error("branch " + std::to_string(idx) +
                           " has r = x = 0") {}
};

class NotConverged : public std::logic_error {
 public:
  NotConverged() : std::logic_error("power flow solution did not converge") {}
};

using Complex = std::complex<double>;

// 2x2 admittance block of one branch; flows follow from [I_ij; I_ji] =
// [[y_ff, y_ft], [y_tf, y_tt]] [V_i; V_j].
struct BranchBlock {
  int from = 0, to = 0;
  Complex y_ff, y_ft, y_tf, y_tt;
};

struct AdmittanceMatrix {
  int n = 0;
  std::vector<Complex> entries;  // row-major n*n
  std::vector<BranchBlock> branches;

  Complex& at(int i, int j) { return entries[i * n + j]; }
  const Complex& at(int i, int j) const { return entries[i * n + j]; }
};

struct BranchFlow {
  Complex i_ij, i_ji;  // currents at each end, p.u.
  Complex s_ij, s_ji;  // complex powers at each end, p.u.
};

struct PowerFlowSolution {
  std::vector<Complex> v;  // bus voltages, rectangular p.u.
  double slack_p = 0.0;
  double slack_q = 0.0;
  std::vector<BranchFlow> branch_flows;
  bool converged = false;
  int iterations = 0;
  double max_residual = 0.0;  // max power mismatch, p.u.
};

// Nodal admittance matrix per the standard pi-branch/off-nominal-tap model:
// off-diagonals -y/t* (sending) and -y/t (receiving); diagonals accumulate
// (y + y_sh)/|t|^2 over outgoing plus (y + y_sh) over incoming branches.
AdmittanceMatrix build_admittance(const NetworkSpec& spec);

// Newton-Raphson on the PQ mismatch equations with the slack bus voltage
// fixed at slack_v_magnitude * e^{j0}. Non-convergence is reported in the
// result, never thrown: downstream it marks a collapsed (terminal) grid.
PowerFlowSolution solve_power_flow(const AdmittanceMatrix& y,
                                   const std::vector<double>& bus_p,
                                   const std::vector<double>& bus_q,
                                   int slack_bus, double slack_v_magnitude,
                                   double tolerance = 1e-8,
                                   int max_iterations = 50);

// Recomputes branch currents/powers for given voltages (the per-branch 2x2
// current relation).
std::vector<BranchFlow> branch_flows(const NetworkSpec& spec,
                                     const std::vector<Complex>& v);

// (|S_ij|, |S_ji|) per branch. Throws NotConverged on an unconverged input.
std::vector<std::pair<double, double>> branch_apparent_flows(
    const PowerFlowSolution& solution);

}  // namespace anm
