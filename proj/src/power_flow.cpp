#include "anm/power_flow.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace anm {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<BranchBlock> branch_blocks(const NetworkSpec& spec) {
  std::vector<BranchBlock> out;
  out.reserve(spec.branches.size());
  for (int i = 0; i < static_cast<int>(spec.branches.size()); ++i) {
    const auto& e = spec.branches[i];
    if (e.r == 0.0 && e.x == 0.0) throw SingularBranch(i);
    const Complex y = 1.0 / Complex(e.r, e.x);
    const Complex y_sh(0.0, e.b / 2.0);
    const double shift = e.shift_deg * kPi / 180.0;
    const Complex t = std::polar(e.tap, shift);
    BranchBlock ba;
    ba.from = e.from_bus;
    ba.to = e.to_bus;
    ba.y_ff = (y + y_sh) / (std::abs(t) * std::abs(t));
    ba.y_ft = -y / std::conj(t);
    ba.y_tf = -y / t;
    ba.y_tt = y + y_sh;
    out.push_back(ba);
  }
  return out;
}

}  // namespace

std::vector<BranchFlow> flows_for(const std::vector<BranchBlock>& blocks,
                                  const std::vector<Complex>& v);

AdmittanceMatrix build_admittance(const NetworkSpec& spec) {
  AdmittanceMatrix y;
  y.n = static_cast<int>(spec.buses.size());
  y.entries.assign(static_cast<size_t>(y.n) * y.n, Complex(0, 0));
  y.branches = branch_blocks(spec);
  for (const auto& ba : y.branches) {
    y.at(ba.from, ba.to) += ba.y_ft;
    y.at(ba.to, ba.from) += ba.y_tf;
    y.at(ba.from, ba.from) += ba.y_ff;
    y.at(ba.to, ba.to) += ba.y_tt;
  }
  return y;
}

PowerFlowSolution solve_power_flow(const AdmittanceMatrix& y,
                                   const std::vector<double>& bus_p,
                                   const std::vector<double>& bus_q,
                                   int slack_bus, double slack_v_magnitude,
                                   double tolerance, int max_iterations) {
  const int n = y.n;
  PowerFlowSolution sol;
  sol.v.assign(n, Complex(slack_v_magnitude, 0.0));

  std::vector<int> pq;  // every non-slack bus is a PQ bus
  for (int i = 0; i < n; ++i)
    if (i != slack_bus) pq.push_back(i);
  const int m = static_cast<int>(pq.size());

  std::vector<double> vm(n, slack_v_magnitude), va(n, 0.0);
  Eigen::MatrixXd jac(2 * m, 2 * m);
  Eigen::VectorXd rhs(2 * m);

  auto current = [&](const std::vector<Complex>& v, int i) {
    Complex acc(0, 0);
    for (int j = 0; j < n; ++j) acc += y.at(i, j) * v[j];
    return acc;
  };

  for (int it = 0; it <= max_iterations; ++it) {
    for (int i = 0; i < n; ++i) sol.v[i] = std::polar(vm[i], va[i]);
    std::vector<Complex> ibus(n);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) ibus[i] = current(sol.v, i);
    for (int k = 0; k < m; ++k) {
      const int i = pq[k];
      const Complex mis =
          Complex(bus_p[i], bus_q[i]) - sol.v[i] * std::conj(ibus[i]);
      rhs(k) = mis.real();
      rhs(k + m) = mis.imag();
      worst = std::max(worst, std::abs(mis));
    }
    sol.iterations = it;
    sol.max_residual = worst;
    if (!std::isfinite(worst)) return sol;  // diverged
    if (worst < tolerance) {
      sol.converged = true;
      const Complex s_slack =
          sol.v[slack_bus] * std::conj(current(sol.v, slack_bus));
      sol.slack_p = s_slack.real();
      sol.slack_q = s_slack.imag();
      sol.branch_flows = flows_for(y.branches, sol.v);
      return sol;
    }
    if (it == max_iterations) return sol;

    for (int a = 0; a < m; ++a) {
      const int i = pq[a];
      for (int b = 0; b < m; ++b) {
        const int j = pq[b];
        Complex ds_da, ds_dm;
        if (i == j) {
          ds_da = Complex(0, 1) * sol.v[i] *
                  std::conj(ibus[i] - y.at(i, i) * sol.v[i]);
          ds_dm = sol.v[i] / vm[i] * std::conj(ibus[i]) +
                  std::conj(y.at(i, i)) * vm[i];
        } else {
          ds_da = -Complex(0, 1) * sol.v[i] * std::conj(y.at(i, j) * sol.v[j]);
          ds_dm = sol.v[i] * std::conj(y.at(i, j) * sol.v[j]) / vm[j];
        }
        jac(a, b) = ds_da.real();
        jac(a, b + m) = ds_dm.real();
        jac(a + m, b) = ds_da.imag();
        jac(a + m, b + m) = ds_dm.imag();
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd dx = lu.solve(rhs);
    if (!dx.allFinite()) return sol;
    for (int k = 0; k < m; ++k) {
      va[pq[k]] += dx(k);
      vm[pq[k]] += dx(k + m);
      if (vm[pq[k]] < 1e-9) return sol;  // numerical collapse
    }
  }
  return sol;
}

std::vector<BranchFlow> flows_for(const std::vector<BranchBlock>& blocks,
                                  const std::vector<Complex>& v) {
  std::vector<BranchFlow> out;
  for (const auto& ba : blocks) {
    BranchFlow f;
    f.i_ij = ba.y_ff * v[ba.from] + ba.y_ft * v[ba.to];
    f.i_ji = ba.y_tf * v[ba.from] + ba.y_tt * v[ba.to];
    f.s_ij = v[ba.from] * std::conj(f.i_ij);
    f.s_ji = v[ba.to] * std::conj(f.i_ji);
    out.push_back(f);
  }
  return out;
}

std::vector<BranchFlow> branch_flows(const NetworkSpec& spec,
                                     const std::vector<Complex>& v) {
  return flows_for(branch_blocks(spec), v);
}

std::vector<std::pair<double, double>> branch_apparent_flows(
    const PowerFlowSolution& solution) {
  if (!solution.converged) throw NotConverged();
  std::vector<std::pair<double, double>> out;
  out.reserve(solution.branch_flows.size());
  for (const auto& f : solution.branch_flows)
    out.emplace_back(std::abs(f.s_ij), std::abs(f.s_ji));
  return out;
}

}  // namespace anm
