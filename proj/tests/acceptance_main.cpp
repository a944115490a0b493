// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Criteria 1-3 run the full published evaluation protocol and take the bulk
// of the wall time; ANM_ACCEPT_FAST=1 shrinks them for development runs and
// is clearly marked in the output (a fast run is not an acceptance run).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "anm/anm6.hpp"
#include "anm/environment.hpp"
#include "anm/eval.hpp"
#include "anm/mpc.hpp"
#include "anm/network.hpp"
#include "anm/power_flow.hpp"
#include "anm/regions.hpp"

using namespace anm;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << "CRITERION " << criterion << ": " << (pass ? "PASS" : "FAIL")
            << " - " << detail << std::endl;
  if (!pass) ++failures;
}

struct Cell {
  double mean = 0.0;
  double stddev = 0.0;
};

Cell run_cell(const std::string& policy, int n, double beta, int rollouts,
              int horizon, const std::vector<std::uint64_t>& seeds) {
  eval::EvalConfig cfg;
  cfg.policy = policy;
  cfg.mpc.horizon = n;
  cfg.mpc.beta = beta;
  cfg.rollouts = rollouts;
  cfg.horizon = horizon;
  cfg.seeds = seeds;
  const auto rep = eval::evaluate(cfg, eval::environment_factory("anm6-easy"),
                                  eval::policy_factory(cfg), 0);
  return {rep.mean, rep.stddev};
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(prec);
  out << v;
  return out.str();
}

// --- criterion 5 helper: brute-force grid oracle at 1e-4 p.u. -------------
PQPoint scan_rect(const OperatingRegion& region, PQPoint want, double plo,
                  double phi, double qlo, double qhi, double resolution) {
  PQPoint best{0, 0};
  double bd = 1e30;
  const int np = std::max(1, static_cast<int>((phi - plo) / resolution));
  const int nq = std::max(1, static_cast<int>((qhi - qlo) / resolution));
  for (int i = 0; i <= np; ++i) {
    for (int j = 0; j <= nq; ++j) {
      const PQPoint pt{plo + (phi - plo) * i / np, qlo + (qhi - qlo) * j / nq};
      if (!region.contains(pt, 1e-12)) continue;
      const double d = std::hypot(pt.p - want.p, pt.q - want.q);
      if (d < bd) {
        bd = d;
        best = pt;
      }
    }
  }
  return best;
}

PQPoint grid_oracle(const OperatingRegion& region, PQPoint want) {
  double plo = 1e18, phi = -1e18, qlo = 1e18, qhi = -1e18;
  for (const auto& v : region.vertices()) {
    plo = std::min(plo, v.p);
    phi = std::max(phi, v.p);
    qlo = std::min(qlo, v.q);
    qhi = std::max(qhi, v.q);
  }
  const double coarse = std::max((phi - plo), (qhi - qlo)) / 300.0;
  const PQPoint c = scan_rect(region, want, plo, phi, qlo, qhi, coarse);
  const double pad = 3.0 * coarse;
  return scan_rect(region, want, std::max(plo, c.p - pad),
                   std::min(phi, c.p + pad), std::max(qlo, c.q - pad),
                   std::min(qhi, c.q + pad), 0.25e-4);
}

void criterion_1_2_3(bool fast) {
  const int horizon = fast ? 500 : 3000;
  const int rollouts = fast ? 2 : 5;
  const std::vector<std::uint64_t> seeds =
      fast ? std::vector<std::uint64_t>{1, 2}
           : std::vector<std::uint64_t>{1, 2, 3, 4, 5};
  const std::string tag = fast ? " [FAST MODE: not an acceptance run]" : "";

  std::map<std::pair<std::string, int>, Cell> cells;
  for (int n : {8, 16, 32})
    cells[{"mpc-perfect", n}] =
        run_cell("mpc-perfect", n, 0.94, rollouts, horizon, seeds);
  for (int n : {8, 16, 32})
    cells[{"mpc-constant", n}] =
        run_cell("mpc-constant", n, 0.92, rollouts, horizon, seeds);

  {
    const Cell c = cells[{"mpc-perfect", 32}];
    const double target = -14.7, tol = 0.15 * std::abs(target);
    const bool pass = std::abs(c.mean - target) <= tol;
    report(1, pass,
           "perfect MPC-32 beta=0.94: mean=" + fmt(c.mean) +
               " std=" + fmt(c.stddev) + " target=-14.7 +/- " + fmt(tol) +
               tag);
  }
  {
    const Cell c16 = cells[{"mpc-constant", 16}];
    const double target = -129.1, tol = 0.05 * std::abs(target);
    const bool in_band = std::abs(c16.mean - target) <= tol;
    const double m8 = cells[{"mpc-constant", 8}].mean;
    const double m16 = c16.mean;
    const double m32 = cells[{"mpc-constant", 32}].mean;
    const double spread =
        std::max({m8, m16, m32}) - std::min({m8, m16, m32});
    const bool flat = spread <= 1.0;
    report(2, in_band && flat,
           "constant MPC-16 beta=0.92: mean=" + fmt(m16) + " target=-129.1 +/- " +
               fmt(tol) + " (in-band: " + (in_band ? "yes" : "no") +
               "); N-row means " + fmt(m8) + "/" + fmt(m16) + "/" + fmt(m32) +
               " spread=" + fmt(spread) + " (flat<=1.0: " +
               (flat ? "yes" : "no") + ")" + tag);
  }
  {
    const Cell c8 = cells[{"mpc-perfect", 8}];
    const Cell c16 = cells[{"mpc-perfect", 16}];
    const Cell c32 = cells[{"mpc-perfect", 32}];
    const bool ordered = c8.mean < c16.mean && c16.mean < c32.mean;
    const double pooled_a =
        std::sqrt((c8.stddev * c8.stddev + c16.stddev * c16.stddev) / 2.0);
    const double pooled_b =
        std::sqrt((c16.stddev * c16.stddev + c32.stddev * c32.stddev) / 2.0);
    const double gap_a = c16.mean - c8.mean;
    const double gap_b = c32.mean - c16.mean;
    const bool strong = gap_a > 3.0 * pooled_a && gap_b > 3.0 * pooled_b;
    report(3, ordered && strong,
           "perfect MPC means N=8/16/32: " + fmt(c8.mean) + "/" +
               fmt(c16.mean) + "/" + fmt(c32.mean) + "; gaps " + fmt(gap_a) +
               "," + fmt(gap_b) + " vs 3x pooled std " + fmt(3 * pooled_a) +
               "," + fmt(3 * pooled_b) + tag);
  }
}

void criterion_4() {
  const NetworkSpec pu = to_per_unit(anm6::build_anm6_network());
  const auto y = build_admittance(pu);
  Rng rng(1234);
  int converged = 0, checked = 0;
  double worst_res = 0.0, worst_bal = 0.0;
  for (int k = 0; k < 1000; ++k) {
    // random feasible device injections: loads in range with fixed power
    // factor, generators inside their capability polygons, storage in box
    std::vector<double> dev_p(7, 0.0), dev_q(7, 0.0);
    const NetworkSpec& s = pu;
    for (int l : s.load_ids()) {
      dev_p[l] = rng.uniform(s.devices[l].p_min.value(), 0.0);
      dev_q[l] = dev_p[l] * s.devices[l].qp_ratio.value();
    }
    for (int g : s.gen_ids()) {
      const double pmax = s.devices[g].p_max.value();
      const auto region = gen_region(s.devices[g], pmax);
      const PQPoint pt = region.project(
          {rng.uniform(0.0, pmax),
           rng.uniform(s.devices[g].q_min.value(), s.devices[g].q_max.value())});
      dev_p[g] = pt.p;
      dev_q[g] = pt.q;
    }
    for (int d : s.des_ids()) {
      const auto region = des_region(s.devices[d], 0.5, 0.25);
      const PQPoint pt = region.project(
          {rng.uniform(s.devices[d].p_min.value(), s.devices[d].p_max.value()),
           rng.uniform(s.devices[d].q_min.value(), s.devices[d].q_max.value())});
      dev_p[d] = pt.p;
      dev_q[d] = pt.q;
    }
    std::vector<double> bp(6, 0.0), bq(6, 0.0);
    for (int d = 1; d < 7; ++d) {
      bp[s.devices[d].bus] += dev_p[d];
      bq[s.devices[d].bus] += dev_q[d];
    }
    const auto sol = solve_power_flow(y, bp, bq, 0, 1.04);
    ++checked;
    if (!sol.converged) continue;
    ++converged;
    worst_res = std::max(worst_res, sol.max_residual);
    double injected = 0.0;
    for (int i = 1; i < 6; ++i) injected += bp[i];
    double losses = 0.0;
    for (const auto& f : sol.branch_flows) losses += (f.s_ij + f.s_ji).real();
    worst_bal = std::max(worst_bal,
                         std::abs(sol.slack_p - (-injected + losses)));
  }
  const bool pass = worst_res <= 1e-8 && worst_bal <= 1e-7 && converged > 0;
  report(4, pass,
         fmt(100.0 * converged / checked, 1) +
             "% of 1000 random injection vectors converged; max residual=" +
             fmt(worst_res * 1e9, 3) + "e-9, max slack-balance error=" +
             fmt(worst_bal * 1e9, 3) + "e-9");
}

void criterion_5() {
  const NetworkSpec pu = to_per_unit(anm6::build_anm6_network());
  Rng rng(987);
  double worst = 0.0;
  bool idempotent = true;
  int count = 0;
  for (int dev_id : {2, 4, 6}) {
    const auto& dev = pu.devices[dev_id];
    const OperatingRegion region =
        dev_id == 6 ? des_region(dev, rng.uniform(0.0, 1.0), 0.25)
                    : gen_region(dev, dev.p_max.value());
    for (int k = 0; k < 500; ++k) {
      const PQPoint want{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      const PQPoint got = region.project(want);
      const PQPoint oracle = grid_oracle(region, want);
      worst = std::max(worst, std::hypot(got.p - oracle.p, got.q - oracle.q));
      const PQPoint again = region.project(got);
      idempotent = idempotent && again.p == got.p && again.q == got.q;
      ++count;
    }
  }
  const bool pass = worst <= 2e-4 && idempotent;
  report(5, pass,
         std::to_string(count) + " projections vs grid oracle: worst gap=" +
             fmt(worst * 1e4, 3) + "e-4 pu (limit 2e-4); idempotence " +
             (idempotent ? "exact" : "violated"));
}

void criterion_6() {
  Rng rng(555);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    DeviceSpec dev;
    dev.dev_type = DeviceType::des;
    const double eta = rng.uniform(0.5, 1.0);
    dev.efficiency = eta;
    const double delta_e = rng.uniform(0.01, 3.0);
    const double dt = 0.25;
    const double soc1 = soc_update(dev, 0.0, -delta_e / dt, dt);
    const double p_dis = soc1 * eta / dt;  // empties the store in one step
    const double soc2 = soc_update(dev, soc1, p_dis, dt);
    const double cost = delta_e - p_dis * dt;
    worst = std::max(worst, std::abs(cost - (1 - eta * eta) * delta_e));
    worst = std::max(worst, std::abs(soc2));
  }
  report(6, worst <= 1e-9,
         "100 random charge/discharge round trips: worst deviation from "
         "(1-eta^2)*dE = " +
             fmt(worst * 1e12, 3) + "e-12");
}

void criterion_7() {
  long long steps = 0;
  int terminals = 0;
  bool bounds_ok = true, terminal_ok = true, post_ok = true;
  std::uint64_t seed = 1;
  while (steps < 100000) {
    Environment env = anm6::make_env(seed);
    eval::RandomPolicy policy(seed);
    env.reset(seed);
    ++seed;
    for (int t = 0; t < 5000 && steps < 100000; ++t) {
      const Action a = policy.act(env, env.state());
      const StepResult r = env.step(a);
      ++steps;
      if (r.done) {
        ++terminals;
        // "-20000 exactly": the annuity -r_clip/(1-gamma) evaluated in
        // doubles; equality is checked against that exact expression
        terminal_ok = terminal_ok && r.reward == -100.0 / (1.0 - 0.995) &&
                      std::abs(r.reward + 20000.0) < 1e-6;
        // post-terminal contract
        for (int k = 0; k < 3; ++k) {
          const StepResult post = env.step(a);
          post_ok = post_ok && post.reward == 0.0 && post.done;
        }
        break;
      }
      bounds_ok = bounds_ok && r.reward >= -100.0 && r.reward <= 100.0;
    }
  }
  report(7, bounds_ok && terminal_ok && post_ok,
         std::to_string(steps) + " random-policy steps; " +
             std::to_string(terminals) +
             " terminal transitions; bounds/terminal/post-terminal: " +
             (bounds_ok ? "ok" : "VIOLATED") + "/" +
             (terminal_ok ? "ok" : "VIOLATED") + "/" +
             (post_ok ? "ok" : "VIOLATED"));
}

void criterion_8() {
  eval::EvalConfig cfg;
  cfg.policy = "random";
  cfg.rollouts = 1;
  cfg.horizon = 3000;
  cfg.seeds = {1};
  const auto rep = eval::evaluate(cfg, eval::environment_factory("anm6-easy"),
                                  eval::policy_factory(cfg), 1);
  report(8, rep.truncation_bound < 1e-2,
         "harness-reported truncation bound for T=3000: " +
             fmt(rep.truncation_bound, 8) + " (< 1e-2)");
}

void criterion_9() {
  // cell-by-cell comparison of the shipped documents against the published
  // tables, typed independently here
  bool pass = true;
  std::ostringstream why;
  try {
    std::ifstream in("data/anm6_easy.json");
    if (!in) {
      // running from a different cwd: fall back to the source-tree path
      in.open(std::string(ANM_SOURCE_DIR) + "/data/anm6_easy.json");
    }
    const NetworkSpec spec = parse_network(in);
    const double bus[6][5] = {{0, 0, 132, 1.04, 1.04}, {1, 1, 33, 1.1, 0.9},
                              {2, 1, 33, 1.1, 0.9},    {3, 1, 33, 1.1, 0.9},
                              {4, 1, 33, 1.1, 0.9},    {5, 1, 33, 1.1, 0.9}};
    for (int i = 0; i < 6; ++i) {
      pass = pass && spec.buses[i].base_kv == bus[i][2] &&
             spec.buses[i].v_max == bus[i][3] && spec.buses[i].v_min == bus[i][4];
    }
    const double branch[5][8] = {{0, 1, 0.0036, 0.1834, 0, 32, 1, 0},
                                 {1, 2, 0.03, 0.022, 0, 25, 1, 0},
                                 {1, 3, 0.0307, 0.0621, 0, 18, 1, 0},
                                 {2, 4, 0.0303, 0.0611, 0, 18, 1, 0},
                                 {2, 5, 0.0159, 0.0502, 0, 18, 1, 0}};
    for (int e = 0; e < 5; ++e) {
      const auto& br = spec.branches[e];
      pass = pass && br.from_bus == branch[e][0] && br.to_bus == branch[e][1] &&
             br.r == branch[e][2] && br.x == branch[e][3] &&
             br.b == branch[e][4] && br.s_max == branch[e][5] &&
             br.tap == branch[e][6] && br.shift_deg == branch[e][7];
    }
    auto opt_eq = [](const std::optional<double>& o, double v) {
      return v == -9999.0 ? !o.has_value() : (o && *o == v);
    };
    const double dev[7][12] = {
        {-9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999},
        {0.2, 0, -10, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999},
        {-9999, 30, 0, 30, -30, 20, -9999, 15, -15, -9999, -9999, -9999},
        {0.2, 0, -30, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999},
        {-9999, 50, 0, 50, -50, 35, -9999, 20, -20, -9999, -9999, -9999},
        {0.2, 0, -30, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999, -9999},
        {-9999, 50, -50, 50, -50, 30, -30, 25, -25, 100, 0, 0.9}};
    for (int d = 0; d < 7; ++d) {
      const auto& x = spec.devices[d];
      pass = pass && opt_eq(x.qp_ratio, dev[d][0]) &&
             opt_eq(x.p_max, dev[d][1]) && opt_eq(x.p_min, dev[d][2]) &&
             opt_eq(x.q_max, dev[d][3]) && opt_eq(x.q_min, dev[d][4]) &&
             opt_eq(x.p_plus, dev[d][5]) && opt_eq(x.p_minus, dev[d][6]) &&
             opt_eq(x.q_plus, dev[d][7]) && opt_eq(x.q_minus, dev[d][8]) &&
             opt_eq(x.soc_max, dev[d][9]) && opt_eq(x.soc_min, dev[d][10]) &&
             opt_eq(x.efficiency, dev[d][11]);
    }
    // the series table is covered cell-by-cell by test_anm6; here compare
    // the shipped file to the builder byte-for-byte
    std::ifstream sf("data/anm6_series.json");
    if (!sf) sf.open(std::string(ANM_SOURCE_DIR) + "/data/anm6_series.json");
    std::string text((std::istreambuf_iterator<char>(sf)),
                     std::istreambuf_iterator<char>());
    pass = pass && text == anm6::anm6_series_json();
    if (!pass) why << "table mismatch";
  } catch (const std::exception& e) {
    pass = false;
    why << e.what();
  }
  report(9, pass, pass ? "shipped network and series match the published "
                         "tables byte-for-value"
                       : why.str());
}

}  // namespace

int main() {
  const bool fast = std::getenv("ANM_ACCEPT_FAST") != nullptr;
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_1_2_3(fast);
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
