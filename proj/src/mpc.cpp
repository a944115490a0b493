#include "anm/mpc.hpp"

#include <cmath>
#include <limits>

namespace anm::mpc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

}  // namespace

Forecast forecast_constant(const NetworkSpec& spec, const GridState& state,
                           int horizon) {
  Forecast fc;
  fc.horizon = horizon;
  std::vector<double> loads;
  for (int l : spec.load_ids()) loads.push_back(state.dev_p[l]);
  fc.load_p.assign(horizon, loads);
  fc.gen_p_max.assign(horizon, state.gen_p_max);
  return fc;
}

Forecast forecast_perfect(const anm6::DailySeries& pu_series, int aux0,
                          int horizon) {
  Forecast fc;
  fc.horizon = horizon;
  fc.load_p.resize(horizon);
  fc.gen_p_max.resize(horizon);
  for (int k = 0; k < horizon; ++k) {
    const int idx = (aux0 + 1 + k) % anm6::kSlotsPerDay;
    for (const auto& series : pu_series.load_p)
      fc.load_p[k].push_back(series[idx]);
    for (const auto& series : pu_series.gen_p_max)
      fc.gen_p_max[k].push_back(series[idx]);
  }
  return fc;
}

MpcProblem build_dcopf(const NetworkSpec& spec, const GridState& state,
                       const Forecast& forecast, const MpcConfig& cfg,
                       double gamma, double delta_t) {
  const int N = cfg.horizon;
  MpcProblem mp;
  mp.stages = N;
  lp::Problem& p = mp.problem;

  const auto loads = spec.load_ids();
  const auto gens = spec.gen_ids();
  const auto des = spec.des_ids();
  const int slack_dev = spec.slack_device();
  const int slack_bus = spec.slack_bus();
  const int n_bus = static_cast<int>(spec.buses.size());
  const int n_dev = static_cast<int>(spec.devices.size());
  const int n_br = static_cast<int>(spec.branches.size());

  mp.dev_p.assign(N, std::vector<int>(n_dev, -1));
  mp.theta.assign(N, std::vector<int>(n_bus, -1));
  mp.charge.assign(N, {});
  mp.discharge.assign(N, {});
  mp.soc.assign(N, {});
  mp.overflow.assign(N, {});
  mp.soc_link_row.assign(des.size(), -1);

  double weight = 1.0;
  for (int k = 0; k < N; ++k, weight *= gamma) {
    // device active powers
    for (int d = 0; d < n_dev; ++d) {
      const auto& dev = spec.devices[d];
      double lo, hi, cost = 0.0;
      if (d == slack_dev) {
        // The classical fleet (here: the slack unit) carries the energy
        // cost; it is modelled as generation-only, so the plan never sells
        // surplus upstream -- surplus must be stored or curtailed instead.
        lo = 0.0;
        hi = kInf;
        cost = weight;
      } else if (dev.is_load()) {
        lo = hi = 0.0;  // pinned to the forecast by apply-forecast
      } else if (dev.is_generator()) {
        lo = dev.p_min.value();
        hi = dev.p_max.value();
        // Renewables enter through the retained curtailment term
        // sum(P_max - P); classical generators through their output.
        cost = dev.is_renewable() ? -weight : weight;
      } else {  // storage
        lo = dev.p_min.value();
        hi = dev.p_max.value();
      }
      mp.dev_p[k][d] = p.add_variable(lo, hi, cost);
    }
    // angles; the slack angle is the reference
    for (int b = 0; b < n_bus; ++b) {
      mp.theta[k][b] = b == slack_bus ? p.add_variable(0.0, 0.0, 0.0)
                                      : p.add_variable(-kPi, kPi, 0.0);
    }
    // Storage split + SoC. Cycling is priced at the round-trip dissipation
    // rate: a charge/discharge pair then costs 1 + eta^2 per unit of surplus
    // it could dissipate, which exceeds the unit saving on the curtailment
    // term, so the plan never burns surplus through the store.
    for (int j = 0; j < static_cast<int>(des.size()); ++j) {
      const auto& dev = spec.devices[des[j]];
      const double eta = dev.efficiency.value();
      const double cycle_price = weight * (1.0 - eta * eta);
      mp.charge[k].push_back(
          p.add_variable(0.0, -dev.p_min.value(), cycle_price));
      mp.discharge[k].push_back(
          p.add_variable(0.0, dev.p_max.value(), cycle_price));
      mp.soc[k].push_back(
          p.add_variable(dev.soc_min.value(), dev.soc_max.value(), 0.0));
    }
    // overflow slacks
    for (int e = 0; e < n_br; ++e)
      mp.overflow[k].push_back(p.add_variable(0.0, kInf, weight * cfg.lambda));

    // nodal balance with B_ij = 1/x_ij
    for (int b = 0; b < n_bus; ++b) {
      const int row = p.add_row(lp::Sense::eq, 0.0);
      for (int d : spec.devices_at(b)) p.add_term(row, mp.dev_p[k][d], 1.0);
      for (const auto& br : spec.branches) {
        if (br.from_bus != b && br.to_bus != b) continue;
        const int other = br.from_bus == b ? br.to_bus : br.from_bus;
        const double susceptance = 1.0 / br.x;
        p.add_term(row, mp.theta[k][b], -susceptance);
        p.add_term(row, mp.theta[k][other], susceptance);
      }
    }
    // storage: net injection split and SoC recursion
    for (int j = 0; j < static_cast<int>(des.size()); ++j) {
      const auto& dev = spec.devices[des[j]];
      const double eta = dev.efficiency.value();
      const int link = p.add_row(lp::Sense::eq, 0.0);
      p.add_term(link, mp.dev_p[k][des[j]], 1.0);
      p.add_term(link, mp.discharge[k][j], -1.0);
      p.add_term(link, mp.charge[k][j], 1.0);

      const int rec = p.add_row(lp::Sense::eq, 0.0);
      p.add_term(rec, mp.soc[k][j], 1.0);
      p.add_term(rec, mp.charge[k][j], -delta_t * eta);
      p.add_term(rec, mp.discharge[k][j], delta_t / eta);
      if (k == 0) {
        mp.soc_link_row[j] = rec;  // rhs carries the live SoC
      } else {
        p.add_term(rec, mp.soc[k - 1][j], -1.0);
      }
    }
    // branch overflow in both directions: s >= |B(th_i - th_j)| - beta*rate
    for (int e = 0; e < n_br; ++e) {
      const auto& br = spec.branches[e];
      const double susceptance = 1.0 / br.x;
      const double cap = cfg.beta * br.s_max;
      for (double sign : {1.0, -1.0}) {
        const int row = p.add_row(lp::Sense::le, cap);
        p.add_term(row, mp.theta[k][br.from_bus], sign * susceptance);
        p.add_term(row, mp.theta[k][br.to_bus], -sign * susceptance);
        p.add_term(row, mp.overflow[k][e], -1.0);
      }
    }
  }

  // forecast-dependent data
  weight = 1.0;
  for (int k = 0; k < N; ++k, weight *= gamma) {
    for (size_t i = 0; i < loads.size(); ++i) {
      const double v = forecast.load_p[k][i];
      p.lower[mp.dev_p[k][loads[i]]] = v;
      p.upper[mp.dev_p[k][loads[i]]] = v;
    }
    for (size_t g = 0; g < gens.size(); ++g) {
      const auto& dev = spec.devices[gens[g]];
      const double cap =
          std::min(dev.p_max.value(), forecast.gen_p_max[k][g]);
      p.upper[mp.dev_p[k][gens[g]]] = std::max(cap, dev.p_min.value());
      if (dev.is_renewable())
        mp.objective_constant += weight * forecast.gen_p_max[k][g];
    }
  }
  for (size_t j = 0; j < des.size(); ++j)
    p.rows[mp.soc_link_row[j]].rhs = state.soc[j];
  return mp;
}

std::vector<double> solve_lp(MpcProblem& mp, double tolerance) {
  (void)tolerance;  // the solver's pivot tolerances subsume it
  const lp::Solution sol = lp::solve(mp.problem);
  if (sol.status == lp::SolveStatus::infeasible)
    throw InfeasibleModel("multi-stage DCOPF is infeasible");
  if (sol.status != lp::SolveStatus::optimal)
    throw InfeasibleModel("LP solver failed");
  std::vector<double> out;
  for (int idx : mp.dev_p[0]) out.push_back(sol.x[idx]);
  return out;
}

MpcPolicy::MpcPolicy(NetworkSpec pu_spec, MpcConfig cfg, double gamma,
                     double delta_t, std::optional<anm6::DailySeries> series)
    : spec_(std::move(pu_spec)),
      cfg_(cfg),
      gamma_(gamma),
      delta_t_(delta_t),
      series_(std::move(series)) {
  if (!spec_.per_unit)
    throw std::invalid_argument("MpcPolicy expects a per-unit network");
  if (cfg_.forecast_mode == ForecastMode::perfect && !series_)
    throw std::invalid_argument("perfect forecasts need the daily series");
  load_ids_ = spec_.load_ids();
  gen_ids_ = spec_.gen_ids();
  des_ids_ = spec_.des_ids();
}

void MpcPolicy::apply_forecast(const GridState& state, const Forecast& fc) {
  lp::Problem& p = prob_.problem;
  prob_.objective_constant = 0.0;
  double weight = 1.0;
  for (int k = 0; k < prob_.stages; ++k, weight *= gamma_) {
    for (size_t i = 0; i < load_ids_.size(); ++i) {
      const int var = prob_.dev_p[k][load_ids_[i]];
      p.lower[var] = p.upper[var] = fc.load_p[k][i];
      if (solver_) solver_->set_bounds(var, fc.load_p[k][i], fc.load_p[k][i]);
    }
    for (size_t g = 0; g < gen_ids_.size(); ++g) {
      const auto& dev = spec_.devices[gen_ids_[g]];
      const int var = prob_.dev_p[k][gen_ids_[g]];
      const double cap =
          std::max(std::min(dev.p_max.value(), fc.gen_p_max[k][g]),
                   dev.p_min.value());
      p.upper[var] = cap;
      if (solver_) solver_->set_bounds(var, dev.p_min.value(), cap);
      if (dev.is_renewable())
        prob_.objective_constant += weight * fc.gen_p_max[k][g];
    }
  }
  for (size_t j = 0; j < des_ids_.size(); ++j) {
    p.rows[prob_.soc_link_row[j]].rhs = state.soc[j];
    if (solver_) solver_->set_rhs(prob_.soc_link_row[j], state.soc[j]);
  }
}

Action MpcPolicy::act(const GridState& state) {
  const Forecast fc =
      cfg_.forecast_mode == ForecastMode::constant
          ? forecast_constant(spec_, state, cfg_.horizon)
          : forecast_perfect(*series_, static_cast<int>(std::lround(
                                           state.aux.empty() ? 0.0
                                                             : state.aux[0])),
                             cfg_.horizon);
  if (!solver_) {
    prob_ = build_dcopf(spec_, state, fc, cfg_, gamma_, delta_t_);
    solver_.emplace(prob_.problem);
  } else {
    apply_forecast(state, fc);
  }

  Action a;
  a.gen_p.assign(gen_ids_.size(), 0.0);
  a.gen_q.assign(gen_ids_.size(), 0.0);
  a.des_p.assign(des_ids_.size(), 0.0);
  a.des_q.assign(des_ids_.size(), 0.0);

  const lp::Solution sol = solver_->solve();
  if (sol.status != lp::SolveStatus::optimal) {
    // Fall back to the zero action and rebuild cold next step.
    ++solver_failures_;
    solver_.reset();
    return a;
  }
  for (size_t g = 0; g < gen_ids_.size(); ++g)
    a.gen_p[g] = sol.x[prob_.dev_p[0][gen_ids_[g]]];
  for (size_t j = 0; j < des_ids_.size(); ++j)
    a.des_p[j] = sol.x[prob_.dev_p[0][des_ids_[j]]];
  return a;
}

}  // namespace anm::mpc
