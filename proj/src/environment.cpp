#include "anm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace anm {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct KeywordInfo {
  const char* name;
  std::vector<std::string> units;  // first entry is the default
};

const std::vector<KeywordInfo>& keyword_table() {
  static const std::vector<KeywordInfo> table = {
      {"bus_p", {"MW", "pu"}},          {"dev_p", {"MW", "pu"}},
      {"bus_q", {"MVAr", "pu"}},        {"dev_q", {"MVAr", "pu"}},
      {"bus_v_magn", {"pu", "kV"}},     {"bus_v_ang", {"degree", "rad"}},
      {"bus_i_magn", {"pu", "kA"}},     {"bus_i_ang", {"degree", "rad"}},
      {"branch_p", {"MW", "pu"}},       {"branch_q", {"MVAr", "pu"}},
      {"branch_s", {"MVA", "pu"}},      {"branch_i_magn", {"pu"}},
      {"branch_i_ang", {"degree", "rad"}}, {"des_soc", {"MWh", "pu"}},
      {"gen_p_max", {"MW", "pu"}},      {"aux", {""}},
  };
  return table;
}

const KeywordInfo* find_keyword(const std::string& name) {
  for (const auto& k : keyword_table())
    if (name == k.name) return &k;
  return nullptr;
}

double clip(double v, double lo, double hi) {
  return std::max(lo, std::min(hi, v));
}

}  // namespace

std::vector<double> GridState::to_vector() const {
  std::vector<double> out;
  out.reserve(dev_p.size() + dev_q.size() + soc.size() + gen_p_max.size() +
              aux.size());
  out.insert(out.end(), dev_p.begin(), dev_p.end());
  out.insert(out.end(), dev_q.begin(), dev_q.end());
  out.insert(out.end(), soc.begin(), soc.end());
  out.insert(out.end(), gen_p_max.begin(), gen_p_max.end());
  out.insert(out.end(), aux.begin(), aux.end());
  return out;
}

ObservationSpec ObservationSpec::of(std::vector<Entry> entries) {
  ObservationSpec spec;
  spec.full_state = false;
  spec.entries = std::move(entries);
  return spec;
}

EnergyLoss energy_loss(const NetworkSpec& spec, const GridState& next,
                       double delta_t) {
  EnergyLoss e;
  for (double p : next.dev_p) e.e1 += p;
  e.e1 *= delta_t;
  const auto des = spec.des_ids();
  for (int d : des) e.e2 -= next.dev_p[d];
  e.e2 *= delta_t;
  const auto gens = spec.gen_ids();
  for (size_t g = 0; g < gens.size(); ++g) {
    if (spec.devices[gens[g]].is_renewable())
      e.e3 += next.gen_p_max[g] - next.dev_p[gens[g]];
  }
  e.e3 *= delta_t;
  return e;
}

double penalty_phi(const NetworkSpec& spec, const PowerFlowSolution& pf,
                   double delta_t, double* v_violation, double* s_violation) {
  double v_sum = 0.0, s_sum = 0.0;
  for (size_t i = 0; i < spec.buses.size(); ++i) {
    const double vm = std::abs(pf.v[i]);
    v_sum += std::max(0.0, vm - spec.buses[i].v_max) +
             std::max(0.0, spec.buses[i].v_min - vm);
  }
  for (size_t e = 0; e < spec.branches.size(); ++e) {
    const double rate = spec.branches[e].s_max;
    const auto& f = pf.branch_flows[e];
    s_sum += std::max(
        {0.0, std::abs(f.s_ij) - rate, std::abs(f.s_ji) - rate});
  }
  if (v_violation) *v_violation = v_sum;
  if (s_violation) *s_violation = s_sum;
  return delta_t * (v_sum + s_sum);
}

Environment::Environment(NetworkSpec spec, EnvironmentConfig config,
                         InitStateFn init, NextVarsFn next_vars,
                         ObservationSpec obs, std::uint64_t seed)
    : spec_(spec.per_unit ? std::move(spec) : to_per_unit(spec)),
      config_(config),
      init_(std::move(init)),
      next_vars_(std::move(next_vars)),
      obs_(std::move(obs)),
      rng_(seed) {
  load_ids_ = spec_.load_ids();
  gen_ids_ = spec_.gen_ids();
  des_ids_ = spec_.des_ids();
  rer_ids_ = spec_.renewable_ids();
  ybus_ = build_admittance(spec_);
  const int slack = spec_.slack_bus();
  slack_v_ = config_.slack_v_magnitude > 0 ? config_.slack_v_magnitude
                                           : spec_.buses[slack].v_max;

  if (!obs_.full_state) {
    for (auto& e : obs_.entries) {
      const KeywordInfo* info = find_keyword(e.keyword);
      if (!info) throw UnknownKeyword("unknown keyword '" + e.keyword + "'");
      if (e.unit.empty()) e.unit = info->units.front();
      if (std::find(info->units.begin(), info->units.end(), e.unit) ==
          info->units.end())
        throw UnknownKeyword("unit '" + e.unit + "' not valid for keyword '" +
                             e.keyword + "'");
      const bool is_branch = e.keyword.rfind("branch_", 0) == 0;
      if (is_branch) {
        if (e.all) {
          e.branches.clear();
          for (const auto& br : spec_.branches)
            e.branches.emplace_back(br.from_bus, br.to_bus);
        }
        for (auto [f, t] : e.branches) {
          const bool ok =
              std::any_of(spec_.branches.begin(), spec_.branches.end(),
                          [&](const BranchSpec& br) {
                            return br.from_bus == f && br.to_bus == t;
                          });
          if (!ok)
            throw UnknownKeyword("branch (" + std::to_string(f) + "," +
                                 std::to_string(t) + ") does not exist");
        }
      } else {
        int count = 0;
        if (e.keyword.rfind("bus_", 0) == 0)
          count = static_cast<int>(spec_.buses.size());
        else if (e.keyword.rfind("dev_", 0) == 0)
          count = static_cast<int>(spec_.devices.size());
        else if (e.keyword == "des_soc")
          count = static_cast<int>(des_ids_.size());
        else if (e.keyword == "gen_p_max")
          count = static_cast<int>(gen_ids_.size());
        else if (e.keyword == "aux")
          count = config_.hp.aux_count;
        if (e.all) {
          e.ids.resize(count);
          for (int i = 0; i < count; ++i) e.ids[i] = i;
        }
        for (int id : e.ids)
          if (id < 0 || id >= count)
            throw UnknownKeyword("id " + std::to_string(id) +
                                 " out of range for '" + e.keyword + "'");
        if (e.keyword == "des_soc") {
          // accept device ids as well as DES-ordinal ids
          for (int& id : e.ids) {
            auto it = std::find(des_ids_.begin(), des_ids_.end(), id);
            if (it != des_ids_.end())
              id = static_cast<int>(it - des_ids_.begin());
          }
        }
      }
    }
  }
}

void Environment::aggregate_bus_injections(const GridState& s,
                                           std::vector<double>& p,
                                           std::vector<double>& q) const {
  p.assign(spec_.buses.size(), 0.0);
  q.assign(spec_.buses.size(), 0.0);
  const int slack_dev = spec_.slack_device();
  for (size_t d = 0; d < spec_.devices.size(); ++d) {
    if (static_cast<int>(d) == slack_dev) continue;
    p[spec_.devices[d].bus] += s.dev_p[d];
    q[spec_.devices[d].bus] += s.dev_q[d];
  }
}

std::vector<double> Environment::reset() {
  GridState s0 = init_(spec_, rng_);
  return post_reset(std::move(s0));
}

std::vector<double> Environment::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  return reset();
}

std::vector<double> Environment::post_reset(GridState s0) {
  // Map any out-of-region injection to the closest feasible point.
  for (size_t i = 0; i < load_ids_.size(); ++i) {
    const auto& dev = spec_.devices[load_ids_[i]];
    const auto region = load_region(dev);
    const PQPoint pt = region.project(
        {s0.dev_p[dev.id], s0.dev_q[dev.id]});
    s0.dev_p[dev.id] = pt.p;
    s0.dev_q[dev.id] = pt.q;
  }
  for (size_t g = 0; g < gen_ids_.size(); ++g) {
    const auto& dev = spec_.devices[gen_ids_[g]];
    const auto region = gen_region(dev, s0.gen_p_max[g]);
    const PQPoint pt = region.project({s0.dev_p[dev.id], s0.dev_q[dev.id]});
    s0.dev_p[dev.id] = pt.p;
    s0.dev_q[dev.id] = pt.q;
  }
  for (size_t k = 0; k < des_ids_.size(); ++k) {
    const auto& dev = spec_.devices[des_ids_[k]];
    const auto region = des_region(dev, s0.soc[k], config_.hp.delta_t);
    const PQPoint pt = region.project({s0.dev_p[dev.id], s0.dev_q[dev.id]});
    s0.dev_p[dev.id] = pt.p;
    s0.dev_q[dev.id] = pt.q;
  }

  std::vector<double> bus_p, bus_q;
  aggregate_bus_injections(s0, bus_p, bus_q);
  pf_ = solve_power_flow(ybus_, bus_p, bus_q, spec_.slack_bus(), slack_v_,
                         config_.pf_tolerance, config_.pf_max_iterations);
  if (!pf_.converged) throw InitCollapse();
  const int slack_dev = spec_.slack_device();
  s0.dev_p[slack_dev] = pf_.slack_p;
  s0.dev_q[slack_dev] = pf_.slack_q;
  s0.terminal = false;

  state_ = std::move(s0);
  has_state_ = true;
  last_obs_ = observation(state_, pf_);
  return last_obs_;
}

StepResult Environment::step(const Action& action) {
  if (!has_state_) throw NotReset();
  StepResult result;
  if (state_.terminal) {
    // "Subsequent rewards are always zero."
    result.observation = last_obs_;
    result.reward = 0.0;
    result.done = true;
    return result;
  }

  const NextVars nv = next_vars_(state_, rng_);
  GridState next = state_;
  next.aux = nv.aux;
  next.gen_p_max = nv.gen_p_max;

  double gap2 = 0.0;
  for (size_t i = 0; i < load_ids_.size(); ++i) {
    const auto& dev = spec_.devices[load_ids_[i]];
    const double p = clip(nv.load_p[i], dev.p_min.value(), 0.0);
    next.dev_p[dev.id] = p;
    next.dev_q[dev.id] = p * dev.qp_ratio.value();
  }
  for (size_t g = 0; g < gen_ids_.size(); ++g) {
    const auto& dev = spec_.devices[gen_ids_[g]];
    const auto region = gen_region(dev, next.gen_p_max[g]);
    const PQPoint req{action.gen_p[g], action.gen_q[g]};
    const PQPoint pt = region.project(req);
    gap2 += (req.p - pt.p) * (req.p - pt.p) + (req.q - pt.q) * (req.q - pt.q);
    next.dev_p[dev.id] = pt.p;
    next.dev_q[dev.id] = pt.q;
  }
  for (size_t k = 0; k < des_ids_.size(); ++k) {
    const auto& dev = spec_.devices[des_ids_[k]];
    const auto region = des_region(dev, state_.soc[k], config_.hp.delta_t);
    const PQPoint req{action.des_p[k], action.des_q[k]};
    const PQPoint pt = region.project(req);
    gap2 += (req.p - pt.p) * (req.p - pt.p) + (req.q - pt.q) * (req.q - pt.q);
    next.dev_p[dev.id] = pt.p;
    next.dev_q[dev.id] = pt.q;
  }
  result.info.action_gap = std::sqrt(gap2);

  std::vector<double> bus_p, bus_q;
  aggregate_bus_injections(next, bus_p, bus_q);
  const PowerFlowSolution pf =
      solve_power_flow(ybus_, bus_p, bus_q, spec_.slack_bus(), slack_v_,
                       config_.pf_tolerance, config_.pf_max_iterations);
  result.info.pf_converged = pf.converged;
  result.info.pf_iterations = pf.iterations;
  result.info.pf_residual = pf.max_residual;

  if (!pf.converged) {
    // Grid collapse: terminal state, fixed entry reward.
    next.terminal = true;
    state_ = std::move(next);
    result.observation = last_obs_;
    result.reward = -config_.hp.r_clip / (1.0 - config_.hp.gamma);
    result.done = true;
    return result;
  }

  const int slack_dev = spec_.slack_device();
  next.dev_p[slack_dev] = pf.slack_p;
  next.dev_q[slack_dev] = pf.slack_q;
  for (size_t k = 0; k < des_ids_.size(); ++k) {
    next.soc[k] = soc_update(spec_.devices[des_ids_[k]], state_.soc[k],
                             next.dev_p[des_ids_[k]], config_.hp.delta_t);
  }

  const EnergyLoss e = energy_loss(spec_, next, config_.hp.delta_t);
  const double phi = penalty_phi(spec_, pf, config_.hp.delta_t,
                                 &result.info.v_violation,
                                 &result.info.s_violation);
  result.info.e1 = e.e1;
  result.info.e2 = e.e2;
  result.info.e3 = e.e3;
  result.info.phi = phi;
  result.reward = clip(-(e.total() + config_.hp.lambda * phi),
                       -config_.hp.r_clip, config_.hp.r_clip);
  result.done = false;

  state_ = std::move(next);
  pf_ = pf;
  last_obs_ = observation(state_, pf_);
  result.observation = last_obs_;
  return result;
}

int Environment::action_size() const {
  return 2 * static_cast<int>(gen_ids_.size()) +
         2 * static_cast<int>(des_ids_.size());
}

std::vector<std::pair<double, double>> Environment::action_space_bounds()
    const {
  std::vector<std::pair<double, double>> out;
  for (int g : gen_ids_)
    out.emplace_back(spec_.devices[g].p_min.value(),
                     spec_.devices[g].p_max.value());
  for (int g : gen_ids_)
    out.emplace_back(spec_.devices[g].q_min.value(),
                     spec_.devices[g].q_max.value());
  for (int d : des_ids_)
    out.emplace_back(spec_.devices[d].p_min.value(),
                     spec_.devices[d].p_max.value());
  for (int d : des_ids_)
    out.emplace_back(spec_.devices[d].q_min.value(),
                     spec_.devices[d].q_max.value());
  return out;
}

std::vector<std::pair<double, double>> Environment::observation_bounds()
    const {
  // Loose but finite brackets, fit for observation normalization.
  double cap = 1.0;
  for (const auto& d : spec_.devices) {
    if (d.is_slack()) continue;
    cap += std::max(std::abs(d.p_min.value_or(0.0)),
                    std::abs(d.p_max.value_or(0.0)));
  }
  auto dev_p_bounds = [&](const DeviceSpec& d) -> std::pair<double, double> {
    if (d.is_slack()) return {-cap, cap};
    return {d.p_min.value(), std::max(0.0, d.p_max.value())};
  };
  auto dev_q_bounds = [&](const DeviceSpec& d) -> std::pair<double, double> {
    if (d.is_slack()) return {-cap, cap};
    if (d.is_load()) {
      const double q0 = d.p_min.value() * d.qp_ratio.value();
      return {std::min(q0, 0.0), std::max(q0, 0.0)};
    }
    return {d.q_min.value(), d.q_max.value()};
  };

  std::vector<std::pair<double, double>> out;
  if (obs_.full_state) {
    for (const auto& d : spec_.devices) out.push_back(dev_p_bounds(d));
    for (const auto& d : spec_.devices) out.push_back(dev_q_bounds(d));
    for (int d : des_ids_)
      out.emplace_back(spec_.devices[d].soc_min.value(),
                       spec_.devices[d].soc_max.value());
    for (int g : gen_ids_)
      out.emplace_back(spec_.devices[g].p_min.value(),
                       spec_.devices[g].p_max.value());
    for (int k = 0; k < config_.hp.aux_count; ++k)
      out.push_back(config_.aux_bounds);
    return out;
  }

  for (const auto& e : obs_.entries) {
    auto rate_sum_at = [&](int bus) {
      double s = 0.0;
      for (const auto& br : spec_.branches)
        if (br.from_bus == bus || br.to_bus == bus) s += br.s_max;
      return s;
    };
    if (e.keyword == "dev_p") {
      for (int id : e.ids) out.push_back(dev_p_bounds(spec_.devices[id]));
    } else if (e.keyword == "dev_q") {
      for (int id : e.ids) out.push_back(dev_q_bounds(spec_.devices[id]));
    } else if (e.keyword == "bus_p" || e.keyword == "bus_q") {
      for (int id : e.ids) out.emplace_back(-cap, cap), (void)id;
    } else if (e.keyword == "bus_v_magn") {
      for (int id : e.ids) out.emplace_back(0.0, 2.0 * spec_.buses[id].v_max);
    } else if (e.keyword == "bus_v_ang" || e.keyword == "bus_i_ang" ||
               e.keyword == "branch_i_ang") {
      const double lim = e.unit == "rad" ? kPi : 180.0;
      for (size_t i = 0; i < std::max(e.ids.size(), e.branches.size()); ++i)
        out.emplace_back(-lim, lim);
    } else if (e.keyword == "bus_i_magn") {
      for (int id : e.ids)
        out.emplace_back(0.0,
                         2.0 * rate_sum_at(id) / spec_.buses[id].v_min);
    } else if (e.keyword == "branch_p" || e.keyword == "branch_q") {
      for (const auto& br : e.branches) {
        for (const auto& b : spec_.branches)
          if (b.from_bus == br.first && b.to_bus == br.second)
            out.emplace_back(-2.0 * b.s_max, 2.0 * b.s_max);
      }
    } else if (e.keyword == "branch_s" || e.keyword == "branch_i_magn") {
      for (const auto& br : e.branches) {
        for (const auto& b : spec_.branches)
          if (b.from_bus == br.first && b.to_bus == br.second)
            out.emplace_back(0.0, 2.0 * b.s_max);
      }
    } else if (e.keyword == "des_soc") {
      for (int id : e.ids)
        out.emplace_back(spec_.devices[des_ids_[id]].soc_min.value(),
                         spec_.devices[des_ids_[id]].soc_max.value());
    } else if (e.keyword == "gen_p_max") {
      for (int id : e.ids)
        out.emplace_back(spec_.devices[gen_ids_[id]].p_min.value(),
                         spec_.devices[gen_ids_[id]].p_max.value());
    } else if (e.keyword == "aux") {
      for (size_t i = 0; i < e.ids.size(); ++i)
        out.push_back(config_.aux_bounds);
    }
  }
  // Unit conversion of the bounds themselves.
  size_t idx = 0;
  for (const auto& e : obs_.entries) {
    const size_t n = e.keyword.rfind("branch_", 0) == 0 ? e.branches.size()
                                                        : e.ids.size();
    for (size_t i = 0; i < n; ++i, ++idx) {
      if (e.unit == "MW" || e.unit == "MVAr" || e.unit == "MVA" ||
          e.unit == "MWh") {
        out[idx].first *= spec_.base_mva;
        out[idx].second *= spec_.base_mva;
      } else if (e.unit == "kV") {
        out[idx].first *= spec_.buses[e.ids[i]].base_kv;
        out[idx].second *= spec_.buses[e.ids[i]].base_kv;
      } else if (e.unit == "kA") {
        const double base_ka =
            spec_.base_mva / (std::sqrt(3.0) * spec_.buses[e.ids[i]].base_kv);
        out[idx].first *= base_ka;
        out[idx].second *= base_ka;
      }
    }
  }
  return out;
}

int Environment::observation_size() const {
  if (obs_.full_state)
    return static_cast<int>(2 * spec_.devices.size() + des_ids_.size() +
                            gen_ids_.size() + config_.hp.aux_count);
  int n = 0;
  for (const auto& e : obs_.entries)
    n += static_cast<int>(e.keyword.rfind("branch_", 0) == 0
                              ? e.branches.size()
                              : e.ids.size());
  return n;
}

std::vector<double> Environment::observation(
    const GridState& state, const PowerFlowSolution& pf) const {
  if (obs_.full_state) return state.to_vector();

  std::vector<double> out;
  auto bus_injection = [&](int bus) {
    Complex s(0, 0);
    for (int d : spec_.devices_at(bus))
      s += Complex(state.dev_p[d], state.dev_q[d]);
    return s;
  };
  auto branch_index = [&](int f, int t) {
    for (size_t e = 0; e < spec_.branches.size(); ++e)
      if (spec_.branches[e].from_bus == f && spec_.branches[e].to_bus == t)
        return static_cast<int>(e);
    return -1;
  };
  for (const auto& e : obs_.entries) {
    const bool mw_like = e.unit == "MW" || e.unit == "MVAr" ||
                         e.unit == "MVA" || e.unit == "MWh";
    const double power_scale = mw_like ? spec_.base_mva : 1.0;
    const double angle_scale = e.unit == "degree" ? 180.0 / kPi : 1.0;
    if (e.keyword == "dev_p") {
      for (int id : e.ids) out.push_back(state.dev_p[id] * power_scale);
    } else if (e.keyword == "dev_q") {
      for (int id : e.ids) out.push_back(state.dev_q[id] * power_scale);
    } else if (e.keyword == "bus_p") {
      for (int id : e.ids)
        out.push_back(bus_injection(id).real() * power_scale);
    } else if (e.keyword == "bus_q") {
      for (int id : e.ids)
        out.push_back(bus_injection(id).imag() * power_scale);
    } else if (e.keyword == "bus_v_magn") {
      for (int id : e.ids) {
        const double scale = e.unit == "kV" ? spec_.buses[id].base_kv : 1.0;
        out.push_back(std::abs(pf.v[id]) * scale);
      }
    } else if (e.keyword == "bus_v_ang") {
      for (int id : e.ids) out.push_back(std::arg(pf.v[id]) * angle_scale);
    } else if (e.keyword == "bus_i_magn" || e.keyword == "bus_i_ang") {
      for (int id : e.ids) {
        Complex i_inj(0, 0);
        for (int j = 0; j < ybus_.n; ++j) i_inj += ybus_.at(id, j) * pf.v[j];
        if (e.keyword == "bus_i_magn") {
          const double base_ka =
              spec_.base_mva / (std::sqrt(3.0) * spec_.buses[id].base_kv);
          out.push_back(std::abs(i_inj) * (e.unit == "kA" ? base_ka : 1.0));
        } else {
          out.push_back(std::arg(i_inj) * angle_scale);
        }
      }
    } else if (e.keyword.rfind("branch_", 0) == 0) {
      for (const auto& br : e.branches) {
        const int idx = branch_index(br.first, br.second);
        const BranchFlow& f = pf.branch_flows[idx];
        if (e.keyword == "branch_p")
          out.push_back(f.s_ij.real() * power_scale);
        else if (e.keyword == "branch_q")
          out.push_back(f.s_ij.imag() * power_scale);
        else if (e.keyword == "branch_s")
          out.push_back(std::abs(f.s_ij) * power_scale);
        else if (e.keyword == "branch_i_magn")
          out.push_back(std::abs(f.i_ij));
        else
          out.push_back(std::arg(f.i_ij) * angle_scale);
      }
    } else if (e.keyword == "des_soc") {
      for (int id : e.ids) out.push_back(state.soc[id] * power_scale);
    } else if (e.keyword == "gen_p_max") {
      for (int id : e.ids) out.push_back(state.gen_p_max[id] * power_scale);
    } else if (e.keyword == "aux") {
      for (int id : e.ids) out.push_back(state.aux[id]);
    }
  }
  return out;
}

}  // namespace anm
