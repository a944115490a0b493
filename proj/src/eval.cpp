#include "anm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "anm/anm6.hpp"

namespace anm::eval {
namespace {

using nlohmann::json;

json action_json(const Action& a) {
  json out;
  out["gen_p"] = a.gen_p;
  out["gen_q"] = a.gen_q;
  out["des_p"] = a.des_p;
  out["des_q"] = a.des_q;
  return out;
}

Action applied_action(const NetworkSpec& spec, const GridState& s) {
  Action a;
  for (int g : spec.gen_ids()) {
    a.gen_p.push_back(s.dev_p[g]);
    a.gen_q.push_back(s.dev_q[g]);
  }
  for (int d : spec.des_ids()) {
    a.des_p.push_back(s.dev_p[d]);
    a.des_q.push_back(s.dev_q[d]);
  }
  return a;
}

}  // namespace

Action RandomPolicy::act(const Environment& env, const GridState&) {
  const auto bounds = env.action_space_bounds();
  const auto gens = env.network().gen_ids();
  const auto des = env.network().des_ids();
  Action a;
  size_t i = 0;
  for (size_t g = 0; g < gens.size(); ++g, ++i)
    a.gen_p.push_back(rng_.uniform(bounds[i].first, bounds[i].second));
  for (size_t g = 0; g < gens.size(); ++g, ++i)
    a.gen_q.push_back(rng_.uniform(bounds[i].first, bounds[i].second));
  for (size_t d = 0; d < des.size(); ++d, ++i)
    a.des_p.push_back(rng_.uniform(bounds[i].first, bounds[i].second));
  for (size_t d = 0; d < des.size(); ++d, ++i)
    a.des_q.push_back(rng_.uniform(bounds[i].first, bounds[i].second));
  return a;
}

MpcWrappedPolicy::MpcWrappedPolicy(const Environment& env, mpc::MpcConfig cfg)
    : cfg_(cfg) {
  std::optional<anm6::DailySeries> series;
  if (cfg.forecast_mode == mpc::ForecastMode::perfect)
    series = anm6::series_per_unit(env.network().base_mva);
  impl_ = std::make_unique<mpc::MpcPolicy>(
      env.network(), cfg, env.hyperparameters().gamma,
      env.hyperparameters().delta_t, std::move(series));
}

Action MpcWrappedPolicy::act(const Environment&, const GridState& state) {
  return impl_->act(state);
}

std::string MpcWrappedPolicy::name() const {
  return cfg_.forecast_mode == mpc::ForecastMode::constant ? "mpc-constant"
                                                           : "mpc-perfect";
}

void EvalConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon T must be >= 1");
  if (rollouts < 1) throw std::invalid_argument("rollouts must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
  std::vector<std::uint64_t> s = seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end())
    throw std::invalid_argument("seeds must be distinct");
  if (environment != "anm6-easy")
    throw std::invalid_argument("unknown environment '" + environment + "'");
  if (policy != "random" && policy != "mpc-constant" && policy != "mpc-perfect")
    throw std::invalid_argument("unknown policy '" + policy + "'");
}

std::vector<double> run_rollout(Environment& env, Policy& policy, int steps,
                                std::ostream* trace) {
  std::vector<double> rewards;
  rewards.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const GridState state = env.state();
    const Action a = policy.act(env, state);
    const StepResult r = env.step(a);
    rewards.push_back(r.reward);
    if (trace) {
      json rec;
      rec["t"] = t;
      rec["state"] = state.to_vector();
      rec["action_requested"] = action_json(a);
      rec["action_applied"] = action_json(applied_action(env.network(), env.state()));
      rec["reward"] = r.reward;
      rec["done"] = r.done;
      rec["violations"] = {{"voltage", r.info.v_violation},
                           {"branch", r.info.s_violation},
                           {"action_gap", r.info.action_gap}};
      *trace << rec.dump() << "\n";
    }
    if (r.done) break;
  }
  return rewards;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double acc = 0.0, w = 1.0;
  for (double r : rewards) {
    acc += w * r;
    w *= gamma;
  }
  return acc;
}

EvalReport evaluate(const EvalConfig& cfg, const EnvFactory& make_env,
                    const PolicyFactory& make_policy, int threads) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport report;
  report.records.resize(cfg.seeds.size() * cfg.rollouts);

  if (threads <= 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<int>(threads, static_cast<int>(cfg.seeds.size()));

  std::mutex mu;
  size_t next_seed = 0;
  double gamma = 0.0;
  auto worker = [&]() {
    while (true) {
      size_t si;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_seed >= cfg.seeds.size()) return;
        si = next_seed++;
      }
      const std::uint64_t seed = cfg.seeds[si];
      Environment env = make_env(seed);
      {
        std::lock_guard<std::mutex> lock(mu);
        gamma = env.hyperparameters().gamma;
      }
      auto policy = make_policy(env);
      policy->seed(seed);
      for (int r = 0; r < cfg.rollouts; ++r) {
        if (r == 0)
          env.reset(seed);  // rollouts within a seed share the RNG stream
        else
          env.reset();
        const auto rewards = run_rollout(env, *policy, cfg.horizon);
        RolloutRecord rec;
        rec.seed = seed;
        rec.rollout = r;
        rec.steps = static_cast<int>(rewards.size());
        rec.terminated = rec.steps < cfg.horizon;
        rec.discounted_return =
            discounted_return(rewards, env.hyperparameters().gamma);
        report.records[si * cfg.rollouts + r] = rec;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  double sum = 0.0;
  for (const auto& rec : report.records) sum += rec.discounted_return;
  report.mean = sum / report.records.size();
  double ss = 0.0;
  for (const auto& rec : report.records) {
    const double d = rec.discounted_return - report.mean;
    ss += d * d;
  }
  report.stddev = report.records.size() > 1
                      ? std::sqrt(ss / (report.records.size() - 1))
                      : 0.0;
  report.truncation_bound =
      100.0 * std::pow(gamma, cfg.horizon) / (1.0 - gamma);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

EnvFactory environment_factory(const std::string& id) {
  if (id != "anm6-easy")
    throw std::invalid_argument("unknown environment '" + id + "'");
  return [](std::uint64_t seed) { return anm6::make_env(seed); };
}

PolicyFactory policy_factory(const EvalConfig& cfg) {
  if (cfg.policy == "random") {
    return [](const Environment&) -> std::unique_ptr<Policy> {
      return std::make_unique<RandomPolicy>();
    };
  }
  mpc::MpcConfig mpc_cfg = cfg.mpc;
  mpc_cfg.forecast_mode = cfg.policy == "mpc-constant"
                              ? mpc::ForecastMode::constant
                              : mpc::ForecastMode::perfect;
  return [mpc_cfg](const Environment& env) -> std::unique_ptr<Policy> {
    return std::make_unique<MpcWrappedPolicy>(env, mpc_cfg);
  };
}

std::string mpc_table(const std::string& mode, const std::vector<int>& horizons,
                      const std::vector<double>& betas, int rollouts,
                      int steps, const std::vector<std::uint64_t>& seeds,
                      int threads, std::ostream* progress) {
  std::ostringstream csv;
  csv << "mode,N,beta,seed,rollout,return,mean,std,truncation_bound\n";
  csv.setf(std::ios::fixed);
  for (double beta : betas) {
    for (int n : horizons) {
      EvalConfig cfg;
      cfg.policy = mode == "constant" ? "mpc-constant" : "mpc-perfect";
      cfg.mpc.horizon = n;
      cfg.mpc.beta = beta;
      cfg.rollouts = rollouts;
      cfg.horizon = steps;
      cfg.seeds = seeds;
      const EvalReport rep = evaluate(cfg, environment_factory("anm6-easy"),
                                      policy_factory(cfg), threads);
      for (const auto& rec : rep.records) {
        csv.precision(6);
        csv << mode << ',' << n << ',' << beta << ',' << rec.seed << ','
            << rec.rollout << ',' << rec.discounted_return << ',' << rep.mean
            << ',' << rep.stddev << ',' << rep.truncation_bound << "\n";
      }
      if (progress)
        *progress << "cell mode=" << mode << " N=" << n << " beta=" << beta
                  << " mean=" << rep.mean << " std=" << rep.stddev << " ("
                  << rep.wall_seconds << "s)\n";
    }
  }
  return csv.str();
}

}  // namespace anm::eval
