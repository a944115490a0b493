#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "anm/environment.hpp"
#include "anm/mpc.hpp"

namespace anm::eval {

// A policy maps observations/state to actions; implementations own their
// randomness so rollouts stay reproducible per seed.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Environment& env, const GridState& state) = 0;
  virtual void seed(std::uint64_t s) { (void)s; }
  virtual std::string name() const = 0;
};

// Uniform over the static action-space box; smoke-test baseline.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t s = 0) : rng_(s) {}
  Action act(const Environment& env, const GridState& state) override;
  void seed(std::uint64_t s) override { rng_ = Rng(s); }
  std::string name() const override { return "random"; }

 private:
  Rng rng_;
};

class MpcWrappedPolicy : public Policy {
 public:
  MpcWrappedPolicy(const Environment& env, mpc::MpcConfig cfg);
  Action act(const Environment& env, const GridState& state) override;
  std::string name() const override;

 private:
  std::unique_ptr<mpc::MpcPolicy> impl_;
  mpc::MpcConfig cfg_;
};

struct EvalConfig {
  std::string environment = "anm6-easy";
  std::string policy = "random";  // random | mpc-constant | mpc-perfect
  mpc::MpcConfig mpc;
  int rollouts = 5;   // N_r per seed
  int horizon = 3000; // T
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_path;  // optional trace JSONL

  void validate() const;  // throws std::invalid_argument
};

struct RolloutRecord {
  std::uint64_t seed = 0;
  int rollout = 0;
  double discounted_return = 0.0;
  int steps = 0;
  bool terminated = false;
};

struct EvalReport {
  std::vector<RolloutRecord> records;
  double mean = 0.0;
  double stddev = 0.0;        // sample std over all rollouts
  double truncation_bound = 0.0;  // r_clip * gamma^T / (1 - gamma)
  double wall_seconds = 0.0;
};

using EnvFactory = std::function<Environment(std::uint64_t seed)>;
using PolicyFactory = std::function<std::unique_ptr<Policy>(const Environment&)>;

// Steps the environment T times (or until done), returning per-step rewards.
// When trace is non-null, writes one JSON record per step.
std::vector<double> run_rollout(Environment& env, Policy& policy, int steps,
                                std::ostream* trace = nullptr);

double discounted_return(const std::vector<double>& rewards, double gamma);

EvalReport evaluate(const EvalConfig& cfg, const EnvFactory& make_env,
                    const PolicyFactory& make_policy, int threads = 0);

// Convenience wiring for the named environments/policies of the CLI.
EnvFactory environment_factory(const std::string& id);
PolicyFactory policy_factory(const EvalConfig& cfg);

// Runs evaluate() per (N, beta) cell and renders the CSV table.
std::string mpc_table(const std::string& mode, const std::vector<int>& horizons,
                      const std::vector<double>& betas, int rollouts,
                      int steps, const std::vector<std::uint64_t>& seeds,
                      int threads = 0, std::ostream* progress = nullptr);

}  // namespace anm::eval
