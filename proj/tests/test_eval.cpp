#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "anm/anm6.hpp"
#include "anm/eval.hpp"

using namespace anm;

TEST_CASE("discounted return closed forms") {
  CHECK(eval::discounted_return({}, 0.995) == 0.0);
  CHECK(eval::discounted_return({0, 0, 0}, 0.995) == 0.0);
  CHECK(eval::discounted_return({-20000}, 0.995) == -20000.0);
  // all -1 over T=3000: -(1 - g^T)/(1 - g), frozen from exact evaluation
  std::vector<double> ones(3000, -1.0);
  CHECK(eval::discounted_return(ones, 0.995) ==
        doctest::Approx(-199.99994103).epsilon(1e-9));
}

TEST_CASE("truncation bound for the published protocol is tiny") {
  eval::EvalConfig cfg;
  cfg.policy = "random";
  cfg.rollouts = 1;
  cfg.horizon = 3000;
  cfg.seeds = {3};
  const auto rep = eval::evaluate(cfg, eval::environment_factory("anm6-easy"),
                                  eval::policy_factory(cfg), 1);
  // r_clip * gamma^T / (1 - gamma), frozen: 0.00589712...
  CHECK(rep.truncation_bound == doctest::Approx(0.0058971).epsilon(1e-4));
  CHECK(rep.truncation_bound < 1e-2);
}

TEST_CASE("config invariants are enforced") {
  eval::EvalConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.horizon = 10;
  cfg.rollouts = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.rollouts = 1;
  cfg.seeds = {1, 1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.seeds = {1};
  cfg.policy = "nonesuch";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.policy = "random";
  cfg.validate();
}

TEST_CASE("identical seeds reproduce identical reward sequences") {
  auto run = [](std::uint64_t seed) {
    Environment env = anm6::make_env(seed);
    eval::RandomPolicy policy(seed);
    env.reset(seed);
    return eval::run_rollout(env, policy, 200);
  };
  const auto a = run(11);
  const auto b = run(11);
  CHECK(a == b);
  const auto c = run(12);
  CHECK(a != c);
}

TEST_CASE("random policy rewards respect the contract over many steps") {
  // bounded rewards except exact terminal entries; post-terminal zeros are
  // not emitted because rollouts stop at done
  int steps = 0;
  int terminals = 0;
  for (std::uint64_t seed = 1; steps < 20000; ++seed) {
    Environment env = anm6::make_env(seed);
    eval::RandomPolicy policy(seed);
    env.reset(seed);
    const auto rewards = eval::run_rollout(env, policy, 2000);
    steps += static_cast<int>(rewards.size());
    const double annuity = -100.0 / (1.0 - 0.995);  // the terminal reward
    for (size_t t = 0; t < rewards.size(); ++t) {
      if (t + 1 == rewards.size() && rewards[t] == annuity) {
        ++terminals;
        continue;
      }
      CHECK(rewards[t] >= -100.0);
      CHECK(rewards[t] <= 100.0);
    }
  }
  CHECK(steps >= 20000);
  (void)terminals;  // terminal entries are permitted, not required
}

TEST_CASE("evaluate aggregates over seeds x rollouts deterministically") {
  eval::EvalConfig cfg;
  cfg.policy = "random";
  cfg.rollouts = 3;
  cfg.horizon = 150;
  cfg.seeds = {1, 2};
  const auto rep1 = eval::evaluate(cfg, eval::environment_factory("anm6-easy"),
                                   eval::policy_factory(cfg), 2);
  const auto rep2 = eval::evaluate(cfg, eval::environment_factory("anm6-easy"),
                                   eval::policy_factory(cfg), 1);
  REQUIRE(rep1.records.size() == 6);
  for (size_t i = 0; i < rep1.records.size(); ++i) {
    CHECK(rep1.records[i].discounted_return ==
          rep2.records[i].discounted_return);  // thread count is irrelevant
  }
  double mean = 0;
  for (const auto& r : rep1.records) mean += r.discounted_return;
  mean /= rep1.records.size();
  CHECK(rep1.mean == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("rollout traces are valid JSON lines with the expected fields") {
  Environment env = anm6::make_env(4);
  eval::RandomPolicy policy(4);
  env.reset(4);
  std::ostringstream trace;
  eval::run_rollout(env, policy, 5, &trace);
  std::istringstream lines(trace.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("t"));
    CHECK(rec.contains("state"));
    CHECK(rec.contains("action_requested"));
    CHECK(rec.contains("action_applied"));
    CHECK(rec.contains("reward"));
    CHECK(rec.contains("done"));
    CHECK(rec.contains("violations"));
    CHECK(rec["state"].size() == 18);
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("mpc_table emits one row per seed-rollout cell and is redoable") {
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto csv1 = eval::mpc_table("constant", {2}, {0.94}, 2, 40, seeds, 2);
  const auto csv2 = eval::mpc_table("constant", {2}, {0.94}, 2, 40, seeds, 1);
  CHECK(csv1 == csv2);  // byte-identical re-run
  std::istringstream lines(csv1);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "mode,N,beta,seed,rollout,return,mean,std,truncation_bound");
  int rows = 0;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);  // 2 seeds x 2 rollouts x 1 cell
}
