#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "anm/anm6.hpp"
#include "anm/eval.hpp"
#include "anm/mpc.hpp"
#include "anm/network.hpp"

namespace {

using nlohmann::json;

int cmd_validate(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    return 3;
  }
  try {
    json doc = json::parse(in);
    (void)doc;
  } catch (const std::exception& e) {
    std::cerr << "malformed document: " << e.what() << "\n";
    return 2;
  }
  in.clear();
  in.seekg(0);
  try {
    const anm::NetworkSpec spec = anm::parse_network(in);
    const auto diags = anm::validate_network(spec);
    if (diags.empty()) {
      std::cout << path << ": OK (" << spec.buses.size() << " buses, "
                << spec.devices.size() << " devices, " << spec.branches.size()
                << " branches)\n";
      return 0;
    }
    for (const auto& d : diags) std::cout << d << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "invalid network: " << e.what() << "\n";
    return 2;
  }
}

anm::eval::EvalConfig make_config(const std::string& policy, int n, double beta,
                                  int rollouts, int horizon,
                                  const std::vector<std::uint64_t>& seeds) {
  anm::eval::EvalConfig cfg;
  cfg.policy = policy;
  cfg.mpc.horizon = n;
  cfg.mpc.beta = beta;
  cfg.rollouts = rollouts;
  cfg.horizon = horizon;
  cfg.seeds = seeds;
  return cfg;
}

int cmd_rollout(const anm::eval::EvalConfig& cfg, const std::string& out_path) {
  cfg.validate();
  auto env_factory = anm::eval::environment_factory(cfg.environment);
  auto policy_factory = anm::eval::policy_factory(cfg);
  std::ofstream trace;
  if (!out_path.empty()) {
    trace.open(out_path);
    if (!trace) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 3;
    }
  }
  for (std::uint64_t seed : cfg.seeds) {
    anm::Environment env = env_factory(seed);
    auto policy = policy_factory(env);
    policy->seed(seed);
    env.reset(seed);
    const auto rewards = anm::eval::run_rollout(
        env, *policy, cfg.horizon, trace.is_open() ? &trace : nullptr);
    const double ret =
        anm::eval::discounted_return(rewards, env.hyperparameters().gamma);
    std::cout << "seed " << seed << ": steps=" << rewards.size()
              << " discounted_return=" << ret << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open " << config_path << "\n";
    return 3;
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    std::cerr << "bad config: " << e.what() << "\n";
    return 2;
  }
  anm::eval::EvalConfig cfg;
  cfg.environment = doc.value("environment", cfg.environment);
  cfg.policy = doc.value("policy", cfg.policy);
  cfg.mpc.horizon = doc.value("N", cfg.mpc.horizon);
  cfg.mpc.beta = doc.value("beta", cfg.mpc.beta);
  cfg.rollouts = doc.value("rollouts", cfg.rollouts);
  cfg.horizon = doc.value("T", cfg.horizon);
  if (doc.contains("seeds"))
    cfg.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  cfg.output_path = doc.value("output", cfg.output_path);

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "bad config: " << e.what() << "\n";
    return 2;
  }
  const auto report =
      anm::eval::evaluate(cfg, anm::eval::environment_factory(cfg.environment),
                          anm::eval::policy_factory(cfg));
  json out;
  out["mean"] = report.mean;
  out["std"] = report.stddev;
  out["truncation_bound"] = report.truncation_bound;
  out["wall_seconds"] = report.wall_seconds;
  json rolls = json::array();
  for (const auto& rec : report.records) {
    rolls.push_back({{"seed", rec.seed},
                     {"rollout", rec.rollout},
                     {"return", rec.discounted_return},
                     {"steps", rec.steps},
                     {"terminated", rec.terminated}});
  }
  out["rollouts"] = rolls;
  const std::string rendered = out.dump(2);
  if (!cfg.output_path.empty()) {
    std::ofstream of(cfg.output_path);
    if (!of) {
      std::cerr << "error: cannot write " << cfg.output_path << "\n";
      return 3;
    }
    of << rendered << "\n";
  }
  std::cout << rendered << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ANM6 distribution-network simulator and MPC baselines"};
  app.require_subcommand(1);

  std::string net_path;
  auto* validate = app.add_subcommand("validate", "validate a network file");
  validate->add_option("network", net_path, "network JSON file")->required();

  std::string env_id = "anm6-easy", policy = "random", out_path;
  int n = 16, horizon = 3000, rollouts = 1;
  double beta = 1.0;
  std::vector<std::uint64_t> seeds{1};
  auto* rollout = app.add_subcommand("rollout", "run seeded rollouts");
  rollout->add_option("--env", env_id, "environment id");
  rollout->add_option("--policy", policy, "random|mpc-constant|mpc-perfect");
  rollout->add_option("--N", n, "MPC planning horizon");
  rollout->add_option("--beta", beta, "MPC safety margin");
  rollout->add_option("--T", horizon, "steps per rollout");
  rollout->add_option("--seeds", seeds, "seed list");
  rollout->add_option("--out", out_path, "trace JSONL path");

  std::string config_path;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a policy");
  evaluate->add_option("--config", config_path, "EvalConfig JSON")->required();

  std::string mode = "perfect", table_out = "table.csv";
  std::vector<int> table_n{8, 16, 32};
  std::vector<double> table_beta{0.92, 0.94, 0.96, 0.98, 1.0};
  int table_rollouts = 5, table_t = 3000;
  std::vector<std::uint64_t> table_seeds{1, 2, 3, 4, 5};
  auto* table = app.add_subcommand("mpc-table", "reproduce the returns grid");
  table->add_option("--mode", mode, "constant|perfect")->required();
  table->add_option("--out", table_out, "CSV output path");
  table->add_option("--N-list", table_n, "horizons");
  table->add_option("--beta-list", table_beta, "safety margins");
  table->add_option("--rollouts", table_rollouts, "rollouts per seed");
  table->add_option("--T", table_t, "steps per rollout");
  table->add_option("--seeds", table_seeds, "seed list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(net_path);
    if (rollout->parsed()) {
      auto cfg = make_config(policy, n, beta, rollouts, horizon, seeds);
      cfg.environment = env_id;
      return cmd_rollout(cfg, out_path);
    }
    if (evaluate->parsed()) return cmd_evaluate(config_path);
    if (table->parsed()) {
      if (mode != "constant" && mode != "perfect") {
        std::cerr << "mode must be constant or perfect\n";
        return 2;
      }
      const std::string csv =
          anm::eval::mpc_table(mode, table_n, table_beta, table_rollouts,
                               table_t, table_seeds, 0, &std::cerr);
      std::ofstream of(table_out);
      if (!of) {
        std::cerr << "error: cannot write " << table_out << "\n";
        return 3;
      }
      of << csv;
      std::cout << "wrote " << table_out << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
