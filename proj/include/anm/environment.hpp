#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "anm/network.hpp"
#include "anm/power_flow.hpp"
#include "anm/regions.hpp"

namespace anm {

class NotReset : public std::logic_error {
 public:
  NotReset() : std::logic_error("step() called before reset()") {}
};

class InitCollapse : public std::runtime_error {
 public:
  InitCollapse()
      : std::runtime_error(
            "power flow diverged on the initial state (configuration error)") {
  }
};

class UnknownKeyword : public std::invalid_argument {
 public:
  explicit UnknownKeyword(const std::string& what)
      : std::invalid_argument(what) {}
};

// Deterministic stream with explicit float mapping so trajectories are
// reproducible bit-for-bit for a given seed on a given build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(eng_() %
                                 static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 eng_;
};

struct Hyperparameters {
  double delta_t = 0.25;  // hours
  double gamma = 0.995;
  double lambda = 1000.0;
  double r_clip = 100.0;
  int aux_count = 1;
};

// State vector of the task MDP; to_vector() flattens in the canonical order
// (all P, all Q, SoC, dynamic maxima, aux).
struct GridState {
  std::vector<double> dev_p, dev_q;   // per device, id order (p.u.)
  std::vector<double> soc;            // per DES, id order (p.u.-hours)
  std::vector<double> gen_p_max;      // per non-slack generator, id order
  std::vector<double> aux;
  bool terminal = false;

  std::vector<double> to_vector() const;
};

struct Action {
  std::vector<double> gen_p, gen_q;  // per non-slack generator, id order
  std::vector<double> des_p, des_q;  // per DES, id order
};

struct ObservationSpec {
  struct Entry {
    std::string keyword;
    bool all = false;
    std::vector<int> ids;                        // bus/device/des/gen/aux ids
    std::vector<std::pair<int, int>> branches;   // for branch_* keywords
    std::string unit;                            // empty = table default
  };
  bool full_state = true;
  std::vector<Entry> entries;

  static ObservationSpec state() { return ObservationSpec{}; }
  static ObservationSpec of(std::vector<Entry> entries);
};

struct StepInfo {
  bool pf_converged = true;
  int pf_iterations = 0;
  double pf_residual = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;  // energy-loss parts (p.u.-hours)
  double phi = 0.0;                     // constraint penalty (p.u.)
  double v_violation = 0.0;             // summed voltage excess (p.u.)
  double s_violation = 0.0;             // summed branch overflow (p.u.)
  double action_gap = 0.0;              // ||requested - applied||_2
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct NextVars {
  std::vector<double> load_p;      // per load, id order (p.u.)
  std::vector<double> gen_p_max;   // per non-slack generator, id order (p.u.)
  std::vector<double> aux;
};

using NextVarsFn = std::function<NextVars(const GridState&, Rng&)>;
using InitStateFn = std::function<GridState(const NetworkSpec&, Rng&)>;

struct EnergyLoss {
  double e1 = 0.0;  // transmission loss
  double e2 = 0.0;  // net energy into storage
  double e3 = 0.0;  // curtailed renewable energy
  double total() const { return e1 + e2 + e3; }
};

// Reward pieces, exposed for tests and the harness. All inputs per-unit.
EnergyLoss energy_loss(const NetworkSpec& spec, const GridState& next,
                       double delta_t);
double penalty_phi(const NetworkSpec& spec, const PowerFlowSolution& pf,
                   double delta_t, double* v_violation = nullptr,
                   double* s_violation = nullptr);

struct EnvironmentConfig {
  Hyperparameters hp;
  // Slack voltage magnitude; <= 0 selects the slack bus's v_max.
  double slack_v_magnitude = 0.0;
  double pf_tolerance = 1e-8;
  int pf_max_iterations = 50;
  std::pair<double, double> aux_bounds{0.0, 0.0};
};

class Environment {
 public:
  Environment(NetworkSpec spec, EnvironmentConfig config, InitStateFn init,
              NextVarsFn next_vars, ObservationSpec obs, std::uint64_t seed);

  std::vector<double> reset();
  std::vector<double> reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const GridState& state() const { return state_; }
  const PowerFlowSolution& pf_solution() const { return pf_; }
  const NetworkSpec& network() const { return spec_; }
  const Hyperparameters& hyperparameters() const { return config_.hp; }
  double slack_v_magnitude() const { return slack_v_; }
  bool ready() const { return has_state_; }

  // Static action-space bounds (box constraints only) in Eq-(3) coordinate
  // order: gen P, gen Q, DES P, DES Q.
  std::vector<std::pair<double, double>> action_space_bounds() const;
  // Loose per-coordinate observation bounds.
  std::vector<std::pair<double, double>> observation_bounds() const;

  int action_size() const;
  int observation_size() const;

  std::vector<double> observation(const GridState& state,
                                  const PowerFlowSolution& pf) const;

 private:
  std::vector<double> post_reset(GridState s0);
  void aggregate_bus_injections(const GridState& s, std::vector<double>& p,
                                std::vector<double>& q) const;

  NetworkSpec spec_;  // per-unit
  EnvironmentConfig config_;
  InitStateFn init_;
  NextVarsFn next_vars_;
  ObservationSpec obs_;
  Rng rng_;
  AdmittanceMatrix ybus_;
  double slack_v_ = 1.0;

  std::vector<int> load_ids_, gen_ids_, des_ids_, rer_ids_;
  GridState state_;
  PowerFlowSolution pf_;
  std::vector<double> last_obs_;
  bool has_state_ = false;
};

}  // namespace anm
