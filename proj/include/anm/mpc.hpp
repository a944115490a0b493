#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anm/anm6.hpp"
#include "anm/environment.hpp"
#include "anm/lp.hpp"
#include "anm/network.hpp"

namespace anm::mpc {

class InfeasibleModel : public std::runtime_error {
 public:
  explicit InfeasibleModel(const std::string& what)
      : std::runtime_error(what) {}
};

enum class ForecastMode { constant, perfect };

struct Forecast {
  int horizon = 0;
  // [stage][load-ordinal] and [stage][gen-ordinal], p.u.
  std::vector<std::vector<double>> load_p;
  std::vector<std::vector<double>> gen_p_max;
};

struct MpcConfig {
  int horizon = 16;          // N
  double beta = 1.0;         // safety margin on branch ratings
  double lambda = 1000.0;    // overflow penalty weight
  ForecastMode forecast_mode = ForecastMode::constant;
};

// Replicates the current loads and generator maxima across the horizon.
Forecast forecast_constant(const NetworkSpec& spec, const GridState& state,
                           int horizon);

// Reads the deterministic daily series at the next `horizon` slots.
Forecast forecast_perfect(const anm6::DailySeries& pu_series, int aux0,
                          int horizon);

// The multi-stage DCOPF linear program. Variables per stage: device active
// powers, bus voltage angles, storage charge/discharge split plus SoC, and
// one overflow slack per branch. Index maps expose what the receding-horizon
// policy needs for warm restarts and stage-1 extraction.
struct MpcProblem {
  lp::Problem problem;
  double objective_constant = 0.0;  // discounted forecast maxima (curtailment offset)
  int stages = 0;

  // per stage, per entity (ordinal indexing mirrors NetworkSpec id order)
  std::vector<std::vector<int>> dev_p;       // [stage][device]
  std::vector<std::vector<int>> theta;       // [stage][bus]
  std::vector<std::vector<int>> charge;      // [stage][des]
  std::vector<std::vector<int>> discharge;   // [stage][des]
  std::vector<std::vector<int>> soc;         // [stage][des]
  std::vector<std::vector<int>> overflow;    // [stage][branch]
  std::vector<int> soc_link_row;             // [des] stage-0 recursion row
};

// Assembles the horizon LP from a per-unit network, the current state and a
// forecast. The spec must be normalized; forecast.horizon == cfg.horizon.
MpcProblem build_dcopf(const NetworkSpec& spec, const GridState& state,
                       const Forecast& forecast, const MpcConfig& cfg,
                       double gamma, double delta_t);

// One-shot solve returning the stage-1 active power injections per device.
// Throws InfeasibleModel when the LP has no feasible point.
std::vector<double> solve_lp(MpcProblem& problem, double tolerance = 1e-8);

// Receding-horizon policy. Keeps the LP factorized between steps: only the
// forecast bounds and the SoC anchor change, so each act() is a short
// dual-simplex reoptimization.
class MpcPolicy {
 public:
  MpcPolicy(NetworkSpec pu_spec, MpcConfig cfg, double gamma, double delta_t,
            std::optional<anm6::DailySeries> pu_series = std::nullopt);

  Action act(const GridState& state);

  const MpcConfig& config() const { return cfg_; }
  int solver_failures() const { return solver_failures_; }
  std::string lp_dump() const { return lp::to_lp_format(prob_.problem); }

 private:
  void apply_forecast(const GridState& state, const Forecast& fc);

  NetworkSpec spec_;
  MpcConfig cfg_;
  double gamma_, delta_t_;
  std::optional<anm6::DailySeries> series_;
  MpcProblem prob_;
  std::optional<lp::DualSimplex> solver_;
  std::vector<int> load_ids_, gen_ids_, des_ids_;
  int solver_failures_ = 0;
};

}  // namespace anm::mpc
