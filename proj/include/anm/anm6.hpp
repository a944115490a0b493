#pragma once

#include <array>
#include <cstdint>

#include "anm/environment.hpp"
#include "anm/network.hpp"

namespace anm::anm6 {

inline constexpr int kSlotsPerDay = 96;  // 24h / 0.25h
inline constexpr int kNumLoads = 3;      // devices 1, 3, 5
inline constexpr int kNumGens = 2;       // devices 2, 4

// Fixed daily profiles in MW, indexed by the time-of-day variable. Columns
// follow device order: loads (1, 3, 5) and generator maxima (2, 4).
struct DailySeries {
  std::array<std::array<double, kSlotsPerDay>, kNumLoads> load_p;
  std::array<std::array<double, kSlotsPerDay>, kNumGens> gen_p_max;
};

// The 6-bus / 7-device / 5-branch network (MW units, not yet per-unit).
NetworkSpec build_anm6_network();

// Canonical on-disk documents shipped with the project.
std::string anm6_network_json();
std::string anm6_series_json();

const DailySeries& series();  // MW
DailySeries series_per_unit(double base_mva);

Hyperparameters hyperparameters();  // dt=0.25, gamma=0.995, lambda=1e3, ...

// next_vars(): advance time-of-day and read the series.
NextVars next_vars(const GridState& state, const DailySeries& pu_series);

// Algorithm-style initial-state sampler (uniform start slot, uniform SoC,
// maxed generators with uniform reactive draw, idle storage).
GridState init_state(const NetworkSpec& pu_spec, Rng& rng,
                     const DailySeries& pu_series);

// Fully assembled ANM6-Easy environment (full-state observations).
Environment make_env(std::uint64_t seed);

}  // namespace anm::anm6
