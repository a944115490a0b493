#include "anm/anm6.hpp"

#include <cmath>
#include <sstream>

namespace anm::anm6 {
namespace {

// Appendix-table rows: ramp slots are tabulated explicitly (no recomputed
// interpolation) and mirrored around the two daily peak windows.
struct SeriesRow {
  double p1, p2, p3, p4, p5;
};

constexpr SeriesRow kSituation1{-1, 0, -4, 40, 0};
constexpr SeriesRow kSituation2{-5, 4, -10, 11, -25};
constexpr SeriesRow kSituation3{-2, 30, -20, 40, 0};

constexpr std::array<SeriesRow, 7> kRamp12 = {{
    {-1.5, 0.5, -4.75, 36.375, -3.125},
    {-2, 1, -5.5, 32.75, -6.25},
    {-2.5, 1.5, -6.25, 29.125, -9.375},
    {-3, 2, -7, 25.5, -12.5},
    {-3.5, 2.5, -7.75, 21.875, -15.625},
    {-4, 3, -8.5, 18.25, -18.75},
    {-4.5, 3.5, -9.25, 14.625, -21.875},
}};

constexpr std::array<SeriesRow, 7> kRamp23 = {{
    {-4.625, 7.25, -11.25, 14.625, -21.875},
    {-4.25, 10.50, -12.5, 18.25, -18.75},
    {-3.875, 13.75, -13.75, 21.875, -15.625},
    {-3.5, 17, -15, 25.5, -12.5},
    {-3.125, 20.25, -16.25, 29.125, -9.375},
    {-2.75, 23.5, -17.5, 32.75, -6.25},
    {-2.375, 26.75, -18.75, 36.375, -3.125},
}};

std::array<SeriesRow, kSlotsPerDay> full_day() {
  std::array<SeriesRow, kSlotsPerDay> rows{};
  for (int t = 0; t <= 24; ++t) rows[t] = kSituation1;
  for (int k = 0; k < 7; ++k) {
    rows[25 + k] = kRamp12[k];
    rows[91 - k] = kRamp12[k];  // mirrored evening ramp back to situation 1
  }
  for (int t = 32; t <= 44; ++t) rows[t] = kSituation2;
  for (int t = 72; t <= 84; ++t) rows[t] = kSituation2;
  for (int k = 0; k < 7; ++k) {
    rows[45 + k] = kRamp23[k];
    rows[71 - k] = kRamp23[k];  // mirrored ramp back into the evening peak
  }
  for (int t = 52; t <= 64; ++t) rows[t] = kSituation3;
  for (int t = 92; t <= 95; ++t) rows[t] = kSituation1;
  return rows;
}

DailySeries build_series(double scale) {
  const auto rows = full_day();
  DailySeries s{};
  for (int t = 0; t < kSlotsPerDay; ++t) {
    s.load_p[0][t] = rows[t].p1 * scale;
    s.load_p[1][t] = rows[t].p3 * scale;
    s.load_p[2][t] = rows[t].p5 * scale;
    s.gen_p_max[0][t] = rows[t].p2 * scale;
    s.gen_p_max[1][t] = rows[t].p4 * scale;
  }
  return s;
}

constexpr double kBaseMva = 100.0;

}  // namespace

const DailySeries& series() {
  static const DailySeries s = build_series(1.0);
  return s;
}

DailySeries series_per_unit(double base_mva) {
  return build_series(1.0 / base_mva);
}

std::string anm6_network_json() {
  // Appendix-table cells verbatim; "-" entries are null.
  return R"({
  "baseMVA": 100,
  "bus": [
    [0, 0, 132, 1.04, 1.04],
    [1, 1, 33, 1.1, 0.9],
    [2, 1, 33, 1.1, 0.9],
    [3, 1, 33, 1.1, 0.9],
    [4, 1, 33, 1.1, 0.9],
    [5, 1, 33, 1.1, 0.9]
  ],
  "device": [
    [0, 0, 0, null, null, null, null, null, null, null, null, null, null, null, null],
    [1, 3, -1, 0.2, 0, -10, null, null, null, null, null, null, null, null, null],
    [2, 3, 2, null, 30, 0, 30, -30, 20, null, 15, -15, null, null, null],
    [3, 4, -1, 0.2, 0, -30, null, null, null, null, null, null, null, null, null],
    [4, 4, 2, null, 50, 0, 50, -50, 35, null, 20, -20, null, null, null],
    [5, 5, -1, 0.2, 0, -30, null, null, null, null, null, null, null, null, null],
    [6, 5, 3, null, 50, -50, 50, -50, 30, -30, 25, -25, 100, 0, 0.9]
  ],
  "branch": [
    [0, 1, 0.0036, 0.1834, 0, 32, 1, 0],
    [1, 2, 0.03, 0.022, 0, 25, 1, 0],
    [1, 3, 0.0307, 0.0621, 0, 18, 1, 0],
    [2, 4, 0.0303, 0.0611, 0, 18, 1, 0],
    [2, 5, 0.0159, 0.0502, 0, 18, 1, 0]
  ]
})";
}

std::string anm6_series_json() {
  const auto rows = full_day();
  std::ostringstream out;
  out << "{\n  \"columns\": [\"P1\", \"P2\", \"P3\", \"P4\", \"P5\"],\n"
      << "  \"units\": \"MW\",\n  \"rows\": [\n";
  out.precision(17);
  for (int t = 0; t < kSlotsPerDay; ++t) {
    out << "    [" << rows[t].p1 << ", " << rows[t].p2 << ", " << rows[t].p3
        << ", " << rows[t].p4 << ", " << rows[t].p5 << "]"
        << (t + 1 < kSlotsPerDay ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

NetworkSpec build_anm6_network() {
  return parse_network_string(anm6_network_json());
}

Hyperparameters hyperparameters() {
  Hyperparameters hp;
  hp.delta_t = 0.25;
  hp.gamma = 0.995;
  hp.lambda = 1000.0;
  hp.r_clip = 100.0;
  hp.aux_count = 1;
  return hp;
}

NextVars next_vars(const GridState& state, const DailySeries& pu_series) {
  NextVars nv;
  const int aux =
      (static_cast<int>(std::lround(state.aux[0])) + 1) % kSlotsPerDay;
  nv.aux = {static_cast<double>(aux)};
  nv.load_p = {pu_series.load_p[0][aux], pu_series.load_p[1][aux],
               pu_series.load_p[2][aux]};
  nv.gen_p_max = {pu_series.gen_p_max[0][aux], pu_series.gen_p_max[1][aux]};
  return nv;
}

GridState init_state(const NetworkSpec& pu_spec, Rng& rng,
                     const DailySeries& pu_series) {
  GridState s;
  const int n_dev = static_cast<int>(pu_spec.devices.size());
  s.dev_p.assign(n_dev, 0.0);
  s.dev_q.assign(n_dev, 0.0);

  const int t0 = rng.uniform_int(0, kSlotsPerDay - 1);
  s.aux = {static_cast<double>(t0)};

  const auto loads = pu_spec.load_ids();
  for (size_t i = 0; i < loads.size(); ++i) {
    const auto& dev = pu_spec.devices[loads[i]];
    s.dev_p[dev.id] = pu_series.load_p[i][t0];
    s.dev_q[dev.id] = s.dev_p[dev.id] * dev.qp_ratio.value();
  }
  const auto gens = pu_spec.gen_ids();
  for (size_t g = 0; g < gens.size(); ++g) {
    const auto& dev = pu_spec.devices[gens[g]];
    const double p_max = pu_series.gen_p_max[g][t0];
    s.gen_p_max.push_back(p_max);
    const double q = rng.uniform(dev.q_min.value(), dev.q_max.value());
    const PQPoint pt = gen_region(dev, p_max).project({p_max, q});
    s.dev_p[dev.id] = pt.p;
    s.dev_q[dev.id] = pt.q;
  }
  for (int d : pu_spec.des_ids()) {
    const auto& dev = pu_spec.devices[d];
    s.soc.push_back(rng.uniform(dev.soc_min.value(), dev.soc_max.value()));
    s.dev_p[d] = 0.0;
    s.dev_q[d] = 0.0;
  }
  // Slack injection is filled by the environment's power-flow solve.
  return s;
}

Environment make_env(std::uint64_t seed) {
  NetworkSpec spec = build_anm6_network();
  EnvironmentConfig cfg;
  cfg.hp = hyperparameters();
  cfg.aux_bounds = {0.0, static_cast<double>(kSlotsPerDay - 1)};
  const DailySeries pu = series_per_unit(kBaseMva);
  InitStateFn init = [pu](const NetworkSpec& s, Rng& rng) {
    return init_state(s, rng, pu);
  };
  NextVarsFn nv = [pu](const GridState& s, Rng&) { return next_vars(s, pu); };
  return Environment(std::move(spec), cfg, std::move(init), std::move(nv),
                     ObservationSpec::state(), seed);
}

}  // namespace anm::anm6
