#pragma once

// Seeded synthetic scenarios: regions with known (beta, gamma), feature
// vectors that encode them, and case curves from a gravity-coupled
// metapopulation SIR.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "epirisk/calibration.hpp"
#include "epirisk/error.hpp"
#include "epirisk/mobility_graph.hpp"
#include "epirisk/risk_labels.hpp"
#include "epirisk/sir.hpp"
#include "epirisk/training.hpp"

namespace epirisk {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ScenarioConfig {
  std::size_t n_regions = 600;
  std::size_t feature_dim = 4;
  std::uint64_t seed = 7;
  Range beta_range{0.2, 0.4};
  Range gamma_range{0.06, 0.2};
  double coupling = 0.4;       // share of the force of infection imported from neighbours
  double case_noise = 0.0;     // sd of the log-normal multiplicative case noise
  double feature_noise = 0.05; // sd of the additive noise on encoded features
  int horizon_days = 120;      // number of daily observations
  double extent_m = 3.0e6;     // side of the square the regions are placed in
  double initial_infected = 10.0;
  double dt = 0.1;
};

inline void validate(const ScenarioConfig& c) {
  if (c.n_regions < 4) throw ConfigError("scenario.n_regions", "must be >= 4");
  if (c.feature_dim < 3) throw ConfigError("scenario.feature_dim", "must be >= 3");
  if (!(c.beta_range.lo > 0.0 && c.beta_range.hi >= c.beta_range.lo))
    throw ConfigError("scenario.beta_range", "need 0 < lo <= hi");
  if (!(c.gamma_range.lo > 0.0 && c.gamma_range.hi >= c.gamma_range.lo))
    throw ConfigError("scenario.gamma_range", "need 0 < lo <= hi");
  if (!(c.coupling >= 0.0 && c.coupling < 1.0)) throw ConfigError("scenario.coupling", "must be in [0, 1)");
  if (!(c.case_noise >= 0.0)) throw ConfigError("scenario.case_noise", "must be >= 0");
  if (!(c.feature_noise >= 0.0)) throw ConfigError("scenario.feature_noise", "must be >= 0");
  if (c.horizon_days < 8) throw ConfigError("scenario.horizon_days", "must be >= 8");
  if (!(c.extent_m > 0.0)) throw ConfigError("scenario.extent_m", "must be > 0");
  if (!(c.initial_infected >= 0.0)) throw ConfigError("scenario.initial_infected", "must be >= 0");
  const double per_day = 1.0 / c.dt;
  if (!(c.dt > 0.0 && c.dt <= 1.0) || std::abs(per_day - std::round(per_day)) > 1e-9)
    throw ConfigError("scenario.dt", "must divide one day");
}

inline constexpr double kMinPopulation = 2000.0;
inline constexpr double kMaxPopulation = 20000.0;

/// Ground truth behind one synthetic region.
struct RegionTruth {
  double beta = 0.0;
  double gamma = 0.0;
  double initial_infected = 0.0;

  double r0() const { return beta / gamma; }
};

struct SyntheticRegions {
  std::vector<Region> regions;
  std::vector<RegionTruth> truth;
};

namespace detail {

// Normal centred in the range with sd = width / 6, redrawn until inside.
inline double draw_in_range(std::mt19937_64& rng, Range r) {
  if (r.hi == r.lo) return r.lo;
  std::normal_distribution<double> dist(0.5 * (r.lo + r.hi), (r.hi - r.lo) / 6.0);
  for (;;) {
    const double v = dist(rng);
    if (v >= r.lo && v <= r.hi) return v;
  }
}

inline double to_unit(double v, double lo, double hi) { return hi == lo ? 0.0 : 2.0 * (v - lo) / (hi - lo) - 1.0; }

}  // namespace detail

/// Region ids are "R0000", "R0001", ... Features: f0 encodes beta, f1 the infectious period 1/gamma,
/// f2 log population (each scaled to [-1, 1] plus noise); the rest is noise.
inline SyntheticRegions generate_regions(const ScenarioConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double log_lo = std::log(kMinPopulation), log_hi = std::log(kMaxPopulation);

  SyntheticRegions out;
  out.regions.reserve(cfg.n_regions);
  out.truth.reserve(cfg.n_regions);
  for (std::size_t k = 0; k < cfg.n_regions; ++k) {
    Region r;
    char id[16];
    std::snprintf(id, sizeof id, "R%04zu", k);
    r.id = id;
    r.x = unit(rng) * cfg.extent_m;
    r.y = unit(rng) * cfg.extent_m;
    const double log_pop = log_lo + unit(rng) * (log_hi - log_lo);
    r.population = std::clamp(std::round(std::exp(log_pop)), kMinPopulation, kMaxPopulation);
    RegionTruth t;
    t.beta = detail::draw_in_range(rng, cfg.beta_range);
    t.gamma = detail::draw_in_range(rng, cfg.gamma_range);
    t.initial_infected = cfg.initial_infected;

    r.features.resize(cfg.feature_dim);
    r.features[0] = detail::to_unit(t.beta, cfg.beta_range.lo, cfg.beta_range.hi) + cfg.feature_noise * noise(rng);
    r.features[1] = detail::to_unit(1.0 / t.gamma, 1.0 / cfg.gamma_range.hi, 1.0 / cfg.gamma_range.lo) + cfg.feature_noise * noise(rng);
    r.features[2] = detail::to_unit(std::log(r.population), log_lo, log_hi) + cfg.feature_noise * noise(rng);
    for (std::size_t j = 3; j < cfg.feature_dim; ++j) r.features[j] = noise(rng);
    out.regions.push_back(std::move(r));
    out.truth.push_back(t);
  }
  return out;
}

/// Daily cumulative infections N - S(t) for every node of `graph`. The force
/// of infection on v is beta_v * ((1 - c) I_v / N_v + c * sum_w a_wv I_w / N_w)
/// with a_wv the normalized gravity weights. With c = 0 and no noise each
/// series equals the single-region integrate_sir output bit for bit.
inline std::vector<CaseSeries> simulate_coupled_cases(const MobilityGraph& graph, const std::vector<RegionTruth>& truth,
                                                      const ScenarioConfig& cfg) {
  validate(cfg);
  const std::size_t n = graph.node_count();
  if (truth.size() != n) throw DataError("simulate_coupled_cases: truth does not match graph nodes");
  for (std::size_t v = 0; v < n; ++v)
    if (truth[v].initial_infected > graph.nodes[v].population)
      throw DataError("region " + graph.nodes[v].id + ": initial infections exceed population");

  std::vector<double> y(3 * n);
  for (std::size_t v = 0; v < n; ++v) {
    y[3 * v] = graph.nodes[v].population - truth[v].initial_infected;
    y[3 * v + 1] = truth[v].initial_infected;
    y[3 * v + 2] = 0.0;
  }
  const double c = cfg.coupling;
  std::vector<double> prevalence(n);
  auto deriv = [&](const std::vector<double>& x, std::vector<double>& dx) {
    for (std::size_t v = 0; v < n; ++v) prevalence[v] = x[3 * v + 1] / graph.nodes[v].population;
    for (std::size_t v = 0; v < n; ++v) {
      double imported = 0.0;
      for (std::size_t e : graph.in_edges[v]) imported += graph.edges[e].norm_weight * prevalence[graph.edges[e].src];
      const double force = truth[v].beta * ((1.0 - c) * prevalence[v] + c * imported);
      const double infection = force * x[3 * v];
      const double recovery = truth[v].gamma * x[3 * v + 1];
      dx[3 * v] = -infection;
      dx[3 * v + 1] = infection - recovery;
      dx[3 * v + 2] = recovery;
    }
  };

  std::vector<CaseSeries> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    out[v].region_id = graph.nodes[v].id;
    out[v].days.reserve(static_cast<std::size_t>(cfg.horizon_days));
    out[v].cumulative_cases.reserve(static_cast<std::size_t>(cfg.horizon_days));
  }
  std::array<std::vector<double>, 5> work;
  for (auto& w : work) w.assign(3 * n, 0.0);
  const auto steps_per_day = static_cast<std::size_t>(std::llround(1.0 / cfg.dt));
  for (int day = 0; day < cfg.horizon_days; ++day) {
    if (day > 0)
      for (std::size_t k = 0; k < steps_per_day; ++k) rk4_step(y, cfg.dt, deriv, work);
    for (std::size_t v = 0; v < n; ++v) {
      out[v].days.push_back(day);
      out[v].cumulative_cases.push_back(graph.nodes[v].population - y[3 * v]);
    }
  }

  if (cfg.case_noise > 0.0) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> eps(0.0, 1.0);
    for (std::size_t v = 0; v < n; ++v) {
      double running = 0.0;
      const double cap = graph.nodes[v].population - 1.0;
      for (double& count : out[v].cumulative_cases) {
        count = std::min(count * std::exp(cfg.case_noise * eps(rng)), cap);
        running = std::max(running, count);
        count = running;
      }
    }
  }
  return out;
}

struct DatasetConfig {
  ScenarioConfig scenario;
  GravityConfig gravity;
  CalibConfig calibration;
  double label_k = kDefaultThresholdMultiplier;
};

struct Dataset {
  SyntheticRegions synthetic;
  MobilityGraph graph;
  std::vector<CaseSeries> cases;
  std::vector<CalibrationResult> calibrations;
  std::vector<RiskLabel> labels;
  Labeling labeling;
  DatasetSplit split;
  std::uint64_t split_seed = 0;

  std::vector<int> label_ids() const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(l.label);
    return out;
  }
};

/// generate -> build graph -> simulate -> calibrate -> label -> split.
inline Dataset make_dataset(const DatasetConfig& cfg) {
  Dataset ds;
  ds.synthetic = generate_regions(cfg.scenario);
  ds.graph = build_graph(ds.synthetic.regions, cfg.gravity);
  ds.cases = simulate_coupled_cases(ds.graph, ds.synthetic.truth, cfg.scenario);

  std::vector<std::string> ids;
  std::vector<double> r0;
  for (std::size_t v = 0; v < ds.graph.node_count(); ++v) {
    ds.calibrations.push_back(calibrate_sir(ds.cases[v], ds.graph.nodes[v].population, cfg.calibration));
    ids.push_back(ds.graph.nodes[v].id);
    r0.push_back(ds.calibrations.back().r0);
  }
  ds.labels = make_risk_labels(ids, r0, cfg.label_k);
  ds.labeling = categorize_r0(r0, cfg.label_k);

  std::vector<std::size_t> all(ds.graph.node_count());
  std::iota(all.begin(), all.end(), 0);
  ds.split_seed = cfg.scenario.seed;
  ds.split = make_split(std::move(all), ds.split_seed);
  return ds;
}

}  // namespace epirisk
