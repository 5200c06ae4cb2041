#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "epirisk/synth.hpp"
#include "fixtures.hpp"

using namespace epirisk;

namespace {

ScenarioConfig small_scenario(std::size_t n = 30) {
  ScenarioConfig cfg;
  cfg.n_regions = n;
  cfg.extent_m = 2e5;
  return cfg;
}

}  // namespace

TEST(GenerateRegions, SeededAndInRange) {
  auto cfg = small_scenario(200);
  const auto a = generate_regions(cfg), b = generate_regions(cfg);
  ASSERT_EQ(a.regions.size(), 200u);
  for (std::size_t k = 0; k < a.regions.size(); ++k) {
    EXPECT_EQ(a.regions[k].id, b.regions[k].id);
    EXPECT_EQ(a.regions[k].features, b.regions[k].features);
    EXPECT_EQ(a.truth[k].beta, b.truth[k].beta);
    EXPECT_GE(a.regions[k].population, kMinPopulation);
    EXPECT_LE(a.regions[k].population, kMaxPopulation);
    EXPECT_GE(a.truth[k].beta, cfg.beta_range.lo);
    EXPECT_LE(a.truth[k].beta, cfg.beta_range.hi);
    EXPECT_GE(a.truth[k].gamma, cfg.gamma_range.lo);
    EXPECT_LE(a.truth[k].gamma, cfg.gamma_range.hi);
    EXPECT_EQ(a.regions[k].features.size(), cfg.feature_dim);
  }
  cfg.seed += 1;
  EXPECT_NE(generate_regions(cfg).truth[0].beta, a.truth[0].beta);
}

TEST(GenerateRegions, StumpOnBetaFeatureSeparatesTerciles) {
  auto cfg = small_scenario(600);
  cfg.feature_noise = 0.1;
  const auto s = generate_regions(cfg);
  std::vector<double> betas;
  for (const auto& t : s.truth) betas.push_back(t.beta);
  std::vector<double> sorted = betas;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[sorted.size() / 3], hi = sorted[2 * sorted.size() / 3];
  std::vector<std::pair<double, int>> pts;  // (f0, is_top)
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (betas[k] <= lo) pts.push_back({s.regions[k].features[0], 0});
    if (betas[k] >= hi) pts.push_back({s.regions[k].features[0], 1});
  }
  // Best single threshold on f0, scanned over every midpoint.
  std::sort(pts.begin(), pts.end());
  std::size_t best = 0;
  for (std::size_t cut = 0; cut <= pts.size(); ++cut) {
    std::size_t correct = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) correct += (k >= cut) == (pts[k].second == 1);
    best = std::max(best, correct);
  }
  EXPECT_GT(static_cast<double>(best) / static_cast<double>(pts.size()), 0.9);
}

TEST(SimulateCoupledCases, DecoupledLimitMatchesSingleRegionModel) {
  auto cfg = small_scenario(12);
  cfg.coupling = 0.0;
  const auto s = generate_regions(cfg);
  const auto g = build_graph(s.regions, {});
  const auto cases = simulate_coupled_cases(g, s.truth, cfg);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto ref = fixture::daily_series(s.truth[v].beta, s.truth[v].gamma, g.nodes[v].population,
                                           s.truth[v].initial_infected, cfg.horizon_days, cfg.dt);
    EXPECT_EQ(cases[v].days, ref.days);
    EXPECT_EQ(cases[v].cumulative_cases, ref.cumulative_cases) << g.nodes[v].id;
  }
}

TEST(SimulateCoupledCases, DecoupledCalibrationRecoversR0) {
  auto cfg = small_scenario(8);
  cfg.coupling = 0.0;
  const auto s = generate_regions(cfg);
  const auto g = build_graph(s.regions, {});
  const auto cases = simulate_coupled_cases(g, s.truth, cfg);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto res = calibrate_sir(cases[v], g.nodes[v].population, {});
    EXPECT_NEAR(res.r0 / s.truth[v].r0(), 1.0, 0.05) << g.nodes[v].id;
  }
}

TEST(SimulateCoupledCases, CouplingImportsInfection) {
  auto cfg = small_scenario(6);
  const auto s = generate_regions(cfg);
  auto truth = s.truth;
  truth[0].initial_infected = 0.0;
  GravityConfig gc;
  gc.neighbors_k.reset();
  const auto g = build_graph(s.regions, gc);
  cfg.coupling = 0.5;
  const auto coupled = simulate_coupled_cases(g, truth, cfg);
  EXPECT_GT(coupled[0].cumulative_cases.back(), 1.0);
  cfg.coupling = 0.0;
  const auto isolated = simulate_coupled_cases(g, truth, cfg);
  for (double c : isolated[0].cumulative_cases) EXPECT_EQ(c, 0.0);
}

TEST(SimulateCoupledCases, NoisySeriesStayMonotone) {
  auto cfg = small_scenario(10);
  cfg.case_noise = 0.3;
  const auto s = generate_regions(cfg);
  const auto g = build_graph(s.regions, {});
  const auto cases = simulate_coupled_cases(g, s.truth, cfg);
  for (std::size_t v = 0; v < cases.size(); ++v) {
    const auto& c = cases[v].cumulative_cases;
    for (std::size_t k = 1; k < c.size(); ++k) ASSERT_GE(c[k], c[k - 1]);
    EXPECT_LT(c.back(), g.nodes[v].population);
  }
  const auto again = simulate_coupled_cases(g, s.truth, cfg);
  EXPECT_EQ(cases[3].cumulative_cases, again[3].cumulative_cases);
}

TEST(ScenarioConfig, Validation) {
  ScenarioConfig cfg;
  cfg.coupling = 1.0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = {};
  cfg.case_noise = -0.1;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = {};
  cfg.beta_range = {0.0, 0.3};
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(MakeDataset, SplitAndLabels) {
  DatasetConfig cfg;
  cfg.scenario = small_scenario(100);
  cfg.scenario.seed = 7;
  const Dataset ds = make_dataset(cfg);
  EXPECT_EQ(ds.split.train.size(), 60u);
  EXPECT_EQ(ds.split.val.size(), 20u);
  EXPECT_EQ(ds.split.test.size(), 20u);
  ASSERT_EQ(ds.labels.size(), 100u);
  for (std::size_t k = 0; k < ds.labels.size(); ++k) {
    EXPECT_EQ(ds.labels[k].region_id, ds.graph.nodes[k].id);
    EXPECT_TRUE(ds.labels[k].label >= 0 && ds.labels[k].label <= 2);
    EXPECT_EQ(ds.labels[k].r0, ds.calibrations[k].r0);
  }
}
