#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "epirisk/mobility_graph.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace epirisk;

TEST(GravityWeight, Examples) {
  GravityConfig cfg;
  cfg.rho = 0.3;
  cfg.theta = 1.7;
  EXPECT_DOUBLE_EQ(gravity_weight(1, 1, 0, cfg), 1.0);
  cfg.rho = cfg.theta = 1.0;
  cfg.delta = 500.0;
  EXPECT_NEAR(gravity_weight(100, 100, 500.0, cfg), 3678.7944117144233, 1e-9);
}

TEST(GravityWeight, DecreasesWithDistance) {
  GravityConfig cfg;
  double prev = gravity_weight(5000, 8000, 0, cfg);
  for (double d = 1000; d < 1e6; d *= 1.7) {
    const double w = gravity_weight(5000, 8000, d, cfg);
    EXPECT_LT(w, prev);
    prev = w;
  }
}

TEST(GravityWeight, AsymmetryFollowsExponents) {
  GravityConfig cfg;
  EXPECT_NE(gravity_weight(3000, 9000, 2e4, cfg), gravity_weight(9000, 3000, 2e4, cfg));
  cfg.rho = cfg.theta = 0.55;
  EXPECT_EQ(gravity_weight(3000, 9000, 2e4, cfg), gravity_weight(9000, 3000, 2e4, cfg));
}

TEST(BuildGraph, TwoRegionsFull) {
  std::vector<Region> r{{"a", 1000, 0, 0, {}}, {"b", 2000, 100, 0, {}}};
  GravityConfig cfg;
  cfg.neighbors_k.reset();
  const auto g = build_graph(r, cfg);
  ASSERT_EQ(g.edges.size(), 2u);
  for (const auto& e : g.edges) EXPECT_EQ(e.norm_weight, 1.0);
}

TEST(BuildGraph, SymmetricMiddleNode) {
  std::vector<Region> r{{"a", 1000, 0, 0, {}}, {"b", 1000, 1000, 0, {}}, {"c", 1000, 2000, 0, {}}};
  GravityConfig cfg;
  cfg.rho = cfg.theta = 1.0;
  cfg.neighbors_k.reset();
  const auto g = build_graph(r, cfg);
  ASSERT_EQ(g.in_edges[1].size(), 2u);
  for (std::size_t e : g.in_edges[1]) EXPECT_DOUBLE_EQ(g.edges[e].norm_weight, 0.5);
}

TEST(BuildGraph, MatchesBruteForceTopK) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    auto regions = fixture::random_regions(10, rng);
    GravityConfig cfg;
    cfg.neighbors_k = 1 + trial % 9;
    const auto g = build_graph(regions, cfg);
    const auto ref = oracle::brute_force_topk(regions, cfg.rho, cfg.theta, cfg.delta, *cfg.neighbors_k);
    ASSERT_EQ(g.edges.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_EQ(g.edges[k].src, ref[k].src);
      EXPECT_EQ(g.edges[k].dst, ref[k].dst);
      EXPECT_EQ(g.edges[k].raw_weight, ref[k].raw);
      EXPECT_EQ(g.edges[k].norm_weight, ref[k].norm);
    }
    for (std::size_t v = 0; v < g.node_count(); ++v) EXPECT_EQ(g.in_edges[v].size(), *cfg.neighbors_k);
  }
}

TEST(BuildGraph, TiesBrokenByAscendingId) {
  // Four equal-population regions at equal distance from the centre one.
  std::vector<Region> r{{"m", 5000, 0, 0, {}},     {"d", 5000, 1000, 0, {}}, {"b", 5000, -1000, 0, {}},
                        {"c", 5000, 0, 1000, {}}, {"a", 5000, 0, -1000, {}}};
  GravityConfig cfg;
  cfg.neighbors_k = 2;
  const auto g = build_graph(r, cfg);
  std::vector<std::string> picked;
  for (std::size_t e : g.in_edges[0]) picked.push_back(g.nodes[g.edges[e].src].id);
  EXPECT_EQ(picked, (std::vector<std::string>{"a", "b"}));
}

TEST(BuildGraph, NoSelfLoopsAndNormalized) {
  std::mt19937_64 rng(1);
  const auto g = build_graph(fixture::random_regions(40, rng), {});
  for (const auto& e : g.edges) EXPECT_NE(e.src, e.dst);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    double total = 0;
    for (std::size_t e : g.in_edges[v]) total += g.edges[e].norm_weight;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(BuildGraph, PopulationScaleCovariance) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto regions = fixture::random_regions(12, rng);
    auto scaled = regions;
    const double c = 0.5 + trial * 0.7;
    for (auto& r : scaled) r.population *= c;
    GravityConfig cfg;
    cfg.neighbors_k = 5;
    const auto a = build_graph(regions, cfg), b = build_graph(scaled, cfg);
    ASSERT_EQ(a.edges.size(), b.edges.size());
    const double factor = std::pow(c, cfg.rho + cfg.theta);
    for (std::size_t k = 0; k < a.edges.size(); ++k) {
      EXPECT_EQ(a.edges[k].src, b.edges[k].src);
      EXPECT_NEAR(b.edges[k].raw_weight / (a.edges[k].raw_weight * factor), 1.0, 1e-12);
      EXPECT_NEAR(b.edges[k].norm_weight, a.edges[k].norm_weight, 1e-12);
    }
  }
}

TEST(BuildGraph, DistanceShiftIsCommonFactor) {
  // Extra distance s multiplies every weight by exp(-s / delta).
  GravityConfig cfg;
  const double s = 12345.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pop(2000, 20000), dist(0, 1e5);
  for (int k = 0; k < 100; ++k) {
    const double a = pop(rng), b = pop(rng), d = dist(rng);
    EXPECT_NEAR(gravity_weight(a, b, d + s, cfg) / gravity_weight(a, b, d, cfg), std::exp(-s / cfg.delta), 1e-12);
  }
}

TEST(BuildGraph, Deterministic) {
  std::mt19937_64 rng(5);
  const auto regions = fixture::random_regions(60, rng);
  const auto a = build_graph(regions, {}), b = build_graph(regions, {});
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    EXPECT_EQ(a.edges[k].src, b.edges[k].src);
    EXPECT_EQ(a.edges[k].dst, b.edges[k].dst);
    EXPECT_EQ(a.edges[k].raw_weight, b.edges[k].raw_weight);
    EXPECT_EQ(a.edges[k].norm_weight, b.edges[k].norm_weight);
  }
}

TEST(BuildGraph, Errors) {
  std::vector<Region> one{{"a", 10, 0, 0, {}}};
  EXPECT_THROW(build_graph(one, {}), DataError);
  std::vector<Region> dup{{"a", 10, 0, 0, {}}, {"a", 10, 1, 0, {}}};
  EXPECT_THROW(build_graph(dup, {}), DataError);
  std::vector<Region> ok{{"a", 10, 0, 0, {}}, {"b", 10, 1, 0, {}}};
  GravityConfig cfg;
  cfg.delta = 0;
  EXPECT_THROW(build_graph(ok, cfg), ConfigError);
  cfg = {};
  cfg.neighbors_k = 0;
  EXPECT_THROW(build_graph(ok, cfg), ConfigError);
}

TEST(AggregateNodeFeatures, Means) {
  std::map<std::string, std::vector<std::vector<double>>> items{
      {"one", {{0.25, -3.0}}}, {"pair", {{1, 1}, {3, 3}}}, {"opp", {{1.5, -2.0}, {-1.5, 2.0}}}};
  const auto out = aggregate_node_features(items);
  EXPECT_EQ(out.at("one"), (std::vector<double>{0.25, -3.0}));
  EXPECT_EQ(out.at("pair"), (std::vector<double>{2, 2}));
  EXPECT_EQ(out.at("opp"), (std::vector<double>{0, 0}));
  items["bad"] = {{1.0}};
  EXPECT_THROW(aggregate_node_features(items), DataError);
}
