#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "epirisk/io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace epirisk;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("epirisk_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345678.9, -2.5}) EXPECT_EQ(std::stod(io::format_double(v)), v);
  EXPECT_EQ(io::format_double(2.0), "2");
}

TEST(ParseCsv, BlankLinesAndErrors) {
  const auto t = io::parse_csv("a,b\n1,2\n\n3,4\n", "mem");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_THROW(t.column("c"), DataError);
  EXPECT_THROW(io::parse_double("1.5x", "v"), DataError);
  EXPECT_THROW(io::parse_int("2.0", "v"), DataError);
}

TEST_F(IoTest, MissingFileReportsPath) {
  try {
    io::read_text(dir_ / "nope.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(e.path().find("nope.csv"), std::string::npos);
  }
}

TEST_F(IoTest, AtomicWriteLeavesNoTemporary) {
  io::atomic_write(dir_ / "x.txt", "hello\n");
  EXPECT_EQ(io::read_text(dir_ / "x.txt"), "hello\n");
  EXPECT_FALSE(fs::exists(dir_ / "x.txt.tmp"));
  EXPECT_THROW(io::atomic_write(dir_ / "missing" / "x.txt", "a"), IoError);
  EXPECT_FALSE(fs::exists(dir_ / "missing"));
}

TEST_F(IoTest, RegionsAndFeaturesRoundTrip) {
  std::mt19937_64 rng(1);
  auto regions = fixture::random_regions(15, rng, 1e5, 4);
  io::atomic_write(dir_ / "regions.csv", io::regions_csv(regions));
  io::atomic_write(dir_ / "features.csv", io::features_csv(regions));
  auto back = io::read_regions(dir_ / "regions.csv");
  io::attach_features(back, io::read_features(dir_ / "features.csv"));
  ASSERT_EQ(back.size(), regions.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].id, regions[k].id);
    EXPECT_EQ(back[k].population, regions[k].population);
    EXPECT_EQ(back[k].x, regions[k].x);
    EXPECT_EQ(back[k].y, regions[k].y);
    EXPECT_EQ(back[k].features, regions[k].features);
  }
}

TEST_F(IoTest, PerItemFeaturesAreAveraged) {
  io::atomic_write(dir_ / "f.csv", "region_id,item_id,f0,f1\na,1,1,1\na,2,3,3\nb,1,0.5,-1\n");
  const auto f = io::read_features(dir_ / "f.csv");
  EXPECT_EQ(f.at("a"), (std::vector<double>{2, 2}));
  EXPECT_EQ(f.at("b"), (std::vector<double>{0.5, -1}));
}

TEST_F(IoTest, CasesRoundTrip) {
  std::vector<CaseSeries> cases{fixture::daily_series(0.3, 0.1, 5000, 3, 20)};
  cases.push_back(fixture::daily_series(0.2, 0.1, 8000, 5, 20));
  cases[1].region_id = "Y";
  io::atomic_write(dir_ / "cases.csv", io::cases_csv(cases));
  const auto back = io::read_cases(dir_ / "cases.csv");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].region_id, cases[k].region_id);
    EXPECT_EQ(back[k].days, cases[k].days);
    EXPECT_EQ(back[k].cumulative_cases, cases[k].cumulative_cases);
  }
}

TEST_F(IoTest, LabelsAndCalibrationRoundTrip) {
  const std::vector<RiskLabel> labels{{"a", 1.25, 0}, {"b", 2.0, 1}, {"c", 3.1, 2}};
  io::atomic_write(dir_ / "labels.csv", io::labels_csv(labels));
  const auto back = io::read_labels(dir_ / "labels.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].region_id, "c");
  EXPECT_EQ(back[2].r0, 3.1);
  EXPECT_EQ(back[2].label, 2);

  io::CalibrationRow row{"a", {}};
  row.result.params.beta = 0.31;
  row.result.params.gamma = 0.17;
  row.result.r0 = 0.31 / 0.17;
  io::atomic_write(dir_ / "calibration.csv", io::calibration_csv({row}));
  const auto cal = io::read_calibration(dir_ / "calibration.csv");
  ASSERT_EQ(cal.size(), 1u);
  EXPECT_EQ(cal[0].result.r0, row.result.r0);

  io::atomic_write(dir_ / "bad.csv", "region_id,r0,label\na,1.0,5\n");
  EXPECT_THROW(io::read_labels(dir_ / "bad.csv"), DataError);
}

TEST(GraphJson, LosslessRoundTrip) {
  std::mt19937_64 rng(2);
  const auto g = build_graph(fixture::random_regions(20, rng, 1e5, 3), {});
  const auto back = io::graph_from_json(nlohmann::json::parse(io::graph_to_json(g).dump(2)));
  ASSERT_EQ(back.node_count(), g.node_count());
  ASSERT_EQ(back.edges.size(), g.edges.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    EXPECT_EQ(back.edges[k].src, g.edges[k].src);
    EXPECT_EQ(back.edges[k].dst, g.edges[k].dst);
    EXPECT_EQ(back.edges[k].raw_weight, g.edges[k].raw_weight);
    EXPECT_EQ(back.edges[k].norm_weight, g.edges[k].norm_weight);
  }
  for (std::size_t k = 0; k < g.node_count(); ++k) EXPECT_EQ(back.nodes[k].features, g.nodes[k].features);
  EXPECT_EQ(io::graph_to_json(back).dump(), io::graph_to_json(g).dump());

  auto bad = io::graph_to_json(g);
  bad["edges"][0]["src"] = "ghost";
  EXPECT_THROW(io::graph_from_json(bad), GraphError);
}

TEST(SplitJson, RoundTrip) {
  std::mt19937_64 rng(3);
  const auto g = build_graph(fixture::random_regions(10, rng), {});
  std::vector<std::size_t> idx(10);
  std::iota(idx.begin(), idx.end(), 0);
  const auto s = make_split(idx, 4);
  const auto j = io::split_to_json(g, s, 4);
  EXPECT_EQ(j.at("seed"), 4);
  const auto back = io::split_from_json(g, j);
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.val, s.val);
  EXPECT_EQ(back.test, s.test);
}

TEST(ModelJson, RoundTripAndShapeMismatch) {
  EpiGcnConfig cfg;
  cfg.hidden_dim = 5;
  cfg.variant = Variant::no_gravity;
  EpiGcnModel model(cfg, 4);
  model.initialize(11);
  const auto j = nlohmann::json::parse(io::model_to_json(model).dump());
  EpiGcnModel back = io::model_from_json(j);
  EXPECT_EQ(back.config().variant, Variant::no_gravity);
  const auto a = model.parameters(), b = back.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].tensor->data(), b[k].tensor->data());

  auto bad = j;
  bad["metadata"]["hidden_dim"] = 6;
  EXPECT_THROW(io::model_from_json(bad), ShapeError);
}

TEST(MetricsJson, Fields) {
  const std::vector<int> t{0, 1, 2}, p{0, 1, 1};
  const auto j = io::metrics_to_json(weighted_metrics(t, p, 3));
  for (const char* key : {"weighted_f1", "weighted_precision", "weighted_recall", "per_class", "confusion"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["confusion"][2][1], 1);
}
