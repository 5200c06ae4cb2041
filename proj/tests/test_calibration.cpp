#include <gtest/gtest.h>

#include <cmath>

#include "epirisk/calibration.hpp"
#include "epirisk/nelder_mead.hpp"
#include "fixtures.hpp"

using namespace epirisk;

TEST(NelderMead, FindsRosenbrockMinimum) {
  auto rosen = [](const std::vector<double>& x) {
    return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
  };
  NelderMeadOptions opt;
  opt.max_iterations = 2000;
  opt.tolerance = 1e-10;
  const auto res = nelder_mead(rosen, {-1.2, 1.0}, opt);
  EXPECT_NEAR(res.point[0], 1.0, 1e-4);
  EXPECT_NEAR(res.point[1], 1.0, 1e-4);
  EXPECT_TRUE(res.converged);
}

TEST(NelderMead, StaysInsideBounds) {
  auto f = [](const std::vector<double>& x) { return (x[0] - 5) * (x[0] - 5) + x[1] * x[1]; };
  NelderMeadOptions opt;
  opt.lower = {-1, -1};
  opt.upper = {2, 1};
  const auto res = nelder_mead(f, {0.0, 0.5}, opt);
  EXPECT_NEAR(res.point[0], 2.0, 1e-6);
  EXPECT_NEAR(res.point[1], 0.0, 1e-4);
  EXPECT_TRUE(res.clamped);
}

TEST(Calibration, RecoversR0Of2) {
  const auto series = fixture::daily_series(0.30, 0.15, 50000, 20, 120);
  const auto res = calibrate_sir(series, 50000, {});
  EXPECT_NEAR(res.r0 / 2.0, 1.0, 0.05);
  EXPECT_FALSE(res.clamped);
}

TEST(Calibration, RecoversR0Of1p2) {
  const auto series = fixture::daily_series(0.12, 0.10, 50000, 20, 120);
  const auto res = calibrate_sir(series, 50000, {});
  EXPECT_NEAR(res.r0 / 1.2, 1.0, 0.05);
}

TEST(Calibration, DeterministicForFixedConfig) {
  const auto series = fixture::daily_series(0.25, 0.1, 20000, 20, 90);
  const auto a = calibrate_sir(series, 20000, {});
  const auto b = calibrate_sir(series, 20000, {});
  EXPECT_EQ(a.params.beta, b.params.beta);
  EXPECT_EQ(a.params.gamma, b.params.gamma);
  EXPECT_EQ(a.loss, b.loss);
}

TEST(Calibration, InitialStateFromFirstObservation) {
  auto series = fixture::daily_series(0.3, 0.1, 30000, 20, 60);
  auto res = calibrate_sir(series, 30000, {});
  EXPECT_EQ(res.params.i0, series.cumulative_cases[0]);
  EXPECT_EQ(res.params.s0, 30000 - series.cumulative_cases[0]);
  EXPECT_EQ(res.params.r0, 0.0);

  // A zero first count still seeds one infectious person.
  for (double& c : series.cumulative_cases) c -= 20;
  res = calibrate_sir(series, 30000, {});
  EXPECT_EQ(res.params.i0, 1.0);
}

TEST(Calibration, DegenerateSeries) {
  CaseSeries flat{"Z", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, std::vector<double>(10, 0.0)};
  EXPECT_THROW(calibrate_sir(flat, 1000, {}), NumericalError);
}

TEST(Calibration, RejectsInvalidSeries) {
  CaseSeries shortish{"A", {0, 1, 2}, {1, 2, 3}};
  EXPECT_THROW(calibrate_sir(shortish, 1000, {}), DataError);

  auto dropping = fixture::daily_series(0.3, 0.1, 30000, 20, 30);
  dropping.cumulative_cases[10] = dropping.cumulative_cases[9] - 1;
  EXPECT_THROW(calibrate_sir(dropping, 30000, {}), DataError);

  auto over = fixture::daily_series(0.3, 0.1, 30000, 20, 30);
  EXPECT_THROW(calibrate_sir(over, over.cumulative_cases.back(), {}), DataError);

  auto days = fixture::daily_series(0.3, 0.1, 30000, 20, 30);
  days.days[4] = days.days[3];
  EXPECT_THROW(calibrate_sir(days, 30000, {}), DataError);
}

TEST(Calibration, RejectsInvalidConfig) {
  const auto series = fixture::daily_series(0.3, 0.1, 30000, 20, 30);
  CalibConfig cfg;
  cfg.dt = 0;
  try {
    calibrate_sir(series, 30000, cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "calibration.dt");
  }
}

TEST(Calibration, FlagsBoundaryEstimates) {
  // Growth faster than the box allows pushes beta to its upper bound.
  const auto series = fixture::daily_series(1.5, 0.05, 50000, 20, 60);
  CalibConfig cfg;
  cfg.beta_max = 0.5;
  const auto res = calibrate_sir(series, 50000, cfg);
  EXPECT_TRUE(res.clamped);
  EXPECT_LE(res.params.beta, 0.5 * (1 + 1e-12));
}

TEST(Calibration, RoundTripProperty) {
  // Hand-picked spread over the supported box, including slow epidemics.
  const double pairs[][2] = {{0.1, 0.05}, {0.55, 0.3}, {0.2, 0.17}, {0.45, 0.08}, {0.33, 0.25}, {0.6, 0.12}};
  for (const auto& bg : pairs) {
    const auto series = fixture::daily_series(bg[0], bg[1], 40000, 20, 120);
    const auto res = calibrate_sir(series, 40000, {});
    EXPECT_NEAR(res.r0 / (bg[0] / bg[1]), 1.0, 0.05) << "beta=" << bg[0] << " gamma=" << bg[1];
  }
}
