#pragma once

// Least-squares calibration of (beta, gamma) to a cumulative case series.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include "epirisk/error.hpp"
#include "epirisk/nelder_mead.hpp"
#include "epirisk/sir.hpp"

namespace epirisk {

struct CaseSeries {
  std::string region_id;
  std::vector<int> days;  // offsets from the window start, strictly increasing
  std::vector<double> cumulative_cases;

  std::size_t size() const noexcept { return days.size(); }
};

struct CalibConfig {
  double dt = 0.1;
  double beta_min = 0.01;
  double beta_max = 2.0;
  double gamma_min = 0.01;
  double gamma_max = 1.0;
  std::size_t grid_size = 24;
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;
};

struct CalibrationResult {
  SirParams params;
  double r0 = 0.0;
  double loss = 0.0;  // MSE divided by the squared final count
  std::size_t iterations = 0;
  bool clamped = false;  // estimate sits on the search-box boundary
};

inline void validate(const CalibConfig& c) {
  if (!(c.dt > 0.0)) throw ConfigError("calibration.dt", "must be > 0");
  if (!(c.beta_min > 0.0 && c.beta_max > c.beta_min))
    throw ConfigError("calibration.beta_range", "need 0 < min < max");
  if (!(c.gamma_min > 0.0 && c.gamma_max > c.gamma_min))
    throw ConfigError("calibration.gamma_range", "need 0 < min < max");
  if (c.grid_size < 2) throw ConfigError("calibration.grid_size", "must be >= 2");
  if (!(c.tolerance > 0.0)) throw ConfigError("calibration.tolerance", "must be > 0");
}

/// Validates a series against the region population. Throws DataError for
/// malformed input and NumericalError for a series with no growth.
inline void validate(const CaseSeries& series, double population) {
  const std::string& id = series.region_id;
  if (series.days.size() != series.cumulative_cases.size())
    throw DataError("case series " + id + ": days and counts differ in length");
  if (series.size() < 8) throw DataError("case series " + id + ": need at least 8 observations");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double c = series.cumulative_cases[k];
    if (!std::isfinite(c) || c < 0.0)
      throw DataError("case series " + id + ": counts must be finite and >= 0");
    if (k > 0 && series.days[k] <= series.days[k - 1])
      throw DataError("case series " + id + ": days must be strictly increasing");
    if (k > 0 && c < series.cumulative_cases[k - 1])
      throw DataError("case series " + id + ": cumulative counts decrease");
  }
  if (!(series.cumulative_cases.back() < population))
    throw DataError("case series " + id + ": final count must be below population");
  if (series.cumulative_cases.back() == series.cumulative_cases.front())
    throw NumericalError("case series " + id + ": degenerate series (no growth to fit)");
}

namespace detail {

/// Evaluates the normalized cumulative-incidence MSE for one parameter pair,
/// stepping the same RK4 scheme as integrate_sir up to each observation.
class CumulativeIncidenceLoss {
 public:
  CumulativeIncidenceLoss(const CaseSeries& series, double population, double dt)
      : series_(series), population_(population), dt_(dt) {
    i0_ = std::max(series.cumulative_cases.front(), 1.0);
    scale_ = std::max(series.cumulative_cases.back(), 1.0);
    step_index_.reserve(series.size());
    for (int d : series.days) {
      const double ratio = static_cast<double>(d - series.days.front()) / dt;
      const double idx = std::round(ratio);
      if (std::abs(ratio - idx) > 1e-6)
        throw ConfigError("calibration.dt", "observation days must be multiples of dt");
      step_index_.push_back(static_cast<std::size_t>(idx));
    }
  }

  double initial_infected() const noexcept { return i0_; }

  /// Stops early and returns +inf once the running error exceeds `bound`;
  /// the error only grows with more observations, so argmin searches are
  /// unaffected.
  double operator()(double beta, double gamma,
                    double bound = std::numeric_limits<double>::infinity()) const {
    const SirParams p = make_outbreak_params(beta, gamma, population_, i0_);
    using Vec = std::array<double, 3>;
    Vec y{p.s0, p.i0, p.r0};
    std::array<Vec, 5> work{};
    auto deriv = [&](const Vec& x, Vec& dx) {
      const SirState d = sir_derivatives({x[0], x[1], x[2]}, p);
      dx = {d.s, d.i, d.r};
    };
    std::size_t step = 0;
    double sse = 0.0;
    const double sse_bound = bound * static_cast<double>(step_index_.size());
    for (std::size_t k = 0; k < step_index_.size(); ++k) {
      for (; step < step_index_[k]; ++step) rk4_step(y, dt_, deriv, work);
      const double resid = (series_.cumulative_cases[k] - (population_ - y[0])) / scale_;
      sse += resid * resid;
      if (sse > sse_bound) return std::numeric_limits<double>::infinity();
    }
    return sse / static_cast<double>(step_index_.size());
  }

 private:
  const CaseSeries& series_;
  double population_;
  double dt_;
  double i0_ = 1.0;
  double scale_ = 1.0;
  std::vector<std::size_t> step_index_;
};

}  // namespace detail

/// Fits (beta, gamma) by minimizing the mean squared error between observed
/// cumulative cases and N - S(t). The initial state is i0 = max(first count, 1),
/// r0 = 0. Search: log-uniform grid over the box, then Nelder-Mead in log space.
inline CalibrationResult calibrate_sir(const CaseSeries& series, double population,
                                       const CalibConfig& config = {}) {
  validate(config);
  if (!(population > 0.0)) throw DataError("region " + series.region_id + ": population must be > 0");
  validate(series, population);

  const detail::CumulativeIncidenceLoss loss(series, population, config.dt);
  const double lb[2] = {std::log(config.beta_min), std::log(config.gamma_min)};
  const double ub[2] = {std::log(config.beta_max), std::log(config.gamma_max)};
  const double spacing[2] = {(ub[0] - lb[0]) / static_cast<double>(config.grid_size - 1),
                             (ub[1] - lb[1]) / static_cast<double>(config.grid_size - 1)};

  std::vector<double> start{lb[0], lb[1]};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < config.grid_size; ++a) {
    for (std::size_t b = 0; b < config.grid_size; ++b) {
      const double lbeta = lb[0] + spacing[0] * static_cast<double>(a);
      const double lgamma = lb[1] + spacing[1] * static_cast<double>(b);
      const double v = loss(std::exp(lbeta), std::exp(lgamma), best);
      if (v < best) {
        best = v;
        start = {lbeta, lgamma};
      }
    }
  }

  NelderMeadOptions nm;
  nm.max_iterations = config.max_iterations;
  nm.tolerance = config.tolerance;
  nm.initial_step = {spacing[0], spacing[1]};
  nm.lower = {lb[0], lb[1]};
  nm.upper = {ub[0], ub[1]};
  const NelderMeadResult fit =
      nelder_mead([&](const std::vector<double>& x) { return loss(std::exp(x[0]), std::exp(x[1])); },
                  start, nm);

  CalibrationResult out;
  out.params = make_outbreak_params(std::exp(fit.point[0]), std::exp(fit.point[1]), population,
                                    loss.initial_infected());
  out.r0 = basic_reproduction_number(out.params);
  out.loss = fit.value;
  out.iterations = fit.iterations;
  for (int j = 0; j < 2; ++j)
    if (fit.point[j] <= lb[j] + 1e-12 || fit.point[j] >= ub[j] - 1e-12) out.clamped = true;
  return out;
}

}  // namespace epirisk
