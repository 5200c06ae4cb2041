#pragma once

// Deterministic SIR compartmental dynamics and the basic reproduction number.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

struct SirParams {
  double beta = 0.0;        // infection rate, 1/day
  double gamma = 0.0;       // recovery rate, 1/day
  double population = 0.0;  // N
  double s0 = 0.0;
  double i0 = 0.0;
  double r0 = 0.0;
};

struct SirState {
  double s = 0.0;
  double i = 0.0;
  double r = 0.0;
};

struct SirTrajectory {
  double population = 0.0;
  std::vector<double> times;
  std::vector<double> s;
  std::vector<double> i;
  std::vector<double> r;

  std::size_t size() const noexcept { return times.size(); }
};

/// Builds parameters with s0 = N - i0 and r0 = 0.
inline SirParams make_outbreak_params(double beta, double gamma, double population, double i0) {
  return SirParams{beta, gamma, population, population - i0, i0, 0.0};
}

/// Throws ConfigError unless rates are non-negative, N > 0, compartments are
/// non-negative and sum to N within 1e-9 N.
inline void validate(const SirParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(p.beta) || p.beta < 0.0) throw ConfigError("beta", "must be finite and >= 0");
  if (!finite(p.gamma) || p.gamma < 0.0) throw ConfigError("gamma", "must be finite and >= 0");
  if (!finite(p.population) || p.population <= 0.0)
    throw ConfigError("population", "must be finite and > 0");
  if (!finite(p.s0) || !finite(p.i0) || !finite(p.r0) || p.s0 < 0.0 || p.i0 < 0.0 || p.r0 < 0.0)
    throw ConfigError("initial_state", "compartments must be finite and >= 0");
  if (std::abs(p.s0 + p.i0 + p.r0 - p.population) > 1e-9 * p.population)
    throw ConfigError("initial_state", "s0 + i0 + r0 must equal population");
}

/// Right-hand side of the SIR equations. The force of infection is formed as
/// beta * (i / N) so that the metapopulation generator reproduces this
/// expression bit for bit in the decoupled limit.
inline SirState sir_derivatives(const SirState& x, const SirParams& p) {
  if (!std::isfinite(x.s) || !std::isfinite(x.i) || !std::isfinite(x.r))
    throw NumericalError("invalid state: non-finite compartment");
  if (!(p.population > 0.0)) throw ConfigError("population", "must be > 0");
  const double force = p.beta * (x.i / p.population);
  const double infection = force * x.s;
  const double recovery = p.gamma * x.i;
  return {-infection, infection - recovery, recovery};
}

/// One classical Runge-Kutta step on an indexable state (std::array or
/// std::vector). `deriv(y, dy)` writes the derivative of `y` into `dy`.
template <class State, class Deriv>
void rk4_step(State& y, double dt, Deriv&& deriv, std::array<State, 5>& work) {
  auto& [k1, k2, k3, k4, tmp] = work;
  const std::size_t n = y.size();
  deriv(y, k1);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
  deriv(tmp, k2);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
  deriv(tmp, k3);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + dt * k3[j];
  deriv(tmp, k4);
  for (std::size_t j = 0; j < n; ++j)
    y[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
}

/// Number of samples for a fixed-step run: floor(horizon / dt) + 1. A ratio
/// within 1e-9 of an integer counts as that integer, so 119 / 0.1 gives 1191.
inline std::size_t sample_count(double horizon_days, double dt) {
  const double ratio = horizon_days / dt;
  const double nearest = std::round(ratio);
  const double steps = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest
                                                                                    : std::floor(ratio);
  return static_cast<std::size_t>(steps) + 1;
}

/// Fixed-step RK4 integration from t = 0 over `horizon_days`.
inline SirTrajectory integrate_sir(const SirParams& params, double horizon_days, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be > 0");
  if (!(horizon_days > 0.0) || !std::isfinite(horizon_days))
    throw ConfigError("horizon_days", "must be > 0");
  if (dt > horizon_days) throw ConfigError("dt", "must not exceed horizon_days");
  validate(params);

  const std::size_t count = sample_count(horizon_days, dt);
  SirTrajectory out;
  out.population = params.population;
  out.times.reserve(count);
  out.s.reserve(count);
  out.i.reserve(count);
  out.r.reserve(count);

  using Vec = std::array<double, 3>;
  Vec y{params.s0, params.i0, params.r0};
  std::array<Vec, 5> work{};
  auto deriv = [&](const Vec& x, Vec& dx) {
    const SirState d = sir_derivatives({x[0], x[1], x[2]}, params);
    dx = {d.s, d.i, d.r};
  };
  for (std::size_t step = 0; step < count; ++step) {
    if (step > 0) rk4_step(y, dt, deriv, work);
    out.times.push_back(static_cast<double>(step) * dt);
    out.s.push_back(y[0]);
    out.i.push_back(y[1]);
    out.r.push_back(y[2]);
  }
  return out;
}

/// R0 = beta / gamma.
inline double basic_reproduction_number(const SirParams& params) {
  if (params.gamma == 0.0) throw NumericalError("basic reproduction number: gamma is zero");
  return params.beta / params.gamma;
}

}  // namespace epirisk
