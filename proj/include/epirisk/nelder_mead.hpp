#pragma once

// Bounded Nelder-Mead simplex minimizer with restart-on-convergence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

struct NelderMeadOptions {
  std::size_t max_iterations = 500;  // shared across restarts
  double tolerance = 1e-8;           // max-norm simplex radius around the best vertex
  std::size_t max_restarts = 2;
  std::vector<double> initial_step;  // per-dimension; defaults to 0.1
  std::vector<double> lower;         // optional box, empty = unbounded
  std::vector<double> upper;
};

struct NelderMeadResult {
  std::vector<double> point;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool clamped = false;  // a trial point left the box and was projected back
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, const NelderMeadOptions& opt = {}) {
  const std::size_t dim = start.size();
  if (dim == 0) throw ConfigError("nelder_mead.start", "empty starting point");
  const bool bounded = !opt.lower.empty() || !opt.upper.empty();
  if (bounded && (opt.lower.size() != dim || opt.upper.size() != dim))
    throw ConfigError("nelder_mead.bounds", "bounds must match the dimension");

  NelderMeadResult res;
  auto project = [&](std::vector<double>& x) {
    if (!bounded) return;
    for (std::size_t j = 0; j < dim; ++j) {
      const double c = std::clamp(x[j], opt.lower[j], opt.upper[j]);
      if (c != x[j]) res.clamped = true;
      x[j] = c;
    }
  };
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  project(start);
  std::vector<std::vector<double>> simplex(dim + 1, start);
  std::vector<double> fx(dim + 1);
  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);

  auto trial = [&](double scale, const std::vector<double>& toward, std::vector<double>& out) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = centroid[j] + scale * (toward[j] - centroid[j]);
    project(out);
  };

  std::vector<double> best = start;
  double best_value = eval(start);

  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    simplex.assign(dim + 1, best);
    fx[0] = best_value;
    for (std::size_t j = 0; j < dim; ++j) {
      const double step = opt.initial_step.empty() ? 0.1 : opt.initial_step[j];
      simplex[j + 1][j] += step;
      if (bounded && simplex[j + 1][j] > opt.upper[j]) simplex[j + 1][j] = best[j] - step;
      project(simplex[j + 1]);
      fx[j + 1] = eval(simplex[j + 1]);
    }

    bool converged = false;
    while (res.iterations < opt.max_iterations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
      const std::size_t lo = order.front(), hi = order.back(), next_hi = order[dim - 1];

      double radius = 0.0;
      for (std::size_t v = 0; v <= dim; ++v)
        for (std::size_t j = 0; j < dim; ++j)
          radius = std::max(radius, std::abs(simplex[v][j] - simplex[lo][j]));
      if (radius <= opt.tolerance) {
        converged = true;
        break;
      }
      ++res.iterations;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t v = 0; v <= dim; ++v) {
        if (v == hi) continue;
        for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[v][j];
      }
      for (double& c : centroid) c /= static_cast<double>(dim);

      trial(-1.0, simplex[hi], xr);
      const double fr = eval(xr);
      if (fr < fx[lo]) {
        trial(-2.0, simplex[hi], xe);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[hi] = xe;
          fx[hi] = fe;
        } else {
          simplex[hi] = xr;
          fx[hi] = fr;
        }
        continue;
      }
      if (fr < fx[next_hi]) {
        simplex[hi] = xr;
        fx[hi] = fr;
        continue;
      }
      // contraction: outside if the reflected point beat the worst, else inside
      const bool outside = fr < fx[hi];
      trial(outside ? -0.5 : 0.5, simplex[hi], xc);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fx[hi])) {
        simplex[hi] = xc;
        fx[hi] = fc;
        continue;
      }
      for (std::size_t v = 0; v <= dim; ++v) {
        if (v == lo) continue;
        for (std::size_t j = 0; j < dim; ++j)
          simplex[v][j] = simplex[lo][j] + 0.5 * (simplex[v][j] - simplex[lo][j]);
        project(simplex[v]);
        fx[v] = eval(simplex[v]);
      }
    }

    const auto lo = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    const bool improved = fx[lo] < best_value;
    if (fx[lo] <= best_value) {
      best = simplex[lo];
      best_value = fx[lo];
    }
    res.converged = converged;
    if (!converged || (restart > 0 && !improved)) break;
  }

  res.point = std::move(best);
  res.value = best_value;
  return res;
}

}  // namespace epirisk
