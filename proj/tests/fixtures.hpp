#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "epirisk/calibration.hpp"
#include "epirisk/mobility_graph.hpp"
#include "epirisk/sir.hpp"

namespace fixture {

/// Noise-free daily cumulative incidence N - S(t) for days 0 .. days-1.
inline epirisk::CaseSeries daily_series(double beta, double gamma, double population, double i0, int days,
                                        double dt = 0.1) {
  const auto traj = epirisk::integrate_sir(epirisk::make_outbreak_params(beta, gamma, population, i0), days - 1, dt);
  const auto per_day = static_cast<std::size_t>(std::llround(1.0 / dt));
  epirisk::CaseSeries s;
  s.region_id = "X";
  for (int d = 0; d < days; ++d) {
    s.days.push_back(d);
    s.cumulative_cases.push_back(population - traj.s[static_cast<std::size_t>(d) * per_day]);
  }
  return s;
}

inline std::vector<epirisk::Region> random_regions(std::size_t n, std::mt19937_64& rng, double extent = 2e5,
                                                   std::size_t features = 2) {
  std::uniform_real_distribution<double> pos(0.0, extent), pop(2000.0, 20000.0), f(-1.0, 1.0);
  std::vector<epirisk::Region> out;
  for (std::size_t k = 0; k < n; ++k) {
    epirisk::Region r;
    r.id = "n" + std::to_string(k);
    r.population = pop(rng);
    r.x = pos(rng);
    r.y = pos(rng);
    for (std::size_t j = 0; j < features; ++j) r.features.push_back(f(rng));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fixture
