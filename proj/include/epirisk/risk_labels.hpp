#pragma once

// Three-level risk labels from the mean and standard deviation of R0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

enum RiskLevel : int { kLowRisk = 0, kMediumRisk = 1, kHighRisk = 2 };

inline constexpr double kDefaultThresholdMultiplier = 0.71;

struct RiskLabel {
  std::string region_id;
  double r0 = 0.0;
  int label = kMediumRisk;
};

struct Labeling {
  std::vector<int> labels;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  double low_threshold = 0.0;
  double high_threshold = 0.0;
  bool zero_spread = false;  // sigma == 0, everything labelled medium
};

/// label 0 if r0 < mean - k sd, 2 if r0 > mean + k sd, else 1.
/// Values exactly on a threshold are medium.
inline Labeling categorize_r0(std::span<const double> r0_values, double k) {
  if (r0_values.size() < 2) throw DataError("categorize_r0: need at least 2 values");
  if (!std::isfinite(k) || k < 0.0) throw ConfigError("label.k", "must be finite and >= 0");
  double sum = 0.0;
  for (double v : r0_values) {
    if (!std::isfinite(v)) throw DataError("categorize_r0: non-finite R0 value");
    sum += v;
  }
  const auto n = static_cast<double>(r0_values.size());
  Labeling out;
  out.mean = sum / n;
  double ss = 0.0;
  for (double v : r0_values) ss += (v - out.mean) * (v - out.mean);
  const auto [lo, hi] = std::minmax_element(r0_values.begin(), r0_values.end());
  // Rounding in the mean can leave a tiny spread for identical values.
  out.stddev = *lo == *hi ? 0.0 : std::sqrt(ss / n);
  out.low_threshold = out.mean - k * out.stddev;
  out.high_threshold = out.mean + k * out.stddev;
  out.zero_spread = out.stddev == 0.0;

  out.labels.reserve(r0_values.size());
  for (double v : r0_values) {
    int label = kMediumRisk;
    if (!out.zero_spread) {
      if (v < out.low_threshold) label = kLowRisk;
      else if (v > out.high_threshold) label = kHighRisk;
    }
    out.labels.push_back(label);
  }
  return out;
}

inline std::vector<RiskLabel> make_risk_labels(std::span<const std::string> region_ids,
                                               std::span<const double> r0_values, double k) {
  if (region_ids.size() != r0_values.size())
    throw DataError("make_risk_labels: ids and R0 values differ in length");
  const Labeling lab = categorize_r0(r0_values, k);
  std::vector<RiskLabel> out;
  out.reserve(region_ids.size());
  for (std::size_t j = 0; j < region_ids.size(); ++j)
    out.push_back({region_ids[j], r0_values[j], lab.labels[j]});
  return out;
}

}  // namespace epirisk
