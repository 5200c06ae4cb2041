#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epirisk/autodiff.hpp"
#include "epirisk/error.hpp"

namespace epirisk {

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;  // parallel to the parameter list
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update. Parameters without a gradient buffer are
/// treated as having a zero gradient. All gradients are checked before any
/// parameter is touched.
inline void adam_step(std::span<const NamedTensor> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor->size(), 0.0);
      state.v.emplace_back(p.tensor->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& t = *params[k].tensor;
    if (state.m[k].size() != t.size() || state.v[k].size() != t.size())
      throw ShapeError("adam_step: moment shape mismatch for " + params[k].name);
    for (double g : t.grad())
      if (!std::isfinite(g)) throw NumericalError("training: non-finite gradient in " + params[k].name);
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = *params[k].tensor;
    if (!t.has_grad()) t.grad();
    const auto& g = t.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t j = 0; j < t.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      t.data()[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
    }
  }
}

}  // namespace epirisk
