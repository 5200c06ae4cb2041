#pragma once

// Minimal dense reverse-mode automatic differentiation.
//
// Tensors are row-major 2-D arrays of doubles. Operations executed through a
// Tape allocate their outputs on the tape and push a backward closure; a
// single backward() call replays the closures in reverse order. Parameter
// tensors live outside the tape and must outlive it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols)
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " != " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::string shape_string() const { return "[" + std::to_string(rows_) + "," + std::to_string(cols_) + "]"; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool requires_grad() const noexcept { return requires_grad_; }
  Tensor& set_requires_grad(bool on = true) {
    requires_grad_ = on;
    return *this;
  }

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::vector<double>& grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
    return grad_;
  }
  const std::vector<double>& grad() const noexcept { return grad_; }
  double grad(std::size_t r, std::size_t c) const { return grad_.empty() ? 0.0 : grad_[r * cols_ + c]; }
  void zero_grad() { grad_.clear(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

/// Incoming message v <- src with the given weight.
struct WeightedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 0.0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor& make(std::size_t rows, std::size_t cols, bool requires_grad) {
    if (consumed_) throw std::logic_error("tape already consumed by backward()");
    values_.emplace_back(rows, cols);
    return values_.back().set_requires_grad(requires_grad);
  }

  void on_backward(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

  std::size_t op_count() const noexcept { return ops_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  /// A tape can be replayed only once.
  void backward(Tensor& loss) {
    if (consumed_) throw std::logic_error("tape already consumed by backward()");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ShapeError("backward() needs a scalar loss, got " + loss.shape_string());
    consumed_ = true;
    if (!loss.requires_grad()) return;
    loss.grad()[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void mark_softmax(const Tensor& probs, Tensor& logits) { softmax_logits_[&probs] = &logits; }
  Tensor* softmax_logits(const Tensor& probs) const {
    auto it = softmax_logits_.find(&probs);
    return it == softmax_logits_.end() ? nullptr : it->second;
  }

 private:
  std::deque<Tensor> values_;
  std::vector<std::function<void()>> ops_;
  std::unordered_map<const Tensor*, Tensor*> softmax_logits_;
  bool consumed_ = false;
};

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

// out[n,q] += x[n,p] * w[p,q]
inline void gemm_acc(const std::vector<double>& x, const std::vector<double>& w, std::vector<double>& out,
                     std::size_t n, std::size_t p, std::size_t q) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) {
      const double xik = x[i * p + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < q; ++j) out[i * q + j] += xik * w[k * q + j];
    }
}

}  // namespace detail

/// x[n,p] * w[p,q]
inline Tensor& matmul(Tape& tape, Tensor& x, Tensor& w) {
  if (x.cols() != w.rows())
    throw ShapeError("matmul: shape mismatch " + x.shape_string() + " x " + w.shape_string());
  const std::size_t n = x.rows(), p = x.cols(), q = w.cols();
  Tensor& out = tape.make(n, q, x.requires_grad() || w.requires_grad());
  detail::gemm_acc(x.data(), w.data(), out.data(), n, p, q);
  if (!out.requires_grad()) return out;
  tape.on_backward([&x, &w, &out, n, p, q] {
    if (!out.has_grad()) return;
    const auto& g = out.grad();
    if (x.requires_grad()) {
      auto& gx = x.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < q; ++j) acc += g[i * q + j] * w.data()[k * q + j];
          gx[i * p + k] += acc;
        }
    }
    if (w.requires_grad()) {
      auto& gw = w.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p; ++k) {
          const double xik = x.data()[i * p + k];
          for (std::size_t j = 0; j < q; ++j) gw[k * q + j] += xik * g[i * q + j];
        }
    }
  });
  return out;
}

/// x[n,p] * w[p,q] + b[1,q], bias broadcast over rows.
inline Tensor& linear(Tape& tape, Tensor& x, Tensor& w, Tensor& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols())
    throw ShapeError("linear: shape mismatch x" + x.shape_string() + " w" + w.shape_string() + " b" +
                     b.shape_string());
  Tensor& xw = matmul(tape, x, w);
  const std::size_t n = xw.rows(), q = xw.cols();
  Tensor& out = tape.make(n, q, xw.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) out.data()[i * q + j] = xw.data()[i * q + j] + b.data()[j];
  if (!out.requires_grad()) return out;
  tape.on_backward([&xw, &b, &out, n, q] {
    if (!out.has_grad()) return;
    const auto& g = out.grad();
    if (xw.requires_grad()) {
      auto& gx = xw.grad();
      for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k];
    }
    if (b.requires_grad()) {
      auto& gb = b.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) gb[j] += g[i * q + j];
    }
  });
  return out;
}

/// max(0, x); the subgradient at 0 is 0.
inline Tensor& relu(Tape& tape, Tensor& x) {
  Tensor& out = tape.make(x.rows(), x.cols(), x.requires_grad());
  for (std::size_t k = 0; k < x.size(); ++k) out.data()[k] = x.data()[k] > 0.0 ? x.data()[k] : 0.0;
  if (!out.requires_grad()) return out;
  tape.on_backward([&x, &out] {
    if (!out.has_grad()) return;
    auto& gx = x.grad();
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x.data()[k] > 0.0) gx[k] += out.grad()[k];
  });
  return out;
}

inline Tensor& add(Tape& tape, Tensor& a, Tensor& b) {
  detail::require_same_shape(a, b, "add");
  Tensor& out = tape.make(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] + b.data()[k];
  if (!out.requires_grad()) return out;
  tape.on_backward([&a, &b, &out] {
    if (!out.has_grad()) return;
    for (Tensor* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto& g = t->grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += out.grad()[k];
    }
  });
  return out;
}

inline Tensor& sub(Tape& tape, Tensor& a, Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor& out = tape.make(a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] - b.data()[k];
  if (!out.requires_grad()) return out;
  tape.on_backward([&a, &b, &out] {
    if (!out.has_grad()) return;
    if (a.requires_grad()) {
      auto& g = a.grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += out.grad()[k];
    }
    if (b.requires_grad()) {
      auto& g = b.grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] -= out.grad()[k];
    }
  });
  return out;
}

/// Column-wise [a | b].
inline Tensor& concat_cols(Tape& tape, Tensor& a, Tensor& b) {
  if (a.rows() != b.rows())
    throw ShapeError("concat_cols: row mismatch " + a.shape_string() + " vs " + b.shape_string());
  const std::size_t n = a.rows(), p = a.cols(), q = b.cols(), c = p + q;
  Tensor& out = tape.make(n, c, a.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(i * p), p,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * c));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(i * q), q,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * c + p));
  }
  if (!out.requires_grad()) return out;
  tape.on_backward([&a, &b, &out, n, p, q, c] {
    if (!out.has_grad()) return;
    const auto& g = out.grad();
    if (a.requires_grad()) {
      auto& ga = a.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * c + j];
    }
    if (b.requires_grad()) {
      auto& gb = b.grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) gb[i * q + j] += g[i * c + p + j];
    }
  });
  return out;
}

/// out[v] = sum over edges (w -> v) of weight * x[w].
inline Tensor& weighted_neighbor_sum(Tape& tape, Tensor& x, std::span<const WeightedEdge> edges) {
  const std::size_t n = x.rows(), d = x.cols();
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw GraphError("weighted_neighbor_sum: edge " + std::to_string(e.src) + "->" +
                       std::to_string(e.dst) + " out of range for " + std::to_string(n) + " nodes");
    if (!std::isfinite(e.weight)) throw GraphError("weighted_neighbor_sum: non-finite edge weight");
  }
  Tensor& out = tape.make(n, d, x.requires_grad());
  for (const auto& e : edges)
    for (std::size_t j = 0; j < d; ++j) out.data()[e.dst * d + j] += e.weight * x.data()[e.src * d + j];
  if (!out.requires_grad()) return out;
  tape.on_backward([&x, &out, edges = std::vector<WeightedEdge>(edges.begin(), edges.end()), d] {
    if (!out.has_grad()) return;
    auto& gx = x.grad();
    for (const auto& e : edges)
      for (std::size_t j = 0; j < d; ++j) gx[e.src * d + j] += e.weight * out.grad()[e.dst * d + j];
  });
  return out;
}

/// Row-wise softmax with max subtraction.
inline Tensor& softmax_rows(Tape& tape, Tensor& x) {
  const std::size_t n = x.rows(), c = x.cols();
  Tensor& out = tape.make(n, c, x.requires_grad());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data().data() + i * c;
    double* dst = out.data().data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += (dst[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) dst[j] /= total;
  }
  tape.mark_softmax(out, x);
  if (!out.requires_grad()) return out;
  tape.on_backward([&x, &out, n, c] {
    if (!out.has_grad()) return;
    auto& gx = x.grad();
    const auto& g = out.grad();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * out.data()[i * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += out.data()[i * c + j] * (g[i * c + j] - dot);
    }
  });
  return out;
}

inline constexpr double kProbabilityFloor = 1e-12;

/// Weighted mean of -log p[i, label_i] over rows. When `probs` came from
/// softmax_rows on the same tape the gradient goes straight to the logits as
/// w_i / W * (p - onehot).
inline Tensor& cross_entropy(Tape& tape, Tensor& probs, std::span<const int> labels,
                             std::span<const double> weights) {
  const std::size_t n = probs.rows(), c = probs.cols();
  if (labels.size() != n || weights.size() != n)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels / " +
                     std::to_string(weights.size()) + " weights for " + std::to_string(n) + " rows");
  double total_weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    if (!(weights[i] >= 0.0)) throw DataError("cross_entropy: negative sample weight");
    total_weight += weights[i];
  }
  if (!(total_weight > 0.0)) throw DataError("cross_entropy: sample weights sum to zero");

  Tensor* logits = tape.softmax_logits(probs);
  Tensor& out = tape.make(1, 1, logits ? logits->requires_grad() : probs.requires_grad());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    const double p = std::max(probs(i, static_cast<std::size_t>(labels[i])), kProbabilityFloor);
    loss -= weights[i] * std::log(p);
  }
  out.data()[0] = loss / total_weight;
  if (!out.requires_grad()) return out;

  tape.on_backward([&probs, &out, logits, lab = std::vector<int>(labels.begin(), labels.end()),
                    wts = std::vector<double>(weights.begin(), weights.end()), total_weight, n, c] {
    if (!out.has_grad()) return;
    const double g = out.grad()[0] / total_weight;
    if (logits) {
      auto& gz = logits->grad();
      for (std::size_t i = 0; i < n; ++i) {
        if (wts[i] == 0.0) continue;
        for (std::size_t j = 0; j < c; ++j) {
          const double onehot = static_cast<std::size_t>(lab[i]) == j ? 1.0 : 0.0;
          gz[i * c + j] += g * wts[i] * (probs(i, j) - onehot);
        }
      }
      return;
    }
    auto& gp = probs.grad();
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = static_cast<std::size_t>(lab[i]);
      const double p = probs(i, y);
      if (wts[i] == 0.0 || p <= kProbabilityFloor) continue;
      gp[i * c + y] -= g * wts[i] / p;
    }
  });
  return out;
}

/// Sum of all entries, as a [1,1] tensor.
inline Tensor& sum(Tape& tape, Tensor& x) {
  Tensor& out = tape.make(1, 1, x.requires_grad());
  double total = 0.0;
  for (double v : x.data()) total += v;
  out.data()[0] = total;
  if (!out.requires_grad()) return out;
  tape.on_backward([&x, &out] {
    if (!out.has_grad()) return;
    auto& gx = x.grad();
    for (double& g : gx) g += out.grad()[0];
  });
  return out;
}

}  // namespace epirisk
