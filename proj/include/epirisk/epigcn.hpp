#pragma once

// Transmission-aware graph convolution: node features are projected into
// susceptible / infectious / recovered embeddings which then exchange mass
// through learned transmission and recovery maps, layer by layer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "epirisk/adam.hpp"
#include "epirisk/autodiff.hpp"
#include "epirisk/error.hpp"
#include "epirisk/mobility_graph.hpp"

namespace epirisk {

enum class Variant { full, no_gravity, vanilla_mp };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_gravity: return "no_gravity";
    case Variant::vanilla_mp: return "vanilla_mp";
  }
  return "full";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "no_gravity") return Variant::no_gravity;
  if (s == "vanilla_mp") return Variant::vanilla_mp;
  throw ConfigError("model.variant", "unknown variant '" + std::string(s) + "'");
}

struct EpiGcnConfig {
  std::size_t hidden_dim = 16;
  std::size_t num_layers = 2;
  std::size_t num_classes = 3;
  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  Variant variant = Variant::full;
};

inline void validate(const EpiGcnConfig& c) {
  if (c.hidden_dim < 1) throw ConfigError("model.hidden_dim", "must be >= 1");
  if (c.num_layers < 1) throw ConfigError("model.num_layers", "must be >= 1");
  if (c.num_classes < 2) throw ConfigError("model.num_classes", "must be >= 2");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate))
    throw ConfigError("model.learning_rate", "must be > 0");
}

struct LinearLayer {
  Tensor weight;
  Tensor bias;
};

struct SirLayer {
  Tensor w_tran;   // [2D, D]
  Tensor w_recov;  // [D, D]
};

/// Parameters for all three variants. The S/I/R fields are used by `full`
/// and `no_gravity`, `proj_h` and `gcn` only by `vanilla_mp`.
class EpiGcnModel {
 public:
  EpiGcnModel() = default;
  EpiGcnModel(const EpiGcnConfig& config, std::size_t feature_dim) : config_(config), feature_dim_(feature_dim) {
    validate(config_);
    if (feature_dim_ < 1) throw ConfigError("model.feature_dim", "must be >= 1");
    const std::size_t f = feature_dim_, d = config_.hidden_dim, c = config_.num_classes;
    auto param = [](std::size_t r, std::size_t cols) { return Tensor(r, cols).set_requires_grad(); };
    if (config_.variant == Variant::vanilla_mp) {
      proj_h_ = {param(f, d), param(1, d)};
      for (std::size_t l = 0; l < config_.num_layers; ++l) gcn_.push_back(param(d, d));
      w_output_ = param(d, c);
    } else {
      proj_s_ = {param(f, d), param(1, d)};
      proj_i_ = {param(f, d), param(1, d)};
      proj_r_ = {param(f, d), param(1, d)};
      for (std::size_t l = 0; l < config_.num_layers; ++l) layers_.push_back({param(2 * d, d), param(d, d)});
      w_output_ = param(3 * d, c);
    }
  }

  const EpiGcnConfig& config() const noexcept { return config_; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }

  LinearLayer& proj_s() { return proj_s_; }
  LinearLayer& proj_i() { return proj_i_; }
  LinearLayer& proj_r() { return proj_r_; }
  LinearLayer& proj_h() { return proj_h_; }
  SirLayer& layer(std::size_t l) { return layers_.at(l); }
  Tensor& gcn_weight(std::size_t l) { return gcn_.at(l); }
  Tensor& w_output() { return w_output_; }

  /// Canonical, stable parameter order (used by the optimizer and checkpoints).
  std::vector<NamedTensor> parameters() {
    std::vector<NamedTensor> out;
    auto lin = [&](const std::string& name, LinearLayer& l) {
      out.push_back({name + ".weight", &l.weight});
      out.push_back({name + ".bias", &l.bias});
    };
    if (config_.variant == Variant::vanilla_mp) {
      lin("proj_h", proj_h_);
      for (std::size_t l = 0; l < gcn_.size(); ++l) out.push_back({"layer" + std::to_string(l) + ".w_gcn", &gcn_[l]});
    } else {
      lin("proj_s", proj_s_);
      lin("proj_i", proj_i_);
      lin("proj_r", proj_r_);
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        out.push_back({"layer" + std::to_string(l) + ".w_tran", &layers_[l].w_tran});
        out.push_back({"layer" + std::to_string(l) + ".w_recov", &layers_[l].w_recov});
      }
    }
    out.push_back({"w_output", &w_output_});
    return out;
  }

  std::size_t parameter_count() {
    std::size_t total = 0;
    for (const auto& p : parameters()) total += p.tensor->size();
    return total;
  }

  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const auto& p : parameters()) {
      Tensor& t = *p.tensor;
      t.zero_grad();
      if (p.name.ends_with(".bias")) {
        std::fill(t.data().begin(), t.data().end(), 0.0);
        continue;
      }
      const double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      std::uniform_real_distribution<double> dist(-a, a);
      for (double& v : t.data()) v = dist(rng);
    }
  }

  void zero_grad() {
    for (const auto& p : parameters()) p.tensor->zero_grad();
  }

 private:
  EpiGcnConfig config_;
  std::size_t feature_dim_ = 0;
  LinearLayer proj_s_, proj_i_, proj_r_, proj_h_;
  std::vector<SirLayer> layers_;
  std::vector<Tensor> gcn_;
  Tensor w_output_;
};

/// Closed-form parameter count for the S/I/R variants.
inline std::size_t expected_parameter_count(std::size_t f, std::size_t d, std::size_t layers, std::size_t c) {
  return 3 * (f * d + d) + layers * (2 * d * d + d * d) + 3 * d * c;
}

/// Edge list consumed by message passing, bound to a node count.
struct MessageGraph {
  std::size_t nodes = 0;
  std::vector<WeightedEdge> edges;
};

/// full: normalized gravity weights. no_gravity: 1/|N_v| over the same
/// in-neighbors. vanilla_mp: mean over the in-neighbors plus a self loop.
inline MessageGraph message_graph(const MobilityGraph& g, Variant variant) {
  MessageGraph mg;
  mg.nodes = g.node_count();
  mg.edges.reserve(g.edges.size() + (variant == Variant::vanilla_mp ? mg.nodes : 0));
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto& in = g.in_edges.at(v);
    const double deg = static_cast<double>(in.size());
    if (variant == Variant::vanilla_mp) mg.edges.push_back({v, v, 1.0 / (deg + 1.0)});
    for (std::size_t e : in) {
      const MobilityEdge& edge = g.edges[e];
      double w = edge.norm_weight;
      if (variant == Variant::no_gravity) w = 1.0 / deg;
      if (variant == Variant::vanilla_mp) w = 1.0 / (deg + 1.0);
      mg.edges.push_back({edge.src, edge.dst, w});
    }
  }
  return mg;
}

/// Node features as an [n, F] tensor.
inline Tensor feature_matrix(const MobilityGraph& g) {
  if (g.nodes.empty()) throw DataError("feature_matrix: empty graph");
  const std::size_t f = g.nodes.front().features.size();
  Tensor out(g.node_count(), f);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto& feat = g.nodes[v].features;
    if (feat.size() != f) throw DataError("region " + g.nodes[v].id + ": feature length mismatch");
    std::copy(feat.begin(), feat.end(), out.data().begin() + static_cast<std::ptrdiff_t>(v * f));
  }
  return out;
}

struct Compartments {
  Tensor* s = nullptr;
  Tensor* i = nullptr;
  Tensor* r = nullptr;
};

/// S = relu(h W_S + b_S), and likewise for I and R.
inline Compartments sir_project(Tape& tape, Tensor& h, EpiGcnModel& model) {
  if (model.config().variant == Variant::vanilla_mp)
    throw ConfigError("model.variant", "sir_project needs an S/I/R variant");
  if (h.cols() != model.feature_dim())
    throw ShapeError("sir_project: features have " + std::to_string(h.cols()) + " columns, model expects " +
                     std::to_string(model.feature_dim()));
  auto proj = [&](LinearLayer& l) { return &relu(tape, linear(tape, h, l.weight, l.bias)); };
  return {proj(model.proj_s()), proj(model.proj_i()), proj(model.proj_r())};
}

/// One transmission/recovery layer. Every right-hand side uses the
/// pre-update embeddings, so S + I + R is unchanged:
///   m   = [S | sum_w e_wv I_w] W_tran
///   rec = I W_recov
///   S' = S - m,  I' = I + m - rec,  R' = R + rec
inline Compartments sir_message_pass(Tape& tape, const Compartments& x, const MessageGraph& graph, SirLayer& layer) {
  Tensor& s = *x.s;
  Tensor& i = *x.i;
  Tensor& r = *x.r;
  if (s.rows() != graph.nodes || i.rows() != graph.nodes || r.rows() != graph.nodes)
    throw ShapeError("sir_message_pass: embeddings have " + std::to_string(s.rows()) + " rows, graph has " +
                     std::to_string(graph.nodes) + " nodes");
  Tensor& neighbor_i = weighted_neighbor_sum(tape, i, graph.edges);
  Tensor& m = matmul(tape, concat_cols(tape, s, neighbor_i), layer.w_tran);
  Tensor& rec = matmul(tape, i, layer.w_recov);
  return {&sub(tape, s, m), &sub(tape, add(tape, i, m), rec), &add(tape, r, rec)};
}

/// Class probabilities [n, C].
inline Tensor& forward(Tape& tape, const MessageGraph& graph, Tensor& features, EpiGcnModel& model) {
  if (features.rows() != graph.nodes)
    throw ShapeError("forward: " + std::to_string(features.rows()) + " feature rows for " +
                     std::to_string(graph.nodes) + " nodes");
  const std::size_t layers = model.config().num_layers;
  if (model.config().variant == Variant::vanilla_mp) {
    if (features.cols() != model.feature_dim()) throw ShapeError("forward: feature width mismatch");
    Tensor* h = &relu(tape, linear(tape, features, model.proj_h().weight, model.proj_h().bias));
    for (std::size_t l = 0; l < layers; ++l)
      h = &relu(tape, matmul(tape, weighted_neighbor_sum(tape, *h, graph.edges), model.gcn_weight(l)));
    return softmax_rows(tape, matmul(tape, *h, model.w_output()));
  }
  Compartments x = sir_project(tape, features, model);
  for (std::size_t l = 0; l < layers; ++l) x = sir_message_pass(tape, x, graph, model.layer(l));
  Tensor& sir = concat_cols(tape, concat_cols(tape, *x.s, *x.i), *x.r);
  return softmax_rows(tape, matmul(tape, sir, model.w_output()));
}

}  // namespace epirisk
