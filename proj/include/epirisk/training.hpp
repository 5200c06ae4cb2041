#pragma once

// Full-batch training, evaluation and ablation runs for EpiGcnModel.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "epirisk/adam.hpp"
#include "epirisk/epigcn.hpp"
#include "epirisk/metrics.hpp"

namespace epirisk {

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Uniform random 6:2:2 split of `indices` (no stratification).
/// Sizes: round(0.6 n), round(0.2 n), remainder.
inline DatasetSplit make_split(std::vector<std::size_t> indices, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  const auto n = static_cast<double>(indices.size());
  const auto n_train = static_cast<std::size_t>(std::llround(0.6 * n));
  const auto n_val = std::min(static_cast<std::size_t>(std::llround(0.2 * n)), indices.size() - n_train);
  DatasetSplit s;
  s.train.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(indices.begin() + static_cast<std::ptrdiff_t>(n_train),
               indices.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(indices.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), indices.end());
  return s;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_weighted_f1 = 0.0;
};

struct TrainResult {
  EpiGcnModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // epoch whose parameters were kept
  double best_val_f1 = -1.0;
};

/// Row-wise argmax, lowest class on ties.
inline std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
      if (probs(i, j) > probs(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace detail {

inline double subset_weighted_f1(const std::vector<int>& pred, std::span<const int> labels,
                                 std::span<const std::size_t> idx, std::size_t classes) {
  std::vector<int> t, p;
  t.reserve(idx.size());
  p.reserve(idx.size());
  for (std::size_t k : idx) {
    t.push_back(labels[k]);
    p.push_back(pred[k]);
  }
  return weighted_metrics(t, p, classes).f1;
}

inline void check_labels(std::span<const int> labels, const DatasetSplit& split, std::size_t n, std::size_t classes) {
  if (labels.size() != n) throw DataError("labels: " + std::to_string(labels.size()) + " for " + std::to_string(n) + " nodes");
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (std::size_t k : *part) {
      if (k >= n) throw DataError("split index " + std::to_string(k) + " out of range");
      if (labels[k] < 0 || static_cast<std::size_t>(labels[k]) >= classes)
        throw DataError("node " + std::to_string(k) + " in split has no valid label");
    }
}

}  // namespace detail

/// Class probabilities without recording gradients.
inline Tensor predict(EpiGcnModel& model, const MessageGraph& graph, const Tensor& features) {
  Tape tape;
  Tensor x = features;
  x.set_requires_grad(false);
  return forward(tape, graph, x, model);
}

/// Full-batch Adam on the train indices. Each epoch records the train loss
/// and validation weighted F1 of the current parameters; the parameters with
/// the best validation F1 (earliest on ties) are returned.
inline TrainResult train(const MessageGraph& graph, const Tensor& features, std::span<const int> labels,
                         const DatasetSplit& split, const EpiGcnConfig& config) {
  validate(config);
  if (split.train.empty()) throw ConfigError("split.train", "training split is empty");
  detail::check_labels(labels, split, graph.nodes, config.num_classes);

  TrainResult result{EpiGcnModel(config, features.cols()), {}, 0, -1.0};
  EpiGcnModel& model = result.model;
  model.initialize(config.seed);
  if (config.epochs == 0) return result;

  std::vector<int> safe_labels(labels.begin(), labels.end());
  std::vector<double> weights(graph.nodes, 0.0);
  for (std::size_t k : split.train) weights[k] = 1.0;
  for (int& l : safe_labels) l = std::max(l, 0);

  Tensor x = features;
  x.set_requires_grad(false);
  AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  AdamState state;
  EpiGcnModel best = model;
  result.history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    model.zero_grad();
    Tape tape;
    Tensor& probs = forward(tape, graph, x, model);
    Tensor& loss = cross_entropy(tape, probs, safe_labels, weights);
    if (!std::isfinite(loss.data()[0])) throw NumericalError("training: non-finite loss at epoch " + std::to_string(epoch));

    const double val_f1 =
        split.val.empty() ? 0.0 : detail::subset_weighted_f1(argmax_rows(probs), labels, split.val, config.num_classes);
    result.history.push_back({epoch, loss.data()[0], val_f1});
    if (val_f1 > result.best_val_f1) {
      result.best_val_f1 = val_f1;
      result.best_epoch = epoch;
      best = model;
    }
    tape.backward(loss);
    const auto params = model.parameters();
    adam_step(params, state, adam);
  }
  result.model = std::move(best);
  result.model.zero_grad();
  return result;
}

inline Metrics evaluate(EpiGcnModel& model, const MessageGraph& graph, const Tensor& features,
                        std::span<const int> labels, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("evaluate: no indices");
  const std::vector<int> pred = argmax_rows(predict(model, graph, features));
  std::vector<int> t, p;
  for (std::size_t k : indices) {
    if (k >= pred.size() || k >= labels.size()) throw DataError("evaluate: index out of range");
    t.push_back(labels[k]);
    p.push_back(pred[k]);
  }
  return weighted_metrics(t, p, model.config().num_classes);
}

struct AblationRow {
  Variant variant = Variant::full;
  std::uint64_t seed = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Trains every variant for seeds base_seed .. base_seed + seeds - 1 on one
/// split and reports test metrics. Rows are ordered by variant, then seed.
inline std::vector<AblationRow> run_ablations(const MobilityGraph& graph, const Tensor& features,
                                              std::span<const int> labels, const DatasetSplit& split,
                                              const EpiGcnConfig& base, std::size_t seeds) {
  std::vector<AblationRow> rows;
  for (Variant v : {Variant::full, Variant::no_gravity, Variant::vanilla_mp}) {
    const MessageGraph mg = message_graph(graph, v);
    for (std::size_t s = 0; s < seeds; ++s) {
      EpiGcnConfig cfg = base;
      cfg.variant = v;
      cfg.seed = base.seed + s;
      TrainResult tr = train(mg, features, labels, split, cfg);
      const Metrics m = evaluate(tr.model, mg, features, labels, split.test);
      rows.push_back({v, cfg.seed, m.f1, m.precision, m.recall});
    }
  }
  return rows;
}

}  // namespace epirisk
