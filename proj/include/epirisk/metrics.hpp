#pragma once

// Support-weighted classification metrics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

/// counts[t][p]: samples of true class t predicted as p.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::vector<long long>> counts;

  explicit ConfusionMatrix(std::size_t c = 0) : classes(c), counts(c, std::vector<long long>(c, 0)) {}

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long v : row) t += v;
    return t;
  }
  long long support(std::size_t c) const {
    long long t = 0;
    for (long long v : counts[c]) t += v;
    return t;
  }
  long long predicted(std::size_t c) const {
    long long t = 0;
    for (const auto& row : counts) t += row[c];
    return t;
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> pred,
                                        std::size_t classes) {
  if (truth.size() != pred.size())
    throw DataError("confusion_matrix: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(pred.size()) + " predictions");
  ConfusionMatrix cm(classes);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < 0 || pred[k] < 0 || static_cast<std::size_t>(truth[k]) >= classes ||
        static_cast<std::size_t>(pred[k]) >= classes)
      throw DataError("confusion_matrix: class id out of range at sample " + std::to_string(k));
    ++cm.counts[static_cast<std::size_t>(truth[k])][static_cast<std::size_t>(pred[k])];
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

struct Metrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;
};

/// Per-class precision/recall/F1 (0 on a zero denominator) averaged with
/// weights support_c / total.
inline Metrics weighted_metrics(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  if (total == 0) throw DataError("weighted_metrics: no samples");
  Metrics m;
  m.confusion = cm;
  for (std::size_t c = 0; c < cm.classes; ++c) {
    const auto tp = static_cast<double>(cm.counts[c][c]);
    const long long pred = cm.predicted(c);
    ClassMetrics cls;
    cls.support = cm.support(c);
    cls.precision = pred > 0 ? tp / static_cast<double>(pred) : 0.0;
    cls.recall = cls.support > 0 ? tp / static_cast<double>(cls.support) : 0.0;
    const double denom = cls.precision + cls.recall;
    cls.f1 = denom > 0.0 ? 2.0 * cls.precision * cls.recall / denom : 0.0;
    const double w = static_cast<double>(cls.support) / static_cast<double>(total);
    m.precision += w * cls.precision;
    m.recall += w * cls.recall;
    m.f1 += w * cls.f1;
    m.per_class.push_back(cls);
  }
  return m;
}

inline Metrics weighted_metrics(std::span<const int> truth, std::span<const int> pred, std::size_t classes) {
  if (truth.empty()) throw DataError("weighted_metrics: no samples");
  return weighted_metrics(confusion_matrix(truth, pred, classes));
}

}  // namespace epirisk
