#pragma once

// Region-level mobility network with gravity-model edge weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "epirisk/error.hpp"

namespace epirisk {

struct Region {
  std::string id;
  double population = 0.0;
  double x = 0.0;  // projected metres
  double y = 0.0;
  std::vector<double> features;
};

struct GravityConfig {
  double rho = 0.46;      // exponent on the origin population
  double theta = 0.64;    // exponent on the destination population
  double delta = 82000.0; // distance scale, metres
  std::optional<std::size_t> neighbors_k = 16;  // nullopt: every other node
};

inline void validate(const GravityConfig& cfg) {
  if (!std::isfinite(cfg.rho)) throw ConfigError("gravity.rho", "must be finite");
  if (!std::isfinite(cfg.theta)) throw ConfigError("gravity.theta", "must be finite");
  if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta))
    throw ConfigError("gravity.delta", "must be > 0");
  if (cfg.neighbors_k && *cfg.neighbors_k < 1)
    throw ConfigError("gravity.neighbors_k", "must be >= 1 or \"full\"");
}

/// Directed edge src -> dst. Indices refer to MobilityGraph::nodes.
struct MobilityEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double raw_weight = 0.0;
  double norm_weight = 0.0;
};

struct MobilityGraph {
  std::vector<Region> nodes;
  std::vector<MobilityEdge> edges;              // sorted by (dst, rank)
  std::vector<std::vector<std::size_t>> in_edges;  // per node, indices into edges

  std::size_t node_count() const noexcept { return nodes.size(); }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (nodes[j].id == id) return j;
    throw GraphError("unknown region id: " + id);
  }

  /// Rebuilds in_edges from edges.
  void index_edges() {
    in_edges.assign(nodes.size(), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].src >= nodes.size() || edges[e].dst >= nodes.size())
        throw GraphError("edge endpoint out of range");
      in_edges[edges[e].dst].push_back(e);
    }
  }
};

/// Gravity flow from a place with population n_from to one with n_to at
/// distance d: n_from^rho * n_to^theta / exp(d / delta).
inline double gravity_weight(double n_from, double n_to, double distance, const GravityConfig& cfg) {
  if (!(n_from > 0.0) || !(n_to > 0.0)) throw ConfigError("population", "must be > 0");
  if (!(distance >= 0.0)) throw ConfigError("distance", "must be >= 0");
  return std::pow(n_from, cfg.rho) * std::pow(n_to, cfg.theta) / std::exp(distance / cfg.delta);
}

inline double euclidean_distance(const Region& a, const Region& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// For every node v keeps the neighbors_k sources w with the largest e_wv
/// (ties by ascending id), then normalizes each node's incoming weights to 1.
inline MobilityGraph build_graph(std::vector<Region> regions, const GravityConfig& cfg) {
  validate(cfg);
  if (regions.size() < 2) throw DataError("build_graph: need at least 2 regions");
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t j = 0; j < regions.size(); ++j) {
      if (!seen.emplace(regions[j].id, j).second)
        throw DataError("build_graph: duplicate region id " + regions[j].id);
      if (!(regions[j].population > 0.0))
        throw DataError("region " + regions[j].id + ": population must be > 0");
    }
  }

  MobilityGraph g;
  g.nodes = std::move(regions);
  const std::size_t n = g.nodes.size();
  const std::size_t keep = cfg.neighbors_k ? std::min(*cfg.neighbors_k, n - 1) : n - 1;

  struct Candidate {
    std::size_t src;
    double weight;
  };
  std::vector<Candidate> cand;
  cand.reserve(n - 1);
  for (std::size_t v = 0; v < n; ++v) {
    cand.clear();
    for (std::size_t w = 0; w < n; ++w) {
      if (w == v) continue;
      const double e = gravity_weight(g.nodes[w].population, g.nodes[v].population,
                                      euclidean_distance(g.nodes[w], g.nodes[v]), cfg);
      if (e > 0.0) cand.push_back({w, e});
    }
    const std::size_t take = std::min(keep, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        if (a.weight != b.weight) return a.weight > b.weight;
                        return g.nodes[a.src].id < g.nodes[b.src].id;
                      });
    double total = 0.0;
    for (std::size_t r = 0; r < take; ++r) total += cand[r].weight;
    for (std::size_t r = 0; r < take; ++r)
      g.edges.push_back({cand[r].src, v, cand[r].weight, cand[r].weight / total});
  }
  g.index_edges();
  return g;
}

/// Element-wise mean of each region's item embeddings.
inline std::map<std::string, std::vector<double>> aggregate_node_features(
    const std::map<std::string, std::vector<std::vector<double>>>& per_item) {
  std::map<std::string, std::vector<double>> out;
  std::optional<std::size_t> dim;
  for (const auto& [id, items] : per_item) {
    if (items.empty()) throw DataError("region " + id + ": no embeddings to aggregate");
    if (!dim) dim = items.front().size();
    std::vector<double> mean(*dim, 0.0);
    for (const auto& v : items) {
      if (v.size() != *dim) throw DataError("region " + id + ": embedding length mismatch");
      for (std::size_t j = 0; j < v.size(); ++j) mean[j] += v[j];
    }
    for (double& m : mean) m /= static_cast<double>(items.size());
    out.emplace(id, std::move(mean));
  }
  return out;
}

}  // namespace epirisk
