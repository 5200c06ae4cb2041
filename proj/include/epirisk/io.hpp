#pragma once

// Readers and writers for the on-disk artifacts (CSV and JSON). All writes go
// through a temporary file and an atomic rename.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "epirisk/calibration.hpp"
#include "epirisk/checkpoint.hpp"
#include "epirisk/epigcn.hpp"
#include "epirisk/error.hpp"
#include "epirisk/metrics.hpp"
#include "epirisk/mobility_graph.hpp"
#include "epirisk/risk_labels.hpp"
#include "epirisk/training.hpp"

namespace epirisk::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void atomic_write(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(path.string(), "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(path.string(), "rename failed");
  }
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "file not found or unreadable");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- CSV basics

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw DataError("csv: missing column '" + std::string(name) + "'");
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable t;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    ++line_no;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw DataError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw DataError(source + ": empty CSV");
  return t;
}

inline CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError(what + ": not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError(what + ": not an integer: '" + s + "'");
  return v;
}

// ------------------------------------------------------------------ regions

inline std::string regions_csv(const std::vector<Region>& regions) {
  std::string out = "region_id,population,x_m,y_m\n";
  for (const auto& r : regions)
    out += r.id + "," + format_double(r.population) + "," + format_double(r.x) + "," + format_double(r.y) + "\n";
  return out;
}

inline std::vector<Region> read_regions(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("region_id"), c_pop = t.column("population"), c_x = t.column("x_m"),
             c_y = t.column("y_m");
  std::vector<Region> out;
  for (const auto& row : t.rows) {
    Region r;
    r.id = row[c_id];
    r.population = parse_double(row[c_pop], "regions.population");
    r.x = parse_double(row[c_x], "regions.x_m");
    r.y = parse_double(row[c_y], "regions.y_m");
    out.push_back(std::move(r));
  }
  return out;
}

// ----------------------------------------------------------------- features

inline std::string features_csv(const std::vector<Region>& regions) {
  const std::size_t f = regions.empty() ? 0 : regions.front().features.size();
  std::string out = "region_id";
  for (std::size_t j = 0; j < f; ++j) out += ",f" + std::to_string(j);
  out += "\n";
  for (const auto& r : regions) {
    out += r.id;
    for (double v : r.features) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

/// Accepts one row per region, or `region_id,item_id,f0,...` item rows that
/// are averaged per region.
inline std::map<std::string, std::vector<double>> read_features(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "region_id") throw DataError(path.string() + ": first column must be region_id");
  const bool per_item = t.header.size() > 1 && t.header[1] == "item_id";
  const std::size_t first = per_item ? 2 : 1;
  auto vec = [&](const std::vector<std::string>& row) {
    std::vector<double> v;
    for (std::size_t j = first; j < row.size(); ++j) v.push_back(parse_double(row[j], "features." + t.header[j]));
    return v;
  };
  if (per_item) {
    std::map<std::string, std::vector<std::vector<double>>> items;
    for (const auto& row : t.rows) items[row[0]].push_back(vec(row));
    return aggregate_node_features(items);
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& row : t.rows)
    if (!out.emplace(row[0], vec(row)).second) throw DataError(path.string() + ": duplicate region " + row[0]);
  return out;
}

inline void attach_features(std::vector<Region>& regions, const std::map<std::string, std::vector<double>>& features) {
  for (auto& r : regions) {
    auto it = features.find(r.id);
    if (it == features.end()) throw DataError("no features for region " + r.id);
    r.features = it->second;
  }
}

// -------------------------------------------------------------------- cases

inline std::string cases_csv(const std::vector<CaseSeries>& series) {
  std::string out = "region_id,day,cumulative_cases\n";
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.size(); ++k)
      out += s.region_id + "," + std::to_string(s.days[k]) + "," + format_double(s.cumulative_cases[k]) + "\n";
  return out;
}

/// Series in order of first appearance; rows are sorted by day per region.
inline std::vector<CaseSeries> read_cases(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("region_id"), c_day = t.column("day"), c_cum = t.column("cumulative_cases");
  std::vector<CaseSeries> out;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::pair<int, double>>> rows;
  for (const auto& row : t.rows) {
    auto [it, fresh] = index.emplace(row[c_id], out.size());
    if (fresh) {
      out.push_back({row[c_id], {}, {}});
      rows.emplace_back();
    }
    rows[it->second].emplace_back(static_cast<int>(parse_int(row[c_day], "cases.day")),
                                  parse_double(row[c_cum], "cases.cumulative_cases"));
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::stable_sort(rows[k].begin(), rows[k].end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [d, c] : rows[k]) {
      out[k].days.push_back(d);
      out[k].cumulative_cases.push_back(c);
    }
  }
  return out;
}

// -------------------------------------------------------------- calibration

struct CalibrationRow {
  std::string region_id;
  CalibrationResult result;
};

inline std::string calibration_csv(const std::vector<CalibrationRow>& rows) {
  std::string out = "region_id,beta,gamma,r0,loss,clamped\n";
  for (const auto& r : rows)
    out += r.region_id + "," + format_double(r.result.params.beta) + "," + format_double(r.result.params.gamma) + "," +
           format_double(r.result.r0) + "," + format_double(r.result.loss) + "," + (r.result.clamped ? "1" : "0") + "\n";
  return out;
}

inline std::vector<CalibrationRow> read_calibration(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("region_id"), c_b = t.column("beta"), c_g = t.column("gamma"), c_r0 = t.column("r0");
  std::vector<CalibrationRow> out;
  for (const auto& row : t.rows) {
    CalibrationRow r;
    r.region_id = row[c_id];
    r.result.params.beta = parse_double(row[c_b], "calibration.beta");
    r.result.params.gamma = parse_double(row[c_g], "calibration.gamma");
    r.result.r0 = parse_double(row[c_r0], "calibration.r0");
    out.push_back(std::move(r));
  }
  return out;
}

// ------------------------------------------------------------------- labels

inline std::string labels_csv(const std::vector<RiskLabel>& labels) {
  std::string out = "region_id,r0,label\n";
  for (const auto& l : labels) out += l.region_id + "," + format_double(l.r0) + "," + std::to_string(l.label) + "\n";
  return out;
}

inline std::vector<RiskLabel> read_labels(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("region_id"), c_r0 = t.column("r0"), c_l = t.column("label");
  std::vector<RiskLabel> out;
  for (const auto& row : t.rows) {
    const auto label = parse_int(row[c_l], "labels.label");
    if (label < 0 || label > 2) throw DataError(path.string() + ": label out of range for " + row[c_id]);
    out.push_back({row[c_id], parse_double(row[c_r0], "labels.r0"), static_cast<int>(label)});
  }
  return out;
}

/// Labels aligned with graph node order; -1 for nodes without a label.
inline std::vector<int> labels_for_graph(const MobilityGraph& g, const std::vector<RiskLabel>& labels) {
  std::unordered_map<std::string, int> by_id;
  for (const auto& l : labels) by_id[l.region_id] = l.label;
  std::vector<int> out;
  for (const auto& node : g.nodes) {
    auto it = by_id.find(node.id);
    out.push_back(it == by_id.end() ? -1 : it->second);
  }
  return out;
}

// -------------------------------------------------------------------- graph

inline json graph_to_json(const MobilityGraph& g) {
  json nodes = json::array(), edges = json::array();
  for (const auto& r : g.nodes)
    nodes.push_back({{"id", r.id}, {"population", r.population}, {"x_m", r.x}, {"y_m", r.y}, {"features", r.features}});
  for (const auto& e : g.edges)
    edges.push_back({{"src", g.nodes[e.src].id},
                     {"dst", g.nodes[e.dst].id},
                     {"raw_weight", e.raw_weight},
                     {"norm_weight", e.norm_weight}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline MobilityGraph graph_from_json(const json& j) {
  MobilityGraph g;
  try {
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& n : j.at("nodes")) {
      Region r;
      r.id = n.at("id").get<std::string>();
      r.population = n.at("population").get<double>();
      r.x = n.at("x_m").get<double>();
      r.y = n.at("y_m").get<double>();
      if (n.contains("features")) r.features = n.at("features").get<std::vector<double>>();
      if (!index.emplace(r.id, g.nodes.size()).second) throw DataError("graph.json: duplicate node " + r.id);
      g.nodes.push_back(std::move(r));
    }
    auto lookup = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) throw GraphError("graph.json: edge references unknown node " + id);
      return it->second;
    };
    for (const auto& e : j.at("edges"))
      g.edges.push_back({lookup(e.at("src").get<std::string>()), lookup(e.at("dst").get<std::string>()),
                         e.at("raw_weight").get<double>(), e.at("norm_weight").get<double>()});
  } catch (const json::exception& e) {
    throw DataError(std::string("graph.json: ") + e.what());
  }
  g.index_edges();
  return g;
}

// -------------------------------------------------------------------- split

inline json split_to_json(const MobilityGraph& g, const DatasetSplit& s, std::uint64_t seed) {
  auto ids = [&](const std::vector<std::size_t>& idx) {
    json a = json::array();
    for (std::size_t k : idx) a.push_back(g.nodes[k].id);
    return a;
  };
  return {{"train", ids(s.train)}, {"val", ids(s.val)}, {"test", ids(s.test)}, {"seed", seed}};
}

inline DatasetSplit split_from_json(const MobilityGraph& g, const json& j) {
  DatasetSplit s;
  auto idx = [&](const char* key, std::vector<std::size_t>& out) {
    for (const auto& id : j.at(key)) out.push_back(g.index_of(id.get<std::string>()));
  };
  try {
    idx("train", s.train);
    idx("val", s.val);
    idx("test", s.test);
  } catch (const json::exception& e) {
    throw DataError(std::string("split.json: ") + e.what());
  }
  return s;
}

// ------------------------------------------------------------------ metrics

inline json metrics_to_json(const Metrics& m) {
  json per_class = json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& pc = m.per_class[c];
    per_class.push_back(
        {{"class", c}, {"precision", pc.precision}, {"recall", pc.recall}, {"f1", pc.f1}, {"support", pc.support}});
  }
  return {{"weighted_f1", m.f1},
          {"weighted_precision", m.precision},
          {"weighted_recall", m.recall},
          {"per_class", std::move(per_class)},
          {"confusion", m.confusion.counts}};
}

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_weighted_f1\n";
  for (const auto& h : history)
    out += std::to_string(h.epoch) + "," + format_double(h.train_loss) + "," + format_double(h.val_weighted_f1) + "\n";
  return out;
}

inline json ablation_to_json(const std::vector<AblationRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"variant", std::string(to_string(r.variant))},
                 {"seed", r.seed},
                 {"f1", r.f1},
                 {"precision", r.precision},
                 {"recall", r.recall}});
  return a;
}

// ------------------------------------------------------------------- models

inline json model_to_json(EpiGcnModel& model) {
  const auto& c = model.config();
  const json meta = {{"variant", std::string(to_string(c.variant))},
                     {"feature_dim", model.feature_dim()},
                     {"hidden_dim", c.hidden_dim},
                     {"num_layers", c.num_layers},
                     {"num_classes", c.num_classes}};
  return checkpoint_to_json(model.parameters(), meta);
}

/// Rebuilds the architecture from the checkpoint metadata, then loads values.
inline EpiGcnModel model_from_json(const json& j) {
  EpiGcnConfig cfg;
  std::size_t feature_dim = 0;
  try {
    const auto& m = j.at("metadata");
    cfg.variant = parse_variant(m.at("variant").get<std::string>());
    cfg.hidden_dim = m.at("hidden_dim").get<std::size_t>();
    cfg.num_layers = m.at("num_layers").get<std::size_t>();
    cfg.num_classes = m.at("num_classes").get<std::size_t>();
    feature_dim = m.at("feature_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint metadata: ") + e.what());
  }
  EpiGcnModel model(cfg, feature_dim);
  load_checkpoint(j, model.parameters());
  return model;
}

}  // namespace epirisk::io
