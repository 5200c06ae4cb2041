// epirisk: command-line driver for the exposure-risk pipeline.
//
//   epirisk simulate    --config c.json --out run/
//   epirisk calibrate   --out run/
//   epirisk label       --out run/
//   epirisk build-graph --out run/
//   epirisk train       --out run/ [--variant full|no_gravity|vanilla_mp]
//   epirisk evaluate    --out run/
//   epirisk ablate      --out run/ --seeds 3
//   epirisk pipeline    --config c.json --out run/
//
// Exit codes: 0 ok, 1 other failure, 2 missing file, 3 invalid config,
// 4 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "epirisk/epirisk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epirisk;

namespace {

struct Paths {
  fs::path regions = "regions.csv";
  fs::path features = "features.csv";
  fs::path cases = "cases.csv";
  fs::path graph = "graph.json";
  fs::path labels = "labels.csv";
  fs::path split = "split.json";
  fs::path calibration = "calibration.csv";
  fs::path model = "model.json";
  fs::path history = "history.csv";
  fs::path metrics = "metrics.json";
  fs::path ablation = "ablation.json";
};

struct PipelineConfig {
  std::uint64_t seed = 7;
  fs::path out = ".";
  Paths paths;
  DatasetConfig dataset;
  EpiGcnConfig model;
  std::size_t ablation_seeds = 3;

  fs::path at(const fs::path& p) const { return p.is_absolute() ? p : out / p; }
};

// --------------------------------------------------------------- config I/O

void reject_unknown(const json& section, const std::string& name, std::initializer_list<const char*> keys) {
  if (!section.is_object()) throw ConfigError(name, "must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : section.items())
    if (!allowed.count(k)) throw ConfigError(name + "." + k, "unknown field");
}

template <class T>
void read_field(const json& section, const std::string& prefix, const char* key, T& dst) {
  if (!section.contains(key)) return;
  try {
    dst = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(prefix + "." + key, "wrong type");
  }
}

void read_range(const json& section, const std::string& prefix, const char* key, Range& dst) {
  if (!section.contains(key)) return;
  const auto& v = section.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(prefix + "." + key, "must be [lo, hi]");
  dst = {v[0].get<double>(), v[1].get<double>()};
}

PipelineConfig load_config(const std::optional<fs::path>& path) {
  PipelineConfig cfg;
  if (!path) return cfg;
  const json j = io::read_json(*path);
  reject_unknown(j, "config",
                 {"seed", "out", "paths", "scenario", "gravity", "calibration", "label", "model", "ablate"});
  read_field(j, "config", "seed", cfg.seed);
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, "paths", {"regions", "features", "cases", "graph", "labels", "split", "calibration", "model",
                                "history", "metrics", "ablation"});
    auto path_field = [&](const char* key, fs::path& dst) {
      std::string s;
      read_field(p, "paths", key, s);
      if (!s.empty()) dst = s;
    };
    path_field("regions", cfg.paths.regions);
    path_field("features", cfg.paths.features);
    path_field("cases", cfg.paths.cases);
    path_field("graph", cfg.paths.graph);
    path_field("labels", cfg.paths.labels);
    path_field("split", cfg.paths.split);
    path_field("calibration", cfg.paths.calibration);
    path_field("model", cfg.paths.model);
    path_field("history", cfg.paths.history);
    path_field("metrics", cfg.paths.metrics);
    path_field("ablation", cfg.paths.ablation);
  }

  auto& sc = cfg.dataset.scenario;
  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    reject_unknown(s, "scenario", {"n_regions", "feature_dim", "beta_range", "gamma_range", "coupling", "case_noise",
                                   "feature_noise", "horizon_days", "extent_m", "initial_infected", "dt"});
    read_field(s, "scenario", "n_regions", sc.n_regions);
    read_field(s, "scenario", "feature_dim", sc.feature_dim);
    read_range(s, "scenario", "beta_range", sc.beta_range);
    read_range(s, "scenario", "gamma_range", sc.gamma_range);
    read_field(s, "scenario", "coupling", sc.coupling);
    read_field(s, "scenario", "case_noise", sc.case_noise);
    read_field(s, "scenario", "feature_noise", sc.feature_noise);
    read_field(s, "scenario", "horizon_days", sc.horizon_days);
    read_field(s, "scenario", "extent_m", sc.extent_m);
    read_field(s, "scenario", "initial_infected", sc.initial_infected);
    read_field(s, "scenario", "dt", sc.dt);
  }

  auto& gr = cfg.dataset.gravity;
  if (j.contains("gravity")) {
    const auto& g = j.at("gravity");
    reject_unknown(g, "gravity", {"rho", "theta", "delta", "neighbors_k"});
    read_field(g, "gravity", "rho", gr.rho);
    read_field(g, "gravity", "theta", gr.theta);
    read_field(g, "gravity", "delta", gr.delta);
    if (g.contains("neighbors_k")) {
      const auto& k = g.at("neighbors_k");
      if (k.is_string() && k.get<std::string>() == "full") gr.neighbors_k.reset();
      else if (k.is_number_unsigned()) gr.neighbors_k = k.get<std::size_t>();
      else throw ConfigError("gravity.neighbors_k", "must be a positive integer or \"full\"");
    }
  }

  auto& ca = cfg.dataset.calibration;
  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    reject_unknown(c, "calibration", {"dt", "beta_range", "gamma_range", "grid_size", "max_iterations", "tolerance"});
    read_field(c, "calibration", "dt", ca.dt);
    Range b{ca.beta_min, ca.beta_max}, g{ca.gamma_min, ca.gamma_max};
    read_range(c, "calibration", "beta_range", b);
    read_range(c, "calibration", "gamma_range", g);
    ca.beta_min = b.lo;
    ca.beta_max = b.hi;
    ca.gamma_min = g.lo;
    ca.gamma_max = g.hi;
    read_field(c, "calibration", "grid_size", ca.grid_size);
    read_field(c, "calibration", "max_iterations", ca.max_iterations);
    read_field(c, "calibration", "tolerance", ca.tolerance);
  }

  if (j.contains("label")) {
    const auto& l = j.at("label");
    reject_unknown(l, "label", {"k"});
    read_field(l, "label", "k", cfg.dataset.label_k);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, "model", {"hidden_dim", "num_layers", "num_classes", "learning_rate", "epochs", "variant"});
    read_field(m, "model", "hidden_dim", cfg.model.hidden_dim);
    read_field(m, "model", "num_layers", cfg.model.num_layers);
    read_field(m, "model", "num_classes", cfg.model.num_classes);
    read_field(m, "model", "learning_rate", cfg.model.learning_rate);
    read_field(m, "model", "epochs", cfg.model.epochs);
    std::string variant;
    read_field(m, "model", "variant", variant);
    if (!variant.empty()) cfg.model.variant = parse_variant(variant);
  }

  if (j.contains("ablate")) {
    const auto& a = j.at("ablate");
    reject_unknown(a, "ablate", {"seeds"});
    read_field(a, "ablate", "seeds", cfg.ablation_seeds);
  }
  return cfg;
}

void finalize(PipelineConfig& cfg) {
  cfg.dataset.scenario.seed = cfg.seed;
  cfg.model.seed = cfg.seed;
  validate(cfg.dataset.scenario);
  validate(cfg.dataset.gravity);
  validate(cfg.dataset.calibration);
  validate(cfg.model);
  if (!(cfg.dataset.label_k >= 0.0)) throw ConfigError("label.k", "must be >= 0");
  if (cfg.model.num_classes != 3) throw ConfigError("model.num_classes", "risk labels have exactly 3 classes");
  if (cfg.ablation_seeds < 1) throw ConfigError("ablate.seeds", "must be >= 1");
  fs::create_directories(cfg.out);
}

// ------------------------------------------------------------------- stages

void stage_simulate(const PipelineConfig& cfg) {
  const Dataset ds = make_dataset(cfg.dataset);
  io::atomic_write(cfg.at(cfg.paths.regions), io::regions_csv(ds.graph.nodes));
  io::atomic_write(cfg.at(cfg.paths.features), io::features_csv(ds.graph.nodes));
  io::atomic_write(cfg.at(cfg.paths.cases), io::cases_csv(ds.cases));
  io::write_json(cfg.at(cfg.paths.graph), io::graph_to_json(ds.graph));
  io::atomic_write(cfg.at(cfg.paths.labels), io::labels_csv(ds.labels));
  io::write_json(cfg.at(cfg.paths.split), io::split_to_json(ds.graph, ds.split, ds.split_seed));
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& l : ds.labels) ++counts[l.label];
  std::printf("simulate: %zu regions, %zu edges, labels %zu/%zu/%zu, split %zu/%zu/%zu -> %s\n", ds.graph.node_count(),
              ds.graph.edges.size(), counts[0], counts[1], counts[2], ds.split.train.size(), ds.split.val.size(),
              ds.split.test.size(), cfg.out.string().c_str());
}

void stage_calibrate(const PipelineConfig& cfg) {
  const auto regions = io::read_regions(cfg.at(cfg.paths.regions));
  const auto cases = io::read_cases(cfg.at(cfg.paths.cases));
  std::map<std::string, double> population;
  for (const auto& r : regions) population[r.id] = r.population;
  std::vector<io::CalibrationRow> rows;
  std::size_t clamped = 0;
  for (const auto& series : cases) {
    auto it = population.find(series.region_id);
    if (it == population.end()) throw DataError("cases.csv: region " + series.region_id + " not in regions.csv");
    rows.push_back({series.region_id, calibrate_sir(series, it->second, cfg.dataset.calibration)});
    if (rows.back().result.clamped) ++clamped;
  }
  io::atomic_write(cfg.at(cfg.paths.calibration), io::calibration_csv(rows));
  std::printf("calibrate: %zu regions fitted, %zu on the search boundary -> %s\n", rows.size(), clamped,
              cfg.at(cfg.paths.calibration).string().c_str());
}

void stage_label(const PipelineConfig& cfg) {
  const auto rows = io::read_calibration(cfg.at(cfg.paths.calibration));
  std::vector<std::string> ids;
  std::vector<double> r0;
  for (const auto& r : rows) {
    ids.push_back(r.region_id);
    r0.push_back(r.result.r0);
  }
  const auto labels = make_risk_labels(ids, r0, cfg.dataset.label_k);
  const Labeling lab = categorize_r0(r0, cfg.dataset.label_k);
  if (lab.zero_spread) std::fprintf(stderr, "label: warning: R0 values have zero spread, all labels medium\n");
  io::atomic_write(cfg.at(cfg.paths.labels), io::labels_csv(labels));
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& l : labels) ++counts[l.label];
  std::printf("label: k=%s thresholds (%s, %s), labels %zu/%zu/%zu -> %s\n",
              io::format_double(cfg.dataset.label_k).c_str(), io::format_double(lab.low_threshold).c_str(),
              io::format_double(lab.high_threshold).c_str(), counts[0], counts[1], counts[2],
              cfg.at(cfg.paths.labels).string().c_str());
}

void stage_build_graph(const PipelineConfig& cfg) {
  auto regions = io::read_regions(cfg.at(cfg.paths.regions));
  io::attach_features(regions, io::read_features(cfg.at(cfg.paths.features)));
  const MobilityGraph g = build_graph(std::move(regions), cfg.dataset.gravity);
  io::write_json(cfg.at(cfg.paths.graph), io::graph_to_json(g));
  std::printf("build-graph: %zu nodes, %zu edges -> %s\n", g.node_count(), g.edges.size(),
              cfg.at(cfg.paths.graph).string().c_str());
}

struct LoadedData {
  MobilityGraph graph;
  Tensor features;
  std::vector<int> labels;
  DatasetSplit split;
};

LoadedData load_training_data(const PipelineConfig& cfg) {
  LoadedData d;
  d.graph = io::graph_from_json(io::read_json(cfg.at(cfg.paths.graph)));
  d.features = feature_matrix(d.graph);
  d.labels = io::labels_for_graph(d.graph, io::read_labels(cfg.at(cfg.paths.labels)));
  d.split = io::split_from_json(d.graph, io::read_json(cfg.at(cfg.paths.split)));
  return d;
}

void stage_train(const PipelineConfig& cfg) {
  const LoadedData d = load_training_data(cfg);
  const MessageGraph mg = message_graph(d.graph, cfg.model.variant);
  TrainResult tr = train(mg, d.features, d.labels, d.split, cfg.model);
  io::write_json(cfg.at(cfg.paths.model), io::model_to_json(tr.model));
  io::atomic_write(cfg.at(cfg.paths.history), io::history_csv(tr.history));
  std::printf("train: variant=%s epochs=%zu best_epoch=%zu val_weighted_f1=%s -> %s\n",
              std::string(to_string(cfg.model.variant)).c_str(), tr.history.size(), tr.best_epoch,
              io::format_double(tr.best_val_f1).c_str(), cfg.at(cfg.paths.model).string().c_str());
}

void stage_evaluate(const PipelineConfig& cfg) {
  const LoadedData d = load_training_data(cfg);
  EpiGcnModel model = io::model_from_json(io::read_json(cfg.at(cfg.paths.model)));
  const MessageGraph mg = message_graph(d.graph, model.config().variant);
  const Metrics m = evaluate(model, mg, d.features, d.labels, d.split.test);
  io::write_json(cfg.at(cfg.paths.metrics), io::metrics_to_json(m));
  std::printf("evaluate: test weighted F1=%.4f precision=%.4f recall=%.4f -> %s\n", m.f1, m.precision, m.recall,
              cfg.at(cfg.paths.metrics).string().c_str());
}

void stage_ablate(const PipelineConfig& cfg) {
  const LoadedData d = load_training_data(cfg);
  const auto rows = run_ablations(d.graph, d.features, d.labels, d.split, cfg.model, cfg.ablation_seeds);
  io::write_json(cfg.at(cfg.paths.ablation), io::ablation_to_json(rows));
  std::printf("ablate: %zu rows -> %s\n", rows.size(), cfg.at(cfg.paths.ablation).string().c_str());
  for (const auto& r : rows)
    std::printf("  %-10s seed=%llu f1=%.4f precision=%.4f recall=%.4f\n", std::string(to_string(r.variant)).c_str(),
                static_cast<unsigned long long>(r.seed), r.f1, r.precision, r.recall);
}

void stage_pipeline(const PipelineConfig& cfg) {
  stage_simulate(cfg);
  stage_calibrate(cfg);
  stage_label(cfg);
  stage_build_graph(cfg);
  stage_train(cfg);
  stage_evaluate(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic exposure-risk pipeline: SIR calibration, gravity mobility graph, EpiGCN"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, out_dir, variant;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;

  struct Stage {
    const char* name;
    const char* help;
    void (*run)(const PipelineConfig&);
  };
  const Stage stages[] = {
      {"simulate", "generate a synthetic dataset bundle", stage_simulate},
      {"calibrate", "fit SIR parameters per region", stage_calibrate},
      {"label", "categorize R0 into risk labels", stage_label},
      {"build-graph", "build the gravity mobility graph", stage_build_graph},
      {"train", "train an EpiGCN model", stage_train},
      {"evaluate", "evaluate a trained model on the test split", stage_evaluate},
      {"ablate", "train all variants over several seeds", stage_ablate},
      {"pipeline", "simulate, calibrate, label, build-graph, train, evaluate", stage_pipeline},
  };
  const Stage* selected = nullptr;
  for (const Stage& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "seed for data generation, splits and initialization");
    sub->add_option("--out", out_dir, "working directory for artifacts");
    const std::string name = s.name;
    if (name == "train" || name == "evaluate" || name == "ablate" || name == "pipeline")
      sub->add_option("--variant", variant, "full | no_gravity | vanilla_mp");
    if (name == "ablate") sub->add_option("--seeds", seeds, "number of seeds per variant");
    sub->callback([&selected, &s] { selected = &s; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out = *out_dir;
    if (variant) cfg.model.variant = parse_variant(*variant);
    if (seeds) cfg.ablation_seeds = *seeds;
    finalize(cfg);
    try {
      selected->run(cfg);
    } catch (const NumericalError& e) {
      std::fprintf(stderr, "%s: numerical failure: %s\n", selected->name, e.what());
      return 4;
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: missing or unreadable file: %s\n", e.path().c_str());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: invalid config field %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
