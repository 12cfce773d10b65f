// Command-line experiment runner.
//
//   lsgm_cli <prepare|train|eval|roc|meta|sweep-blocks> [--config FILE] [--<key> VALUE ...]
//
// Every ExperimentConfig key is accepted as a flag; flags override the config file.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lsgm/config.hpp"
#include "lsgm/container.hpp"
#include "lsgm/fixture.hpp"
#include "lsgm/harness.hpp"

namespace fs = std::filesystem;
using namespace lsgm;

namespace {

void print_timings(const MetricsReport& r) {
  for (const auto& [stage, s] : r.timings) std::fprintf(stderr, "  %-20s %.2fs\n", stage.c_str(), s);
}

void print_rate(const MetricsReport& r) {
  std::printf("%s: %s%% (%zu/%zu)\n", r.pipeline.c_str(), format_number(r.overall_rate).c_str(), r.correct, r.total);
}

int cmd_prepare(const ExperimentConfig& cfg, bool fixture) {
  if (cfg.dataset_root.empty()) throw ConfigError("prepare: dataset_root is not set");
  if (fixture) {
    FixtureSpec spec;
    spec.classes = cfg.fixture_classes;
    spec.samples_per_class = cfg.fixture_samples;
    spec.width = cfg.fixture_width;
    spec.height = cfg.fixture_height;
    spec.seed = cfg.seed;
    spec.texture_amplitude = cfg.fixture_texture;
    spec.geometry_jitter = cfg.fixture_jitter;
    spec.lighting_slope = cfg.fixture_lighting;
    spec.noise_sd = cfg.fixture_noise;
    spec.expression_jitter = cfg.fixture_expression;
    const auto n = write_fixture(spec, cfg.dataset_root);
    std::printf("wrote %zu fixture images to %s\n", n, cfg.dataset_root.c_str());
  }
  std::vector<std::string> names;
  const auto per_class = load_dataset(cfg.dataset_root, cfg, &names);
  std::string csv = "class,directory,samples,width,height\n";
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto& first = per_class[k].front();
    csv += std::to_string(k + 1) + "," + names[k] + "," + std::to_string(per_class[k].size()) + "," +
           std::to_string(first.width()) + "," + std::to_string(first.height()) + "\n";
    if (static_cast<std::size_t>(cfg.train_per_class) >= per_class[k].size())
      std::fprintf(stderr, "warning: %s has %zu samples, leaving no test images at train_per_class=%d\n",
                   names[k].c_str(), per_class[k].size(), cfg.train_per_class);
  }
  fs::create_directories(cfg.out_dir);
  write_file_bytes(fs::path(cfg.out_dir) / "dataset.csv", csv);
  std::printf("dataset ok: %zu classes\n", per_class.size());
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  if (cfg.cache_dir.empty()) throw ConfigError("train: cache_dir is not set");
  const DatasetSplit split = split_dataset(cfg.dataset_root, cfg);
  fs::create_directories(cfg.cache_dir);
  const LsgmModel model = train_lsgm(split.train, cfg);
  save_lsgm(model, training_fingerprint(cfg), fs::path(cfg.cache_dir) / "lsgm.model");
  save_dictionary(build_src_dictionary(split.train, cfg), fs::path(cfg.cache_dir) / "src.dict");

  std::string csv = "class,rounds,union_edges_p,union_edges_q,nodes\n";
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    const auto& pair = model.classes[k].pair;
    csv += std::to_string(k + 1) + "," + std::to_string(pair.rounds.size()) + "," +
           std::to_string(pair.union_edges_p.size()) + "," + std::to_string(pair.union_edges_q.size()) + "," +
           std::to_string(pair.m) + "\n";
  }
  fs::create_directories(cfg.out_dir);
  write_file_bytes(fs::path(cfg.out_dir) / "train_summary.csv", csv);
  std::printf("trained %zu graph pairs into %s\n", model.classes.size(), cfg.cache_dir.c_str());
  return 0;
}

void emit_all(const std::vector<MetricsReport>& reports, const ExperimentConfig& cfg) {
  for (const auto& r : reports) {
    const fs::path dir = reports.size() == 1 ? fs::path(cfg.out_dir) : fs::path(cfg.out_dir) / r.pipeline;
    emit_report(r, dir);
    print_rate(r);
  }
  if (!reports.empty()) print_timings(reports.front());
}

int cmd_eval(const ExperimentConfig& cfg) {
  emit_all(run_experiment(split_dataset(cfg.dataset_root, cfg), cfg), cfg);
  return 0;
}

int cmd_roc(const ExperimentConfig& cfg) {
  const MetricsReport r = run_outlier_experiment(load_dataset(cfg.dataset_root, cfg), cfg);
  emit_report(r, cfg.out_dir);
  print_rate(r);
  for (const auto& [name, v] : r.extra) std::printf("%s: %s\n", name.c_str(), format_number(v).c_str());
  print_timings(r);
  return 0;
}

int cmd_meta(ExperimentConfig cfg) {
  cfg.pipeline = "lhml,lsgm,meta";
  emit_all(run_experiment(split_dataset(cfg.dataset_root, cfg), cfg), cfg);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  const auto rows = run_block_sweep(split_dataset(cfg.dataset_root, cfg), cfg);
  write_sweep_csv(rows, fs::path(cfg.out_dir) / "sweep.csv");
  for (const auto& r : rows) std::printf("%d blocks, %s: %s%%\n", r.blocks, r.pipeline.c_str(), format_number(r.rate).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local sparse features and discriminative graphs for face recognition"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  app.add_option("--config", config_path, "key = value configuration file");
  for (const auto& key : ExperimentConfig::keys())
    options[key] = app.add_option("--" + key, values[key], "config key " + key);

  bool fixture = false;
  auto* prepare = app.add_subcommand("prepare", "generate the synthetic fixture and/or validate a dataset");
  prepare->add_flag("--fixture", fixture, "write the synthetic fixture into dataset_root first");
  auto* train = app.add_subcommand("train", "train graph pairs and dictionaries into cache_dir");
  auto* eval = app.add_subcommand("eval", "evaluate the configured pipelines");
  auto* roc = app.add_subcommand("roc", "outlier rejection experiment");
  auto* meta = app.add_subcommand("meta", "meta-classifier over LHML and LSGM outputs");
  auto* sweep = app.add_subcommand("sweep-blocks", "recognition rate against block count");
  for (auto* sub : {prepare, train, eval, roc, meta, sweep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values[key]);
    cfg.validate();

    if (*prepare) return cmd_prepare(cfg, fixture);
    if (cfg.dataset_root.empty()) throw ConfigError("dataset_root is not set");
    if (*train) return cmd_train(cfg);
    if (*eval) return cmd_eval(cfg);
    if (*roc) return cmd_roc(cfg);
    if (*meta) return cmd_meta(cfg);
    if (*sweep) return cmd_sweep(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
