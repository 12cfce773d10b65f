#include "lsgm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lsgm/container.hpp"
#include "lsgm/random.hpp"
#include "lsgm/solver.hpp"

namespace lsgm {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Partial Fisher-Yates; std::shuffle is not specified bit-for-bit across libraries.
void seeded_shuffle(std::vector<int>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
    std::swap(v[i], v[pick(rng)]);
  }
}

bool has_pipeline(const std::vector<std::string>& p, const char* name) {
  return std::find(p.begin(), p.end(), name) != p.end();
}

}  // namespace

// ---------------------------------------------------------------------------
// Data

std::vector<std::vector<GrayImage>> load_dataset(const fs::path& root, const ExperimentConfig& cfg,
                                                 std::vector<std::string>* class_names) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root " + root.string() + " is not a directory");
  std::vector<std::pair<long, fs::path>> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("class_", 0) != 0) continue;
    long id = 0;
    const char* first = name.data() + 6;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, id);
    if (ec != std::errc() || ptr != last || first == last) continue;
    dirs.emplace_back(id, entry.path());
  }
  if (dirs.empty()) throw std::runtime_error("no class_<id> directories under " + root.string());
  std::sort(dirs.begin(), dirs.end());
  if (cfg.classes > 0) {
    if (static_cast<std::size_t>(cfg.classes) > dirs.size())
      throw std::runtime_error("dataset has " + std::to_string(dirs.size()) + " classes, config asks for " +
                               std::to_string(cfg.classes));
    dirs.resize(static_cast<std::size_t>(cfg.classes));
  }

  std::vector<std::vector<GrayImage>> out;
  int width = -1, height = -1;
  if (class_names) class_names->clear();
  for (const auto& [id, dir] : dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    if (files.empty()) throw std::runtime_error("class directory " + dir.string() + " has no .pgm files");
    std::sort(files.begin(), files.end());
    std::vector<GrayImage> images;
    for (const auto& f : files) {
      GrayImage img = load_pgm(f);
      if (cfg.image_width > 0) img = downsample(img, cfg.image_width, cfg.image_height);
      if (width < 0) {
        width = img.width();
        height = img.height();
      } else if (img.width() != width || img.height() != height) {
        throw std::runtime_error("image " + f.string() + " is " + std::to_string(img.width()) + "x" +
                                 std::to_string(img.height()) + ", expected " + std::to_string(width) + "x" +
                                 std::to_string(height));
      }
      images.push_back(std::move(img));
    }
    out.push_back(std::move(images));
    if (class_names) class_names->push_back(dir.filename().string());
  }
  return out;
}

DatasetSplit split_samples(const std::vector<std::vector<GrayImage>>& per_class, const ExperimentConfig& cfg) {
  if (per_class.empty()) throw std::invalid_argument("split: no classes");
  DatasetSplit split;
  split.train.num_classes = static_cast<int>(per_class.size());
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto& samples = per_class[k];
    const int label = static_cast<int>(k) + 1;
    if (samples.empty()) throw std::invalid_argument("split: class " + std::to_string(label) + " is empty");
    if (static_cast<std::size_t>(cfg.train_per_class) > samples.size())
      throw std::invalid_argument("split: class " + std::to_string(label) + " has " + std::to_string(samples.size()) +
                                  " samples, fewer than train_per_class");
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    seeded_shuffle(order, mix_seed(cfg.seed, {0x5b11, static_cast<std::uint64_t>(label)}));
    std::vector<int> train(order.begin(), order.begin() + cfg.train_per_class);
    std::vector<int> test(order.begin() + cfg.train_per_class, order.end());
    if (cfg.test_per_class > 0 && test.size() > static_cast<std::size_t>(cfg.test_per_class))
      test.resize(static_cast<std::size_t>(cfg.test_per_class));
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    for (int i : train) {
      split.train.images.push_back(samples[i]);
      split.train.labels.push_back(label);
    }
    for (int i : test) {
      split.test.images.push_back(samples[i]);
      split.test.labels.push_back(label);
    }
  }
  if (split.test.size() == 0) throw std::invalid_argument("split: test set is empty (train_per_class takes every sample)");
  split.train.validate();
  return split;
}

DatasetSplit split_dataset(const fs::path& root, const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  auto per_class = load_dataset(root, cfg, &names);
  DatasetSplit split = split_samples(per_class, cfg);
  split.class_names = std::move(names);
  return split;
}

GrayImage distort_test_image(const GrayImage& img, const ExperimentConfig& cfg, std::size_t index) {
  GrayImage out = img;
  double angle = cfg.angle_min;
  if (cfg.angle_max > cfg.angle_min) {
    std::mt19937_64 rng(mix_seed(cfg.seed, {0xa9, static_cast<std::uint64_t>(index)}));
    angle = std::uniform_real_distribution<double>(cfg.angle_min, cfg.angle_max)(rng);
  }
  if (angle != 0.0 || cfg.scale_x != 1.0 || cfg.scale_y != 1.0 || cfg.translate_x != 0.0 || cfg.translate_y != 0.0)
    out = warp(out, WarpParams{angle, cfg.scale_x, cfg.scale_y, cfg.translate_x, cfg.translate_y, 0.0});
  if (cfg.corruption > 0.0)
    out = corrupt_pixels(out, cfg.corruption, mix_seed(cfg.seed, {0xc0, static_cast<std::uint64_t>(index)}));
  return out;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<RocPoint> roc_sweep(const std::vector<double>& inlier_scores, const std::vector<double>& outlier_scores) {
  if (inlier_scores.empty() || outlier_scores.empty()) throw std::invalid_argument("roc_sweep: empty score list");
  for (double s : inlier_scores)
    if (std::isnan(s)) throw std::invalid_argument("roc_sweep: NaN score");
  for (double s : outlier_scores)
    if (std::isnan(s)) throw std::invalid_argument("roc_sweep: NaN score");

  std::vector<double> in = inlier_scores, out = outlier_scores;
  std::sort(in.begin(), in.end(), std::greater<>());
  std::sort(out.begin(), out.end(), std::greater<>());
  std::vector<double> thresholds(in.begin(), in.end());
  thresholds.insert(thresholds.end(), out.begin(), out.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(-std::numeric_limits<double>::infinity());

  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  std::size_t ni = 0, no = 0;  // scores strictly above the current threshold
  const double n_in = static_cast<double>(in.size()), n_out = static_cast<double>(out.size());
  for (double t : thresholds) {
    while (ni < in.size() && in[ni] > t) ++ni;
    while (no < out.size() && out[no] > t) ++no;
    points.push_back({t, static_cast<double>(no) / n_out, static_cast<double>(ni) / n_in});
  }
  return points;
}

double roc_auc(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].fa - points[i - 1].fa) * 0.5 * (points[i].pd + points[i - 1].pd);
  return area;
}

MetricsReport make_report(const std::string& pipeline, int num_classes, const std::vector<int>& truth,
                          const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("report: truth and prediction counts differ");
  if (num_classes < 1) throw std::invalid_argument("report: class count must be positive");
  MetricsReport r;
  r.pipeline = pipeline;
  r.num_classes = num_classes;
  const auto K = static_cast<std::size_t>(num_classes);
  r.per_class_total.assign(K, 0);
  r.per_class_correct.assign(K, 0);
  r.confusion.assign(K, std::vector<std::size_t>(K, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 1 || t > num_classes || p < 1 || p > num_classes) throw std::invalid_argument("report: label out of range");
    ++r.per_class_total[t - 1];
    ++r.confusion[t - 1][p - 1];
    if (t == p) {
      ++r.per_class_correct[t - 1];
      ++r.correct;
    }
  }
  r.total = truth.size();
  r.overall_rate = r.total ? 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  r.per_class_rate.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    r.per_class_rate[k] = r.per_class_total[k]
                              ? 100.0 * static_cast<double>(r.per_class_correct[k]) / static_cast<double>(r.per_class_total[k])
                              : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void emit_report(const MetricsReport& report, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  std::string summary = "metric,value\n";
  summary += "overall_rate," + format_number(report.overall_rate) + "\n";
  summary += "correct," + std::to_string(report.correct) + "\n";
  summary += "total," + std::to_string(report.total) + "\n";
  summary += "classes," + std::to_string(report.num_classes) + "\n";
  for (const auto& [name, value] : report.extra) summary += name + "," + format_number(value) + "\n";
  write_file_bytes(out_dir / "summary.csv", summary);

  std::string per_class = "class,rate\n";
  for (std::size_t k = 0; k < report.per_class_rate.size(); ++k)
    if (report.per_class_total[k] > 0)
      per_class += std::to_string(k + 1) + "," + format_number(report.per_class_rate[k]) + "\n";
  write_file_bytes(out_dir / "per_class.csv", per_class);

  std::string confusion = "truth,predicted,count\n";
  for (std::size_t t = 0; t < report.confusion.size(); ++t)
    for (std::size_t p = 0; p < report.confusion[t].size(); ++p)
      if (report.confusion[t][p] > 0)
        confusion += std::to_string(t + 1) + "," + std::to_string(p + 1) + "," + std::to_string(report.confusion[t][p]) + "\n";
  write_file_bytes(out_dir / "confusion.csv", confusion);

  bool any_roc = false;
  for (const auto& c : report.roc) any_roc = any_roc || !c.points.empty();
  if (any_roc) {
    std::string roc = "method,threshold,fa,pd\n";
    for (const auto& c : report.roc)
      for (const auto& p : c.points)
        roc += c.method + "," + format_number(p.threshold) + "," + format_number(p.fa) + "," + format_number(p.pd) + "\n";
    write_file_bytes(out_dir / "roc.csv", roc);
  }

  write_file_bytes(out_dir / "config.echo", report.config_echo);
}

// ---------------------------------------------------------------------------
// Models

OmpOptions solver_options(const ExperimentConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& y, bool global) {
  OmpOptions o;
  o.epsilon = cfg.epsilon * y.norm();
  o.max_sparsity = global ? cfg.global_max_sparsity : cfg.max_sparsity;
  if (cfg.error_atoms) o.max_sparsity += cfg.error_sparsity;
  return o;
}

namespace {

std::vector<char> image_mask(const LocalDictionary& dict, int exclude_image) {
  std::vector<char> mask(static_cast<std::size_t>(dict.cols()), 0);
  for (Eigen::Index c = 0; c < dict.cols(); ++c)
    if (dict.col_class[c] != kErrorClass && dict.col_provenance[c].image == exclude_image) mask[c] = 1;
  return mask;
}

SparseCode code_block(const LocalDictionary& dict, const Eigen::VectorXd& y, const ExperimentConfig& cfg, bool global,
                      int exclude_image) {
  OmpOptions opts = solver_options(cfg, y, global);
  std::vector<char> mask;
  if (exclude_image >= 0) {
    mask = image_mask(dict, exclude_image);
    opts.skip = &mask;
  }
  return omp(dict, y, opts);
}

}  // namespace

LocalModel build_local_model(const LabeledTrainingSet& train, const ExperimentConfig& cfg) {
  LocalModel m;
  m.num_classes = train.num_classes;
  m.layout = parse_layout(cfg.layout, train.width(), train.height());
  const SearchWindow win{cfg.dm, cfg.dn};
  m.dicts.resize(m.layout.size());
  parallel_for(m.layout.size(), cfg.workers, [&](std::size_t b) {
    LocalDictionary d = build_local_dictionary(train, m.layout[b], win);
    m.dicts[b] = cfg.error_atoms ? with_error_atoms(d) : std::move(d);
  });
  return m;
}

std::vector<BlockDecision> block_decisions(const LocalModel& model, const GrayImage& img, const ExperimentConfig& cfg,
                                           int exclude_image) {
  std::vector<BlockDecision> out;
  out.reserve(model.layout.size());
  for (std::size_t b = 0; b < model.layout.size(); ++b) {
    const Eigen::VectorXd y = extract_block(img, model.layout[b]);
    const SparseCode code = code_block(model.dicts[b], y, cfg, false, exclude_image);
    out.push_back(make_block_decision(static_cast<int>(b), class_residuals(model.dicts[b], y, code)));
  }
  return out;
}

LocalDictionary build_src_dictionary(const LabeledTrainingSet& train, const ExperimentConfig& cfg) {
  LocalDictionary d = build_global_dictionary(train);
  return cfg.error_atoms ? with_error_atoms(d) : d;
}

SoftScores src_scores(const LocalDictionary& dict, const GrayImage& img, const ExperimentConfig& cfg, double* sci_out) {
  const Eigen::VectorXd y = img.vectorized();
  SparseCode code;
  SoftScores s = src_global(y, dict, solver_options(cfg, y, true), &code);
  if (sci_out) {
    try {
      *sci_out = sci(code, dict, dict.num_classes);
    } catch (const UndefinedSciError&) {
      *sci_out = 0.0;
    }
  }
  return s;
}

namespace {

// Slot of every dictionary column in the raw feature vector: the column itself,
// or its source training image when features are pooled.  Error atoms map to -1.
std::vector<int> feature_slots(const LocalDictionary& dict, bool pooled, int* slot_count) {
  std::vector<int> slot(static_cast<std::size_t>(dict.cols()), -1);
  std::map<int, int> image_slot;
  int next = 0;
  for (Eigen::Index c = 0; c < dict.cols(); ++c) {
    if (dict.col_class[c] == kErrorClass) continue;
    if (!pooled) {
      slot[c] = next++;
      continue;
    }
    auto [it, fresh] = image_slot.emplace(dict.col_provenance[c].image, next);
    if (fresh) ++next;
    slot[c] = it->second;
  }
  *slot_count = next;
  return slot;
}

Eigen::VectorXd raw_features(const std::vector<int>& slots, int slot_count, const SparseCode& code) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(slot_count);
  for (int c : code.support)
    if (slots[c] >= 0) f[slots[c]] += code.coeffs[c];
  return f;
}

LocalDictionary lsgm_dictionary(const LabeledTrainingSet& train, const ExperimentConfig& cfg, int target,
                                const BlockSpec& spec) {
  LocalDictionary d = build_binary_dictionary(train, target, spec, SearchWindow{cfg.dm, cfg.dn},
                                              cfg.complement_per_class,
                                              mix_seed(cfg.seed, {0xb1, static_cast<std::uint64_t>(target)}));
  return cfg.error_atoms ? with_error_atoms(d) : d;
}

// Top-variance columns (ties to the lower index), returned sorted.
std::vector<int> top_variance(const Eigen::MatrixXd& features, int count) {
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::VectorXd var = ((features.rowwise() - mean).array().square().colwise().sum()).transpose();
  std::vector<int> idx(static_cast<std::size_t>(features.cols()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return var[a] > var[b]; });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(count, features.cols())));
  std::sort(idx.begin(), idx.end());
  return idx;
}

LsgmClassModel train_lsgm_class(const LabeledTrainingSet& train, const ExperimentConfig& cfg, const BlockLayout& layout,
                                bool pooled, int target) {
  LsgmClassModel cls;
  const auto n = static_cast<Eigen::Index>(train.size());
  std::vector<Eigen::MatrixXd> raw(layout.size());
  Eigen::Index node_count = cfg.node_cap;
  for (std::size_t b = 0; b < layout.size(); ++b) {
    cls.dicts.push_back(lsgm_dictionary(train, cfg, target, layout[b]));
    const LocalDictionary& dict = cls.dicts.back();
    int slot_count = 0;
    const auto slots = feature_slots(dict, pooled, &slot_count);
    raw[b].resize(n, slot_count);
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::VectorXd y = extract_block(train.images[t], layout[b]);
      // Each training image is coded without its own atoms, as a test image would be.
      const SparseCode code = code_block(dict, y, cfg, false, static_cast<int>(t));
      raw[b].row(t) = raw_features(slots, slot_count, code).transpose();
    }
    node_count = std::min<Eigen::Index>(node_count, slot_count);
  }

  const auto m = static_cast<Eigen::Index>(node_count);
  const auto P = static_cast<Eigen::Index>(layout.size());
  Eigen::MatrixXd all(n, P * m);
  for (std::size_t b = 0; b < layout.size(); ++b) {
    cls.nodes.push_back(top_variance(raw[b], static_cast<int>(m)));
    for (Eigen::Index j = 0; j < m; ++j) all.col(static_cast<Eigen::Index>(b) * m + j) = raw[b].col(cls.nodes[b][j]);
  }

  std::vector<Eigen::Index> rows_p, rows_q;
  for (Eigen::Index t = 0; t < n; ++t) (train.labels[t] == target ? rows_p : rows_q).push_back(t);
  Eigen::MatrixXd sp(static_cast<Eigen::Index>(rows_p.size()), P * m), sq(static_cast<Eigen::Index>(rows_q.size()), P * m);
  for (std::size_t i = 0; i < rows_p.size(); ++i) sp.row(static_cast<Eigen::Index>(i)) = all.row(rows_p[i]);
  for (std::size_t i = 0; i < rows_q.size(); ++i) sq.row(static_cast<Eigen::Index>(i)) = all.row(rows_q[i]);

  BoostOptions bo;
  bo.rounds = cfg.rounds;
  bo.block_size = P > 1 ? static_cast<int>(m) : 0;
  bo.stats.ridge = cfg.variance_ridge;
  cls.pair = boost_thicken(sp, sq, bo);
  return cls;
}

}  // namespace

LsgmModel train_lsgm(const LabeledTrainingSet& train, const ExperimentConfig& cfg) {
  train.validate();
  LsgmModel model;
  model.num_classes = train.num_classes;
  model.layout = parse_layout(cfg.graph_layout, train.width(), train.height());
  model.pooled = cfg.feature_pooling == "image";
  model.classes.resize(static_cast<std::size_t>(train.num_classes));
  parallel_for(model.classes.size(), cfg.workers, [&](std::size_t i) {
    model.classes[i] = train_lsgm_class(train, cfg, model.layout, model.pooled, static_cast<int>(i) + 1);
  });
  return model;
}

Eigen::VectorXd lsgm_features(const LsgmModel& model, const LsgmClassModel& cls, const GrayImage& img,
                              const ExperimentConfig& cfg, int exclude_image) {
  Eigen::VectorXd out(cls.pair.m);
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < model.layout.size(); ++b) {
    const LocalDictionary& dict = cls.dicts[b];
    int slot_count = 0;
    const auto slots = feature_slots(dict, model.pooled, &slot_count);
    const Eigen::VectorXd y = extract_block(img, model.layout[b]);
    const Eigen::VectorXd raw = raw_features(slots, slot_count, code_block(dict, y, cfg, false, exclude_image));
    for (int node : cls.nodes[b]) out[at++] = raw[node];
  }
  if (at != out.size()) throw std::logic_error("lsgm_features: node count does not match the graph pair");
  return out;
}

SoftScores lsgm_scores(const LsgmModel& model, const GrayImage& img, const ExperimentConfig& cfg, int exclude_image) {
  std::vector<Eigen::VectorXd> features;
  std::vector<ThickenedGraphPair> pairs;
  features.reserve(model.classes.size());
  pairs.reserve(model.classes.size());
  for (const auto& cls : model.classes) {
    features.push_back(lsgm_features(model, cls, img, cfg, exclude_image));
    pairs.push_back(cls.pair);
  }
  return infer_class(pairs, features);
}

std::string training_fingerprint(const ExperimentConfig& cfg) {
  static const char* keys[] = {"dataset_root", "classes",      "train_per_class", "seed",       "image_width",
                               "image_height", "graph_layout", "dm",              "dn",         "epsilon",
                               "max_sparsity", "error_atoms",  "error_sparsity",  "rounds",     "node_cap",
                               "complement_per_class", "variance_ridge", "feature_pooling", "outlier_classes"};
  std::string out;
  for (const char* k : keys) out += std::string(k) + "=" + cfg.get(k) + ";";
  return out;
}

void save_lsgm(const LsgmModel& model, const std::string& fingerprint, const fs::path& path) {
  BinaryWriter w(PayloadKind::GraphPairs);
  w.str(fingerprint);
  w.i32(model.num_classes);
  w.u32(model.pooled ? 1 : 0);
  w.u64(model.layout.size());
  for (const auto& b : model.layout) w.ints({b.row, b.col, b.rows, b.cols});
  for (const auto& cls : model.classes) {
    for (const auto& d : cls.dicts) w.str(encode_dictionary(d));
    for (const auto& nodes : cls.nodes) w.ints(nodes);
    write_graph_pair(w, cls.pair);
  }
  w.save(path);
}

bool load_lsgm(const fs::path& path, const std::string& fingerprint, LsgmModel& model) {
  if (!fs::exists(path)) return false;
  BinaryReader r = BinaryReader::open(path, PayloadKind::GraphPairs);
  if (r.str() != fingerprint) return false;
  LsgmModel m;
  m.num_classes = r.i32();
  m.pooled = r.u32() != 0;
  const auto blocks = r.u64();
  if (m.num_classes < 1 || m.num_classes > 1'000'000 || blocks > 100'000) throw ContainerError("lsgm model: bad header");
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const auto v = r.ints();
    if (v.size() != 4) throw ContainerError("lsgm model: bad block spec");
    m.layout.push_back(BlockSpec{v[0], v[1], v[2], v[3]});
  }
  m.classes.resize(static_cast<std::size_t>(m.num_classes));
  for (auto& cls : m.classes) {
    for (std::uint64_t b = 0; b < blocks; ++b) cls.dicts.push_back(decode_dictionary(r.str()));
    for (std::uint64_t b = 0; b < blocks; ++b) cls.nodes.push_back(r.ints());
    cls.pair = read_graph_pair(r);
  }
  if (!r.done()) throw ContainerError("lsgm model: trailing bytes");
  model = std::move(m);
  return true;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct TrainedModels {
  LocalModel local;
  LocalDictionary src;
  LsgmModel lsgm;
  SvmModel svm;
};

LsgmModel obtain_lsgm(const LabeledTrainingSet& train, const ExperimentConfig& cfg) {
  if (!cfg.cache_dir.empty()) {
    const fs::path path = fs::path(cfg.cache_dir) / "lsgm.model";
    LsgmModel cached;
    if (load_lsgm(path, training_fingerprint(cfg), cached)) return cached;
  }
  return train_lsgm(train, cfg);
}

MetaSample meta_sample(const TrainedModels& m, const GrayImage& img, const ExperimentConfig& cfg, int label,
                       int exclude_image) {
  const SoftScores lhml = ml_fuse(block_decisions(m.local, img, cfg, exclude_image));
  const SoftScores lsgm = lsgm_scores(m.lsgm, img, cfg, exclude_image);
  return make_meta_sample({lhml, lsgm}, label);
}

void log_timing(MetricsReport& r, const std::string& stage, double seconds) { r.timings.emplace_back(stage, seconds); }

}  // namespace

std::vector<MetricsReport> run_experiment(const DatasetSplit& split, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto pipelines = cfg.pipelines();
  const bool need_src = has_pipeline(pipelines, "src");
  const bool need_meta = has_pipeline(pipelines, "meta");
  const bool need_local = need_meta || has_pipeline(pipelines, "voting") || has_pipeline(pipelines, "lhml");
  const bool need_lsgm = need_meta || has_pipeline(pipelines, "lsgm");
  const LabeledTrainingSet& train = split.train;
  const int K = train.num_classes;

  std::vector<std::pair<std::string, double>> timings;
  TrainedModels models;
  auto t0 = Clock::now();
  if (need_local) {
    models.local = build_local_model(train, cfg);
    timings.emplace_back("local_dictionaries", seconds_since(t0));
  }
  if (need_src) {
    t0 = Clock::now();
    models.src = build_src_dictionary(train, cfg);
    timings.emplace_back("src_dictionary", seconds_since(t0));
  }
  if (need_lsgm) {
    t0 = Clock::now();
    models.lsgm = obtain_lsgm(train, cfg);
    timings.emplace_back("lsgm_training", seconds_since(t0));
  }
  if (need_meta) {
    t0 = Clock::now();
    std::vector<MetaSample> samples(train.size());
    parallel_for(train.size(), cfg.workers, [&](std::size_t t) {
      samples[t] = meta_sample(models, train.images[t], cfg, train.labels[t], static_cast<int>(t));
    });
    SvmOptions so;
    so.C = cfg.svm_c;
    so.gamma = cfg.svm_gamma;
    so.tol = cfg.svm_tol;
    so.block_len = K;
    models.svm = train_svm(samples, so);
    timings.emplace_back("meta_training", seconds_since(t0));
  }

  const std::size_t n = split.test.size();
  std::map<std::string, std::vector<int>> predicted;
  for (const auto& p : pipelines) predicted[p].assign(n, 0);
  t0 = Clock::now();
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    const GrayImage img = distort_test_image(split.test.images[i], cfg, i);
    if (need_src) predicted.at("src")[i] = src_scores(models.src, img, cfg).decision;
    SoftScores lhml, lsgm;
    if (need_local) {
      const auto decisions = block_decisions(models.local, img, cfg);
      lhml = ml_fuse(decisions);
      if (predicted.count("voting")) predicted.at("voting")[i] = vote_scores(decisions).decision;
      if (predicted.count("lhml")) predicted.at("lhml")[i] = lhml.decision;
    }
    if (need_lsgm) {
      lsgm = lsgm_scores(models.lsgm, img, cfg);
      if (predicted.count("lsgm")) predicted.at("lsgm")[i] = lsgm.decision;
    }
    if (need_meta) predicted.at("meta")[i] = meta_classify(models.svm, make_meta_sample({lhml, lsgm}, 0));
  });
  timings.emplace_back("evaluation", seconds_since(t0));

  std::vector<MetricsReport> reports;
  const std::string echo = cfg.echo();
  for (const auto& p : pipelines) {
    MetricsReport r = make_report(p, K, split.test.labels, predicted.at(p));
    r.config_echo = echo;
    for (const auto& [stage, s] : timings) log_timing(r, stage, s);
    reports.push_back(std::move(r));
  }
  return reports;
}

MetricsReport run_pipeline(const ExperimentConfig& cfg) {
  if (cfg.pipelines().size() != 1) throw ConfigError("run_pipeline: exactly one pipeline must be selected");
  if (cfg.dataset_root.empty()) throw ConfigError("run_pipeline: dataset_root is not set");
  auto reports = run_experiment(split_dataset(cfg.dataset_root, cfg), cfg);
  return std::move(reports.front());
}

MetricsReport run_outlier_experiment(const std::vector<std::vector<GrayImage>>& per_class, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto K_all = static_cast<int>(per_class.size());
  const int O = cfg.outlier_classes;
  if (O < 1) throw ConfigError("outlier experiment: outlier_classes must be at least 1");
  if (K_all - O < 2) throw ConfigError("outlier experiment: needs at least two inlier classes");

  std::vector<std::vector<GrayImage>> inliers(per_class.begin(), per_class.end() - O);
  const DatasetSplit split = split_samples(inliers, cfg);
  std::vector<GrayImage> outliers;
  for (int k = K_all - O; k < K_all; ++k)
    for (const auto& img : per_class[static_cast<std::size_t>(k)]) outliers.push_back(img);
  if (cfg.outlier_tests > 0 && outliers.size() > static_cast<std::size_t>(cfg.outlier_tests)) {
    std::vector<int> order(outliers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    seeded_shuffle(order, mix_seed(cfg.seed, {0x07}));
    order.resize(static_cast<std::size_t>(cfg.outlier_tests));
    std::sort(order.begin(), order.end());
    std::vector<GrayImage> kept;
    for (int i : order) kept.push_back(outliers[static_cast<std::size_t>(i)]);
    outliers = std::move(kept);
  }

  auto t0 = Clock::now();
  const LsgmModel lsgm = obtain_lsgm(split.train, cfg);
  const LocalDictionary src = build_src_dictionary(split.train, cfg);
  const double train_s = seconds_since(t0);

  const std::size_t n_in = split.test.size(), n_out = outliers.size();
  std::vector<double> lsgm_score(n_in + n_out), sci_score(n_in + n_out);
  std::vector<int> predicted(n_in);
  t0 = Clock::now();
  parallel_for(n_in + n_out, cfg.workers, [&](std::size_t i) {
    const GrayImage& base = i < n_in ? split.test.images[i] : outliers[i - n_in];
    const GrayImage img = distort_test_image(base, cfg, i);
    const SoftScores s = lsgm_scores(lsgm, img, cfg);
    lsgm_score[i] = s.per_class.maxCoeff();
    if (i < n_in) predicted[i] = s.decision;
    src_scores(src, img, cfg, &sci_score[i]);
  });
  const double eval_s = seconds_since(t0);

  MetricsReport r = make_report("lsgm", split.train.num_classes, split.test.labels, predicted);
  r.config_echo = cfg.echo();
  auto curve = [&](const std::string& name, const std::vector<double>& scores) {
    const std::vector<double> in(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n_in));
    const std::vector<double> out(scores.begin() + static_cast<std::ptrdiff_t>(n_in), scores.end());
    RocCurve c{name, roc_sweep(in, out)};
    r.extra.emplace_back("auc_" + name, roc_auc(c.points));
    r.roc.push_back(std::move(c));
  };
  curve("lsgm", lsgm_score);
  curve("src", sci_score);
  r.extra.emplace_back("inlier_tests", static_cast<double>(n_in));
  r.extra.emplace_back("outlier_tests", static_cast<double>(n_out));
  log_timing(r, "training", train_s);
  log_timing(r, "evaluation", eval_s);
  return r;
}

std::vector<SweepRow> run_block_sweep(const DatasetSplit& split, const ExperimentConfig& cfg) {
  std::vector<int> counts;
  {
    std::string item;
    std::stringstream ss(cfg.sweep_counts);
    while (std::getline(ss, item, ',')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        counts.push_back(std::stoi(item));
      } catch (const std::logic_error&) {
        throw ConfigError("sweep_counts: bad entry '" + item + "'");
      }
    }
  }
  if (counts.empty()) throw ConfigError("sweep_counts is empty");
  std::vector<SweepRow> rows;
  for (int count : counts) {
    ExperimentConfig c = cfg;
    c.layout = c.graph_layout = "count:" + std::to_string(count);
    c.cache_dir.clear();
    for (const auto& r : run_experiment(split, c)) rows.push_back({count, r.pipeline, r.overall_rate});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const fs::path& path) {
  std::string out = "blocks,pipeline,rate\n";
  for (const auto& r : rows) out += std::to_string(r.blocks) + "," + r.pipeline + "," + format_number(r.rate) + "\n";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_bytes(path, out);
}

}  // namespace lsgm
