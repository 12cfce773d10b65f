#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/classify.hpp"
#include "lsgm/config.hpp"
#include "lsgm/dictionary.hpp"
#include "lsgm/graphs.hpp"
#include "lsgm/meta.hpp"

namespace lsgm {

// ---------------------------------------------------------------------------
// Data

struct LabeledImages {
  std::vector<GrayImage> images;
  std::vector<int> labels;  // 1-based
  std::size_t size() const { return images.size(); }
};

struct DatasetSplit {
  LabeledTrainingSet train;
  LabeledImages test;
  std::vector<std::string> class_names;  // directory name per class id (index id - 1)
};

/// Reads root/class_<id>/*.pgm.  Class ids are sorted numerically and renumbered
/// 1..K; samples within a class are ordered by file name.
std::vector<std::vector<GrayImage>> load_dataset(const std::filesystem::path& root, const ExperimentConfig& cfg,
                                                 std::vector<std::string>* class_names = nullptr);

/// Seeded per-class split: train_per_class samples train, the rest (capped by
/// test_per_class) test.  Throws when the test set would be empty.
DatasetSplit split_samples(const std::vector<std::vector<GrayImage>>& per_class, const ExperimentConfig& cfg);
DatasetSplit split_dataset(const std::filesystem::path& root, const ExperimentConfig& cfg);

/// The configured test distortion for the test image at `index`.
GrayImage distort_test_image(const GrayImage& img, const ExperimentConfig& cfg, std::size_t index);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.  The first exception is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Metrics

struct RocPoint {
  double threshold = 0.0;  // inlier iff score > threshold
  double fa = 0.0;
  double pd = 0.0;
};

/// Thresholds run over the distinct scores in descending order, then -inf, so the
/// curve starts at (0,0) and ends at (1,1).
std::vector<RocPoint> roc_sweep(const std::vector<double>& inlier_scores, const std::vector<double>& outlier_scores);
double roc_auc(const std::vector<RocPoint>& points);

struct RocCurve {
  std::string method;
  std::vector<RocPoint> points;
};

struct MetricsReport {
  std::string pipeline;
  int num_classes = 0;
  std::size_t total = 0;
  std::size_t correct = 0;
  double overall_rate = 0.0;  // percent
  std::vector<std::size_t> per_class_total;
  std::vector<std::size_t> per_class_correct;
  std::vector<double> per_class_rate;                // percent; NaN for classes without tests
  std::vector<std::vector<std::size_t>> confusion;   // [truth-1][predicted-1]
  std::vector<RocCurve> roc;
  std::vector<std::pair<std::string, double>> extra;  // further summary rows
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage; stderr only
  std::string config_echo;
};

MetricsReport make_report(const std::string& pipeline, int num_classes, const std::vector<int>& truth,
                          const std::vector<int>& predicted);

/// Writes summary.csv, per_class.csv, roc.csv (when there are ROC curves) and config.echo.
void emit_report(const MetricsReport& report, const std::filesystem::path& out_dir);

std::string format_number(double v);

// ---------------------------------------------------------------------------
// Models

OmpOptions solver_options(const ExperimentConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& y, bool global);

struct LocalModel {
  BlockLayout layout;
  std::vector<LocalDictionary> dicts;  // one per block
  int num_classes = 0;
};

LocalModel build_local_model(const LabeledTrainingSet& train, const ExperimentConfig& cfg);

/// Per-block residual decisions.  exclude_image >= 0 hides that training image's atoms.
std::vector<BlockDecision> block_decisions(const LocalModel& model, const GrayImage& img, const ExperimentConfig& cfg,
                                           int exclude_image = -1);

LocalDictionary build_src_dictionary(const LabeledTrainingSet& train, const ExperimentConfig& cfg);
SoftScores src_scores(const LocalDictionary& dict, const GrayImage& img, const ExperimentConfig& cfg,
                      double* sci_out = nullptr);

struct LsgmClassModel {
  std::vector<LocalDictionary> dicts;    // binary dictionary per graph block
  std::vector<std::vector<int>> nodes;   // per block: selected feature indices (sorted)
  ThickenedGraphPair pair;
};

struct LsgmModel {
  int num_classes = 0;
  BlockLayout layout;
  bool pooled = false;  // node = training image rather than atom
  std::vector<LsgmClassModel> classes;
};

LsgmModel train_lsgm(const LabeledTrainingSet& train, const ExperimentConfig& cfg);

/// Concatenated per-block node features of `img` for one one-vs-all problem.
Eigen::VectorXd lsgm_features(const LsgmModel& model, const LsgmClassModel& cls, const GrayImage& img,
                              const ExperimentConfig& cfg, int exclude_image = -1);

/// Per-class LLRs; decision is the argmax.
SoftScores lsgm_scores(const LsgmModel& model, const GrayImage& img, const ExperimentConfig& cfg,
                       int exclude_image = -1);

void save_lsgm(const LsgmModel& model, const std::string& fingerprint, const std::filesystem::path& path);
/// Returns false when the file is missing or was written for another fingerprint.
bool load_lsgm(const std::filesystem::path& path, const std::string& fingerprint, LsgmModel& model);

/// Config fields that determine the trained artifacts.
std::string training_fingerprint(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments

/// Evaluates every configured pipeline on one split; block decisions and sparse
/// codes are shared between pipelines.
std::vector<MetricsReport> run_experiment(const DatasetSplit& split, const ExperimentConfig& cfg);

/// Loads cfg.dataset_root and runs the single configured pipeline.
MetricsReport run_pipeline(const ExperimentConfig& cfg);

/// The trailing cfg.outlier_classes classes are withheld from training and used as outliers.
MetricsReport run_outlier_experiment(const std::vector<std::vector<GrayImage>>& per_class, const ExperimentConfig& cfg);

struct SweepRow {
  int blocks = 0;
  std::string pipeline;
  double rate = 0.0;
};

std::vector<SweepRow> run_block_sweep(const DatasetSplit& split, const ExperimentConfig& cfg);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace lsgm
