#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsgm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every knob of an experiment run.  Counts and windows use the same names as the
/// `key = value` config file and the CLI flags.
struct ExperimentConfig {
  // data
  std::string dataset_root;
  int classes = 0;            // 0: every class directory found
  int train_per_class = 15;
  int test_per_class = 0;     // 0: all remaining samples
  std::uint64_t seed = 1;
  int workers = 1;
  int image_width = 0;        // 0: keep the stored size
  int image_height = 0;

  // local sparse features
  std::string layout = "count:42";       // voting / lhml blocks
  std::string graph_layout = "count:3";  // lsgm feature blocks
  int dm = 3;
  int dn = 3;
  double epsilon = 0.05;      // relative to ||y||
  int max_sparsity = 8;
  int global_max_sparsity = 16;
  bool error_atoms = false;   // sparse pixel-error model
  int error_sparsity = 32;    // extra pursuit budget when error atoms are on

  // distortion applied to test images
  double angle_min = 0.0;
  double angle_max = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double corruption = 0.0;

  // pipelines: comma separated subset of src, voting, lhml, lsgm, meta
  std::string pipeline = "lsgm";

  // graphs
  int rounds = 10;
  int node_cap = 64;
  int complement_per_class = 4;
  double variance_ridge = 0.1;
  std::string feature_pooling = "image";  // atom: one node per atom; image: atoms summed per training image

  // outlier experiment
  int outlier_classes = 0;    // trailing classes held out as outliers
  int outlier_tests = 0;      // 0: every outlier sample

  // meta classifier
  double svm_c = 10.0;
  double svm_gamma = 0.0;     // 0: 1 / feature length
  double svm_tol = 1e-3;

  // block-count study
  std::string sweep_counts = "3,5,8,12,20,30,42";

  // artifacts
  std::string out_dir = "out";
  std::string cache_dir;

  // fixture generation (prepare)
  int fixture_classes = 10;
  int fixture_samples = 30;
  int fixture_width = 28;
  int fixture_height = 32;
  double fixture_texture = 0.08;
  double fixture_jitter = 1.0;
  double fixture_lighting = 0.1;
  double fixture_noise = 0.02;
  double fixture_expression = 1.0;

  std::vector<std::string> pipelines() const;

  /// Sets one field from text; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Parses `key = value` lines ('#' starts a comment).
  void merge_text(const std::string& text);
  void merge_file(const std::string& path);

  /// Full resolved configuration, one `key = value` per line in a fixed order.
  std::string echo() const;

  /// Throws ConfigError when a value is out of range.
  void validate() const;
};

}  // namespace lsgm
