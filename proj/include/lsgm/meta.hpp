#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/classify.hpp"
#include "lsgm/container.hpp"

namespace lsgm {

/// Concatenated soft outputs of several first-stage classifiers.
struct MetaSample {
  Eigen::VectorXd features;
  int label = 0;
};

MetaSample make_meta_sample(const std::vector<SoftScores>& per_classifier, int label);

/// Per-block affine standardization: one mean and one standard deviation for
/// each classifier's block of K scores.  block_len == 0 disables it.
struct MetaStandardizer {
  int block_len = 0;
  std::vector<double> mean;
  std::vector<double> sd;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

MetaStandardizer fit_standardizer(const std::vector<MetaSample>& samples, int block_len);

/// Binary RBF machine separating class `pos` (+1) from `neg` (-1).
struct PairwiseSvm {
  int pos = 0;
  int neg = 0;
  Eigen::MatrixXd support;       // one support vector per row (standardised space)
  Eigen::VectorXd coef;          // alpha_i * y_i for each support vector
  Eigen::VectorXd alpha;         // alpha_i
  Eigen::VectorXd support_label; // y_i
  double bias = 0.0;             // f(x) = sum coef_i K(s_i, x) + bias
  int iterations = 0;

  double decision(const Eigen::VectorXd& x, double gamma) const;
};

struct SvmModel {
  int num_classes = 0;
  int feature_len = 0;
  double gamma = 0.0;
  double C = 0.0;
  double tol = 0.0;
  MetaStandardizer standardizer;
  std::vector<PairwiseSvm> machines;  // one per class pair (a < b) present in training
};

struct SvmOptions {
  double C = 10.0;
  double gamma = 0.0;  // <= 0 selects 1 / feature length
  double tol = 1e-3;
  int block_len = 0;   // standardization block length (usually K)
  int max_iterations = 1'000'000;
};

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma);

/// One-vs-one sequential minimal optimization with second-order working-set selection.
SvmModel train_svm(const std::vector<MetaSample>& samples, const SvmOptions& opts);
SvmModel train_svm(const std::vector<MetaSample>& samples, double C, double gamma, double tol);

/// One-vs-one vote, ties to the lowest class id.
int meta_classify(const SvmModel& model, const MetaSample& sample);

void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);
std::string encode_svm(const SvmModel& model);
SvmModel decode_svm(std::string bytes);

}  // namespace lsgm
