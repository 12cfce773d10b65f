#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/dictionary.hpp"

namespace lsgm {

/// Coefficients against a dictionary's (unit-norm) columns.
struct SparseCode {
  Eigen::VectorXd coeffs;
  std::vector<int> support;  // selection order
  double residual_norm = 0.0;
  int iterations = 0;
};

struct OmpOptions {
  double epsilon = 0.0;
  int max_sparsity = 8;
  /// Tikhonov term added to the support Gram matrix.
  double ridge = 1e-10;
  const std::vector<char>* skip = nullptr;  // nonzero entries mark columns the pursuit must ignore
};

/// Orthogonal matching pursuit.  Each step picks the selectable column with the
/// largest |<d, r>| (lowest index on ties), then re-fits least squares on the
/// support.  Stops once ||r|| <= epsilon, the support reaches max_sparsity, or
/// no remaining column correlates with the residual.
SparseCode omp(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y, const OmpOptions& opts);
SparseCode omp(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y, double epsilon,
               int max_sparsity);

/// r_k = ||y - D delta_k(coeffs)|| for k = 1..num_classes.  Coefficients on
/// error atoms are part of every class's reconstruction.
Eigen::VectorXd class_residuals(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const SparseCode& code);

class UndefinedSciError : public std::domain_error {
 public:
  UndefinedSciError() : std::domain_error("sci: code has no l1 mass on class atoms") {}
};

/// Sparsity concentration index over classes 1..K (error atoms ignored).
double sci(const SparseCode& code, const LocalDictionary& dict, int num_classes);

}  // namespace lsgm
