#include "lsgm/solver.hpp"

#include <algorithm>
#include <cmath>

namespace lsgm {

SparseCode omp(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y, const OmpOptions& opts) {
  if (y.size() != dict.rows()) throw std::invalid_argument("omp: signal length does not match dictionary rows");
  if (opts.max_sparsity < 1) throw std::invalid_argument("omp: max_sparsity must be at least 1");
  if (!(opts.epsilon >= 0)) throw std::invalid_argument("omp: epsilon must be non-negative");
  if (opts.skip && static_cast<Eigen::Index>(opts.skip->size()) != dict.cols())
    throw std::invalid_argument("omp: skip mask length does not match dictionary columns");

  const Eigen::Index n_cols = dict.cols();
  std::vector<char> selectable(static_cast<std::size_t>(n_cols), 0);
  Eigen::Index n_selectable = 0;
  for (Eigen::Index c = 0; c < n_cols; ++c) {
    if (opts.skip && (*opts.skip)[c]) continue;
    if (dict.col_norms[c] > 0 && dict.atoms.col(c).squaredNorm() > 0) {
      selectable[c] = 1;
      ++n_selectable;
    }
  }
  if (n_selectable == 0) throw std::invalid_argument("omp: dictionary has no non-zero columns");

  SparseCode code;
  code.coeffs = Eigen::VectorXd::Zero(n_cols);
  Eigen::VectorXd residual = y;
  code.residual_norm = residual.norm();

  const double scale = std::max(1.0, y.norm());
  Eigen::VectorXd solution;
  Eigen::MatrixXd support_atoms(dict.rows(), 0);

  while (code.residual_norm > opts.epsilon && static_cast<int>(code.support.size()) < opts.max_sparsity &&
         static_cast<Eigen::Index>(code.support.size()) < n_selectable) {
    const Eigen::VectorXd corr = dict.atoms.transpose() * residual;
    Eigen::Index best = -1;
    double best_abs = 0.0;
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      if (!selectable[c]) continue;
      const double a = std::abs(corr[c]);
      if (a > best_abs) {
        best_abs = a;
        best = c;
      }
    }
    // Residual already orthogonal to every remaining atom.
    if (best < 0 || best_abs <= 1e-12 * scale) break;

    selectable[best] = 0;
    code.support.push_back(static_cast<int>(best));
    support_atoms.conservativeResize(Eigen::NoChange, support_atoms.cols() + 1);
    support_atoms.col(support_atoms.cols() - 1) = dict.atoms.col(best);

    Eigen::MatrixXd gram = support_atoms.transpose() * support_atoms;
    gram.diagonal().array() += opts.ridge;
    solution = gram.ldlt().solve(support_atoms.transpose() * y);
    residual = y - support_atoms * solution;
    code.residual_norm = residual.norm();
    ++code.iterations;
  }

  for (std::size_t k = 0; k < code.support.size(); ++k)
    code.coeffs[code.support[k]] = solution[static_cast<Eigen::Index>(k)];
  return code;
}

SparseCode omp(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y, double epsilon,
               int max_sparsity) {
  OmpOptions opts;
  opts.epsilon = epsilon;
  opts.max_sparsity = max_sparsity;
  return omp(dict, y, opts);
}

Eigen::VectorXd class_residuals(const LocalDictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const SparseCode& code) {
  const int K = dict.num_classes;
  // Partial reconstructions per class; index 0 collects the error atoms.
  Eigen::MatrixXd parts = Eigen::MatrixXd::Zero(dict.rows(), K + 1);
  for (int c : code.support) {
    const int label = dict.col_class[c];
    if (label < 0 || label > K) throw std::invalid_argument("class_residuals: column label out of range");
    parts.col(label) += code.coeffs[c] * dict.atoms.col(c);
  }
  const Eigen::VectorXd base = y - parts.col(kErrorClass);
  Eigen::VectorXd r(K);
  for (int k = 1; k <= K; ++k) r[k - 1] = (base - parts.col(k)).norm();
  return r;
}

double sci(const SparseCode& code, const LocalDictionary& dict, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("sci: needs at least two classes");
  std::vector<double> mass(static_cast<std::size_t>(num_classes) + 1, 0.0);
  double total = 0.0;
  for (Eigen::Index c = 0; c < code.coeffs.size(); ++c) {
    const int label = dict.col_class[c];
    if (label == kErrorClass || code.coeffs[c] == 0.0) continue;
    if (label < 1 || label > num_classes) throw std::invalid_argument("sci: column label out of range");
    const double a = std::abs(code.coeffs[c]);
    mass[label] += a;
    total += a;
  }
  if (!(total > 0)) throw UndefinedSciError();
  const double top = *std::max_element(mass.begin() + 1, mass.end());
  const double k = static_cast<double>(num_classes);
  return std::clamp((k * top / total - 1.0) / (k - 1.0), 0.0, 1.0);
}

}  // namespace lsgm
