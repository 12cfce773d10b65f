#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lsgm/dictionary.hpp"

namespace lsgm::test {

// Dictionary from raw columns; columns are normalised and labelled in order.
inline LocalDictionary make_dictionary(const Eigen::MatrixXd& raw, std::vector<int> labels, int num_classes) {
  LocalDictionary d;
  d.atoms = raw;
  d.num_classes = num_classes;
  d.col_class = std::move(labels);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double n = raw.col(c).norm();
    d.col_norms.push_back(n);
    if (n > 0) d.atoms.col(c) /= n;
    d.col_provenance.push_back({static_cast<int>(c), 0, 0});
  }
  return d;
}

}  // namespace lsgm::test
