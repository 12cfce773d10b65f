#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/imaging.hpp"

namespace lsgm {

/// Training images with class ids in 1..num_classes.
struct LabeledTrainingSet {
  std::vector<GrayImage> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return images.size(); }
  int width() const { return images.empty() ? 0 : images.front().width(); }
  int height() const { return images.empty() ? 0 : images.front().height(); }

  /// Throws std::invalid_argument unless dimensions agree and every class is present.
  void validate() const;

  /// Indices of training images in stable class order (all of class 1, then class 2, ...).
  std::vector<int> class_order() const;
};

/// Half-extents of the offset range scanned around a block.
struct SearchWindow {
  int dm = 0;
  int dn = 0;
  int offsets() const { return (2 * dm + 1) * (2 * dn + 1); }
};

struct AtomProvenance {
  int image = 0;  // index into the training set
  int di = 0;
  int dj = 0;
  bool operator==(const AtomProvenance&) const = default;
};

/// Label carried by identity atoms appended for the sparse-error model.
inline constexpr int kErrorClass = 0;

/// Vectorized training blocks, one per column, unit-normalized.  Columns that
/// were all-zero stay zero with a recorded norm of 0 and are never selected.
struct LocalDictionary {
  Eigen::MatrixXd atoms;
  std::vector<int> col_class;  // 1..num_classes, or kErrorClass
  std::vector<AtomProvenance> col_provenance;
  std::vector<double> col_norms;
  int num_classes = 0;

  Eigen::Index rows() const { return atoms.rows(); }
  Eigen::Index cols() const { return atoms.cols(); }

  /// Copy keeping only the columns for which keep(column) is true.
  template <typename Pred>
  LocalDictionary filtered(Pred keep) const {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index c = 0; c < cols(); ++c)
      if (keep(c)) idx.push_back(c);
    return select_columns(idx);
  }
  LocalDictionary select_columns(const std::vector<Eigen::Index>& idx) const;

  /// Drops every atom harvested from training image `t`.
  LocalDictionary without_image(int t) const;
};

LocalDictionary build_local_dictionary(const LabeledTrainingSet& train, const BlockSpec& spec, const SearchWindow& win);

/// One column per vectorized training image, class ordered.
LocalDictionary build_global_dictionary(const LabeledTrainingSet& train);

/// Passed as complement_per_class to take every sample of every other class.
inline constexpr int kAllComplement = -1;

/// Binary one-vs-all dictionary: label 1 is `target_class`, label 2 the complement.
/// `complement_per_class` images are drawn from each other class with a seeded
/// uniform sample (without replacement, kept in training order).
LocalDictionary build_binary_dictionary(const LabeledTrainingSet& train, int target_class, const BlockSpec& spec,
                                        const SearchWindow& win, int complement_per_class, std::uint64_t seed);

/// Appends `dim` identity atoms labeled kErrorClass (sparse pixel-error model).
LocalDictionary with_error_atoms(const LocalDictionary& dict);

void save_dictionary(const LocalDictionary& dict, const std::filesystem::path& path);
LocalDictionary load_dictionary(const std::filesystem::path& path);
std::string encode_dictionary(const LocalDictionary& dict);
LocalDictionary decode_dictionary(std::string bytes);

}  // namespace lsgm
