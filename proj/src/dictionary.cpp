#include "lsgm/dictionary.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "lsgm/container.hpp"

namespace lsgm {

void LabeledTrainingSet::validate() const {
  if (images.empty()) throw std::invalid_argument("training set is empty");
  if (labels.size() != images.size()) throw std::invalid_argument("training set: label count differs from image count");
  if (num_classes < 1) throw std::invalid_argument("training set: class count must be positive");
  std::vector<bool> seen(static_cast<std::size_t>(num_classes) + 1, false);
  for (std::size_t t = 0; t < images.size(); ++t) {
    if (images[t].width() != width() || images[t].height() != height())
      throw std::invalid_argument("training set: image dimensions differ");
    if (labels[t] < 1 || labels[t] > num_classes) throw std::invalid_argument("training set: class id out of range");
    seen[labels[t]] = true;
  }
  for (int k = 1; k <= num_classes; ++k)
    if (!seen[k]) throw std::invalid_argument("training set: class " + std::to_string(k) + " has no samples");
}

std::vector<int> LabeledTrainingSet::class_order() const {
  std::vector<int> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return labels[a] < labels[b]; });
  return order;
}

LocalDictionary LocalDictionary::select_columns(const std::vector<Eigen::Index>& idx) const {
  LocalDictionary out;
  out.num_classes = num_classes;
  out.atoms.resize(rows(), static_cast<Eigen::Index>(idx.size()));
  out.col_class.reserve(idx.size());
  out.col_provenance.reserve(idx.size());
  out.col_norms.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index c = idx[k];
    out.atoms.col(static_cast<Eigen::Index>(k)) = atoms.col(c);
    out.col_class.push_back(col_class[c]);
    out.col_provenance.push_back(col_provenance[c]);
    out.col_norms.push_back(col_norms[c]);
  }
  return out;
}

LocalDictionary LocalDictionary::without_image(int t) const {
  return filtered([&](Eigen::Index c) { return col_provenance[c].image != t; });
}

namespace {

struct Harvest {
  std::vector<Eigen::VectorXd> columns;
  std::vector<int> labels;
  std::vector<AtomProvenance> provenance;

  void add(const LabeledTrainingSet& train, int t, int label, const BlockSpec& spec, const SearchWindow& win) {
    const GrayImage& img = train.images[t];
    for (int di = -win.dm; di <= win.dm; ++di) {
      for (int dj = -win.dn; dj <= win.dn; ++dj) {
        const BlockSpec shifted{spec.row + di, spec.col + dj, spec.rows, spec.cols};
        if (!shifted.fits(img.width(), img.height())) continue;
        columns.push_back(extract_block(img, shifted));
        labels.push_back(label);
        provenance.push_back({t, di, dj});
      }
    }
  }

  LocalDictionary finish(Eigen::Index rows, int num_classes) && {
    if (columns.empty()) throw std::out_of_range("dictionary: block lies outside the training images for every offset");
    LocalDictionary d;
    d.num_classes = num_classes;
    d.atoms.resize(rows, static_cast<Eigen::Index>(columns.size()));
    d.col_norms.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double n = columns[c].norm();
      d.col_norms.push_back(n);
      d.atoms.col(static_cast<Eigen::Index>(c)) = n > 0 ? Eigen::VectorXd(columns[c] / n) : Eigen::VectorXd::Zero(rows);
    }
    d.col_class = std::move(labels);
    d.col_provenance = std::move(provenance);
    return d;
  }
};

void check_block_shape(const LabeledTrainingSet& train, const BlockSpec& spec) {
  train.validate();
  if (spec.rows < 1 || spec.cols < 1) throw std::invalid_argument("dictionary: block must be at least 1x1");
  if (spec.rows > train.height() || spec.cols > train.width())
    throw std::out_of_range("dictionary: block larger than the training images");
}

}  // namespace

LocalDictionary build_local_dictionary(const LabeledTrainingSet& train, const BlockSpec& spec, const SearchWindow& win) {
  check_block_shape(train, spec);
  if (win.dm < 0 || win.dn < 0) throw std::invalid_argument("dictionary: search window must be non-negative");
  Harvest h;
  for (int t : train.class_order()) h.add(train, t, train.labels[t], spec, win);
  return std::move(h).finish(static_cast<Eigen::Index>(spec.rows) * spec.cols, train.num_classes);
}

LocalDictionary build_global_dictionary(const LabeledTrainingSet& train) {
  train.validate();
  return build_local_dictionary(train, BlockSpec{0, 0, train.height(), train.width()}, SearchWindow{0, 0});
}

LocalDictionary build_binary_dictionary(const LabeledTrainingSet& train, int target_class, const BlockSpec& spec,
                                        const SearchWindow& win, int complement_per_class, std::uint64_t seed) {
  check_block_shape(train, spec);
  if (target_class < 1 || target_class > train.num_classes)
    throw std::invalid_argument("binary dictionary: target class out of range");
  if (complement_per_class < 1 && complement_per_class != kAllComplement)
    throw std::invalid_argument("binary dictionary: complement_per_class must be at least 1");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(train.num_classes) + 1);
  for (int t : train.class_order()) by_class[train.labels[t]].push_back(t);

  Harvest h;
  for (int t : by_class[target_class]) h.add(train, t, 1, spec, win);

  std::mt19937_64 rng(seed);
  for (int k = 1; k <= train.num_classes; ++k) {
    if (k == target_class) continue;
    std::vector<int> pool = by_class[k];
    if (complement_per_class != kAllComplement) {
      if (static_cast<std::size_t>(complement_per_class) > pool.size())
        throw std::invalid_argument("binary dictionary: class " + std::to_string(k) + " has fewer than " +
                                    std::to_string(complement_per_class) + " samples");
      for (int i = 0; i < complement_per_class; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      pool.resize(static_cast<std::size_t>(complement_per_class));
      std::sort(pool.begin(), pool.end());
    }
    for (int t : pool) h.add(train, t, 2, spec, win);
  }
  return std::move(h).finish(static_cast<Eigen::Index>(spec.rows) * spec.cols, 2);
}

LocalDictionary with_error_atoms(const LocalDictionary& dict) {
  const Eigen::Index n = dict.rows();
  LocalDictionary out = dict;
  out.atoms.conservativeResize(n, dict.cols() + n);
  out.atoms.rightCols(n).setIdentity();
  for (Eigen::Index i = 0; i < n; ++i) {
    out.col_class.push_back(kErrorClass);
    out.col_provenance.push_back({-1, static_cast<int>(i), 0});
    out.col_norms.push_back(1.0);
  }
  return out;
}

std::string encode_dictionary(const LocalDictionary& dict) {
  BinaryWriter w(PayloadKind::Dictionary);
  w.i32(dict.num_classes);
  w.matrix(dict.atoms);
  w.ints(dict.col_class);
  w.u64(dict.col_provenance.size());
  for (const auto& p : dict.col_provenance) {
    w.i32(p.image);
    w.i32(p.di);
    w.i32(p.dj);
  }
  w.reals(dict.col_norms);
  return w.bytes();
}

LocalDictionary decode_dictionary(std::string bytes) {
  BinaryReader r(std::move(bytes), PayloadKind::Dictionary);
  LocalDictionary d;
  d.num_classes = r.i32();
  d.atoms = r.matrix();
  d.col_class = r.ints();
  const auto n = r.u64();
  if (n != static_cast<std::uint64_t>(d.atoms.cols())) throw ContainerError("dictionary: provenance count mismatch");
  d.col_provenance.resize(n);
  for (auto& p : d.col_provenance) {
    p.image = r.i32();
    p.di = r.i32();
    p.dj = r.i32();
  }
  d.col_norms = r.reals();
  if (d.col_class.size() != n || d.col_norms.size() != n || !r.done())
    throw ContainerError("dictionary: inconsistent column metadata");
  return d;
}

void save_dictionary(const LocalDictionary& dict, const std::filesystem::path& path) {
  write_file_bytes(path, encode_dictionary(dict));
}

LocalDictionary load_dictionary(const std::filesystem::path& path) { return decode_dictionary(read_file_bytes(path)); }

}  // namespace lsgm
