#include "lsgm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lsgm {

namespace {

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* who) {
  if (v.size() == 0) throw std::invalid_argument(std::string(who) + ": empty score vector");
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isnan(v[i])) throw std::invalid_argument(std::string(who) + ": NaN score");
}

}  // namespace

int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  require_finite(scores, "argmax_class");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return static_cast<int>(best) + 1;
}

int argmin_class(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  require_finite(scores, "argmin_class");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  return static_cast<int>(best) + 1;
}

int block_identity(const Eigen::Ref<const Eigen::VectorXd>& residuals) { return argmin_class(residuals); }

BlockDecision make_block_decision(int block_index, Eigen::VectorXd residuals) {
  BlockDecision d;
  d.block_index = block_index;
  d.label = block_identity(residuals);
  const Eigen::VectorXd inv = residuals.array().max(kResidualFloor).inverse();
  d.probs = inv / inv.sum();
  d.residuals = std::move(residuals);
  return d;
}

int majority_vote(const std::vector<int>& labels, int num_classes) {
  if (labels.empty()) throw std::invalid_argument("majority_vote: no labels");
  if (num_classes < 1) throw std::invalid_argument("majority_vote: class count must be positive");
  std::vector<int> votes(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) {
    if (l < 1 || l > num_classes) throw std::invalid_argument("majority_vote: label out of range");
    ++votes[l - 1];
  }
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()) + 1;
}

SoftScores ml_fuse(const std::vector<BlockDecision>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("ml_fuse: no block decisions");
  const Eigen::Index K = decisions.front().residuals.size();
  SoftScores s;
  s.per_class = Eigen::VectorXd::Zero(K);
  for (const auto& d : decisions) {
    if (d.residuals.size() != K) throw std::invalid_argument("ml_fuse: inconsistent class counts");
    const Eigen::ArrayXd inv = d.residuals.array().max(kResidualFloor).inverse();
    s.per_class.array() += (inv / inv.sum()).log();
  }
  s.decision = argmax_class(s.per_class);
  return s;
}

SoftScores vote_scores(const std::vector<BlockDecision>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("vote_scores: no block decisions");
  const auto K = static_cast<int>(decisions.front().residuals.size());
  SoftScores s;
  s.per_class = Eigen::VectorXd::Zero(K);
  std::vector<int> labels;
  for (const auto& d : decisions) {
    labels.push_back(d.label);
    s.per_class[d.label - 1] += 1.0;
  }
  s.decision = majority_vote(labels, K);
  return s;
}

SoftScores src_global(const Eigen::Ref<const Eigen::VectorXd>& y, const LocalDictionary& global_dict,
                      const OmpOptions& opts, SparseCode* code_out) {
  SparseCode code = omp(global_dict, y, opts);
  const Eigen::VectorXd r = class_residuals(global_dict, y, code);
  SoftScores s;
  s.per_class = -r;
  s.decision = argmin_class(r);
  if (code_out) *code_out = std::move(code);
  return s;
}

SoftScores src_global(const Eigen::Ref<const Eigen::VectorXd>& y, const LocalDictionary& global_dict, double epsilon,
                      int max_sparsity) {
  return src_global(y, global_dict, OmpOptions{epsilon, max_sparsity});
}

// ---------------------------------------------------------------------------
// Layouts

namespace {

int spread(int index, int count, int span) {
  if (count <= 1) return span / 2;
  return static_cast<int>(std::lround(static_cast<double>(index) * span / (count - 1)));
}

}  // namespace

BlockLayout grid_layout(int width, int height, int grid_rows, int grid_cols, int block_rows, int block_cols) {
  if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("grid_layout: grid must be at least 1x1");
  if (block_rows < 1 || block_cols < 1 || block_rows > height || block_cols > width)
    throw std::invalid_argument("grid_layout: block does not fit the image");
  BlockLayout layout;
  for (int r = 0; r < grid_rows; ++r)
    for (int c = 0; c < grid_cols; ++c)
      layout.push_back({spread(r, grid_rows, height - block_rows), spread(c, grid_cols, width - block_cols), block_rows,
                        block_cols});
  return layout;
}

BlockSpec facial_region(const std::string& name, int width, int height) {
  // Reference frame is 32 rows by 28 columns.
  BlockSpec ref;
  if (name == "eyes") ref = {6, 2, 8, 24};
  else if (name == "left_eye") ref = {6, 2, 8, 12};
  else if (name == "right_eye") ref = {6, 14, 8, 12};
  else if (name == "nose") ref = {13, 8, 8, 12};
  else if (name == "mouth") ref = {21, 8, 8, 12};
  else throw std::invalid_argument("unknown facial region '" + name + "'");

  const double sr = height / 32.0, sc = width / 28.0;
  BlockSpec b;
  b.rows = std::clamp(static_cast<int>(std::lround(ref.rows * sr)), 1, height);
  b.cols = std::clamp(static_cast<int>(std::lround(ref.cols * sc)), 1, width);
  b.row = std::clamp(static_cast<int>(std::lround(ref.row * sr)), 0, height - b.rows);
  b.col = std::clamp(static_cast<int>(std::lround(ref.col * sc)), 0, width - b.cols);
  return b;
}

BlockLayout layout_for_count(int count, int width, int height) {
  auto regions = [&](std::initializer_list<const char*> names) {
    BlockLayout l;
    for (const char* n : names) l.push_back(facial_region(n, width, height));
    return l;
  };
  const int b8 = std::min({8, width, height});
  switch (count) {
    case 1: return {BlockSpec{0, 0, height, width}};
    case 3: return regions({"eyes", "nose", "mouth"});
    case 5: return regions({"eyes", "nose", "mouth", "left_eye", "right_eye"});
    case 8: return grid_layout(width, height, 4, 2, b8, std::min(12, width));
    case 12: return grid_layout(width, height, 4, 3, b8, b8);
    case 20: return grid_layout(width, height, 5, 4, b8, b8);
    case 30: return grid_layout(width, height, 6, 5, b8, b8);
    case 42: return grid_layout(width, height, 7, 6, b8, b8);
    default: throw std::invalid_argument("layout_for_count: no preset for " + std::to_string(count) + " blocks");
  }
}

BlockLayout parse_layout(const std::string& text, int width, int height) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto bad = [&] { return std::invalid_argument("cannot parse block layout '" + text + "'"); };

  if (kind == "count") {
    try {
      return layout_for_count(std::stoi(rest), width, height);
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  if (kind == "regions") {
    BlockLayout l;
    std::stringstream ss(rest);
    std::string name;
    while (std::getline(ss, name, ',')) l.push_back(facial_region(name, width, height));
    if (l.empty()) throw bad();
    return l;
  }
  if (kind == "full") return {BlockSpec{0, 0, height, width}};
  if (kind == "grid") {
    int gr = 0, gc = 0, m = 0, n = 0;
    char x1 = 0, sep = 0, x2 = 0;
    std::stringstream ss(rest);
    if (!(ss >> gr >> x1 >> gc >> sep >> m >> x2 >> n) || x1 != 'x' || sep != ':' || x2 != 'x') throw bad();
    return grid_layout(width, height, gr, gc, m, n);
  }
  throw bad();
}

}  // namespace lsgm
