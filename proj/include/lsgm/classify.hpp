#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/dictionary.hpp"
#include "lsgm/imaging.hpp"
#include "lsgm/solver.hpp"

namespace lsgm {

/// Outcome of classifying one block by its class residuals.
struct BlockDecision {
  int block_index = 0;
  Eigen::VectorXd residuals;  // K entries, class k at index k-1
  int label = 0;              // 1-based
  Eigen::VectorXd probs;      // normalised inverse residuals
};

/// Per-class real scores, higher is better; decision is the 1-based argmax.
struct SoftScores {
  Eigen::VectorXd per_class;
  int decision = 0;
};

/// Residuals are floored here before taking reciprocals.
inline constexpr double kResidualFloor = 1e-12;

/// 1-based argmax / argmin with ties to the lowest class id.
int argmax_class(const Eigen::Ref<const Eigen::VectorXd>& scores);
int argmin_class(const Eigen::Ref<const Eigen::VectorXd>& scores);

int block_identity(const Eigen::Ref<const Eigen::VectorXd>& residuals);

BlockDecision make_block_decision(int block_index, Eigen::VectorXd residuals);

int majority_vote(const std::vector<int>& labels, int num_classes);

/// Sum over blocks of log p_l^k with p_l^k proportional to 1/r_l^k.
SoftScores ml_fuse(const std::vector<BlockDecision>& decisions);

/// Vote counts as soft scores (used for reporting; decision follows majority_vote).
SoftScores vote_scores(const std::vector<BlockDecision>& decisions);

/// Global sparse-representation classifier: scores are negated class residuals.
SoftScores src_global(const Eigen::Ref<const Eigen::VectorXd>& y, const LocalDictionary& global_dict, double epsilon,
                      int max_sparsity);
SoftScores src_global(const Eigen::Ref<const Eigen::VectorXd>& y, const LocalDictionary& global_dict,
                      const OmpOptions& opts, SparseCode* code_out = nullptr);

// ---------------------------------------------------------------------------
// Block layouts

using BlockLayout = std::vector<BlockSpec>;

/// grid_rows x grid_cols blocks of size block_rows x block_cols whose corners are
/// spread evenly over the image (they overlap when the grid is dense).
BlockLayout grid_layout(int width, int height, int grid_rows, int grid_cols, int block_rows, int block_cols);

/// Named facial regions laid out on a 32x28 (rows x cols) reference frame and
/// rescaled to the image: "eyes", "nose", "mouth", "left_eye", "right_eye".
BlockSpec facial_region(const std::string& name, int width, int height);

/// Layouts used for block-count studies: 3 = eyes/nose/mouth, 5 adds the single
/// eyes, larger counts are uniform grids (8x12 or 8x8 blocks).
BlockLayout layout_for_count(int count, int width, int height);

/// Parses "grid:RxC:MxN", "regions:eyes,nose,mouth" or "count:N".
BlockLayout parse_layout(const std::string& text, int width, int height);

}  // namespace lsgm
