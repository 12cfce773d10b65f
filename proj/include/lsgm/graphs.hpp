#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/classify.hpp"
#include "lsgm/container.hpp"

namespace lsgm {

// ---------------------------------------------------------------------------
// Gaussian pairwise statistics

struct StatsOptions {
  double ridge = 1e-6;        // added to every variance
  double corr_clamp = 0.999;  // |rho| ceiling
};

/// Weighted first and second order moments of an m-dimensional sample.
struct PairwiseGaussianStats {
  int m = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  Eigen::MatrixXd corr;
  double weight_total = 0.0;
};

/// `samples` holds one observation per row.  Weights must be non-negative and
/// not all zero; they are normalised internally.
PairwiseGaussianStats fit_pairwise_stats(const Eigen::MatrixXd& samples, const Eigen::VectorXd& weights,
                                         const StatsOptions& opts = {});
PairwiseGaussianStats fit_pairwise_stats(const Eigen::MatrixXd& samples, const StatsOptions& opts = {});

/// Dense covariance implied by the stats (diag(sd) * corr * diag(sd)).
Eigen::MatrixXd covariance(const PairwiseGaussianStats& stats);

// ---------------------------------------------------------------------------
// Trees

struct Edge {
  int u = 0;  // u < v
  int v = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Maximum-weight spanning tree (Kruskal, union-find).  Only the upper triangle
/// of `weights` is read.  Ties go to the lexicographically smaller pair; edges of
/// weight <= 0 are dropped, so the result is in general a forest.  An entry of
/// -infinity marks a forbidden pair.
std::vector<Edge> mwst(int m, const Eigen::MatrixXd& weights);
std::vector<Edge> mwst(int m, const std::function<double(int, int)>& weight);

/// Spanning tree before the non-positive-edge pruning step; used by tests that
/// compare against exhaustive enumeration of spanning trees.
std::vector<Edge> mwst_unpruned(int m, const Eigen::MatrixXd& weights);

struct EdgeParams {
  double mean_u = 0, mean_v = 0;
  double var_u = 1, var_v = 1;
  double corr = 0;
};

/// Tree-structured Gaussian: univariate node marginals plus bivariate edge marginals.
struct TreeGraph {
  int m = 0;
  std::vector<Edge> edges;
  Eigen::VectorXd node_mean;
  Eigen::VectorXd node_var;
  std::vector<EdgeParams> edge_params;
};

/// Builds a tree on `edges` whose marginals are copied from `stats`.
TreeGraph make_tree(const PairwiseGaussianStats& stats, std::vector<Edge> edges);

/// Gaussian mutual information -0.5 ln(1 - rho^2).
double gaussian_mutual_information(double rho);

/// E_under[ phi_uv ] where phi_uv = log p(x_u,x_v) - log p(x_u) - log p(x_v) is the
/// pairwise log-dependence term of the Gaussian fit `model`, and the expectation
/// is taken under the Gaussian pairwise fit `under`.  Closed form.
double expected_edge_term(const PairwiseGaussianStats& model, const PairwiseGaussianStats& under, int u, int v);

/// Pairwise log-dependence term of `model` evaluated at (xu, xv).
double edge_term(const PairwiseGaussianStats& model, int u, int v, double xu, double xv);
double edge_term(const EdgeParams& e, double xu, double xv);

TreeGraph chow_liu(const PairwiseGaussianStats& stats);

/// Edge weights of the decoupled discriminative problem for the tree that models
/// `own`, against the competing fit `other`: MI_own(u,v) - E_other[phi^own_uv].
Eigen::MatrixXd discriminative_weights(const PairwiseGaussianStats& own, const PairwiseGaussianStats& other);

struct TreePair {
  TreeGraph p;
  TreeGraph q;
};

/// `allowed(u, v)` may restrict candidate edges (e.g. to within-block pairs).
TreePair discriminative_tree_pair(const PairwiseGaussianStats& stats_p, const PairwiseGaussianStats& stats_q,
                                  const std::function<bool(int, int)>& allowed = {});

double tree_log_density(const TreeGraph& tree, const Eigen::Ref<const Eigen::VectorXd>& x);

// ---------------------------------------------------------------------------
// Boosted thickening

struct BoostRound {
  TreeGraph p;
  TreeGraph q;
  double weight = 0.0;          // beta_t
  double weighted_error = 0.0;  // epsilon_t
};

struct ThickenedGraphPair {
  int m = 0;
  std::vector<BoostRound> rounds;
  std::vector<Edge> union_edges_p;
  std::vector<Edge> union_edges_q;
};

struct BoostOptions {
  int rounds = 10;
  /// When > 0, round one only learns edges inside consecutive groups of this
  /// many nodes (disjoint per-block trees); later rounds may join blocks.
  int block_size = 0;
  StatsOptions stats;
};

struct BoostTrace {
  std::vector<double> weighted_errors;   // every attempted round, including a rejected last one
  std::vector<double> training_errors;   // 0/1 error of sign(llr) after each retained round
};

/// Discrete AdaBoost whose weak learners are discriminative Gaussian tree pairs.
/// Samples are rows.  Stops early once epsilon_t >= 0.5 (round discarded) or
/// epsilon_t == 0 (round kept with a capped weight).
ThickenedGraphPair boost_thicken(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q,
                                 const BoostOptions& opts, BoostTrace* trace = nullptr);
ThickenedGraphPair boost_thicken(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q, int rounds);

/// sum_t beta_t [log p_t(x) - log q_t(x)].
double llr(const ThickenedGraphPair& pair, const Eigen::Ref<const Eigen::VectorXd>& x);

/// One-vs-all decision over K pairs sharing one feature vector.
SoftScores infer_class(const std::vector<ThickenedGraphPair>& pairs, const Eigen::Ref<const Eigen::VectorXd>& features);

/// One-vs-all decision where problem i sees its own feature vector (class-specific
/// dictionaries produce different features per problem).
SoftScores infer_class(const std::vector<ThickenedGraphPair>& pairs, const std::vector<Eigen::VectorXd>& features);

/// True when the best class score does not exceed delta.
bool reject_outlier(const SoftScores& scores, double delta);

void write_graph_pair(BinaryWriter& w, const ThickenedGraphPair& pair);
ThickenedGraphPair read_graph_pair(BinaryReader& r);

}  // namespace lsgm
