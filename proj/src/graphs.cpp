#include "lsgm/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lsgm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

// ---------------------------------------------------------------------------
// Stats

PairwiseGaussianStats fit_pairwise_stats(const Eigen::MatrixXd& samples, const Eigen::VectorXd& weights,
                                         const StatsOptions& opts) {
  if (samples.rows() < 2) throw std::invalid_argument("fit_pairwise_stats: need at least two samples");
  if (weights.size() != samples.rows()) throw std::invalid_argument("fit_pairwise_stats: one weight per sample");
  if ((weights.array() < 0).any() || !weights.allFinite())
    throw std::invalid_argument("fit_pairwise_stats: weights must be finite and non-negative");
  const double total = weights.sum();
  if (!(total > 0)) throw std::invalid_argument("fit_pairwise_stats: weights sum to zero");

  const Eigen::VectorXd w = weights / total;
  PairwiseGaussianStats s;
  s.m = static_cast<int>(samples.cols());
  s.weight_total = total;
  s.mean = samples.transpose() * w;
  const Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * w.asDiagonal() * centered;
  s.var = cov.diagonal().array().max(0.0) + opts.ridge;

  const Eigen::VectorXd inv_sd = s.var.array().rsqrt();
  s.corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  s.corr = s.corr.cwiseMax(-opts.corr_clamp).cwiseMin(opts.corr_clamp);
  s.corr.diagonal().setOnes();
  return s;
}

PairwiseGaussianStats fit_pairwise_stats(const Eigen::MatrixXd& samples, const StatsOptions& opts) {
  return fit_pairwise_stats(samples, Eigen::VectorXd::Ones(samples.rows()), opts);
}

Eigen::MatrixXd covariance(const PairwiseGaussianStats& stats) {
  const Eigen::VectorXd sd = stats.var.array().sqrt();
  return sd.asDiagonal() * stats.corr * sd.asDiagonal();
}

// ---------------------------------------------------------------------------
// Spanning trees

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

struct WeightedEdge {
  double w;
  Edge e;
};

std::vector<Edge> kruskal(int m, std::vector<WeightedEdge> cand, bool prune) {
  std::sort(cand.begin(), cand.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    if (a.w != b.w) return a.w > b.w;
    return a.e < b.e;
  });
  DisjointSets sets(m);
  std::vector<Edge> out;
  for (const auto& c : cand) {
    if (prune && c.w <= 0) break;
    if (sets.unite(c.e.u, c.e.v)) {
      out.push_back(c.e);
      if (static_cast<int>(out.size()) == m - 1) break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<WeightedEdge> candidates(int m, const Eigen::MatrixXd& weights) {
  if (weights.rows() < m || weights.cols() < m) throw std::invalid_argument("mwst: weight matrix smaller than m");
  std::vector<WeightedEdge> cand;
  cand.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v) {
      const double w = weights(u, v);
      if (std::isnan(w)) throw std::invalid_argument("mwst: NaN edge weight");
      if (w == -std::numeric_limits<double>::infinity()) continue;
      cand.push_back({w, {u, v}});
    }
  return cand;
}

}  // namespace

std::vector<Edge> mwst(int m, const Eigen::MatrixXd& weights) {
  if (m < 1) throw std::invalid_argument("mwst: need at least one node");
  return kruskal(m, candidates(m, weights), true);
}

std::vector<Edge> mwst(int m, const std::function<double(int, int)>& weight) {
  if (m < 1) throw std::invalid_argument("mwst: need at least one node");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v) w(u, v) = weight(u, v);
  return mwst(m, w);
}

std::vector<Edge> mwst_unpruned(int m, const Eigen::MatrixXd& weights) {
  if (m < 1) throw std::invalid_argument("mwst: need at least one node");
  return kruskal(m, candidates(m, weights), false);
}

// ---------------------------------------------------------------------------
// Gaussian trees

TreeGraph make_tree(const PairwiseGaussianStats& stats, std::vector<Edge> edges) {
  TreeGraph t;
  t.m = stats.m;
  t.node_mean = stats.mean;
  t.node_var = stats.var;
  t.edges = std::move(edges);
  t.edge_params.reserve(t.edges.size());
  for (const Edge& e : t.edges)
    t.edge_params.push_back(
        {stats.mean[e.u], stats.mean[e.v], stats.var[e.u], stats.var[e.v], stats.corr(e.u, e.v)});
  return t;
}

double gaussian_mutual_information(double rho) { return -0.5 * std::log1p(-rho * rho); }

double edge_term(const EdgeParams& e, double xu, double xv) {
  const double rho = e.corr;
  const double one_m = 1.0 - rho * rho;
  const double zu = (xu - e.mean_u) / std::sqrt(e.var_u);
  const double zv = (xv - e.mean_v) / std::sqrt(e.var_v);
  return -0.5 * std::log(one_m) - (rho * rho * (zu * zu + zv * zv) - 2.0 * rho * zu * zv) / (2.0 * one_m);
}

double edge_term(const PairwiseGaussianStats& model, int u, int v, double xu, double xv) {
  return edge_term(EdgeParams{model.mean[u], model.mean[v], model.var[u], model.var[v], model.corr(u, v)}, xu, xv);
}

double expected_edge_term(const PairwiseGaussianStats& model, const PairwiseGaussianStats& under, int u, int v) {
  const double rho = model.corr(u, v);
  const double one_m = 1.0 - rho * rho;
  const double su = std::sqrt(model.var[u]), sv = std::sqrt(model.var[v]);
  const double du = under.mean[u] - model.mean[u];
  const double dv = under.mean[v] - model.mean[v];
  // Second moments of the standardised coordinates under `under`.
  const double ezu2 = (under.var[u] + du * du) / (su * su);
  const double ezv2 = (under.var[v] + dv * dv) / (sv * sv);
  const double ezuv = (under.corr(u, v) * std::sqrt(under.var[u] * under.var[v]) + du * dv) / (su * sv);
  return -0.5 * std::log(one_m) - (rho * rho * (ezu2 + ezv2) - 2.0 * rho * ezuv) / (2.0 * one_m);
}

TreeGraph chow_liu(const PairwiseGaussianStats& stats) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(stats.m, stats.m);
  for (int u = 0; u < stats.m; ++u)
    for (int v = u + 1; v < stats.m; ++v) w(u, v) = gaussian_mutual_information(stats.corr(u, v));
  return make_tree(stats, mwst(stats.m, w));
}

Eigen::MatrixXd discriminative_weights(const PairwiseGaussianStats& own, const PairwiseGaussianStats& other) {
  if (own.m != other.m) throw std::invalid_argument("discriminative_weights: node counts differ");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(own.m, own.m);
  for (int u = 0; u < own.m; ++u)
    for (int v = u + 1; v < own.m; ++v)
      w(u, v) = gaussian_mutual_information(own.corr(u, v)) - expected_edge_term(own, other, u, v);
  return w;
}

TreePair discriminative_tree_pair(const PairwiseGaussianStats& stats_p, const PairwiseGaussianStats& stats_q,
                                  const std::function<bool(int, int)>& allowed) {
  if (stats_p.m != stats_q.m) throw std::invalid_argument("discriminative_tree_pair: node counts differ");
  const int m = stats_p.m;
  Eigen::MatrixXd wp = discriminative_weights(stats_p, stats_q);
  Eigen::MatrixXd wq = discriminative_weights(stats_q, stats_p);
  if (allowed) {
    constexpr double forbid = -std::numeric_limits<double>::infinity();
    for (int u = 0; u < m; ++u)
      for (int v = u + 1; v < m; ++v)
        if (!allowed(u, v)) wp(u, v) = wq(u, v) = forbid;
  }
  return {make_tree(stats_p, mwst(m, wp)), make_tree(stats_q, mwst(m, wq))};
}

double tree_log_density(const TreeGraph& tree, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != tree.m) throw std::invalid_argument("tree_log_density: feature length differs from node count");
  const Eigen::ArrayXd d = x.array() - tree.node_mean.array();
  double total = -0.5 * (tree.m * kLog2Pi + tree.node_var.array().log().sum() + (d * d / tree.node_var.array()).sum());
  for (std::size_t k = 0; k < tree.edges.size(); ++k)
    total += edge_term(tree.edge_params[k], x[tree.edges[k].u], x[tree.edges[k].v]);
  return total;
}

// ---------------------------------------------------------------------------
// Boosting

namespace {

void merge_edges(std::vector<Edge>& into, const std::vector<Edge>& add) {
  std::set<Edge> s(into.begin(), into.end());
  s.insert(add.begin(), add.end());
  into.assign(s.begin(), s.end());
}

double tree_llr(const BoostRound& r, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return tree_log_density(r.p, x) - tree_log_density(r.q, x);
}

}  // namespace

ThickenedGraphPair boost_thicken(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q,
                                 const BoostOptions& opts, BoostTrace* trace) {
  if (opts.rounds < 1) throw std::invalid_argument("boost_thicken: rounds must be at least 1");
  if (samples_p.rows() == 0 || samples_q.rows() == 0) throw std::invalid_argument("boost_thicken: empty sample set");
  if (samples_p.cols() != samples_q.cols()) throw std::invalid_argument("boost_thicken: feature lengths differ");

  const Eigen::Index np = samples_p.rows(), nq = samples_q.rows(), n = np + nq;
  const int m = static_cast<int>(samples_p.cols());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd label(n);
  label.head(np).setOnes();
  label.tail(nq).setConstant(-1.0);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);

  auto row = [&](Eigen::Index i) -> Eigen::VectorXd {
    return i < np ? Eigen::VectorXd(samples_p.row(i).transpose()) : Eigen::VectorXd(samples_q.row(i - np).transpose());
  };

  ThickenedGraphPair out;
  out.m = m;
  for (int t = 0; t < opts.rounds; ++t) {
    const auto stats_p = fit_pairwise_stats(samples_p, w.head(np), opts.stats);
    const auto stats_q = fit_pairwise_stats(samples_q, w.tail(nq), opts.stats);
    std::function<bool(int, int)> allowed;
    if (t == 0 && opts.block_size > 0) {
      const int b = opts.block_size;
      allowed = [b](int u, int v) { return u / b == v / b; };
    }
    TreePair trees = discriminative_tree_pair(stats_p, stats_q, allowed);
    BoostRound round{std::move(trees.p), std::move(trees.q), 0.0, 0.0};

    Eigen::VectorXd margin(n);
    Eigen::VectorXd h(n);
    double eps = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      margin[i] = tree_llr(round, row(i));
      h[i] = margin[i] >= 0 ? 1.0 : -1.0;
      if (h[i] != label[i]) eps += w[i];
    }
    if (trace) trace->weighted_errors.push_back(eps);
    if (eps >= 0.5) break;

    const double capped = std::max(eps, 1e-10);
    round.weight = 0.5 * std::log((1.0 - capped) / capped);
    round.weighted_error = eps;
    merge_edges(out.union_edges_p, round.p.edges);
    merge_edges(out.union_edges_q, round.q.edges);
    score += round.weight * margin;
    out.rounds.push_back(std::move(round));

    if (trace) {
      Eigen::Index wrong = 0;
      for (Eigen::Index i = 0; i < n; ++i) wrong += ((score[i] >= 0 ? 1.0 : -1.0) != label[i]);
      trace->training_errors.push_back(static_cast<double>(wrong) / static_cast<double>(n));
    }
    if (eps == 0.0) break;

    const double beta = out.rounds.back().weight;
    for (Eigen::Index i = 0; i < n; ++i) w[i] *= std::exp(-beta * label[i] * h[i]);
    w /= w.sum();
  }
  return out;
}

ThickenedGraphPair boost_thicken(const Eigen::MatrixXd& samples_p, const Eigen::MatrixXd& samples_q, int rounds) {
  BoostOptions opts;
  opts.rounds = rounds;
  return boost_thicken(samples_p, samples_q, opts);
}

double llr(const ThickenedGraphPair& pair, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != pair.m) throw std::invalid_argument("llr: feature length differs from node count");
  double total = 0.0;
  for (const auto& r : pair.rounds) total += r.weight * tree_llr(r, x);
  return total;
}

SoftScores infer_class(const std::vector<ThickenedGraphPair>& pairs, const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (pairs.empty()) throw std::invalid_argument("infer_class: no graph pairs");
  SoftScores s;
  s.per_class.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (features.size() != pairs[i].m) throw std::invalid_argument("infer_class: feature length mismatch");
    s.per_class[static_cast<Eigen::Index>(i)] = llr(pairs[i], features);
  }
  s.decision = argmax_class(s.per_class);
  return s;
}

SoftScores infer_class(const std::vector<ThickenedGraphPair>& pairs, const std::vector<Eigen::VectorXd>& features) {
  if (pairs.empty()) throw std::invalid_argument("infer_class: no graph pairs");
  if (features.size() != pairs.size()) throw std::invalid_argument("infer_class: one feature vector per class");
  SoftScores s;
  s.per_class.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (features[i].size() != pairs[i].m) throw std::invalid_argument("infer_class: feature length mismatch");
    s.per_class[static_cast<Eigen::Index>(i)] = llr(pairs[i], features[i]);
  }
  s.decision = argmax_class(s.per_class);
  return s;
}

bool reject_outlier(const SoftScores& scores, double delta) {
  if (scores.per_class.size() == 0) return true;
  return scores.per_class.maxCoeff() <= delta;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_edges(BinaryWriter& w, const std::vector<Edge>& edges) {
  w.u64(edges.size());
  for (const Edge& e : edges) {
    w.i32(e.u);
    w.i32(e.v);
  }
}

std::vector<Edge> read_edges(BinaryReader& r, int m) {
  const auto n = r.u64();
  if (n > static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m)) throw ContainerError("graph: edge count too large");
  std::vector<Edge> edges(n);
  for (auto& e : edges) {
    e.u = r.i32();
    e.v = r.i32();
    if (e.u < 0 || e.v >= m || e.u >= e.v) throw ContainerError("graph: invalid edge");
  }
  return edges;
}

void write_tree(BinaryWriter& w, const TreeGraph& t) {
  w.i32(t.m);
  w.vector(t.node_mean);
  w.vector(t.node_var);
  write_edges(w, t.edges);
  for (const auto& p : t.edge_params) {
    w.f64(p.mean_u);
    w.f64(p.mean_v);
    w.f64(p.var_u);
    w.f64(p.var_v);
    w.f64(p.corr);
  }
}

TreeGraph read_tree(BinaryReader& r) {
  TreeGraph t;
  t.m = r.i32();
  t.node_mean = r.vector();
  t.node_var = r.vector();
  if (t.node_mean.size() != t.m || t.node_var.size() != t.m) throw ContainerError("graph: node parameter size mismatch");
  t.edges = read_edges(r, t.m);
  t.edge_params.resize(t.edges.size());
  for (auto& p : t.edge_params) {
    p.mean_u = r.f64();
    p.mean_v = r.f64();
    p.var_u = r.f64();
    p.var_v = r.f64();
    p.corr = r.f64();
  }
  return t;
}

}  // namespace

void write_graph_pair(BinaryWriter& w, const ThickenedGraphPair& pair) {
  w.i32(pair.m);
  w.u64(pair.rounds.size());
  for (const auto& round : pair.rounds) {
    w.f64(round.weight);
    w.f64(round.weighted_error);
    write_tree(w, round.p);
    write_tree(w, round.q);
  }
  write_edges(w, pair.union_edges_p);
  write_edges(w, pair.union_edges_q);
}

ThickenedGraphPair read_graph_pair(BinaryReader& r) {
  ThickenedGraphPair pair;
  pair.m = r.i32();
  const auto n = r.u64();
  if (n > 1'000'000) throw ContainerError("graph: round count out of range");
  pair.rounds.resize(n);
  for (auto& round : pair.rounds) {
    round.weight = r.f64();
    round.weighted_error = r.f64();
    round.p = read_tree(r);
    round.q = read_tree(r);
  }
  pair.union_edges_p = read_edges(r, pair.m);
  pair.union_edges_q = read_edges(r, pair.m);
  return pair;
}

}  // namespace lsgm
