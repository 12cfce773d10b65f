#pragma once

// Independent Gaussian and tree-enumeration oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lsgm/graphs.hpp"

namespace lsgm::oracle {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline Eigen::MatrixXd random_cov(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = n(rng);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(m, m);
}

inline Eigen::VectorXd random_mean(int m, std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = n(rng);
  return v;
}

inline PairwiseGaussianStats stats_from(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  PairwiseGaussianStats s;
  s.m = static_cast<int>(mean.size());
  s.mean = mean;
  s.var = cov.diagonal();
  const Eigen::VectorXd inv_sd = s.var.array().rsqrt();
  s.corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  s.weight_total = 1.0;
  return s;
}

inline Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::MatrixXd L = cov.llt().matrixL();
  Eigen::MatrixXd out(n, mean.size());
  Eigen::VectorXd e(mean.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < e.size(); ++k) e[k] = z(rng);
    out.row(i) = (mean + L * e).transpose();
  }
  return out;
}

// Precision of the forest-structured Gaussian that keeps the node and edge marginals of cov.
inline Eigen::MatrixXd forest_precision(const Eigen::MatrixXd& cov, const std::vector<Edge>& edges) {
  const auto m = cov.rows();
  std::vector<int> degree(static_cast<std::size_t>(m), 0);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (const Edge& e : edges) {
    ++degree[e.u];
    ++degree[e.v];
    Eigen::Matrix2d s;
    s << cov(e.u, e.u), cov(e.u, e.v), cov(e.v, e.u), cov(e.v, e.v);
    const Eigen::Matrix2d inv = s.inverse();
    J(e.u, e.u) += inv(0, 0);
    J(e.u, e.v) += inv(0, 1);
    J(e.v, e.u) += inv(1, 0);
    J(e.v, e.v) += inv(1, 1);
  }
  for (Eigen::Index i = 0; i < m; ++i) J(i, i) += (1 - degree[i]) / cov(i, i);
  return J;
}

// E_{N(mu, sigma)}[log N(x; mean_t, J^-1)]
inline double expected_log_density(const Eigen::VectorXd& mean_t, const Eigen::MatrixXd& J, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& sigma) {
  const Eigen::VectorXd d = mu - mean_t;
  const double logdet = std::log(J.determinant());
  return -0.5 * (J.rows() * kLog2Pi - logdet + (J * sigma).trace() + d.dot(J * d));
}

inline double gaussian_log_density(const Eigen::VectorXd& mean, const Eigen::MatrixXd& J, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - mean;
  return -0.5 * (J.rows() * kLog2Pi - std::log(J.determinant()) + d.dot(J * d));
}

inline std::vector<Edge> prufer_tree(const std::vector<int>& seq, int m) {
  std::vector<int> degree(static_cast<std::size_t>(m), 1);
  for (int s : seq) ++degree[s];
  std::vector<Edge> edges;
  for (int s : seq)
    for (int leaf = 0; leaf < m; ++leaf)
      if (degree[leaf] == 1) {
        edges.push_back({std::min(leaf, s), std::max(leaf, s)});
        --degree[leaf];
        --degree[s];
        break;
      }
  int a = -1;
  for (int i = 0; i < m; ++i)
    if (degree[i] == 1) {
      if (a < 0) a = i;
      else edges.push_back({a, i});
    }
  std::sort(edges.begin(), edges.end());
  return edges;
}

inline std::vector<std::vector<Edge>> all_spanning_trees(int m) {
  std::vector<std::vector<Edge>> out;
  std::vector<int> seq(static_cast<std::size_t>(m - 2), 0);
  while (true) {
    out.push_back(prufer_tree(seq, m));
    int i = 0;
    while (i < m - 2 && ++seq[i] == m) seq[i++] = 0;
    if (i == m - 2) break;
  }
  return out;
}

inline std::vector<std::vector<Edge>> all_forests(int m) {
  std::vector<Edge> all;
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v) all.push_back({u, v});
  std::vector<std::vector<Edge>> out;
  for (unsigned mask = 0; mask < (1u << all.size()); ++mask) {
    std::vector<int> comp(static_cast<std::size_t>(m));
    std::iota(comp.begin(), comp.end(), 0);
    std::vector<Edge> edges;
    bool acyclic = true;
    for (std::size_t k = 0; k < all.size() && acyclic; ++k) {
      if (!(mask >> k & 1u)) continue;
      const int a = comp[all[k].u], b = comp[all[k].v];
      if (a == b) acyclic = false;
      for (int& c : comp)
        if (c == b) c = a;
      edges.push_back(all[k]);
    }
    if (acyclic) out.push_back(edges);
  }
  return out;
}

}  // namespace lsgm::oracle
