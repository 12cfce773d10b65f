#include "lsgm/meta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsgm {

MetaSample make_meta_sample(const std::vector<SoftScores>& per_classifier, int label) {
  if (per_classifier.empty()) throw std::invalid_argument("meta sample: no classifier outputs");
  Eigen::Index len = 0;
  for (const auto& s : per_classifier) len += s.per_class.size();
  MetaSample m;
  m.label = label;
  m.features.resize(len);
  Eigen::Index at = 0;
  for (const auto& s : per_classifier) {
    m.features.segment(at, s.per_class.size()) = s.per_class;
    at += s.per_class.size();
  }
  return m;
}

Eigen::VectorXd MetaStandardizer::apply(const Eigen::VectorXd& x) const {
  if (block_len <= 0) return x;
  Eigen::VectorXd out = x;
  for (std::size_t b = 0; b < mean.size(); ++b) {
    auto seg = out.segment(static_cast<Eigen::Index>(b) * block_len, block_len);
    seg = (seg.array() - mean[b]) / sd[b];
  }
  return out;
}

MetaStandardizer fit_standardizer(const std::vector<MetaSample>& samples, int block_len) {
  MetaStandardizer s;
  s.block_len = block_len;
  if (block_len <= 0 || samples.empty()) return s;
  const Eigen::Index len = samples.front().features.size();
  if (len % block_len != 0) throw std::invalid_argument("standardizer: feature length not a multiple of block length");
  const auto blocks = static_cast<std::size_t>(len / block_len);
  s.mean.assign(blocks, 0.0);
  s.sd.assign(blocks, 1.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    double sum = 0, sq = 0, count = 0;
    for (const auto& m : samples) {
      const auto seg = m.features.segment(static_cast<Eigen::Index>(b) * block_len, block_len);
      sum += seg.sum();
      sq += seg.squaredNorm();
      count += static_cast<double>(block_len);
    }
    const double mu = sum / count;
    const double var = std::max(0.0, sq / count - mu * mu);
    s.mean[b] = mu;
    s.sd[b] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

double PairwiseSvm::decision(const Eigen::VectorXd& x, double gamma) const {
  double f = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i) f += coef[i] * rbf_kernel(support.row(i).transpose(), x, gamma);
  return f;
}

namespace {

// Dual: min 0.5 a'Qa - e'a  s.t. y'a = 0, 0 <= a <= C, with Q_ij = y_i y_j K_ij.
PairwiseSvm solve_binary(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double C, double gamma, double tol,
                         int max_iterations) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      Q(i, j) = Q(j, i) = y[i] * y[j] * rbf_kernel(X.row(i).transpose(), X.row(j).transpose(), gamma);

  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);
  auto upper = [&](Eigen::Index t) { return alpha[t] >= C; };
  auto lower = [&](Eigen::Index t) { return alpha[t] <= 0; };

  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    double gmax = -kInf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      if (in_up && -y[t] * G[t] >= gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    }
    double gmax2 = -kInf;
    double best_obj = kInf;
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (!in_low) continue;
      const double ygt = y[t] * G[t];
      gmax2 = std::max(gmax2, ygt);
      const double grad_diff = gmax + ygt;
      if (i >= 0 && grad_diff > 0) {
        double quad = Q(i, i) + Q(t, t) - 2.0 * y[i] * y[t] * Q(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tol) break;

    const double ai = alpha[i], aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    G += Q.col(i) * (alpha[i] - ai) + Q.col(j) * (alpha[j] - aj);
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, free_sum = 0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2;

  PairwiseSvm svm;
  svm.iterations = iter;
  svm.bias = -rho;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0) sv.push_back(t);
  svm.support.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  svm.coef.resize(static_cast<Eigen::Index>(sv.size()));
  svm.alpha.resize(static_cast<Eigen::Index>(sv.size()));
  svm.support_label.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    svm.support.row(row) = X.row(sv[k]);
    svm.alpha[row] = alpha[sv[k]];
    svm.support_label[row] = y[sv[k]];
    svm.coef[row] = alpha[sv[k]] * y[sv[k]];
  }
  return svm;
}

}  // namespace

SvmModel train_svm(const std::vector<MetaSample>& samples, const SvmOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("train_svm: no samples");
  if (!(opts.C > 0)) throw std::invalid_argument("train_svm: C must be positive");
  if (!(opts.tol > 0)) throw std::invalid_argument("train_svm: tol must be positive");
  const Eigen::Index len = samples.front().features.size();
  int max_label = 0;
  for (const auto& s : samples) {
    if (s.features.size() != len) throw std::invalid_argument("train_svm: inconsistent feature lengths");
    if (s.label < 1) throw std::invalid_argument("train_svm: labels must be positive class ids");
    max_label = std::max(max_label, s.label);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t k = 0; k < samples.size(); ++k) by_class[samples[k].label].push_back(k);
  int present = 0;
  for (const auto& c : by_class) present += !c.empty();
  if (present < 2) throw std::invalid_argument("train_svm: need samples from at least two classes");

  SvmModel model;
  model.num_classes = max_label;
  model.feature_len = static_cast<int>(len);
  model.gamma = opts.gamma > 0 ? opts.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(len, 1));
  if (opts.gamma < 0) throw std::invalid_argument("train_svm: gamma must be positive");
  model.C = opts.C;
  model.tol = opts.tol;
  model.standardizer = fit_standardizer(samples, opts.block_len);

  std::vector<Eigen::VectorXd> z;
  z.reserve(samples.size());
  for (const auto& s : samples) z.push_back(model.standardizer.apply(s.features));

  for (int a = 1; a <= max_label; ++a) {
    for (int b = a + 1; b <= max_label; ++b) {
      if (by_class[a].empty() || by_class[b].empty()) continue;
      const auto n = static_cast<Eigen::Index>(by_class[a].size() + by_class[b].size());
      Eigen::MatrixXd X(n, len);
      Eigen::VectorXd y(n);
      Eigen::Index r = 0;
      for (std::size_t k : by_class[a]) { X.row(r) = z[k].transpose(); y[r++] = 1.0; }
      for (std::size_t k : by_class[b]) { X.row(r) = z[k].transpose(); y[r++] = -1.0; }
      PairwiseSvm svm = solve_binary(X, y, opts.C, model.gamma, opts.tol, opts.max_iterations);
      svm.pos = a;
      svm.neg = b;
      model.machines.push_back(std::move(svm));
    }
  }
  return model;
}

SvmModel train_svm(const std::vector<MetaSample>& samples, double C, double gamma, double tol) {
  if (!(gamma > 0)) throw std::invalid_argument("train_svm: gamma must be positive");
  SvmOptions opts;
  opts.C = C;
  opts.gamma = gamma;
  opts.tol = tol;
  return train_svm(samples, opts);
}

int meta_classify(const SvmModel& model, const MetaSample& sample) {
  if (sample.features.size() != model.feature_len) throw std::invalid_argument("meta_classify: feature length mismatch");
  const Eigen::VectorXd z = model.standardizer.apply(sample.features);
  std::vector<int> votes(static_cast<std::size_t>(model.num_classes) + 1, 0);
  for (const auto& m : model.machines) ++votes[m.decision(z, model.gamma) > 0 ? m.pos : m.neg];
  int best = 1;
  for (int k = 2; k <= model.num_classes; ++k)
    if (votes[k] > votes[best]) best = k;
  return best;
}

std::string encode_svm(const SvmModel& model) {
  BinaryWriter w(PayloadKind::SvmModel);
  w.i32(model.num_classes);
  w.i32(model.feature_len);
  w.f64(model.gamma);
  w.f64(model.C);
  w.f64(model.tol);
  w.i32(model.standardizer.block_len);
  w.reals(model.standardizer.mean);
  w.reals(model.standardizer.sd);
  w.u64(model.machines.size());
  for (const auto& m : model.machines) {
    w.i32(m.pos);
    w.i32(m.neg);
    w.f64(m.bias);
    w.matrix(m.support);
    w.vector(m.coef);
    w.vector(m.alpha);
    w.vector(m.support_label);
  }
  return w.bytes();
}

SvmModel decode_svm(std::string bytes) {
  BinaryReader r(std::move(bytes), PayloadKind::SvmModel);
  SvmModel model;
  model.num_classes = r.i32();
  model.feature_len = r.i32();
  model.gamma = r.f64();
  model.C = r.f64();
  model.tol = r.f64();
  model.standardizer.block_len = r.i32();
  model.standardizer.mean = r.reals();
  model.standardizer.sd = r.reals();
  const auto n = r.u64();
  if (n > 1'000'000) throw ContainerError("svm: machine count out of range");
  model.machines.resize(n);
  for (auto& m : model.machines) {
    m.pos = r.i32();
    m.neg = r.i32();
    m.bias = r.f64();
    m.support = r.matrix();
    m.coef = r.vector();
    m.alpha = r.vector();
    m.support_label = r.vector();
  }
  return model;
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) { write_file_bytes(path, encode_svm(model)); }
SvmModel load_svm(const std::filesystem::path& path) { return decode_svm(read_file_bytes(path)); }

}  // namespace lsgm
