#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "helpers.hpp"
#include "lsgm/solver.hpp"

using namespace lsgm;
using lsgm::test::make_dictionary;

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
  return m;
}

// Residuals straight from the masked-coefficient definition.
Eigen::VectorXd masked_residuals(const LocalDictionary& d, const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  Eigen::VectorXd err = Eigen::VectorXd::Zero(d.cols());
  for (Eigen::Index c = 0; c < d.cols(); ++c)
    if (d.col_class[c] == kErrorClass) err[c] = x[c];
  Eigen::VectorXd r(d.num_classes);
  for (int k = 1; k <= d.num_classes; ++k) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(d.cols());
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      if (d.col_class[c] == k) delta[c] = x[c];
    r[k - 1] = (y - d.atoms * err - d.atoms * delta).norm();
  }
  return r;
}

}  // namespace

TEST_CASE("omp on an identity dictionary") {
  const auto d = make_dictionary(Eigen::MatrixXd::Identity(4, 4), {1, 1, 2, 2}, 2);
  Eigen::VectorXd y(4);
  y << 0.0, 3.0, 0.0, -1.0;
  const auto code = omp(d, y, 1e-9, 4);
  CHECK(code.support == std::vector<int>{1, 3});
  CHECK(code.coeffs[1] == doctest::Approx(3.0));
  CHECK(code.coeffs[3] == doctest::Approx(-1.0));
  CHECK(code.residual_norm < 1e-8);
  CHECK(code.iterations == 2);

  SUBCASE("sparsity cap") {
    const auto c1 = omp(d, y, 0.0, 1);
    CHECK(c1.support == std::vector<int>{1});
    CHECK(c1.residual_norm == doctest::Approx(1.0));
  }
  SUBCASE("epsilon already met") {
    const auto c0 = omp(d, y, 10.0, 4);
    CHECK(c0.support.empty());
    CHECK(c0.coeffs.isZero());
    CHECK(c0.residual_norm == doctest::Approx(y.norm()));
  }
  SUBCASE("ties go to the lowest index") {
    Eigen::VectorXd t = Eigen::VectorXd::Constant(4, 1.0);
    CHECK(omp(d, t, 0.0, 1).support == std::vector<int>{0});
  }
  SUBCASE("zero signal selects nothing") {
    CHECK(omp(d, Eigen::VectorXd::Zero(4), 0.0, 4).support.empty());
  }
}

TEST_CASE("omp on an orthonormal dictionary recovers exact coefficients") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd q = gaussian_matrix(6, 6, rng).householderQr().householderQ();
  const auto d = make_dictionary(q, {1, 1, 1, 2, 2, 2}, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x[2] = 2.0;
  x[5] = -0.5;
  const Eigen::VectorXd y = d.atoms * x;
  const auto code = omp(d, y, 1e-9, 6);
  CHECK((code.coeffs - x).norm() < 1e-8);
  CHECK(code.support == std::vector<int>{2, 5});
}

TEST_CASE("omp recovers planted sparse supports") {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const auto d = make_dictionary(gaussian_matrix(64, 256, rng), std::vector<int>(256, 1), 1);
    std::vector<int> idx(256);
    for (int i = 0; i < 256; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    std::bernoulli_distribution sign(0.5);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(256);
    for (int i = 0; i < 4; ++i) x[idx[i]] = mag(rng) * (sign(rng) ? 1 : -1);
    const Eigen::VectorXd y = d.atoms * x;
    const auto code = omp(d, y, 1e-9 * y.norm(), 4);
    const std::set<int> got(code.support.begin(), code.support.end());
    const std::set<int> want(idx.begin(), idx.begin() + 4);
    if (got == want && (code.coeffs - x).norm() < 1e-6) ++recovered;
  }
  CHECK(recovered >= 95);
}

TEST_CASE("omp invariants on random problems") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    const auto d = make_dictionary(gaussian_matrix(16, 40, rng), std::vector<int>(40, 1), 1);
    const Eigen::VectorXd y = gaussian_matrix(16, 1, rng).col(0);
    const auto code = omp(d, y, 0.0, 12);
    CHECK(static_cast<int>(code.support.size()) <= 12);
    CHECK(std::set<int>(code.support.begin(), code.support.end()).size() == code.support.size());
    CHECK((y - d.atoms * code.coeffs).norm() == doctest::Approx(code.residual_norm).epsilon(1e-9));
    CHECK(code.residual_norm <= y.norm() + 1e-12);
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      if (std::find(code.support.begin(), code.support.end(), c) == code.support.end()) CHECK(code.coeffs[c] == 0.0);
    // Residual never grows with more iterations.
    double prev = y.norm();
    for (int k = 1; k <= 12; ++k) {
      const double r = omp(d, y, 0.0, k).residual_norm;
      CHECK(r <= prev + 1e-12);
      prev = r;
    }
  }
}

TEST_CASE("omp skip mask and degenerate columns") {
  const auto d = make_dictionary(Eigen::MatrixXd::Identity(3, 3), {1, 2, 2}, 2);
  Eigen::VectorXd y(3);
  y << 5.0, 1.0, 0.0;
  std::vector<char> skip{1, 0, 0};
  OmpOptions opts;
  opts.max_sparsity = 3;
  opts.skip = &skip;
  const auto code = omp(d, y, opts);
  CHECK(std::find(code.support.begin(), code.support.end(), 0) == code.support.end());
  CHECK(code.residual_norm == doctest::Approx(5.0));

  std::vector<char> short_mask{1};
  opts.skip = &short_mask;
  CHECK_THROWS_AS(omp(d, y, opts), std::invalid_argument);

  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(3, 3);
  z.col(0).setZero();
  const auto dz = make_dictionary(z, {1, 1, 2}, 2);
  CHECK(omp(dz, y, 0.0, 3).coeffs[0] == 0.0);

  CHECK_THROWS_AS(omp(d, Eigen::VectorXd::Zero(2), 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(omp(d, y, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(omp(d, y, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(omp(make_dictionary(Eigen::MatrixXd::Zero(3, 2), {1, 2}, 2), y, 0.0, 1), std::invalid_argument);
}

TEST_CASE("class residuals") {
  const auto d = make_dictionary(Eigen::MatrixXd::Identity(3, 3), {1, 2, 1}, 2);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  const auto code = omp(d, y, 0.0, 3);
  const Eigen::VectorXd r = class_residuals(d, y, code);
  CHECK(r[0] == doctest::Approx(2.0));
  CHECK(r[1] == doctest::Approx(std::sqrt(10.0)));

  SUBCASE("error atoms are removed from the signal before every class") {
    auto e = with_error_atoms(make_dictionary(Eigen::MatrixXd::Identity(3, 2), {1, 2}, 2));
    Eigen::VectorXd ye(3);
    ye << 1.0, 0.0, 4.0;
    const auto c = omp(e, ye, 0.0, 3);
    const Eigen::VectorXd re = class_residuals(e, ye, c);
    CHECK((re - masked_residuals(e, ye, c.coeffs)).norm() < 1e-9);
  }

  SUBCASE("agreement with the masked definition on random problems") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      std::vector<int> labels;
      for (int c = 0; c < 30; ++c) labels.push_back(1 + c % 3);
      const auto rd = with_error_atoms(make_dictionary(gaussian_matrix(12, 30, rng), labels, 3));
      const Eigen::VectorXd ry = gaussian_matrix(12, 1, rng).col(0);
      const auto c = omp(rd, ry, 0.0, 8);
      const Eigen::VectorXd rr = class_residuals(rd, ry, c);
      CHECK((rr - masked_residuals(rd, ry, c.coeffs)).norm() < 1e-9);
      for (Eigen::Index k = 0; k < rr.size(); ++k) CHECK(rr[k] >= 0.0);
    }
  }

  SUBCASE("a code on one class only leaves other classes at the signal norm") {
    const auto d2 = make_dictionary(Eigen::MatrixXd::Identity(3, 3), {1, 2, 2}, 2);
    Eigen::VectorXd y2(3);
    y2 << 2.0, 0.0, 0.0;
    const Eigen::VectorXd r2 = class_residuals(d2, y2, omp(d2, y2, 0.0, 3));
    CHECK(r2[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r2[1] == doctest::Approx(2.0));
  }
}

TEST_CASE("sparsity concentration index") {
  const auto d = make_dictionary(Eigen::MatrixXd::Identity(5, 5), {1, 1, 2, 3, 0}, 3);
  SparseCode code;
  code.coeffs = Eigen::VectorXd::Zero(5);

  code.coeffs << 0.3, -0.3, 0.2, 0.2, 9.0;
  CHECK(sci(code, d, 3) == doctest::Approx(0.4));

  code.coeffs << 1.0, 0.0, 0.0, 0.0, 0.0;
  CHECK(sci(code, d, 3) == doctest::Approx(1.0));

  code.coeffs << 0.5, 0.0, 0.5, -0.5, 0.0;
  CHECK(sci(code, d, 3) == doctest::Approx(0.0));

  code.coeffs << 0.0, 0.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(sci(code, d, 3), UndefinedSciError);
  CHECK_THROWS(sci(code, d, 1));

  // Range over random codes.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    for (Eigen::Index i = 0; i < 5; ++i) code.coeffs[i] = n(rng);
    const double s = sci(code, d, 3);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}
