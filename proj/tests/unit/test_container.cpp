#include <doctest.h>

#include <limits>

#include "lsgm/container.hpp"

using namespace lsgm;

TEST_CASE("container round trip") {
  BinaryWriter w(PayloadKind::Dictionary);
  w.u32(7);
  w.u64(1ULL << 40);
  w.i32(-3);
  w.f64(-0.125);
  w.f64(std::numeric_limits<double>::infinity());
  w.str("hello");
  w.reals({1.5, 2.5});
  w.ints({-1, 0, 9});
  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  w.vector(v);
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  w.matrix(m);

  BinaryReader r(w.bytes(), PayloadKind::Dictionary);
  CHECK(r.u32() == 7);
  CHECK(r.u64() == (1ULL << 40));
  CHECK(r.i32() == -3);
  CHECK(r.f64() == -0.125);
  CHECK(r.f64() == std::numeric_limits<double>::infinity());
  CHECK(r.str() == "hello");
  CHECK(r.reals() == std::vector<double>{1.5, 2.5});
  CHECK(r.ints() == std::vector<int>{-1, 0, 9});
  CHECK(r.vector() == v);
  CHECK(r.matrix() == m);
  CHECK(r.done());
}

TEST_CASE("container header layout is little-endian") {
  BinaryWriter w(PayloadKind::SvmModel);
  w.u32(0x01020304);
  const std::string& b = w.bytes();
  REQUIRE(b.size() == 16);
  CHECK(b.substr(0, 4) == "LSGM");
  CHECK(b[4] == 1);  // version
  CHECK(b[8] == 3);  // kind
  CHECK(b[12] == 4);
  CHECK(b[15] == 1);
}

TEST_CASE("container rejects foreign or damaged input") {
  BinaryWriter w(PayloadKind::GraphPairs);
  w.f64(1.0);
  CHECK_THROWS_AS(BinaryReader(w.bytes(), PayloadKind::Dictionary), ContainerError);
  CHECK_THROWS_AS(BinaryReader("XXXX" + w.bytes().substr(4), PayloadKind::GraphPairs), ContainerError);
  std::string bad_version = w.bytes();
  bad_version[4] = 9;
  CHECK_THROWS_AS(BinaryReader(bad_version, PayloadKind::GraphPairs), ContainerError);
  CHECK_THROWS_AS(BinaryReader("LSG", PayloadKind::GraphPairs), ContainerError);

  BinaryReader r(w.bytes().substr(0, w.bytes().size() - 1), PayloadKind::GraphPairs);
  CHECK_THROWS_AS(r.f64(), ContainerError);

  BinaryWriter huge(PayloadKind::Dictionary);
  huge.u64(1ULL << 62);
  BinaryReader hr(huge.bytes(), PayloadKind::Dictionary);
  CHECK_THROWS_AS(hr.reals(), ContainerError);

  CHECK_THROWS_AS(BinaryReader::open("/nonexistent/x.bin", PayloadKind::Dictionary), ContainerError);
}
