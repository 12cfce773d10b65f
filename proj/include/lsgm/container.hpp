#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lsgm {

// Every cached artifact is a little-endian stream:
//   magic "LSGM" | u32 format version | u32 payload kind | payload
// Reals are IEEE-754 binary64, integers are fixed width, vectors and matrices
// carry their dimensions as u64 ahead of the elements (matrices column-major).

enum class PayloadKind : std::uint32_t {
  Dictionary = 1,
  GraphPairs = 2,
  SvmModel = 3,
};

inline constexpr std::uint32_t kContainerVersion = 1;

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BinaryWriter {
 public:
  explicit BinaryWriter(PayloadKind kind);

  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void reals(const std::vector<double>& v);
  void ints(const std::vector<int>& v);
  void vector(const Eigen::VectorXd& v);
  void matrix(const Eigen::MatrixXd& m);

  const std::string& bytes() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  /// Validates magic, version and kind.
  BinaryReader(std::string bytes, PayloadKind expected);
  static BinaryReader open(const std::filesystem::path& path, PayloadKind expected);

  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  std::string str();
  std::vector<double> reals();
  std::vector<int> ints();
  Eigen::VectorXd vector();
  Eigen::MatrixXd matrix();

  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const;
  std::uint64_t count();

  std::string buf_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace lsgm
