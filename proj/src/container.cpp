#include "lsgm/container.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace lsgm {

namespace {
constexpr char kMagic[4] = {'L', 'S', 'G', 'M'};
// Guards against absurd element counts in corrupted files.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;
}  // namespace

BinaryWriter::BinaryWriter(PayloadKind kind) {
  buf_.append(kMagic, 4);
  u32(kContainerVersion);
  u32(static_cast<std::uint32_t>(kind));
}

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  buf_.append(s);
}

void BinaryWriter::reals(const std::vector<double>& v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void BinaryWriter::ints(const std::vector<int>& v) {
  u64(v.size());
  for (int x : v) i32(x);
}

void BinaryWriter::vector(const Eigen::VectorXd& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
}

void BinaryWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
}

void BinaryWriter::save(const std::filesystem::path& path) const { write_file_bytes(path, buf_); }

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContainerError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ContainerError("write failed for " + path.string());
}

BinaryReader::BinaryReader(std::string bytes, PayloadKind expected) : buf_(std::move(bytes)) {
  need(4);
  if (buf_.compare(0, 4, kMagic, 4) != 0) throw ContainerError("container: bad magic");
  pos_ = 4;
  if (u32() != kContainerVersion) throw ContainerError("container: unsupported version");
  if (u32() != static_cast<std::uint32_t>(expected)) throw ContainerError("container: unexpected payload kind");
}

BinaryReader BinaryReader::open(const std::filesystem::path& path, PayloadKind expected) {
  return BinaryReader(read_file_bytes(path), expected);
}

void BinaryReader::need(std::size_t n) const {
  if (buf_.size() - pos_ < n) throw ContainerError("container: truncated payload");
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::uint64_t BinaryReader::count() {
  const std::uint64_t n = u64();
  if (n > kMaxElements) throw ContainerError("container: element count out of range");
  return n;
}

std::string BinaryReader::str() {
  const auto n = count();
  need(n);
  std::string s = buf_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::vector<double> BinaryReader::reals() {
  const auto n = count();
  need(n * 8);
  std::vector<double> v(n);
  for (auto& x : v) x = f64();
  return v;
}

std::vector<int> BinaryReader::ints() {
  const auto n = count();
  need(n * 4);
  std::vector<int> v(n);
  for (auto& x : v) x = i32();
  return v;
}

Eigen::VectorXd BinaryReader::vector() {
  const auto n = count();
  need(n * 8);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
  return v;
}

Eigen::MatrixXd BinaryReader::matrix() {
  const auto rows = count();
  const auto cols = count();
  if (cols != 0 && rows > kMaxElements / cols) throw ContainerError("container: matrix too large");
  need(rows * cols * 8);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = f64();
  return m;
}

}  // namespace lsgm
