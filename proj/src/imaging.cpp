#include "lsgm/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lsgm {

GrayImage::GrayImage(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("GrayImage: negative dimensions");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) throw std::invalid_argument("GrayImage: negative dimensions");
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("GrayImage: pixel count does not match width*height");
}

void GrayImage::clamp() {
  for (double& v : pixels_) v = std::clamp(v, 0.0, 1.0);
}

Eigen::VectorXd GrayImage::vectorized() const {
  return Eigen::Map<const Eigen::VectorXd>(pixels_.data(), static_cast<Eigen::Index>(pixels_.size()));
}

// ---------------------------------------------------------------------------
// PGM

namespace {

class PgmCursor {
 public:
  explicit PgmCursor(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Returns false at end of input; throws `kind` on a non-digit token.
  bool next_uint(long& out, PgmError::Kind kind, const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) return false;
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_])))
      throw PgmError(kind, std::string("pgm: expected unsigned integer for ") + what);
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw PgmError(kind, std::string("pgm: value too large for ") + what);
      ++pos_;
    }
    out = v;
    return true;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  unsigned char byte_at(std::size_t i) const { return static_cast<unsigned char>(bytes_[pos_ + i]); }
  bool at_space() const { return pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_])); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes) {
  using Kind = PgmError::Kind;
  if (bytes.size() < 2 || bytes[0] != 'P') throw PgmError(Kind::UnsupportedMagic, "pgm: missing magic number");
  const char magic = bytes[1];
  if (magic != '2' && magic != '5')
    throw PgmError(Kind::UnsupportedMagic, std::string("pgm: unsupported magic P") + magic);

  PgmCursor cur(bytes);
  cur.advance(2);
  long width = 0, height = 0, maxval = 0;
  if (!cur.next_uint(width, Kind::MalformedHeader, "width") || !cur.next_uint(height, Kind::MalformedHeader, "height") ||
      !cur.next_uint(maxval, Kind::MalformedHeader, "maxval"))
    throw PgmError(Kind::MalformedHeader, "pgm: header ended early");
  if (width <= 0 || height <= 0) throw PgmError(Kind::MalformedHeader, "pgm: zero dimension");
  if (maxval < 1 || maxval > 65535) throw PgmError(Kind::MalformedHeader, "pgm: maxval outside 1..65535");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> pixels(count);
  const double denom = static_cast<double>(maxval);

  if (magic == '5') {
    if (!cur.at_space()) throw PgmError(Kind::MalformedHeader, "pgm: missing whitespace after maxval");
    cur.advance(1);
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (cur.remaining() < count * bpp) throw PgmError(Kind::TruncatedPayload, "pgm: payload shorter than width*height");
    for (std::size_t i = 0; i < count; ++i) {
      long v = bpp == 1 ? cur.byte_at(i) : (cur.byte_at(2 * i) << 8) | cur.byte_at(2 * i + 1);
      if (v > maxval) throw PgmError(Kind::MalformedHeader, "pgm: sample exceeds maxval");
      pixels[i] = static_cast<double>(v) / denom;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      long v = 0;
      if (!cur.next_uint(v, Kind::TruncatedPayload, "sample"))
        throw PgmError(Kind::TruncatedPayload, "pgm: payload shorter than width*height");
      if (v > maxval) throw PgmError(Kind::MalformedHeader, "pgm: sample exceeds maxval");
      pixels[i] = static_cast<double>(v) / denom;
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError(PgmError::Kind::Io, "pgm: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pgm(ss.str());
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (double v : img.pixels()) {
    const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  return out;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError(PgmError::Kind::Io, "pgm: cannot write " + path.string());
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PgmError(PgmError::Kind::Io, "pgm: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

// Row i holds the fractional overlap of output cell i with each source cell,
// normalised so every row sums to one.
Eigen::MatrixXd box_weights(int src, int dst) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dst, src);
  const double step = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * step;
    const double hi = (i + 1) * step;
    for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
      const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (overlap > 0) w(i, s) = overlap / step;
    }
  }
  return w;
}

}  // namespace

GrayImage downsample(const GrayImage& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("downsample: target dimensions must be positive");
  if (out_w > img.width() || out_h > img.height())
    throw std::invalid_argument("downsample: target larger than source");
  if (out_w == img.width() && out_h == img.height()) return img;

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> src(img.pixels().data(), img.height(), img.width());
  const RowMatrix out = box_weights(img.height(), out_h) * src * box_weights(img.width(), out_w).transpose();

  GrayImage result(out_w, out_h, std::vector<double>(out.data(), out.data() + out.size()));
  result.clamp();
  return result;
}

std::pair<double, double> warp_forward(const WarpParams& p, int width, int height, double x, double y) {
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double theta = p.angle_deg * M_PI / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double dx = x - cx, dy = y - cy;
  const double rx = c * dx - s * dy;
  const double ry = s * dx + c * dy;
  return {p.sx * rx + cx + p.tx, p.sy * ry + cy + p.ty};
}

namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

GrayImage warp(const GrayImage& img, const WarpParams& p) {
  if (!(p.sx > 0) || !(p.sy > 0)) throw std::invalid_argument("warp: scale factors must be positive");
  if (p.fill < 0 || p.fill > 1) throw std::invalid_argument("warp: fill must lie in [0,1]");

  const int w = img.width(), h = img.height();
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double theta = p.angle_deg * M_PI / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);

  GrayImage out(w, h, p.fill);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      // Undo translation and scaling, then rotate back.
      const double ux = (col - cx - p.tx) / p.sx;
      const double uy = (row - cy - p.ty) / p.sy;
      const double x = snap(c * ux + s * uy + cx);
      const double y = snap(-s * ux + c * uy + cy);
      if (x < 0 || y < 0 || x > w - 1 || y > h - 1) continue;

      const int x0 = static_cast<int>(std::floor(x));
      const int y0 = static_cast<int>(std::floor(y));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = x - x0, fy = y - y0;
      const double top = (1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
      const double bottom = (1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
      out.at(row, col) = (1 - fy) * top + fy * bottom;
    }
  }
  out.clamp();
  return out;
}

GrayImage warp(const GrayImage& img, double angle_deg, double sx, double sy, double tx, double ty, double fill) {
  return warp(img, WarpParams{angle_deg, sx, sy, tx, ty, fill});
}

// ---------------------------------------------------------------------------
// Corruption

std::vector<std::size_t> corruption_positions(std::size_t pixel_count, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("corrupt_pixels: fraction must lie in [0,1]");
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pixel_count)));

  std::vector<std::size_t> order(pixel_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pixel_count - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

GrayImage corrupt_pixels(const GrayImage& img, double fraction, std::uint64_t seed) {
  const auto positions = corruption_positions(img.size(), fraction, seed);
  GrayImage out = img;
  // Values come from an independent stream so the position draw stays a pure function of the seed.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t idx : positions) out.pixels()[idx] = unit(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Blocks

Eigen::VectorXd extract_block(const GrayImage& img, const BlockSpec& spec) {
  if (!spec.fits(img.width(), img.height())) throw std::out_of_range("extract_block: block outside image bounds");
  Eigen::VectorXd v(static_cast<Eigen::Index>(spec.rows) * spec.cols);
  Eigen::Index k = 0;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) v[k++] = img.at(spec.row + r, spec.col + c);
  return v;
}

void paste_block(GrayImage& img, const BlockSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (!spec.fits(img.width(), img.height())) throw std::out_of_range("paste_block: block outside image bounds");
  if (values.size() != static_cast<Eigen::Index>(spec.rows) * spec.cols)
    throw std::invalid_argument("paste_block: value count does not match block size");
  Eigen::Index k = 0;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) img.at(spec.row + r, spec.col + c) = values[k++];
}

}  // namespace lsgm
