#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lsgm {

/// Row-major grayscale raster with intensities in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
  double& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }

  const std::vector<double>& pixels() const { return pixels_; }
  std::vector<double>& pixels() { return pixels_; }

  /// Clamp every intensity into [0,1].
  void clamp();

  /// Whole image as one column vector in raster order.
  Eigen::VectorXd vectorized() const;

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Top-left corner plus extent of an M x N block.
struct BlockSpec {
  int row = 0;
  int col = 0;
  int rows = 1;
  int cols = 1;

  bool fits(int width, int height) const {
    return rows >= 1 && cols >= 1 && row >= 0 && col >= 0 && row + rows <= height && col + cols <= width;
  }
  bool operator==(const BlockSpec&) const = default;
};

class PgmError : public std::runtime_error {
 public:
  enum class Kind { MalformedHeader, TruncatedPayload, UnsupportedMagic, Io };
  PgmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

GrayImage load_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(const std::string& bytes);

/// Writes binary P5 with maxval 255.  Intensities are rounded to the nearest level,
/// so load(save(img)) is exact for images already quantized to 1/255 steps.
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
std::string encode_pgm(const GrayImage& img);

/// Area-averaging (box filter) resize to a smaller or equal raster.
GrayImage downsample(const GrayImage& img, int out_w, int out_h);

/// Parameters of the similarity-style warp used to simulate registration errors.
struct WarpParams {
  double angle_deg = 0.0;  // positive turns the content clockwise on screen (rows grow downward)
  double sx = 1.0;
  double sy = 1.0;
  double tx = 0.0;
  double ty = 0.0;
  double fill = 0.0;
};

/// Rotation about the image center, then axis scaling, then translation.  Inverse
/// mapping with bilinear interpolation; the output keeps the source canvas size.
GrayImage warp(const GrayImage& img, const WarpParams& params);
GrayImage warp(const GrayImage& img, double angle_deg, double sx, double sy, double tx, double ty,
               double fill = 0.0);

/// Forward image of source point (x = column, y = row) under `params`.
std::pair<double, double> warp_forward(const WarpParams& params, int width, int height, double x, double y);

/// The distinct pixel indices corrupt_pixels() replaces, sorted ascending.
std::vector<std::size_t> corruption_positions(std::size_t pixel_count, double fraction, std::uint64_t seed);

GrayImage corrupt_pixels(const GrayImage& img, double fraction, std::uint64_t seed);

Eigen::VectorXd extract_block(const GrayImage& img, const BlockSpec& spec);
void paste_block(GrayImage& img, const BlockSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace lsgm
