#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lsgm/imaging.hpp"

namespace lsgm {

/// Seeded generator of face-like test data: every class gets its own template
/// (a shared face layout with class-specific feature geometry and a
/// low-frequency texture); samples vary by small feature displacements,
/// illumination gain, a lighting slope and additive noise.
struct FixtureSpec {
  int classes = 10;
  int samples_per_class = 30;
  int width = 28;
  int height = 32;
  std::uint64_t seed = 1;
  double texture_amplitude = 0.08;
  double geometry_jitter = 1.0;  // pixels of class-specific feature displacement
  double gain_min = 0.8;
  double gain_max = 1.2;
  double lighting_slope = 0.1;   // max intensity change across the face from side lighting
  double noise_sd = 0.02;
  double expression_jitter = 1.0;  // per-sample feature displacement (pixels, standard deviation)
};

struct FixtureSample {
  int label = 0;  // 1-based
  GrayImage image;
};

GrayImage class_template(const FixtureSpec& spec, int label);

std::vector<FixtureSample> generate_fixture(const FixtureSpec& spec);

/// Writes root/class_<id>/<nnn>.pgm for every sample; returns the sample count.
std::size_t write_fixture(const FixtureSpec& spec, const std::filesystem::path& root);

}  // namespace lsgm
