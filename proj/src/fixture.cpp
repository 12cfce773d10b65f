#include "lsgm/fixture.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "lsgm/random.hpp"

namespace lsgm {

namespace {

struct Blob {
  double row, col;    // centre, reference frame (32 x 28)
  double srow, scol;  // spreads
  double depth;       // signed intensity change
};

double blob_value(const Blob& b, double r, double c) {
  const double dr = (r - b.row) / b.srow;
  const double dc = (c - b.col) / b.scol;
  return b.depth * std::exp(-0.5 * (dr * dr + dc * dc));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Template {
  double face_row, face_col, face_a, face_b, face_level;
  double hairline, hair_depth;
  std::vector<Blob> blobs;
  struct Wave {
    double fr, fc, phase, amp;
  };
  std::vector<Wave> waves;
};

Template make_template(const FixtureSpec& spec, int label) {
  std::mt19937_64 rng(mix_seed(spec.seed, {0x7e3, static_cast<std::uint64_t>(label)}));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double j = spec.geometry_jitter;
  auto jit = [&] { return j * u(rng); };
  auto scale = [&](double spread) { return 1.0 + spread * u(rng); };

  Template t;
  t.face_row = 16.0 + 0.5 * jit();
  t.face_col = 13.5 + 0.3 * jit();
  t.face_a = 15.0 * scale(0.08);
  t.face_b = 11.5 * scale(0.1);
  t.face_level = 0.55 + 0.08 * u(rng);
  t.hairline = 5.0 + 1.5 * u(rng);
  t.hair_depth = 0.25 + 0.1 * u(rng);

  const double eye_row = 11.0 + 0.6 * jit();
  const double eye_gap = 5.5 + 0.6 * jit();
  const double eye_depth = 0.3 * scale(0.3);
  const double eye_sr = 1.3 * scale(0.25), eye_sc = 2.0 * scale(0.25);
  t.blobs.push_back({eye_row + 0.3 * jit(), 13.5 - eye_gap, eye_sr, eye_sc, -eye_depth});
  t.blobs.push_back({eye_row + 0.3 * jit(), 13.5 + eye_gap, eye_sr, eye_sc, -eye_depth});

  const double brow_row = eye_row - 3.0 + 0.4 * jit();
  const double brow_depth = 0.2 * scale(0.4);
  t.blobs.push_back({brow_row + 0.3 * jit(), 13.5 - eye_gap + 0.3 * jit(), 0.8, 2.5 * scale(0.3), -brow_depth});
  t.blobs.push_back({brow_row + 0.3 * jit(), 13.5 + eye_gap + 0.3 * jit(), 0.8, 2.5 * scale(0.3), -brow_depth});

  const double nose_row = 17.0 + 0.5 * jit();
  t.blobs.push_back({nose_row - 1.5, 13.5 + 0.3 * jit(), 3.0 * scale(0.2), 1.0 * scale(0.3), 0.1 * scale(0.4)});
  const double nostril_gap = 1.6 * scale(0.25);
  t.blobs.push_back({nose_row + 1.8, 13.5 - nostril_gap, 0.7, 0.9, -0.15 * scale(0.3)});
  t.blobs.push_back({nose_row + 1.8, 13.5 + nostril_gap, 0.7, 0.9, -0.15 * scale(0.3)});

  t.blobs.push_back({24.0 + 0.6 * jit(), 13.5 + 0.4 * jit(), 1.0 * scale(0.3), 3.5 * scale(0.25), -0.3 * scale(0.3)});
  // Cheek shading differs per class.
  t.blobs.push_back({20.0 + jit(), 6.0 + jit(), 3.0, 2.5, 0.08 * u(rng)});
  t.blobs.push_back({20.0 + jit(), 21.0 + jit(), 3.0, 2.5, 0.08 * u(rng)});

  for (int k = 0; k < 3; ++k) {
    const double freq = 0.04 + 0.08 * (0.5 + 0.5 * u(rng));
    const double dir = M_PI * u(rng);
    t.waves.push_back({freq * std::cos(dir), freq * std::sin(dir), M_PI * u(rng), spec.texture_amplitude * (0.5 + 0.25 * (1 + u(rng)))});
  }
  return t;
}

GrayImage render(const FixtureSpec& spec, const Template& t) {
  GrayImage img(spec.width, spec.height);
  const double sr = 32.0 / spec.height, sc = 28.0 / spec.width;
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      // Pixel centre in the reference frame.
      const double r = (row + 0.5) * sr - 0.5;
      const double c = (col + 0.5) * sc - 0.5;
      const double dr = (r - t.face_row) / t.face_a;
      const double dc = (c - t.face_col) / t.face_b;
      const double inside = sigmoid(6.0 * (1.0 - dr * dr - dc * dc));
      double v = 0.12 + t.face_level * inside;
      v -= t.hair_depth * inside * sigmoid(1.5 * (t.hairline - r));
      for (const auto& b : t.blobs) v += inside * blob_value(b, r, c);
      for (const auto& w : t.waves) v += inside * w.amp * std::cos(2.0 * M_PI * (w.fr * r + w.fc * c) + w.phase);
      img.at(row, col) = v;
    }
  }
  return img;
}

}  // namespace

GrayImage class_template(const FixtureSpec& spec, int label) {
  if (label < 1 || label > spec.classes) throw std::invalid_argument("class_template: label out of range");
  GrayImage img = render(spec, make_template(spec, label));
  img.clamp();
  return img;
}

std::vector<FixtureSample> generate_fixture(const FixtureSpec& spec) {
  if (spec.classes < 1 || spec.samples_per_class < 1 || spec.width < 1 || spec.height < 1)
    throw std::invalid_argument("fixture: counts and dimensions must be positive");
  std::vector<FixtureSample> out;
  out.reserve(static_cast<std::size_t>(spec.classes) * spec.samples_per_class);
  for (int k = 1; k <= spec.classes; ++k) {
    const Template tmpl = make_template(spec, k);
    for (int s = 0; s < spec.samples_per_class; ++s) {
      std::mt19937_64 rng(mix_seed(spec.seed, {0x5a3, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)}));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, spec.noise_sd);
      std::normal_distribution<double> shift(0.0, spec.expression_jitter);
      Template varied = tmpl;
      for (auto& b : varied.blobs) {
        b.row += shift(rng);
        b.col += shift(rng);
      }
      const GrayImage base = render(spec, varied);
      const double gain = spec.gain_min + (spec.gain_max - spec.gain_min) * u(rng);
      const double angle = 2.0 * M_PI * u(rng);
      const double slope = spec.lighting_slope * u(rng);
      GrayImage img = base;
      for (int row = 0; row < spec.height; ++row) {
        for (int col = 0; col < spec.width; ++col) {
          const double x = (col - (spec.width - 1) / 2.0) / spec.width;
          const double y = (row - (spec.height - 1) / 2.0) / spec.height;
          const double light = 1.0 + slope * (std::cos(angle) * x + std::sin(angle) * y) * 2.0;
          img.at(row, col) = img.at(row, col) * gain * light + noise(rng);
        }
      }
      img.clamp();
      out.push_back({k, std::move(img)});
    }
  }
  return out;
}

std::size_t write_fixture(const FixtureSpec& spec, const std::filesystem::path& root) {
  const auto samples = generate_fixture(spec);
  std::vector<int> counter(static_cast<std::size_t>(spec.classes) + 1, 0);
  for (const auto& s : samples) {
    const auto dir = root / ("class_" + std::to_string(s.label));
    std::filesystem::create_directories(dir);
    char name[32];
    std::snprintf(name, sizeof name, "%03d.pgm", counter[s.label]++);
    save_pgm(s.image, dir / name);
  }
  return samples.size();
}

}  // namespace lsgm
