#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hapforge/core/error.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/dataset.hpp"

namespace hapforge::dataset {

void AugmentPolicy::validate() const {
  require(std::isfinite(rotation_range_deg) && rotation_range_deg >= 0.0, ErrorKind::Parameter,
          "rotation range must be non-negative");
  require(flip_probability >= 0.0 && flip_probability <= 1.0, ErrorKind::Parameter,
          "flip probability must lie in [0,1]");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorKind::Parameter,
          "noise sigma must be non-negative");
}

Augmentation draw_augmentation(const AugmentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  Rng rng(derive_seed(seed, "augment"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Augmentation a;
  // Draws happen unconditionally so each field uses a fixed slot of the stream.
  const double angle = unit(rng);
  const double fh = unit(rng);
  const double fv = unit(rng);
  a.rotation_deg = policy.rotation_range_deg * (2.0 * angle - 1.0);
  a.flip_horizontal = policy.allow_horizontal_flip && fh < policy.flip_probability;
  a.flip_vertical = policy.allow_vertical_flip && fv < policy.flip_probability;
  a.noise_sigma = policy.noise_sigma;
  a.noise_seed = rng();
  return a;
}

RgbImage flip_horizontal(const RgbImage& img) {
  RgbImage out(img.rows(), img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(r, img.cols() - 1 - c, ch);
  return out;
}

RgbImage flip_vertical(const RgbImage& img) {
  RgbImage out(img.rows(), img.cols());
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = img.at(img.rows() - 1 - r, c, ch);
  return out;
}

namespace {

// Symmetric reflection about the border samples: -1 -> 1, n -> n-2.
double reflect(double x, std::size_t n) {
  if (n == 1) return 0.0;
  const double period = 2.0 * static_cast<double>(n - 1);
  x = std::fmod(std::fabs(x), period);
  return x > static_cast<double>(n - 1) ? period - x : x;
}

double sample_bilinear(const Grid<double>& g, double y, double x) {
  y = reflect(y, g.rows());
  x = reflect(x, g.cols());
  const auto r0 = std::min(static_cast<std::size_t>(std::floor(y)), g.rows() - 1);
  const auto c0 = std::min(static_cast<std::size_t>(std::floor(x)), g.cols() - 1);
  const std::size_t r1 = std::min(r0 + 1, g.rows() - 1);
  const std::size_t c1 = std::min(c0 + 1, g.cols() - 1);
  const double ty = y - static_cast<double>(r0);
  const double tx = x - static_cast<double>(c0);
  const double top = g(r0, c0) * (1.0 - tx) + g(r0, c1) * tx;
  const double bottom = g(r1, c0) * (1.0 - tx) + g(r1, c1) * tx;
  return top * (1.0 - ty) + bottom * ty;
}

// Quarter turns counter-clockwise, in [0, 4), if `degrees` is an exact multiple of 90.
int quarter_turns(double degrees) {
  const double q = degrees / 90.0;
  if (q != std::round(q)) return -1;
  const long long k = static_cast<long long>(std::round(q));
  return static_cast<int>(((k % 4) + 4) % 4);
}

}  // namespace

Grid<double> rotate(const Grid<double>& img, double degrees) {
  require(!img.empty(), ErrorKind::Validation, "cannot rotate an empty image");
  require(std::isfinite(degrees), ErrorKind::Parameter, "rotation angle must be finite");
  const std::size_t n_rows = img.rows();
  const std::size_t n_cols = img.cols();
  Grid<double> out(n_rows, n_cols);

  const int turns = quarter_turns(degrees);
  if (turns >= 0 && n_rows == n_cols) {
    const std::size_t last = n_cols - 1;
    for (std::size_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) {
        switch (turns) {
          case 0: out(r, c) = img(r, c); break;
          case 1: out(r, c) = img(c, last - r); break;
          case 2: out(r, c) = img(last - r, last - c); break;
          default: out(r, c) = img(last - c, r); break;
        }
      }
    return out;
  }

  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cy = 0.5 * static_cast<double>(n_rows - 1);
  const double cx = 0.5 * static_cast<double>(n_cols - 1);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double y = static_cast<double>(r) - cy;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double x = static_cast<double>(c) - cx;
      // Inverse map: rows grow downwards, so a visual CCW turn samples the source at
      // (x cos - y sin, x sin + y cos).
      const double sx = cs * x - sn * y + cx;
      const double sy = sn * x + cs * y + cy;
      out(r, c) = sample_bilinear(img, sy, sx);
    }
  }
  return out;
}

RgbImage rotate(const RgbImage& img, double degrees) {
  RgbImage out(img.rows(), img.cols());
  for (std::size_t ch = 0; ch < 3; ++ch) out.set_channel(ch, rotate(img.channel(ch), degrees));
  return out;
}

RgbImage apply_augmentation(const RgbImage& img, const Augmentation& aug) {
  require(std::isfinite(aug.noise_sigma) && aug.noise_sigma >= 0.0, ErrorKind::Parameter,
          "noise sigma must be non-negative");
  if (aug.is_identity()) return img;
  RgbImage out = img;
  if (aug.flip_horizontal) out = flip_horizontal(out);
  if (aug.flip_vertical) out = flip_vertical(out);
  if (aug.rotation_deg != 0.0) out = rotate(out, aug.rotation_deg);
  if (aug.noise_sigma > 0.0) {
    Rng rng(aug.noise_seed);
    std::normal_distribution<double> noise(0.0, aug.noise_sigma);
    for (auto& v : out.raw()) v += noise(rng);
  }
  for (auto& v : out.raw()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

RgbImage augment(const RgbImage& img, const AugmentPolicy& policy, std::uint64_t seed) {
  return apply_augmentation(img, draw_augmentation(policy, seed));
}

}  // namespace hapforge::dataset
