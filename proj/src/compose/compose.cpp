#include "hapforge/compose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "hapforge/core/error.hpp"

namespace hapforge::compose {

void NormalizationContext::validate() const {
  require(std::isfinite(global_min) && std::isfinite(global_max) && global_max > global_min,
          ErrorKind::Degenerate, "normalization range is empty (max <= min)");
}

ScaledHeightMap scale_height_map(const photometric::HeightMap& h, double f_avg,
                                 std::string source_object_id) {
  require(std::isfinite(f_avg) && f_avg > 0.0, ErrorKind::Parameter,
          "mean friction must be positive to scale a height map");
  ScaledHeightMap out{h.heights(), std::move(source_object_id)};
  for (auto& v : out.values.values()) v *= f_avg;
  return out;
}

NormalizationContext build_normalization(std::span<const ScaledHeightMap> batch) {
  require(!batch.empty(), ErrorKind::Validation, "normalization batch is empty");
  NormalizationContext ctx{std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity(), batch.size()};
  for (const auto& m : batch) {
    require(!m.values.empty(), ErrorKind::Validation, "scaled height map is empty");
    for (double v : m.values.values()) {
      require(std::isfinite(v), ErrorKind::Validation, "scaled height map has a non-finite value");
      ctx.global_min = std::min(ctx.global_min, v);
      ctx.global_max = std::max(ctx.global_max, v);
    }
  }
  ctx.validate();
  return ctx;
}

std::uint8_t map_to_pixel(double value, const NormalizationContext& ctx) {
  const double v = std::clamp(value, ctx.global_min, ctx.global_max);
  const double span = static_cast<double>(kPixelMax - kPixelMin);
  const double scaled = span * (v - ctx.global_min) / (ctx.global_max - ctx.global_min) + kPixelMin;
  const double rounded = std::floor(scaled + 0.5);
  return static_cast<std::uint8_t>(std::clamp(rounded, double{kPixelMin}, double{kPixelMax}));
}

FrictionImageResult to_friction_image(const ScaledHeightMap& m, const NormalizationContext& ctx) {
  ctx.validate();
  FrictionImageResult out{{Grid<std::uint8_t>(m.values.rows(), m.values.cols())}, 0};
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double v = m.values.data()[i];
    if (v < ctx.global_min || v > ctx.global_max) ++out.clamped_count;
    out.image.pixels.data()[i] = map_to_pixel(v, ctx);
  }
  if (out.clamped_count > 0)
    spdlog::warn("friction image '{}': {} pixel(s) outside the normalization range were clamped",
                 m.source_object_id, out.clamped_count);
  return out;
}

std::vector<FrictionImage> render_batch(std::span<const ScaledHeightMap> batch,
                                        NormalizationContext* context_out) {
  const NormalizationContext ctx = build_normalization(batch);
  std::vector<FrictionImage> out;
  out.reserve(batch.size());
  for (const auto& m : batch) out.push_back(to_friction_image(m, ctx).image);
  if (context_out != nullptr) *context_out = ctx;
  return out;
}

FrictionImage normalize_per_image(const Grid<double>& m) {
  ScaledHeightMap single{m, {}};
  return render_batch(std::span<const ScaledHeightMap>(&single, 1)).front();
}

std::vector<FrictionImage> grey_baseline(std::span<const VisualImage> batch) {
  std::vector<ScaledHeightMap> grey;
  grey.reserve(batch.size());
  for (const auto& x : batch) {
    x.validate_unit_range("visual image");
    grey.push_back({luminance(x), {}});
  }
  return render_batch(grey);
}

FrictionImage resample_to_display(const FrictionImage& img, DisplaySize target, ResampleMode mode) {
  require(target.width > 0 && target.height > 0, ErrorKind::Parameter, "display size must be non-zero");
  require(!img.pixels.empty(), ErrorKind::Validation, "friction image is empty");
  if (img.rows() == target.height && img.cols() == target.width) return img;

  FrictionImage out{Grid<std::uint8_t>(target.height, target.width)};
  if (mode == ResampleMode::Nearest) {
    for (std::size_t r = 0; r < target.height; ++r) {
      const std::size_t sr = r * img.rows() / target.height;
      for (std::size_t c = 0; c < target.width; ++c)
        out.pixels(r, c) = img.pixels(sr, c * img.cols() / target.width);
    }
    return out;
  }

  Grid<double> src(img.rows(), img.cols());
  for (std::size_t i = 0; i < src.size(); ++i) src.data()[i] = img.pixels.data()[i];
  const Grid<double> dst = resize_bilinear(src, target.height, target.width);
  for (std::size_t i = 0; i < dst.size(); ++i)
    out.pixels.data()[i] = static_cast<std::uint8_t>(std::clamp(std::floor(dst.data()[i] + 0.5), 0.0, 255.0));
  return out;
}

}  // namespace hapforge::compose
