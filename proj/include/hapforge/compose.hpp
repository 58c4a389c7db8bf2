#pragma once

// Friction-image composition: height maps are scaled by the mean friction of their
// object and the whole batch is mapped affinely onto the display's 0..255 range.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hapforge/core/grid.hpp"
#include "hapforge/core/image.hpp"
#include "hapforge/photometric.hpp"

namespace hapforge::compose {

inline constexpr int kPixelMin = 0;
inline constexpr int kPixelMax = 255;

struct DisplaySize {
  std::size_t width = 1280;
  std::size_t height = 800;
};

struct FrictionImage {
  Grid<std::uint8_t> pixels;

  std::size_t rows() const noexcept { return pixels.rows(); }
  std::size_t cols() const noexcept { return pixels.cols(); }
  friend bool operator==(const FrictionImage&, const FrictionImage&) = default;
};

struct ScaledHeightMap {
  Grid<double> values;
  std::string source_object_id;
};

struct NormalizationContext {
  double global_min = 0.0;
  double global_max = 1.0;
  std::size_t object_count = 0;

  /// Throws Degenerate unless global_max > global_min (both finite).
  void validate() const;
};

/// Element-wise f_avg * h. Throws Parameter for f_avg <= 0 (or non-finite).
ScaledHeightMap scale_height_map(const photometric::HeightMap& h, double f_avg,
                                 std::string source_object_id = {});

/// Extrema over every pixel of every map. Throws Validation for an empty batch and
/// Degenerate when all values are identical.
NormalizationContext build_normalization(std::span<const ScaledHeightMap> batch);

/// round-half-up(255 * (v - min) / (max - min)), v clamped into [min, max] first.
std::uint8_t map_to_pixel(double value, const NormalizationContext& ctx);

struct FrictionImageResult {
  FrictionImage image;
  /// Pixels that fell outside the context and were clamped.
  std::size_t clamped_count = 0;
};

FrictionImageResult to_friction_image(const ScaledHeightMap& m, const NormalizationContext& ctx);

/// Normalizes a whole batch against its own extrema.
std::vector<FrictionImage> render_batch(std::span<const ScaledHeightMap> batch,
                                        NormalizationContext* context_out = nullptr);

/// Normalization against the image's own extrema; positive rescaling of m cancels out.
FrictionImage normalize_per_image(const Grid<double>& m);

/// Grey-scale visual baseline: luma-weighted mean of RGB, then batch min-max mapped to 0..255.
std::vector<FrictionImage> grey_baseline(std::span<const VisualImage> batch);

enum class ResampleMode { Nearest, Bilinear };

FrictionImage resample_to_display(const FrictionImage& img, DisplaySize target,
                                  ResampleMode mode = ResampleMode::Bilinear);

}  // namespace hapforge::compose
