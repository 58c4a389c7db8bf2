#pragma once

// Height maps from GelSight-style tactile images: a three-light Lambertian forward
// model, its per-pixel inverse, and least-squares integration of the gradients.

#include <array>
#include <cstddef>

#include <Eigen/Core>

#include "hapforge/core/grid.hpp"
#include "hapforge/core/image.hpp"

namespace hapforge::photometric {

inline constexpr std::size_t kMinImageSide = 8;

/// Surface relief in normalized height units per pixel pitch.
class HeightMap {
public:
  HeightMap() = default;
  /// Throws Validation for empty or non-finite input. Does not canonicalize.
  explicit HeightMap(Grid<double> heights);

  const Grid<double>& heights() const noexcept { return heights_; }
  std::size_t rows() const noexcept { return heights_.rows(); }
  std::size_t cols() const noexcept { return heights_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return heights_(r, c); }

  double min() const { return grid_min(heights_); }
  double max() const { return grid_max(heights_); }
  double range() const { return max() - min(); }

  /// Shift so that the lowest point is exactly 0.
  HeightMap canonicalized() const;
  bool is_canonical() const { return min() == 0.0; }

private:
  Grid<double> heights_;
};

/// Slopes dz/dx (along columns) and dz/dy (along rows).
struct GradientField {
  enum class Sampling {
    PixelCenter,        // point estimates at pixel centres (photometric output)
    ForwardDifference,  // gx(r,c) ~ z(r,c+1) - z(r,c), gy(r,c) ~ z(r+1,c) - z(r,c)
  };

  Grid<double> gx;
  Grid<double> gy;
  Sampling sampling = Sampling::PixelCenter;

  std::size_t rows() const noexcept { return gx.rows(); }
  std::size_t cols() const noexcept { return gx.cols(); }
  void validate() const;
};

struct PhotometricCalibration {
  /// One light per colour channel (R, G, B); unit vectors pointing towards the light.
  std::array<Eigen::Vector3d, 3> lights;
  double albedo = 1.0;
  /// Gradients are clamped to this magnitude at grazing normals.
  double max_slope = 5.0;

  /// Throws Parameter for non-unit or linearly dependent lights, or albedo <= 0.
  void validate() const;
};

/// Three lights at 45 degrees elevation, 120 degrees apart in azimuth, albedo 1.
PhotometricCalibration default_calibration();

/// Central differences inside the map, one-sided at the borders.
GradientField central_gradients(const HeightMap& h);

/// Lambertian shading, channel_c = albedo * max(0, n . L_c), clamped to [0, 1].
TactileImage render_tactile(const HeightMap& h, const PhotometricCalibration& cal);

struct GradientEstimate {
  GradientField field;
  /// 1 where the normal was grazing/back-facing and the slope got clamped.
  Grid<unsigned char> clamped;
  std::size_t clamped_count = 0;
};

/// Per-pixel solve of the three-light system followed by (gx, gy) = (-nx/nz, -ny/nz).
GradientEstimate estimate_gradients(const TactileImage& t, const PhotometricCalibration& cal);

enum class Boundary {
  Mirror,    // Neumann / even-symmetric extension, solved with a DCT
  Periodic,  // cyclic domain, solved with a DFT
};

struct IntegrationOptions {
  Boundary boundary = Boundary::Mirror;
};

/// Least-squares surface whose forward differences best match the gradients,
/// solved exactly in the frequency domain; the result is canonicalized (min = 0).
HeightMap integrate_heights(const GradientField& g, const IntegrationOptions& options = {});

}  // namespace hapforge::photometric
