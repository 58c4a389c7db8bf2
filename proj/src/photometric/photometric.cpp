#include "hapforge/photometric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hapforge/core/error.hpp"

namespace hapforge::photometric {

HeightMap::HeightMap(Grid<double> heights) : heights_(std::move(heights)) {
  require(!heights_.empty(), ErrorKind::Validation, "height map is empty");
  for (double v : heights_.values())
    require(std::isfinite(v), ErrorKind::Validation, "height map has a non-finite value");
}

HeightMap HeightMap::canonicalized() const {
  Grid<double> out = heights_;
  const double lo = min();
  for (auto& v : out.values()) v -= lo;
  return HeightMap(std::move(out));
}

void GradientField::validate() const {
  require(!gx.empty() && gx.same_shape(gy), ErrorKind::Shape, "gradient components differ in shape");
  for (double v : gx.values()) require(std::isfinite(v), ErrorKind::Validation, "non-finite gx");
  for (double v : gy.values()) require(std::isfinite(v), ErrorKind::Validation, "non-finite gy");
}

void PhotometricCalibration::validate() const {
  require(std::isfinite(albedo) && albedo > 0.0, ErrorKind::Parameter, "albedo must be positive");
  require(std::isfinite(max_slope) && max_slope > 0.0, ErrorKind::Parameter, "max_slope must be positive");
  Eigen::Matrix3d m;
  for (int c = 0; c < 3; ++c) {
    require(std::abs(lights[c].norm() - 1.0) < 1e-9, ErrorKind::Parameter, "light direction is not a unit vector");
    m.row(c) = lights[c].transpose();
  }
  require(std::abs(m.determinant()) > 1e-6, ErrorKind::Parameter, "light directions are linearly dependent");
}

PhotometricCalibration default_calibration() {
  PhotometricCalibration cal;
  const double elevation = std::numbers::pi / 4.0;
  for (int c = 0; c < 3; ++c) {
    const double azimuth = 2.0 * std::numbers::pi * c / 3.0;
    cal.lights[c] = Eigen::Vector3d(std::cos(elevation) * std::cos(azimuth),
                                    std::cos(elevation) * std::sin(azimuth), std::sin(elevation));
  }
  cal.albedo = 1.0;
  return cal;
}

GradientField central_gradients(const HeightMap& h) {
  const std::size_t rows = h.rows();
  const std::size_t cols = h.cols();
  require(rows >= 2 && cols >= 2, ErrorKind::Validation, "height map is too small for gradients");
  GradientField g{Grid<double>(rows, cols), Grid<double>(rows, cols), GradientField::Sampling::PixelCenter};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == 0) g.gx(r, c) = h(r, 1) - h(r, 0);
      else if (c == cols - 1) g.gx(r, c) = h(r, c) - h(r, c - 1);
      else g.gx(r, c) = 0.5 * (h(r, c + 1) - h(r, c - 1));

      if (r == 0) g.gy(r, c) = h(1, c) - h(0, c);
      else if (r == rows - 1) g.gy(r, c) = h(r, c) - h(r - 1, c);
      else g.gy(r, c) = 0.5 * (h(r + 1, c) - h(r - 1, c));
    }
  }
  return g;
}

TactileImage render_tactile(const HeightMap& h, const PhotometricCalibration& cal) {
  cal.validate();
  require(h.rows() >= kMinImageSide && h.cols() >= kMinImageSide, ErrorKind::Validation,
          "height map is smaller than the minimum tactile image size");
  const GradientField g = central_gradients(h);
  TactileImage img(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      const Eigen::Vector3d n = Eigen::Vector3d(-g.gx(r, c), -g.gy(r, c), 1.0).normalized();
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double shade = cal.albedo * std::max(0.0, n.dot(cal.lights[ch]));
        img.at(r, c, ch) = std::clamp(shade, 0.0, 1.0);
      }
    }
  }
  return img;
}

GradientEstimate estimate_gradients(const TactileImage& t, const PhotometricCalibration& cal) {
  cal.validate();
  require(t.rows() >= kMinImageSide && t.cols() >= kMinImageSide, ErrorKind::Validation,
          "tactile image is smaller than 8x8");
  t.validate_unit_range("tactile image");

  Eigen::Matrix3d lights;
  for (int c = 0; c < 3; ++c) lights.row(c) = cal.lights[c].transpose();
  const Eigen::Matrix3d solve = (cal.albedo * lights).inverse();
  // Below this nz the slope magnitude would exceed max_slope.
  const double nz_floor = 1.0 / std::sqrt(1.0 + cal.max_slope * cal.max_slope);

  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  GradientEstimate out{{Grid<double>(rows, cols), Grid<double>(rows, cols), GradientField::Sampling::PixelCenter},
                       Grid<unsigned char>(rows, cols, 0),
                       0};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Eigen::Vector3d intensity(t.at(r, c, 0), t.at(r, c, 1), t.at(r, c, 2));
      const Eigen::Vector3d b = solve * intensity;
      const double norm = b.norm();
      double gx = 0.0;
      double gy = 0.0;
      bool clamped = false;
      if (norm <= 1e-12) {
        clamped = true;
      } else if (b.z() / norm < nz_floor) {
        const double lateral = std::hypot(b.x(), b.y());
        if (lateral > 0.0) {
          gx = -cal.max_slope * b.x() / lateral;
          gy = -cal.max_slope * b.y() / lateral;
        }
        clamped = true;
      } else {
        gx = -b.x() / b.z();
        gy = -b.y() / b.z();
      }
      out.field.gx(r, c) = gx;
      out.field.gy(r, c) = gy;
      if (clamped) {
        out.clamped(r, c) = 1;
        ++out.clamped_count;
      }
    }
  }
  return out;
}

}  // namespace hapforge::photometric
