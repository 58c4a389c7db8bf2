#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "hapforge/core/grid.hpp"

namespace hapforge {

/// H x W x 3 image with channels interleaved, values nominally in [0, 1].
class RgbImage {
public:
  RgbImage() = default;
  RgbImage(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols * 3, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t r, std::size_t c, std::size_t ch) { return data_[(r * cols_ + c) * 3 + ch]; }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return data_[(r * cols_ + c) * 3 + ch];
  }

  std::vector<double>& raw() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  Grid<double> channel(std::size_t ch) const;
  void set_channel(std::size_t ch, const Grid<double>& values);

  /// Throws Validation unless every value is finite and inside [0, 1].
  void validate_unit_range(const char* what) const;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Both sensor modalities share the RGB layout; the aliases document intent.
using VisualImage = RgbImage;
using TactileImage = RgbImage;

inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

Grid<double> luminance(const RgbImage& image);

/// Bilinear resize using the align-corners convention (corner samples map onto corner samples).
Grid<double> resize_bilinear(const Grid<double>& src, std::size_t rows, std::size_t cols);
RgbImage resize_bilinear(const RgbImage& src, std::size_t rows, std::size_t cols);

}  // namespace hapforge
