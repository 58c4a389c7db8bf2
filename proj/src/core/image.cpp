#include "hapforge/core/image.hpp"

#include <cmath>
#include <string>

#include "hapforge/core/error.hpp"

namespace hapforge {

Grid<double> RgbImage::channel(std::size_t ch) const {
  Grid<double> out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(r, c) = at(r, c, ch);
  return out;
}

void RgbImage::set_channel(std::size_t ch, const Grid<double>& values) {
  require(values.rows() == rows_ && values.cols() == cols_, ErrorKind::Shape,
          "channel shape does not match image");
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) at(r, c, ch) = values(r, c);
}

void RgbImage::validate_unit_range(const char* what) const {
  require(!data_.empty(), ErrorKind::Validation, std::string(what) + " is empty");
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      fail(ErrorKind::Validation, std::string(what) + " has a value outside [0,1]");
  }
}

Grid<double> luminance(const RgbImage& image) {
  Grid<double> out(image.rows(), image.cols());
  for (std::size_t r = 0; r < image.rows(); ++r)
    for (std::size_t c = 0; c < image.cols(); ++c)
      out(r, c) = kLumaWeights[0] * image.at(r, c, 0) + kLumaWeights[1] * image.at(r, c, 1) +
                  kLumaWeights[2] * image.at(r, c, 2);
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double t;
};

Tap tap(std::size_t dst, std::size_t dst_size, std::size_t src_size) {
  if (dst_size == 1 || src_size == 1) return {0, 0, 0.0};
  const double pos = static_cast<double>(dst) * static_cast<double>(src_size - 1) /
                     static_cast<double>(dst_size - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo >= src_size - 1) return {src_size - 1, src_size - 1, 0.0};
  return {lo, lo + 1, pos - static_cast<double>(lo)};
}

}  // namespace

Grid<double> resize_bilinear(const Grid<double>& src, std::size_t rows, std::size_t cols) {
  require(rows > 0 && cols > 0, ErrorKind::Parameter, "resize target must be non-empty");
  require(!src.empty(), ErrorKind::Validation, "resize source is empty");
  if (src.rows() == rows && src.cols() == cols) return src;
  Grid<double> out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Tap tr = tap(r, rows, src.rows());
    for (std::size_t c = 0; c < cols; ++c) {
      const Tap tc = tap(c, cols, src.cols());
      const double top = src(tr.lo, tc.lo) * (1.0 - tc.t) + src(tr.lo, tc.hi) * tc.t;
      const double bottom = src(tr.hi, tc.lo) * (1.0 - tc.t) + src(tr.hi, tc.hi) * tc.t;
      out(r, c) = top * (1.0 - tr.t) + bottom * tr.t;
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& src, std::size_t rows, std::size_t cols) {
  if (src.rows() == rows && src.cols() == cols) return src;
  RgbImage out(rows, cols);
  for (std::size_t ch = 0; ch < 3; ++ch) out.set_channel(ch, resize_bilinear(src.channel(ch), rows, cols));
  return out;
}

}  // namespace hapforge
