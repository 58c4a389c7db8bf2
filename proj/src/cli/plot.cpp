#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hapforge/cli.hpp"
#include "hapforge/core/error.hpp"

namespace hapforge::cli {
namespace {

void line(Grid<std::uint8_t>& g, long x0, long y0, long x1, long y1, std::uint8_t value) {
  const long dx = std::labs(x1 - x0), dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    if (x0 >= 0 && y0 >= 0 && x0 < static_cast<long>(g.cols()) && y0 < static_cast<long>(g.rows()))
      g(static_cast<std::size_t>(y0), static_cast<std::size_t>(x0)) = value;
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Grid<std::uint8_t> plot_trace(const signals::FrictionTrace& trace, std::size_t width, std::size_t height) {
  require(width >= 16 && height >= 16, ErrorKind::Parameter, "plot must be at least 16x16");
  Grid<std::uint8_t> g(height, width, 255);
  const long margin = 8;
  const long w = static_cast<long>(width) - 2 * margin, h = static_cast<long>(height) - 2 * margin;
  line(g, margin, margin, margin, margin + h, 160);
  line(g, margin, margin + h, margin + w, margin + h, 160);

  const auto s = trace.samples();
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  auto px = [&](std::size_t i) {
    return margin + (s.size() > 1 ? static_cast<long>(std::lround(static_cast<double>(i) * w / (s.size() - 1))) : 0);
  };
  auto py = [&](double v) { return margin + h - static_cast<long>(std::lround((v - lo) / (hi - lo) * h)); };
  for (std::size_t i = 1; i < s.size(); ++i) line(g, px(i - 1), py(s[i - 1]), px(i), py(s[i]), 0);
  if (s.size() == 1) g(static_cast<std::size_t>(py(s[0])), static_cast<std::size_t>(px(0))) = 0;
  return g;
}

Grid<std::uint8_t> plot_spectrogram(const signals::SpectrogramImage& image, std::size_t cell_rows,
                                    std::size_t cell_cols) {
  require(cell_rows >= 1 && cell_cols >= 1, ErrorKind::Parameter, "cell size must be positive");
  const Grid<double>& p = image.pixels;
  Grid<std::uint8_t> g(p.rows() * cell_rows, p.cols() * cell_cols);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const std::size_t bin = p.rows() - 1 - r / cell_rows;
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const double v = std::clamp(p(bin, c / cell_cols), 0.0, 1.0);
      g(r, c) = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
    }
  }
  return g;
}

Grid<std::uint8_t> plot_height(const photometric::HeightMap& h) {
  const photometric::GradientField grad = photometric::central_gradients(h);
  const double lo = h.min(), range = h.range();
  // Light from the upper left, 45 degrees up.
  const double lx = -0.5, ly = -0.5, lz = std::sqrt(0.5);
  Grid<std::uint8_t> g(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) {
      const double nx = -grad.gx(r, c), ny = -grad.gy(r, c);
      const double shade = std::max(0.0, (nx * lx + ny * ly + lz) / std::sqrt(nx * nx + ny * ny + 1.0));
      const double level = range > 0.0 ? (h(r, c) - lo) / range : 0.5;
      g(r, c) = static_cast<std::uint8_t>(std::floor(std::clamp(0.5 * level + 0.5 * shade, 0.0, 1.0) * 255.0 + 0.5));
    }
  return g;
}

}  // namespace hapforge::cli
