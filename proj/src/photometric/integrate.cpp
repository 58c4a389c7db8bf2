// Least-squares gradient integration.
//
// The unknown surface z minimizes
//   sum (z[r][c+1] - z[r][c] - px[r][c])^2 + sum (z[r+1][c] - z[r][c] - py[r][c])^2,
// whose normal equations are a discrete Poisson problem L z = div(p). With mirror
// boundaries L is the Neumann Laplacian, diagonalized by the DCT-II (this is the
// even-symmetric extension of the Frankot-Chellappa projection); with periodic
// boundaries it is the cyclic Laplacian, diagonalized by the DFT.

#include <cmath>
#include <complex>
#include <numbers>

#include "core/fft.hpp"
#include "hapforge/core/error.hpp"
#include "hapforge/photometric.hpp"

namespace hapforge::photometric {
namespace {

struct Staggered {
  Grid<double> px;
  Grid<double> py;
};

// Point gradients are averaged onto the half-pixel positions the difference model uses.
Staggered to_staggered(const GradientField& g, bool periodic) {
  const std::size_t rows = g.rows();
  const std::size_t cols = g.cols();
  Staggered s{Grid<double>(rows, cols, 0.0), Grid<double>(rows, cols, 0.0)};
  const bool center = g.sampling == GradientField::Sampling::PixelCenter;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool has_right = periodic || c + 1 < cols;
      const bool has_down = periodic || r + 1 < rows;
      const std::size_t cn = (c + 1) % cols;
      const std::size_t rn = (r + 1) % rows;
      if (has_right) s.px(r, c) = center ? 0.5 * (g.gx(r, c) + g.gx(r, cn)) : g.gx(r, c);
      if (has_down) s.py(r, c) = center ? 0.5 * (g.gy(r, c) + g.gy(rn, c)) : g.gy(r, c);
    }
  }
  return s;
}

// Backward divergence of the staggered field; the result has zero mean when solvable.
Grid<double> divergence(const Staggered& s, bool periodic) {
  const std::size_t rows = s.px.rows();
  const std::size_t cols = s.px.cols();
  Grid<double> d(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double v = s.px(r, c) + s.py(r, c);
      if (c > 0) v -= s.px(r, c - 1);
      else if (periodic) v -= s.px(r, cols - 1);
      if (r > 0) v -= s.py(r - 1, c);
      else if (periodic) v -= s.py(rows - 1, c);
      d(r, c) = v;
    }
  }
  return d;
}

Grid<double> solve_mirror(const Grid<double>& div) {
  const std::size_t rows = div.rows();
  const std::size_t cols = div.cols();
  Grid<double> coeffs = fft::dct2(div);
  for (std::size_t k = 0; k < rows; ++k) {
    const double ly = 2.0 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(rows)) - 2.0;
    for (std::size_t l = 0; l < cols; ++l) {
      const double lx = 2.0 * std::cos(std::numbers::pi * static_cast<double>(l) / static_cast<double>(cols)) - 2.0;
      const double lambda = lx + ly;
      coeffs(k, l) = (k == 0 && l == 0) ? 0.0 : coeffs(k, l) / lambda;
    }
  }
  return fft::idct2(coeffs);
}

Grid<double> solve_periodic(const Grid<double>& div) {
  const std::size_t rows = div.rows();
  const std::size_t cols = div.cols();
  auto spectrum = fft::rfft2(div);
  for (std::size_t k = 0; k < spectrum.rows(); ++k) {
    const double ly = 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(rows)) - 2.0;
    for (std::size_t l = 0; l < spectrum.cols(); ++l) {
      const double lx = 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(l) / static_cast<double>(cols)) - 2.0;
      const double lambda = lx + ly;
      spectrum(k, l) = (k == 0 && l == 0) ? std::complex<double>{} : spectrum(k, l) / lambda;
    }
  }
  return fft::irfft2(spectrum, cols);
}

}  // namespace

HeightMap integrate_heights(const GradientField& g, const IntegrationOptions& options) {
  g.validate();
  const bool periodic = options.boundary == Boundary::Periodic;
  if (g.rows() == 1 && g.cols() == 1) return HeightMap(Grid<double>(1, 1, 0.0));
  const Grid<double> div = divergence(to_staggered(g, periodic), periodic);
  Grid<double> z = periodic ? solve_periodic(div) : solve_mirror(div);
  return HeightMap(std::move(z)).canonicalized();
}

}  // namespace hapforge::photometric
