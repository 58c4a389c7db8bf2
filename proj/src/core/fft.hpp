#pragma once

// Thin RAII layer over FFTW. Plans are created with FFTW_ESTIMATE so results are
// bit-stable run to run; planner calls are serialized, execution is per-instance.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

#include "hapforge/core/grid.hpp"

namespace hapforge::fft {

/// 1-D real <-> half-complex transform of fixed length. Not shareable across threads.
class RealFft {
public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// Unnormalized forward DFT of `in` (zero-padded to size()).
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  /// Inverse DFT including the 1/n factor; the imaginary parts of DC/Nyquist are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Orthogonal-basis cosine transform pair on a 2-D grid (DCT-II forward, DCT-III inverse),
/// normalized so that inverse(forward(x)) == x.
Grid<double> dct2(const Grid<double>& x);
Grid<double> idct2(const Grid<double>& coeffs);

/// 2-D real-to-complex DFT; output has cols/2+1 columns.
Grid<std::complex<double>> rfft2(const Grid<double>& x);
/// Inverse of rfft2 including the 1/(rows*cols) factor.
Grid<double> irfft2(const Grid<std::complex<double>>& spectrum, std::size_t cols);

}  // namespace hapforge::fft
