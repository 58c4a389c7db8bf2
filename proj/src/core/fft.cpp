#include "core/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "hapforge/core/error.hpp"

namespace hapforge::fft {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> allocate(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
public:
  template <typename Make>
  explicit Plan(Make&& make) {
    std::lock_guard lock(planner_mutex());
    plan_ = make();
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    if (plan_ != nullptr) fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  void execute() const { fftw_execute(plan_); }

private:
  fftw_plan plan_ = nullptr;
};

}  // namespace

struct RealFft::Impl {
  FftwBuffer<double> real;
  FftwBuffer<fftw_complex> spectrum;
  Plan forward;
  Plan inverse;

  explicit Impl(std::size_t n)
      : real(allocate<double>(n)),
        spectrum(allocate<fftw_complex>(n / 2 + 1)),
        forward([&] {
          return fftw_plan_dft_r2c_1d(static_cast<int>(n), real.get(), spectrum.get(), FFTW_ESTIMATE);
        }),
        inverse([&] {
          return fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum.get(), real.get(),
                                      FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
        }) {}
};

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n > 0, ErrorKind::Parameter, "FFT length must be positive");
  impl_ = std::make_unique<Impl>(n);
}

RealFft::~RealFft() = default;

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  require(in.size() <= n_ && out.size() == bins(), ErrorKind::Shape, "FFT buffer size mismatch");
  double* buf = impl_->real.get();
  std::copy(in.begin(), in.end(), buf);
  std::fill(buf + in.size(), buf + n_, 0.0);
  impl_->forward.execute();
  const fftw_complex* s = impl_->spectrum.get();
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {s[k][0], s[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  require(in.size() == bins() && out.size() == n_, ErrorKind::Shape, "IFFT buffer size mismatch");
  fftw_complex* s = impl_->spectrum.get();
  for (std::size_t k = 0; k < bins(); ++k) {
    s[k][0] = in[k].real();
    s[k][1] = in[k].imag();
  }
  // c2r assumes Hermitian input; drop imaginary parts that cannot exist in a real signal.
  s[0][1] = 0.0;
  if (n_ % 2 == 0) s[n_ / 2][1] = 0.0;
  impl_->inverse.execute();
  const double scale = 1.0 / static_cast<double>(n_);
  const double* buf = impl_->real.get();
  for (std::size_t i = 0; i < n_; ++i) out[i] = buf[i] * scale;
}

namespace {

Grid<double> r2r_2d(const Grid<double>& x, fftw_r2r_kind kind, double scale) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const std::size_t n = rows * cols;
  auto in = allocate<double>(n);
  auto out = allocate<double>(n);
  Plan plan([&] {
    return fftw_plan_r2r_2d(static_cast<int>(rows), static_cast<int>(cols), in.get(), out.get(), kind,
                            kind, FFTW_ESTIMATE);
  });
  std::memcpy(in.get(), x.data(), n * sizeof(double));
  plan.execute();
  Grid<double> result(rows, cols);
  for (std::size_t i = 0; i < n; ++i) result.data()[i] = out.get()[i] * scale;
  return result;
}

}  // namespace

Grid<double> dct2(const Grid<double>& x) {
  require(!x.empty(), ErrorKind::Validation, "dct2 of an empty grid");
  return r2r_2d(x, FFTW_REDFT10, 1.0);
}

Grid<double> idct2(const Grid<double>& coeffs) {
  require(!coeffs.empty(), ErrorKind::Validation, "idct2 of an empty grid");
  // REDFT10 followed by REDFT01 scales by 2N along each axis.
  const double scale = 1.0 / (4.0 * static_cast<double>(coeffs.rows()) * static_cast<double>(coeffs.cols()));
  return r2r_2d(coeffs, FFTW_REDFT01, scale);
}

Grid<std::complex<double>> rfft2(const Grid<double>& x) {
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  require(rows > 0 && cols > 0, ErrorKind::Validation, "rfft2 of an empty grid");
  const std::size_t half = cols / 2 + 1;
  auto in = allocate<double>(rows * cols);
  auto out = allocate<fftw_complex>(rows * half);
  Plan plan([&] {
    return fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols), in.get(), out.get(),
                                FFTW_ESTIMATE);
  });
  std::memcpy(in.get(), x.data(), rows * cols * sizeof(double));
  plan.execute();
  Grid<std::complex<double>> result(rows, half);
  for (std::size_t i = 0; i < rows * half; ++i) result.data()[i] = {out.get()[i][0], out.get()[i][1]};
  return result;
}

Grid<double> irfft2(const Grid<std::complex<double>>& spectrum, std::size_t cols) {
  const std::size_t rows = spectrum.rows();
  const std::size_t half = cols / 2 + 1;
  require(spectrum.cols() == half, ErrorKind::Shape, "irfft2 spectrum width mismatch");
  auto in = allocate<fftw_complex>(rows * half);
  auto out = allocate<double>(rows * cols);
  Plan plan([&] {
    return fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols), in.get(), out.get(),
                                FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
  });
  for (std::size_t i = 0; i < rows * half; ++i) {
    in.get()[i][0] = spectrum.data()[i].real();
    in.get()[i][1] = spectrum.data()[i].imag();
  }
  plan.execute();
  const double scale = 1.0 / static_cast<double>(rows * cols);
  Grid<double> result(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) result.data()[i] = out.get()[i] * scale;
  return result;
}

}  // namespace hapforge::fft
