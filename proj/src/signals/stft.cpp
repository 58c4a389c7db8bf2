#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "core/fft.hpp"
#include "hapforge/core/error.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::signals {

FrictionTrace::FrictionTrace(std::vector<double> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  require(!samples_.empty(), ErrorKind::Length, "friction trace is empty");
  require(std::isfinite(sample_rate_hz_) && sample_rate_hz_ > 0.0, ErrorKind::Parameter,
          "sample rate must be positive");
  for (double v : samples_)
    require(std::isfinite(v), ErrorKind::Validation, "friction trace has a non-finite sample");
}

bool FrictionTrace::is_physical() const noexcept {
  return std::all_of(samples_.begin(), samples_.end(), [](double v) { return v >= 0.0; });
}

double mean_friction(const FrictionTrace& trace) {
  // FrictionTrace is never empty; the check documents the contract.
  require(trace.size() > 0, ErrorKind::Length, "mean of an empty trace");
  const auto s = trace.samples();
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

void StftParams::validate() const {
  require(window_length > 0, ErrorKind::Parameter, "window_length must be positive");
  require(hop_length > 0, ErrorKind::Parameter, "hop_length must be positive");
  require(hop_length <= window_length, ErrorKind::Parameter, "hop_length exceeds window_length");
  require(fft_length >= window_length, ErrorKind::Parameter, "fft_length is shorter than the window");
}

std::size_t StftParams::frame_count(std::size_t length) const noexcept {
  if (length <= window_length) return 1;
  return 1 + (length - window_length + hop_length - 1) / hop_length;
}

std::vector<double> StftParams::window_samples() const {
  std::vector<double> w(window_length, 1.0);
  if (window == WindowKind::Hann) {
    const double n = static_cast<double>(window_length);
    for (std::size_t i = 0; i < window_length; ++i) {
      const double s = std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / n);
      w[i] = s * s;
    }
  }
  return w;
}

bool StftParams::satisfies_cola() const {
  validate();
  const auto w = window_samples();
  std::vector<double> acc(hop_length, 0.0);
  for (std::size_t i = 0; i < window_length; ++i) acc[i % hop_length] += w[i] * w[i];
  const auto [lo, hi] = std::minmax_element(acc.begin(), acc.end());
  return *lo > 0.0 && (*hi - *lo) <= 1e-9 * *hi;
}

StftParams default_stft_params(std::size_t window_length) {
  StftParams p;
  p.window_length = window_length;
  p.hop_length = std::max<std::size_t>(1, window_length / 4);
  p.fft_length = window_length;
  p.window = WindowKind::Hann;
  return p;
}

Grid<double> Spectrogram::magnitude() const {
  Grid<double> out(bins.rows(), bins.cols());
  for (std::size_t i = 0; i < bins.size(); ++i) out.data()[i] = std::abs(bins.data()[i]);
  return out;
}

void Spectrogram::validate() const {
  params.validate();
  require(bins.rows() == params.bin_count(), ErrorKind::Shape,
          "spectrogram has " + std::to_string(bins.rows()) + " bins, params imply " +
              std::to_string(params.bin_count()));
  require(original_length >= params.window_length, ErrorKind::Length,
          "spectrogram original_length is shorter than one window");
  require(bins.cols() == params.frame_count(original_length), ErrorKind::Shape,
          "spectrogram frame count inconsistent with original_length");
  for (const auto& v : bins.values()) {
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::Validation,
            "spectrogram has a non-finite value");
    if (magnitude_only)
      require(v.imag() == 0.0 && v.real() >= 0.0, ErrorKind::Validation,
              "magnitude spectrogram has a negative or complex value");
  }
}

Spectrogram magnitude_spectrogram(const Spectrogram& spec) {
  Spectrogram out = spec;
  for (auto& v : out.bins.values()) v = std::abs(v);
  out.magnitude_only = true;
  return out;
}

Spectrogram stft(const FrictionTrace& trace, const StftParams& params) {
  params.validate();
  const std::size_t n = trace.size();
  require(n >= params.window_length, ErrorKind::Length,
          "trace of " + std::to_string(n) + " samples is shorter than the " +
              std::to_string(params.window_length) + "-sample window");

  const auto window = params.window_samples();
  const std::size_t frames = params.frame_count(n);
  Spectrogram spec;
  spec.params = params;
  spec.original_length = n;
  spec.sample_rate_hz = trace.sample_rate_hz();
  spec.cola_ok = params.satisfies_cola();
  spec.bins = Grid<std::complex<double>>(params.bin_count(), frames);

  fft::RealFft engine(params.fft_length);
  std::vector<double> frame(params.window_length);
  std::vector<std::complex<double>> column(params.bin_count());
  const auto x = trace.samples();
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * params.hop_length;
    for (std::size_t i = 0; i < params.window_length; ++i) {
      const std::size_t k = start + i;
      frame[i] = k < n ? x[k] * window[i] : 0.0;
    }
    engine.forward(frame, column);
    for (std::size_t b = 0; b < column.size(); ++b) spec.bins(b, t) = column[b];
  }
  return spec;
}

FrictionTrace istft(const Spectrogram& spec) {
  require(!spec.magnitude_only, ErrorKind::Validation,
          "spectrogram carries no phase; use reconstruct_phase for magnitude-only input");
  spec.validate();
  const StftParams& params = spec.params;
  require(spec.cola_ok && params.satisfies_cola(), ErrorKind::Parameter,
          "window/hop pair violates the overlap-add condition; inversion is not exact");

  const auto window = params.window_samples();
  const std::size_t frames = spec.frame_count();
  const std::size_t padded = (frames - 1) * params.hop_length + params.window_length;
  std::vector<double> acc(padded, 0.0);
  std::vector<double> norm(padded, 0.0);

  fft::RealFft engine(params.fft_length);
  std::vector<std::complex<double>> column(params.bin_count());
  std::vector<double> frame(params.fft_length);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < column.size(); ++b) column[b] = spec.bins(b, t);
    engine.inverse(column, frame);
    const std::size_t start = t * params.hop_length;
    for (std::size_t i = 0; i < params.window_length; ++i) {
      acc[start + i] += frame[i] * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  std::vector<double> out(spec.original_length);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = norm[i] > 0.0 ? acc[i] / norm[i] : 0.0;
  return FrictionTrace(std::move(out), spec.sample_rate_hz);
}

}  // namespace hapforge::signals
