#pragma once

// Friction traces, their short-time spectra, and the way back (complex inversion
// or iterative phase retrieval for magnitude-only spectrograms).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hapforge/core/grid.hpp"

namespace hapforge::signals {

inline constexpr double kNominalSampleRateHz = 60.0;

/// Dimensionless friction-coefficient time series sampled at a fixed rate.
///
/// Construction enforces finiteness and non-emptiness. Non-negativity is a property of
/// measured traces, not of every intermediate signal (phase retrieval can undershoot),
/// so it is reported by is_physical() instead of being enforced.
class FrictionTrace {
public:
  FrictionTrace(std::vector<double> samples, double sample_rate_hz = kNominalSampleRateHz);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double duration_s() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_hz_; }

  bool is_physical() const noexcept;

private:
  std::vector<double> samples_;
  double sample_rate_hz_;
};

enum class WindowKind { Hann, Rectangular };

struct StftParams {
  std::size_t window_length = 64;
  std::size_t hop_length = 16;
  WindowKind window = WindowKind::Hann;
  std::size_t fft_length = 64;

  /// Throws Parameter for non-positive sizes, hop > window, or fft < window.
  void validate() const;

  std::size_t bin_count() const noexcept { return fft_length / 2 + 1; }
  /// Frames needed to cover `length` samples; the tail is zero-padded to a whole hop.
  std::size_t frame_count(std::size_t length) const noexcept;

  /// Analysis (= synthesis) window. The Hann window is sampled at half-integer
  /// offsets, sin^2(pi (n + 1/2) / N), which keeps it symmetric, overlap-adds to a
  /// constant at hop N/4, and leaves no exactly-zero edge sample.
  std::vector<double> window_samples() const;

  /// True when the squared window overlap-adds to a constant at this hop, the
  /// condition under which weighted overlap-add inverts the transform uniformly.
  bool satisfies_cola() const;

  friend bool operator==(const StftParams&, const StftParams&) = default;
};

/// Hann, hop = window / 4, fft = window.
StftParams default_stft_params(std::size_t window_length = 64);

/// Time-frequency matrix indexed (frequency_bin, frame).
struct Spectrogram {
  Grid<std::complex<double>> bins;
  bool magnitude_only = false;
  StftParams params;
  std::size_t original_length = 0;
  double sample_rate_hz = kNominalSampleRateHz;
  /// Set by stft(); inversion refuses a spectrogram whose params fail this.
  bool cola_ok = true;

  std::size_t bin_count() const noexcept { return bins.rows(); }
  std::size_t frame_count() const noexcept { return bins.cols(); }

  Grid<double> magnitude() const;
  /// Checks shape consistency with params/original_length and finiteness.
  void validate() const;
};

Spectrogram magnitude_spectrogram(const Spectrogram& spec);

/// Throws Length when the trace is shorter than one window.
Spectrogram stft(const FrictionTrace& trace, const StftParams& params);

/// Weighted overlap-add inverse. Throws Validation for magnitude-only input and
/// Parameter when the params violate the overlap-add condition.
FrictionTrace istft(const Spectrogram& spec);

enum class PhaseInit { Zero, Random };

struct PhaseRetrievalOptions {
  std::size_t iterations = 64;
  std::uint64_t seed = 0;
  PhaseInit init = PhaseInit::Zero;
};

struct PhaseRetrievalResult {
  FrictionTrace trace;
  /// Spectral convergence after each iteration; element k belongs to iteration k+1.
  std::vector<double> convergence;
};

/// Griffin-Lim: alternate between imposing the target magnitude and projecting onto
/// consistent spectrograms. Deterministic for a given options.seed.
PhaseRetrievalResult reconstruct_phase(const Spectrogram& magnitude,
                                       const PhaseRetrievalOptions& options = {});

/// || |STFT(trace)| - target ||_F / || target ||_F over the two-sided spectrum
/// (interior bins count twice). Zero when the target is identically zero.
double spectral_convergence(const FrictionTrace& trace, const Spectrogram& target);

/// Arithmetic mean of the samples.
double mean_friction(const FrictionTrace& trace);

inline constexpr double kDefaultDbFloor = -80.0;

/// Log-magnitude image: pixel = clamp((20 log10(|s| / reference) - floor) / -floor, 0, 1).
struct SpectrogramImage {
  Grid<double> pixels;
  double db_floor = kDefaultDbFloor;
  double reference_magnitude = 1.0;
};

/// `reference` defaults to the largest magnitude in the spectrogram (1.0 if all zero).
SpectrogramImage spectrogram_to_image(const Spectrogram& spec, double db_floor = kDefaultDbFloor,
                                      std::optional<double> reference = std::nullopt);

/// Inverse of spectrogram_to_image above the floor; pixels at 0 decode to silence.
Spectrogram image_to_magnitude(const SpectrogramImage& image, const StftParams& params,
                               std::size_t original_length,
                               double sample_rate_hz = kNominalSampleRateHz);

}  // namespace hapforge::signals
