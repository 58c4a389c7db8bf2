#include <cmath>
#include <numbers>
#include <random>

#include "hapforge/core/error.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::signals {
namespace {

// Weight of a one-sided bin in the two-sided spectrum norm.
double hermitian_weight(std::size_t bin, std::size_t fft_length) {
  if (bin == 0) return 1.0;
  if (fft_length % 2 == 0 && bin == fft_length / 2) return 1.0;
  return 2.0;
}

double convergence_between(const Spectrogram& estimate, const Grid<double>& target) {
  const std::size_t fft_length = estimate.params.fft_length;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t b = 0; b < target.rows(); ++b) {
    const double w = hermitian_weight(b, fft_length);
    for (std::size_t t = 0; t < target.cols(); ++t) {
      const double d = std::abs(estimate.bins(b, t)) - target(b, t);
      num += w * d * d;
      den += w * target(b, t) * target(b, t);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace

double spectral_convergence(const FrictionTrace& trace, const Spectrogram& target) {
  require(trace.size() == target.original_length, ErrorKind::Length,
          "trace length differs from the target spectrogram's original length");
  return convergence_between(stft(trace, target.params), target.magnitude());
}

PhaseRetrievalResult reconstruct_phase(const Spectrogram& magnitude,
                                       const PhaseRetrievalOptions& options) {
  require(options.iterations >= 1, ErrorKind::Parameter, "phase retrieval needs at least one iteration");
  magnitude.validate();
  require(magnitude.params.satisfies_cola(), ErrorKind::Parameter,
          "window/hop pair violates the overlap-add condition");

  const Grid<double> target = magnitude.magnitude();
  Grid<double> phase(target.rows(), target.cols(), 0.0);
  if (options.init == PhaseInit::Random) {
    Rng rng(derive_seed(options.seed, "phase-init"));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (auto& p : phase.values()) p = angle(rng);
  }

  Spectrogram working;
  working.params = magnitude.params;
  working.original_length = magnitude.original_length;
  working.sample_rate_hz = magnitude.sample_rate_hz;
  working.bins = Grid<std::complex<double>>(target.rows(), target.cols());

  std::vector<double> convergence;
  convergence.reserve(options.iterations);
  std::vector<double> zeros(magnitude.original_length, 0.0);
  FrictionTrace current(std::move(zeros), magnitude.sample_rate_hz);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    for (std::size_t i = 0; i < target.size(); ++i)
      working.bins.data()[i] = std::polar(target.data()[i], phase.data()[i]);
    current = istft(working);
    const Spectrogram estimate = stft(current, magnitude.params);
    convergence.push_back(convergence_between(estimate, target));
    for (std::size_t i = 0; i < target.size(); ++i) {
      const auto v = estimate.bins.data()[i];
      phase.data()[i] = std::abs(v) > 0.0 ? std::arg(v) : 0.0;
    }
  }
  return {std::move(current), std::move(convergence)};
}

}  // namespace hapforge::signals
