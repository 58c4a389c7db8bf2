#include <algorithm>
#include <cmath>

#include "hapforge/core/error.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::signals {

SpectrogramImage spectrogram_to_image(const Spectrogram& spec, double db_floor,
                                      std::optional<double> reference) {
  require(std::isfinite(db_floor) && db_floor < 0.0, ErrorKind::Parameter,
          "db_floor must be a negative number of decibels");
  const Grid<double> mag = spec.magnitude();
  double ref = reference.value_or(mag.empty() ? 1.0 : grid_max(mag));
  if (!reference && ref <= 0.0) ref = 1.0;
  require(std::isfinite(ref) && ref > 0.0, ErrorKind::Parameter, "reference magnitude must be positive");

  SpectrogramImage img;
  img.db_floor = db_floor;
  img.reference_magnitude = ref;
  img.pixels = Grid<double>(mag.rows(), mag.cols());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double m = mag.data()[i];
    if (m <= 0.0) continue;
    const double db = 20.0 * std::log10(m / ref);
    img.pixels.data()[i] = std::clamp((db - db_floor) / -db_floor, 0.0, 1.0);
  }
  return img;
}

Spectrogram image_to_magnitude(const SpectrogramImage& image, const StftParams& params,
                               std::size_t original_length, double sample_rate_hz) {
  require(std::isfinite(image.db_floor) && image.db_floor < 0.0, ErrorKind::Parameter,
          "db_floor must be a negative number of decibels");
  require(std::isfinite(image.reference_magnitude) && image.reference_magnitude > 0.0,
          ErrorKind::Parameter, "reference magnitude must be positive");
  Spectrogram spec;
  spec.params = params;
  spec.original_length = original_length;
  spec.sample_rate_hz = sample_rate_hz;
  spec.magnitude_only = true;
  spec.cola_ok = params.satisfies_cola();
  spec.bins = Grid<std::complex<double>>(image.pixels.rows(), image.pixels.cols());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double p = image.pixels.data()[i];
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, ErrorKind::Validation,
            "spectrogram image pixel outside [0,1]");
    if (p <= 0.0) continue;
    const double db = p * -image.db_floor + image.db_floor;
    spec.bins.data()[i] = image.reference_magnitude * std::pow(10.0, db / 20.0);
  }
  spec.validate();
  return spec;
}

}  // namespace hapforge::signals
