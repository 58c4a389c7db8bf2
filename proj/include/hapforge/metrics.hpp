#pragma once

// Error and similarity measures between generated and ground-truth signals.

#include <cstddef>
#include <filesystem>
#include <span>

#include "hapforge/core/grid.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::metrics {

/// Mean absolute difference. Throws Length on a length mismatch.
double mae(const signals::FrictionTrace& pred, const signals::FrictionTrace& truth);
double mae(std::span<const double> pred, std::span<const double> truth);

/// mae / mean(truth). Throws Degenerate when mean(truth) is zero.
double mae_ratio(const signals::FrictionTrace& pred, const signals::FrictionTrace& truth);

struct SsimParams {
  /// Dynamic range L of the pixel values (1 for unit images, 255 for 8-bit).
  double dynamic_range = 1.0;
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean of the local SSIM map over all positions where the Gaussian window fits
/// entirely inside the image. Throws Shape on mismatched or too-small images.
double ssim(const Grid<double>& a, const Grid<double>& b, const SsimParams& params = {});

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

/// Welch's unequal-variance t-test. Throws Length for a sample smaller than 2 and
/// Degenerate when both samples have zero variance (unless their means coincide,
/// which yields t = 0, p = 1).
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct EvalReport {
  double mae = 0.0;
  double mae_ratio = 0.0;
  double ssim_mean = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t sample_count = 0;

  /// Throws Validation if a field is non-finite or p_value lies outside [0,1].
  void validate() const;
};

void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace hapforge::metrics
