#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hapforge/photometric.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace hf = hapforge;
namespace ph = hapforge::photometric;
using hapforge::Grid;
using hapforge::test::random_grid;

namespace {

using hapforge::oracle::rmse_up_to_constant;
using hapforge::oracle::smooth_field;

ph::GradientField forward_differences(const Grid<double>& z, bool periodic) {
  const std::size_t rows = z.rows(), cols = z.cols();
  ph::GradientField g{Grid<double>(rows, cols, 0.0), Grid<double>(rows, cols, 0.0),
                      ph::GradientField::Sampling::ForwardDifference};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (periodic || c + 1 < cols) g.gx(r, c) = z(r, (c + 1) % cols) - z(r, c);
      if (periodic || r + 1 < rows) g.gy(r, c) = z((r + 1) % rows, c) - z(r, c);
    }
  return g;
}

// Dense least-squares oracle: one equation per available forward difference,
// solved with a column-pivoting QR after pinning z(0,0) = 0.
Grid<double> dense_least_squares(const ph::GradientField& g, bool periodic) {
  const std::size_t rows = g.rows(), cols = g.cols(), n = rows * cols;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(2 * n + 1), static_cast<long>(n));
  long row = 0;
  auto idx = [cols](std::size_t r, std::size_t c) { return static_cast<long>(r * cols + c); };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<long>(2 * n + 1));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (periodic || c + 1 < cols) {
        a(row, idx(r, (c + 1) % cols)) += 1.0;
        a(row, idx(r, c)) -= 1.0;
        b(row++) = g.gx(r, c);
      }
      if (periodic || r + 1 < rows) {
        a(row, idx((r + 1) % rows, c)) += 1.0;
        a(row, idx(r, c)) -= 1.0;
        b(row++) = g.gy(r, c);
      }
    }
  a(row, 0) = 1.0;
  b(row++) = 0.0;
  const Eigen::VectorXd z = a.topRows(row).colPivHouseholderQr().solve(b.head(row));
  Grid<double> out(rows, cols);
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = z(static_cast<long>(i));
  return out;
}

}  // namespace

TEST(HeightMap, CanonicalizeAndValidation) {
  Grid<double> z(2, 2);
  z(0, 0) = 3.0;
  z(0, 1) = 5.0;
  z(1, 0) = 4.0;
  z(1, 1) = 3.5;
  const auto h = ph::HeightMap(z).canonicalized();
  EXPECT_TRUE(h.is_canonical());
  EXPECT_EQ(h(0, 1), 2.0);
  EXPECT_EQ(h.range(), 2.0);
  EXPECT_HF_ERROR(ph::HeightMap(Grid<double>()), Validation);
  z(1, 1) = INFINITY;
  EXPECT_HF_ERROR(ph::HeightMap{z}, Validation);
}

TEST(Calibration, DefaultIsValidAtFortyFiveDegrees) {
  const auto cal = ph::default_calibration();
  EXPECT_NO_THROW(cal.validate());
  for (const auto& l : cal.lights) {
    EXPECT_NEAR(l.norm(), 1.0, 1e-15);
    EXPECT_NEAR(l.z(), std::sqrt(0.5), 1e-15);
  }
}

TEST(Calibration, RejectsBadLightsAndAlbedo) {
  auto cal = ph::default_calibration();
  cal.albedo = 0.0;
  EXPECT_HF_ERROR(cal.validate(), Parameter);
  cal = ph::default_calibration();
  cal.lights[2] = cal.lights[1];
  EXPECT_HF_ERROR(cal.validate(), Parameter);
  cal = ph::default_calibration();
  cal.lights[0] *= 2.0;
  EXPECT_HF_ERROR(cal.validate(), Parameter);
}

TEST(RenderTactile, FlatMapIsUniform) {
  const auto cal = ph::default_calibration();
  const auto img = ph::render_tactile(ph::HeightMap(Grid<double>(16, 16, 0.0)), cal);
  for (double v : img.raw()) EXPECT_NEAR(v, std::sqrt(0.5), 1e-15);
}

TEST(RenderTactile, PlanarRampMatchesClosedFormNormal) {
  const auto cal = ph::default_calibration();
  Grid<double> z(12, 12);
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) z(r, c) = 0.1 * static_cast<double>(c);
  const auto img = ph::render_tactile(ph::HeightMap(z), cal);
  const double norm = std::sqrt(0.01 + 1.0);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto& l = cal.lights[ch];
    const double expected = std::max(0.0, (-0.1 * l.x() + l.z()) / norm);
    for (std::size_t r = 0; r < 12; ++r)
      for (std::size_t c = 0; c < 12; ++c) EXPECT_NEAR(img.at(r, c, ch), expected, 1e-12);
  }
}

TEST(RenderTactile, BackFacingLightsGiveBlack) {
  auto cal = ph::default_calibration();
  for (auto& l : cal.lights) l.z() = -l.z();
  const auto img = ph::render_tactile(ph::HeightMap(random_grid(10, 10, 3, 0.0, 0.3)), cal);
  for (double v : img.raw()) EXPECT_EQ(v, 0.0);
}

TEST(RenderTactile, RejectsTinyMaps) {
  EXPECT_HF_ERROR(ph::render_tactile(ph::HeightMap(Grid<double>(7, 8, 0.0)), ph::default_calibration()), Validation);
}

TEST(EstimateGradients, FlatAndRampInverse) {
  const auto cal = ph::default_calibration();
  const auto flat = ph::estimate_gradients(ph::render_tactile(ph::HeightMap(Grid<double>(9, 9, 0.0)), cal), cal);
  for (double v : flat.field.gx.values()) EXPECT_LT(std::abs(v), 1e-10);
  for (double v : flat.field.gy.values()) EXPECT_LT(std::abs(v), 1e-10);
  EXPECT_EQ(flat.clamped_count, 0u);

  Grid<double> z(10, 10);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 10; ++c) z(r, c) = 0.1 * static_cast<double>(c);
  const auto ramp = ph::estimate_gradients(ph::render_tactile(ph::HeightMap(z), cal), cal);
  for (double v : ramp.field.gx.values()) EXPECT_NEAR(v, 0.1, 1e-6);
  for (double v : ramp.field.gy.values()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(EstimateGradients, RecoversCentralGradientsOfSmoothField) {
  const auto cal = ph::default_calibration();
  const ph::HeightMap h(smooth_field(32, 4, 3.0));
  const auto truth = ph::central_gradients(h);
  const auto est = ph::estimate_gradients(ph::render_tactile(h, cal), cal);
  for (std::size_t i = 0; i < truth.gx.size(); ++i) {
    EXPECT_NEAR(est.field.gx.data()[i], truth.gx.data()[i], 1e-9);
    EXPECT_NEAR(est.field.gy.data()[i], truth.gy.data()[i], 1e-9);
  }
}

TEST(EstimateGradients, NoiseRmseMonteCarlo) {
  const auto cal = ph::default_calibration();
  const ph::HeightMap h(smooth_field(16, 1, 1.5));
  const auto truth = ph::central_gradients(h);
  const auto clean = ph::render_tactile(h, cal);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    auto noisy = clean;
    for (double& v : noisy.raw()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    const auto est = ph::estimate_gradients(noisy, cal);
    for (std::size_t i = 0; i < truth.gx.size(); ++i) {
      const double dx = est.field.gx.data()[i] - truth.gx.data()[i];
      const double dy = est.field.gy.data()[i] - truth.gy.data()[i];
      acc += dx * dx + dy * dy;
      count += 2;
    }
  }
  EXPECT_LT(std::sqrt(acc / static_cast<double>(count)), 0.02);
}

TEST(EstimateGradients, GrazingNormalsAreClampedAndFlagged) {
  auto cal = ph::default_calibration();
  hf::TactileImage img(8, 8, 0.0);
  // Bright only under light 0. With three lights at elevation s = sqrt(1/2) the solved normal
  // has n_z = 1/(3s) and a lateral part of (2/3)/s towards light 0, i.e. slope exactly 2.
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) img.at(r, c, 0) = 1.0;
  const auto free = ph::estimate_gradients(img, cal);
  EXPECT_EQ(free.clamped_count, 0u);
  EXPECT_NEAR(std::hypot(free.field.gx(3, 3), free.field.gy(3, 3)), 2.0, 1e-12);

  cal.max_slope = 1.5;
  const auto est = ph::estimate_gradients(img, cal);
  EXPECT_EQ(est.clamped_count, 64u);
  for (std::size_t i = 0; i < est.field.gx.size(); ++i) {
    const double s = std::hypot(est.field.gx.data()[i], est.field.gy.data()[i]);
    EXPECT_LE(s, cal.max_slope + 1e-12);
    EXPECT_EQ(est.clamped.data()[i], 1);
  }
}

TEST(Integrate, ZeroGradientsGiveZeroHeights) {
  const ph::GradientField g{Grid<double>(8, 9, 0.0), Grid<double>(8, 9, 0.0)};
  for (auto b : {ph::Boundary::Mirror, ph::Boundary::Periodic}) {
    const auto h = ph::integrate_heights(g, {b});
    for (double v : h.heights().values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Integrate, ExactForwardDifferencesMirror) {
  const auto z = random_grid(13, 17, 9, -2.0, 2.0);
  const auto h = ph::integrate_heights(forward_differences(z, false));
  EXPECT_TRUE(h.is_canonical());
  EXPECT_LT(rmse_up_to_constant(h.heights(), z), 1e-9);
}

TEST(Integrate, ExactForwardDifferencesPeriodic) {
  const auto z = random_grid(12, 10, 10, -1.0, 1.0);
  const auto h = ph::integrate_heights(forward_differences(z, true), {ph::Boundary::Periodic});
  EXPECT_LT(rmse_up_to_constant(h.heights(), z), 1e-9);
}

TEST(Integrate, MatchesDenseLeastSquaresOnNonIntegrableField) {
  for (bool periodic : {false, true}) {
    ph::GradientField g{random_grid(7, 9, 20, -1.0, 1.0), random_grid(7, 9, 21, -1.0, 1.0),
                        ph::GradientField::Sampling::ForwardDifference};
    if (!periodic) {
      // Differences that leave the domain do not exist in the mirror model.
      for (std::size_t r = 0; r < 7; ++r) g.gx(r, 8) = 0.0;
      for (std::size_t c = 0; c < 9; ++c) g.gy(6, c) = 0.0;
    }
    const auto oracle = dense_least_squares(g, periodic);
    const auto h = ph::integrate_heights(g, {periodic ? ph::Boundary::Periodic : ph::Boundary::Mirror});
    EXPECT_LT(rmse_up_to_constant(h.heights(), oracle), 1e-9) << "periodic=" << periodic;
  }
}

TEST(Integrate, AnalyticGaussianBump) {
  const std::size_t n = 64;
  const double s = 8.0, c0 = 31.5;
  Grid<double> z(n, n);
  ph::GradientField g{Grid<double>(n, n), Grid<double>(n, n)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double x = (static_cast<double>(c) - c0) / s, y = (static_cast<double>(r) - c0) / s;
      const double e = std::exp(-(x * x + y * y));
      z(r, c) = e;
      g.gx(r, c) = -2.0 * x / s * e;
      g.gy(r, c) = -2.0 * y / s * e;
    }
  const auto h = ph::integrate_heights(g);
  EXPECT_LT(rmse_up_to_constant(h.heights(), z), 0.02);
}

TEST(Integrate, LinearInScale) {
  const ph::GradientField g{random_grid(10, 11, 1, -1.0, 1.0), random_grid(10, 11, 2, -1.0, 1.0)};
  const auto base = ph::integrate_heights(g);
  ph::GradientField g3 = g;
  for (auto& v : g3.gx.values()) v *= 3.0;
  for (auto& v : g3.gy.values()) v *= 3.0;
  const auto scaled = ph::integrate_heights(g3);
  for (std::size_t i = 0; i < base.heights().size(); ++i)
    EXPECT_NEAR(scaled.heights().data()[i], 3.0 * base.heights().data()[i], 1e-10);
}

TEST(Integrate, PeriodicTranslationEquivariance) {
  const ph::GradientField g{random_grid(12, 12, 5, -1.0, 1.0), random_grid(12, 12, 6, -1.0, 1.0),
                            ph::GradientField::Sampling::ForwardDifference};
  const std::size_t dr = 5, dc = 3;
  ph::GradientField shifted = g;
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) {
      shifted.gx((r + dr) % 12, (c + dc) % 12) = g.gx(r, c);
      shifted.gy((r + dr) % 12, (c + dc) % 12) = g.gy(r, c);
    }
  const auto a = ph::integrate_heights(g, {ph::Boundary::Periodic});
  const auto b = ph::integrate_heights(shifted, {ph::Boundary::Periodic});
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) EXPECT_NEAR(b((r + dr) % 12, (c + dc) % 12), a(r, c), 1e-10);
}

TEST(Integrate, RejectsNonFiniteAndMismatchedShapes) {
  ph::GradientField g{Grid<double>(8, 8, 0.0), Grid<double>(8, 8, 0.0)};
  g.gx(1, 1) = NAN;
  EXPECT_HF_ERROR(ph::integrate_heights(g), Validation);
  const ph::GradientField bad{Grid<double>(8, 8, 0.0), Grid<double>(8, 7, 0.0)};
  EXPECT_HF_ERROR(ph::integrate_heights(bad), Shape);
}

TEST(PhotometricLoop, SmoothFieldsNoiselessAndNoisy) {
  const auto cal = ph::default_calibration();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Grid<double> z = smooth_field(64, 100 + seed, 4.0);
    const auto img = ph::render_tactile(ph::HeightMap(z), cal);
    const auto clean = ph::integrate_heights(ph::estimate_gradients(img, cal).field);
    EXPECT_LT(rmse_up_to_constant(clean.heights(), z), 0.02 * 4.0) << "seed " << seed;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    auto noisy_img = img;
    for (double& v : noisy_img.raw()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    const auto noisy = ph::integrate_heights(ph::estimate_gradients(noisy_img, cal).field);
    EXPECT_LT(rmse_up_to_constant(noisy.heights(), z), 0.06 * 4.0) << "seed " << seed;
  }
}
