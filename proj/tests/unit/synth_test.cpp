#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hapforge/synth.hpp"
#include "test_support.hpp"

namespace hf = hapforge;
namespace sy = hapforge::synth;
using hapforge::test::TempDir;

namespace {

// Index of the strongest non-DC bin of a naive DFT, for a mean-removed series.
std::size_t dominant_bin(std::vector<double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;
  std::size_t best = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= x.size() / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n)
      acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * n) / static_cast<double>(x.size()));
    if (std::norm(acc) > best_power) {
      best_power = std::norm(acc);
      best = k;
    }
  }
  return best;
}

double luminance_std(const hf::VisualImage& img) {
  const auto l = hf::luminance(img);
  double mean = 0.0;
  for (double v : l.values()) mean += v;
  mean /= static_cast<double>(l.size());
  double acc = 0.0;
  for (double v : l.values()) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(l.size()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(SurfaceSpec, KindNamesRoundTrip) {
  for (auto k : {sy::TextureKind::WovenSinusoid, sy::TextureKind::KnitLattice, sy::TextureKind::FilteredNoise})
    EXPECT_EQ(sy::texture_kind_from_string(sy::to_string(k)), k);
  EXPECT_HF_ERROR(sy::texture_kind_from_string("tweed"), Parameter);
}

TEST(SurfaceSpec, Validation) {
  sy::SurfaceSpec s;
  EXPECT_NO_THROW(s.validate());
  s.spatial_period_mm = 0.0;
  EXPECT_HF_ERROR(s.validate(), Parameter);
  s = {};
  s.base_friction = 0.0;
  EXPECT_HF_ERROR(s.validate(), Parameter);
  s = {};
  s.albedo_rgb[1] = 1.2;
  EXPECT_HF_ERROR(s.validate(), Parameter);
  s = {};
  s.relief_amplitude = -1.0;
  EXPECT_HF_ERROR(s.validate(), Parameter);
}

TEST(HeightField, ZeroAmplitudeIsFlat) {
  sy::SurfaceSpec s;
  s.relief_amplitude = 0.0;
  const auto h = sy::make_height_field(s, {});
  for (double v : h.heights().values()) EXPECT_EQ(v, 0.0);
}

TEST(HeightField, PeakToValleyAndCanonical) {
  for (auto k : {sy::TextureKind::WovenSinusoid, sy::TextureKind::KnitLattice, sy::TextureKind::FilteredNoise}) {
    sy::SurfaceSpec s;
    s.texture_kind = k;
    s.relief_amplitude = 1.7;
    const auto h = sy::make_height_field(s, {});
    EXPECT_EQ(h.min(), 0.0);
    EXPECT_NEAR(h.max(), 1.7, 1e-12);
  }
}

TEST(HeightField, WovenPeakAtSpatialFrequency) {
  sy::SurfaceSpec s;
  s.spatial_period_mm = 2.0;
  const sy::FieldGeometry g{64, 64, 0.25, 3.0, 7.0};
  const auto h = sy::make_height_field(s, g);
  // 16 mm field / 2 mm period = 8 cycles along both axes.
  std::vector<double> row(h.heights().row(20).begin(), h.heights().row(20).end());
  std::vector<double> col(64);
  for (std::size_t r = 0; r < 64; ++r) col[r] = h(r, 33);
  EXPECT_EQ(dominant_bin(row), 8u);
  EXPECT_EQ(dominant_bin(col), 8u);
}

TEST(HeightField, KnitSharesTheFundamental) {
  sy::SurfaceSpec s;
  s.texture_kind = sy::TextureKind::KnitLattice;
  s.spatial_period_mm = 4.0;
  const auto h = sy::make_height_field(s, {64, 64, 0.25, 0.0, 0.0});
  std::vector<double> row(h.heights().row(10).begin(), h.heights().row(10).end());
  EXPECT_EQ(dominant_bin(row), 4u);
}

TEST(HeightField, DeterministicAndLocationDependent) {
  sy::SurfaceSpec s;
  s.texture_kind = sy::TextureKind::FilteredNoise;
  s.seed = 9;
  const sy::FieldGeometry a{32, 32, 0.25, 10.0, 20.0};
  EXPECT_EQ(sy::make_height_field(s, a).heights(), sy::make_height_field(s, a).heights());
  sy::FieldGeometry b = a;
  b.origin_x_mm = 11.0;
  EXPECT_NE(sy::make_height_field(s, a).heights(), sy::make_height_field(s, b).heights());
}

TEST(Visual, FlatReliefIsAlbedoUpToNoise) {
  sy::SurfaceSpec s;
  s.relief_amplitude = 0.0;
  s.albedo_rgb = {0.8, 0.6, 0.4};
  s.sensor_noise_sigma = 0.01;
  const auto img = sy::make_visual(s, sy::make_height_field(s, {}));
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_NEAR(img.at(r, c, ch), s.albedo_rgb[ch], 6 * 0.01);
  s.sensor_noise_sigma = 0.0;
  const auto clean = sy::make_visual(s, sy::make_height_field(s, {}));
  for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_DOUBLE_EQ(clean.at(5, 5, ch), s.albedo_rgb[ch]);
}

TEST(Visual, ContrastIncreasesWithRelief) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    sy::SurfaceSpec s;
    s.seed = seed;
    s.texture_kind = static_cast<sy::TextureKind>(seed % 3);
    s.relief_amplitude = 0.6;
    const sy::FieldGeometry g{48, 48, 0.25, static_cast<double>(seed), 0.0};
    const double lo = luminance_std(sy::make_visual(s, sy::make_height_field(s, g)));
    s.relief_amplitude = 1.2;
    const double hi = luminance_std(sy::make_visual(s, sy::make_height_field(s, g)));
    EXPECT_GT(hi, lo) << "seed " << seed;
  }
}

TEST(Visual, Deterministic) {
  sy::SurfaceSpec s;
  const auto h = sy::make_height_field(s, {});
  EXPECT_EQ(sy::make_visual(s, h, 3), sy::make_visual(s, h, 3));
  EXPECT_NE(sy::make_visual(s, h, 3), sy::make_visual(s, h, 4));
}

TEST(FrictionTrace, NominalKinematicsGive480Samples) {
  sy::SurfaceSpec s;
  const auto h = sy::make_height_field(s, {8, 164, 0.25});
  const auto t = sy::make_friction_trace(s, h, 0.25, {}, 1);
  EXPECT_EQ(t.size(), 480u);
  EXPECT_EQ(t.sample_rate_hz(), 60.0);
}

TEST(FrictionTrace, ZeroGainZeroNoiseIsConstant) {
  sy::SurfaceSpec s;
  s.friction_texture_gain = 0.0;
  s.friction_noise_sigma = 0.0;
  const auto t = sy::make_friction_trace(s, sy::make_height_field(s, {8, 164, 0.25}), 0.25, {}, 1);
  for (double v : t.samples()) EXPECT_EQ(v, s.base_friction);
}

TEST(FrictionTrace, ZeroGainMeanNearBase) {
  sy::SurfaceSpec s;
  s.friction_texture_gain = 0.0;
  s.friction_noise_sigma = 0.02;
  const auto t = sy::make_friction_trace(s, sy::make_height_field(s, {8, 164, 0.25}), 0.25, {}, 5);
  EXPECT_NEAR(hf::signals::mean_friction(t), s.base_friction, 0.05 * s.base_friction);
}

TEST(FrictionTrace, DominantFrequencyIsSpeedOverPeriod) {
  for (double period : {2.0, 2.5, 4.0}) {
    sy::SurfaceSpec s;
    s.spatial_period_mm = period;
    s.friction_noise_sigma = 0.0;
    const auto t = sy::make_friction_trace(s, sy::make_height_field(s, {8, 164, 0.25, 1.0, 2.0}), 0.25, {}, 1);
    const std::vector<double> x(t.samples().begin(), t.samples().end());
    // 480 samples at 60 Hz: bin k is k/8 Hz; v/p = 5/p Hz.
    EXPECT_EQ(dominant_bin(x), static_cast<std::size_t>(std::lround(5.0 / period * 8.0))) << period;
  }
}

TEST(FrictionTrace, PathMustFit) {
  sy::SurfaceSpec s;
  EXPECT_HF_ERROR(sy::make_friction_trace(s, sy::make_height_field(s, {8, 160, 0.25}), 0.25, {}, 1), Parameter);
  EXPECT_HF_ERROR(sy::make_friction_trace(s, sy::make_height_field(s, {8, 164, 0.25}), 0.25, {40.0, 0.0, 60.0}, 1),
                  Parameter);
}

TEST(FrictionTrace, PositiveWhenBaseDominates) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    sy::SurfaceSpec s;
    s.texture_kind = static_cast<sy::TextureKind>(seed % 3);
    s.relief_amplitude = 2.0;
    s.friction_texture_gain = 0.05;
    s.friction_noise_sigma = 0.02;
    const auto h = sy::make_height_field(s, {8, 164, 0.25, static_cast<double>(seed), 0.0});
    // Half-pixel differences of a linear interpolant never exceed the steepest pixel step.
    double max_slope = 0.0;
    for (std::size_t c = 0; c + 1 < h.cols(); ++c)
      max_slope = std::max(max_slope, std::abs(h(4, c + 1) - h(4, c)) / 0.25);
    s.base_friction = 3.0 * s.friction_noise_sigma + s.friction_texture_gain * max_slope + 1e-9;
    const auto t = sy::make_friction_trace(s, h, 0.25, {}, seed);
    for (double v : t.samples()) EXPECT_GT(v, 0.0);
  }
}

TEST(FabricSpecs, VariedAndValid) {
  const auto specs = sy::default_fabric_specs(15, 0);
  ASSERT_EQ(specs.size(), 15u);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_NO_THROW(specs[i].validate());
    EXPECT_EQ(specs[i].texture_kind, static_cast<sy::TextureKind>(i % 3));
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(specs[i].class_id, specs[j].class_id);
  }
  EXPECT_EQ(sy::default_fabric_specs(15, 0)[4].spatial_period_mm, specs[4].spatial_period_mm);
  EXPECT_NE(sy::default_fabric_specs(15, 1)[4].spatial_period_mm, specs[4].spatial_period_mm);
}

TEST(Corpus, TwoByOneByOne) {
  TempDir dir;
  sy::CorpusConfig cfg;
  cfg.classes = sy::default_fabric_specs(2, 3);
  cfg.visual_per_class = 1;
  cfg.augment_per_raw = 1;
  const auto summary = sy::make_corpus(cfg, dir.path());
  EXPECT_EQ(summary.records, 2u);
  EXPECT_EQ(summary.visual, 2u);
  EXPECT_EQ(summary.tactile, 2u);
  EXPECT_EQ(summary.traces, 2u);
  const auto index = nlohmann::json::parse(slurp(dir / sy::kCorpusIndexName));
  ASSERT_EQ(index["classes"].size(), 2u);
  for (const auto& cls : index["classes"])
    for (const char* key : {"visual", "tactile", "trace"})
      for (const auto& rel : cls[key]) EXPECT_TRUE(std::filesystem::exists(dir / rel.get<std::string>())) << rel;
}

TEST(Corpus, RegenerationIsByteIdentical) {
  TempDir a, b;
  sy::CorpusConfig cfg;
  cfg.classes = sy::default_fabric_specs(3, 11);
  cfg.visual_per_class = 2;
  cfg.augment_per_raw = 2;
  cfg.image_size = 16;
  cfg.seed = 11;
  sy::make_corpus(cfg, a.path());
  sy::make_corpus(cfg, b.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
}

TEST(Corpus, NeedsTwoClasses) {
  TempDir dir;
  sy::CorpusConfig cfg;
  cfg.classes = sy::default_fabric_specs(1, 0);
  EXPECT_HF_ERROR(sy::make_corpus(cfg, dir.path()), Parameter);
}
