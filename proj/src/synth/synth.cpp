#include "hapforge/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "core/fft.hpp"
#include "hapforge/core/error.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/io/formats.hpp"
#include "hapforge/io/png.hpp"

namespace hapforge::synth {

using nlohmann::json;

std::string to_string(TextureKind kind) {
  switch (kind) {
    case TextureKind::WovenSinusoid: return "woven-sinusoid";
    case TextureKind::KnitLattice: return "knit-lattice";
    case TextureKind::FilteredNoise: return "filtered-noise";
  }
  return "unknown";
}

TextureKind texture_kind_from_string(const std::string& name) {
  if (name == "woven-sinusoid") return TextureKind::WovenSinusoid;
  if (name == "knit-lattice") return TextureKind::KnitLattice;
  if (name == "filtered-noise") return TextureKind::FilteredNoise;
  fail(ErrorKind::Parameter, "unknown texture kind '" + name + "'");
}

void SurfaceSpec::validate() const {
  require(std::isfinite(spatial_period_mm) && spatial_period_mm > 0.0, ErrorKind::Parameter,
          "spatial_period_mm must be positive");
  require(std::isfinite(relief_amplitude) && relief_amplitude >= 0.0, ErrorKind::Parameter,
          "relief_amplitude must be non-negative");
  require(std::isfinite(base_friction) && base_friction > 0.0, ErrorKind::Parameter,
          "base_friction must be positive");
  require(std::isfinite(friction_texture_gain) && friction_texture_gain >= 0.0, ErrorKind::Parameter,
          "friction_texture_gain must be non-negative");
  require(friction_noise_sigma >= 0.0 && sensor_noise_sigma >= 0.0, ErrorKind::Parameter,
          "noise sigmas must be non-negative");
  for (double a : albedo_rgb)
    require(a >= 0.0 && a <= 1.0, ErrorKind::Parameter, "albedo_rgb components must lie in [0,1]");
}

namespace {

std::uint64_t location_seed(const SurfaceSpec& spec, const FieldGeometry& g) {
  const auto bx = std::bit_cast<std::uint64_t>(g.origin_x_mm);
  const auto by = std::bit_cast<std::uint64_t>(g.origin_y_mm);
  return derive_seed(derive_seed(spec.seed, bx), by);
}

Grid<double> filtered_noise(const SurfaceSpec& spec, const FieldGeometry& g) {
  Rng rng(location_seed(spec, g));
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid<double> white(g.rows, g.cols);
  for (auto& v : white.values()) v = normal(rng);
  auto spectrum = fft::rfft2(white);
  // Gaussian low-pass whose 1/e radius sits at the texture's spatial frequency.
  const double cutoff = 1.0 / spec.spatial_period_mm;
  for (std::size_t k = 0; k < spectrum.rows(); ++k) {
    const double fy_idx = k <= g.rows / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(g.rows);
    const double fy = fy_idx / (static_cast<double>(g.rows) * g.mm_per_pixel);
    for (std::size_t l = 0; l < spectrum.cols(); ++l) {
      const double fx = static_cast<double>(l) / (static_cast<double>(g.cols) * g.mm_per_pixel);
      const double f2 = (fx * fx + fy * fy) / (cutoff * cutoff);
      spectrum(k, l) *= std::exp(-f2);
    }
  }
  return fft::irfft2(spectrum, g.cols);
}

}  // namespace

photometric::HeightMap make_height_field(const SurfaceSpec& spec, const FieldGeometry& geometry) {
  spec.validate();
  require(geometry.rows > 0 && geometry.cols > 0 && geometry.mm_per_pixel > 0.0, ErrorKind::Parameter,
          "field geometry must be non-empty with a positive pixel pitch");
  Grid<double> z(geometry.rows, geometry.cols, 0.0);
  if (spec.relief_amplitude == 0.0) return photometric::HeightMap(std::move(z));

  Rng phase_rng(derive_seed(spec.seed, "relief-phase"));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double phx = phase(phase_rng);
  const double phy = phase(phase_rng);
  const double k = 2.0 * std::numbers::pi / spec.spatial_period_mm;

  if (spec.texture_kind == TextureKind::FilteredNoise) {
    z = filtered_noise(spec, geometry);
  } else {
    for (std::size_t r = 0; r < geometry.rows; ++r) {
      const double y = geometry.origin_y_mm + static_cast<double>(r) * geometry.mm_per_pixel;
      for (std::size_t c = 0; c < geometry.cols; ++c) {
        const double x = geometry.origin_x_mm + static_cast<double>(c) * geometry.mm_per_pixel;
        if (spec.texture_kind == TextureKind::WovenSinusoid) {
          z(r, c) = std::sin(k * x + phx) + std::sin(k * y + phy);
        } else {
          const double u = 0.5 * (1.0 + std::cos(k * x + phx));
          const double v = 0.5 * (1.0 + std::cos(k * y + phy));
          z(r, c) = u * u * v;
        }
      }
    }
  }

  const double lo = grid_min(z);
  const double hi = grid_max(z);
  if (hi - lo <= 0.0) return photometric::HeightMap(Grid<double>(geometry.rows, geometry.cols, 0.0));
  for (auto& v : z.values()) v = (v - lo) / (hi - lo) * spec.relief_amplitude;
  return photometric::HeightMap(std::move(z));
}

VisualImage make_visual(const SurfaceSpec& spec, const photometric::HeightMap& h, std::uint64_t noise_seed) {
  spec.validate();
  const double top = h.max();
  Rng rng(derive_seed(noise_seed, "visual-noise"));
  std::normal_distribution<double> noise(0.0, 1.0);
  VisualImage img(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      // Deeper points receive less ambient light.
      const double shade = 0.25 + 0.75 * std::exp(-(top - h(r, c)));
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = spec.albedo_rgb[ch] * shade + spec.sensor_noise_sigma * noise(rng);
        img.at(r, c, ch) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

signals::FrictionTrace make_friction_trace(const SurfaceSpec& spec, const photometric::HeightMap& h,
                                           double mm_per_pixel, const TraceKinematics& kin,
                                           std::uint64_t noise_seed) {
  spec.validate();
  require(mm_per_pixel > 0.0 && kin.path_length_mm > 0.0 && kin.speed_mm_s > 0.0 && kin.sample_rate_hz > 0.0,
          ErrorKind::Parameter, "trace kinematics must be positive");
  const auto n = static_cast<std::size_t>(std::llround(kin.path_length_mm / kin.speed_mm_s * kin.sample_rate_hz));
  require(n >= 1, ErrorKind::Parameter, "trace would contain no samples");

  const double start_px = 1.0;
  const double end_px = start_px + kin.path_length_mm / mm_per_pixel;
  require(end_px + 0.5 <= static_cast<double>(h.cols()) - 1.0, ErrorKind::Parameter,
          fmt::format("sliding path of {} mm does not fit in a field {} mm wide", kin.path_length_mm,
                      static_cast<double>(h.cols()) * mm_per_pixel));

  const std::size_t row = h.rows() / 2;
  auto profile = [&](double x_px) {
    const auto lo = static_cast<std::size_t>(std::floor(x_px));
    const std::size_t hi = std::min(lo + 1, h.cols() - 1);
    const double t = x_px - static_cast<double>(lo);
    return h(row, lo) * (1.0 - t) + h(row, hi) * t;
  };

  Rng rng(derive_seed(noise_seed, "friction-noise"));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x_mm = kin.speed_mm_s * static_cast<double>(i) / kin.sample_rate_hz;
    const double x_px = start_px + x_mm / mm_per_pixel;
    const double slope = (profile(x_px + 0.5) - profile(x_px - 0.5)) / mm_per_pixel;
    // Truncated at 3 sigma so that base > 3 sigma + gain * max slope guarantees mu > 0.
    const double eps =
        spec.friction_noise_sigma > 0.0 ? spec.friction_noise_sigma * std::clamp(noise(rng), -3.0, 3.0) : 0.0;
    mu[i] = spec.base_friction + spec.friction_texture_gain * slope + eps;
  }
  return signals::FrictionTrace(std::move(mu), kin.sample_rate_hz);
}

std::vector<SurfaceSpec> default_fabric_specs(std::size_t count, std::uint64_t seed) {
  static constexpr TextureKind kinds[] = {TextureKind::WovenSinusoid, TextureKind::KnitLattice,
                                          TextureKind::FilteredNoise};
  std::vector<SurfaceSpec> specs;
  specs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, fmt::format("fabric-{}", i)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SurfaceSpec s;
    s.texture_kind = kinds[i % 3];
    s.class_id = fmt::format("c{:02}_{}", i, to_string(s.texture_kind));
    s.spatial_period_mm = 1.5 + 2.5 * u(rng);
    s.relief_amplitude = 0.5 + 1.5 * u(rng);
    s.base_friction = 0.25 + 0.45 * u(rng);
    s.friction_texture_gain = 0.01 + 0.04 * u(rng);
    // Mostly white fabrics with a faint tint.
    const double white = 0.8 + 0.18 * u(rng);
    for (auto& a : s.albedo_rgb) a = std::clamp(white + 0.04 * (u(rng) - 0.5), 0.0, 1.0);
    s.seed = derive_seed(seed, fmt::format("fabric-seed-{}", i));
    specs.push_back(s);
  }
  return specs;
}

namespace {

json spec_to_json(const SurfaceSpec& s) {
  return {{"class_id", s.class_id},
          {"texture_kind", to_string(s.texture_kind)},
          {"spatial_period_mm", s.spatial_period_mm},
          {"relief_amplitude", s.relief_amplitude},
          {"base_friction", s.base_friction},
          {"friction_texture_gain", s.friction_texture_gain},
          {"albedo_rgb", s.albedo_rgb},
          {"friction_noise_sigma", s.friction_noise_sigma},
          {"sensor_noise_sigma", s.sensor_noise_sigma},
          {"seed", s.seed}};
}

FieldGeometry random_patch(Rng& rng, std::size_t rows, std::size_t cols, double mm_per_pixel) {
  std::uniform_real_distribution<double> where(0.0, 1000.0);
  FieldGeometry g{rows, cols, mm_per_pixel, 0.0, 0.0};
  g.origin_x_mm = where(rng);
  g.origin_y_mm = where(rng);
  return g;
}

TactileImage add_sensor_noise(TactileImage img, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return img;
  Rng rng(derive_seed(seed, "tactile-noise"));
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : img.raw()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return img;
}

}  // namespace

CorpusSummary make_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir) {
  require(config.classes.size() >= 2, ErrorKind::Parameter, "a corpus needs at least two classes");
  require(config.visual_per_class >= 1 && config.augment_per_raw >= 1, ErrorKind::Parameter,
          "visual_per_class and augment_per_raw must be at least 1");
  require(config.image_size >= photometric::kMinImageSide, ErrorKind::Parameter, "image_size must be at least 8");
  require(config.trace_window >= 1 && config.trace_window_hop >= 1, ErrorKind::Parameter,
          "trace window sizes must be positive");
  for (std::size_t i = 0; i < config.classes.size(); ++i) {
    config.classes[i].validate();
    for (std::size_t j = 0; j < i; ++j)
      require(config.classes[i].class_id != config.classes[j].class_id, ErrorKind::Parameter,
              "duplicate class id " + config.classes[i].class_id);
  }

  const std::size_t records_per_class = config.visual_per_class * config.augment_per_raw;
  const std::size_t tactile_per_class = config.tactile_per_class > 0 ? config.tactile_per_class : records_per_class;
  const auto trace_samples = static_cast<std::size_t>(std::llround(
      config.kinematics.path_length_mm / config.kinematics.speed_mm_s * config.kinematics.sample_rate_hz));
  require(trace_samples >= config.trace_window, ErrorKind::Parameter,
          "traces would be shorter than one dataset window");
  const std::size_t windows_per_trace = 1 + (trace_samples - config.trace_window) / config.trace_window_hop;
  const std::size_t traces_per_class = config.traces_per_class > 0
                                           ? config.traces_per_class
                                           : (records_per_class + windows_per_trace - 1) / windows_per_trace;

  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"visual", "tactile", "trace"}) {
    fs::create_directories(out_dir / sub, ec);
    require(!ec, ErrorKind::Io, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }

  const photometric::PhotometricCalibration cal = photometric::default_calibration();
  const std::size_t trace_cols =
      static_cast<std::size_t>(std::ceil(config.kinematics.path_length_mm / config.mm_per_pixel)) + 4;

  json classes = json::array();
  for (const SurfaceSpec& spec : config.classes) {
    json entry{{"id", spec.class_id}, {"spec", spec_to_json(spec)}};
    json visual = json::array(), tactile = json::array(), traces = json::array();

    for (std::size_t k = 0; k < config.visual_per_class; ++k) {
      Rng rng(derive_seed(config.seed, fmt::format("{}/visual/{}", spec.class_id, k)));
      const auto geom = random_patch(rng, config.image_size, config.image_size, config.mm_per_pixel);
      const auto h = make_height_field(spec, geom);
      const std::string rel = fmt::format("visual/{}_v{:03}.png", spec.class_id, k);
      io::write_png_rgb8(out_dir / rel, make_visual(spec, h, rng()));
      visual.push_back(rel);
    }
    for (std::size_t k = 0; k < tactile_per_class; ++k) {
      Rng rng(derive_seed(config.seed, fmt::format("{}/tactile/{}", spec.class_id, k)));
      const auto geom = random_patch(rng, config.image_size, config.image_size, config.mm_per_pixel);
      const auto h = make_height_field(spec, geom);
      const std::string rel = fmt::format("tactile/{}_t{:04}.png", spec.class_id, k);
      io::write_png_rgb8(out_dir / rel, add_sensor_noise(photometric::render_tactile(h, cal), spec.sensor_noise_sigma, rng()));
      tactile.push_back(rel);
    }
    for (std::size_t k = 0; k < traces_per_class; ++k) {
      Rng rng(derive_seed(config.seed, fmt::format("{}/trace/{}", spec.class_id, k)));
      const auto geom = random_patch(rng, 8, trace_cols, config.mm_per_pixel);
      const auto h = make_height_field(spec, geom);
      const std::string rel = fmt::format("trace/{}_f{:03}.csv", spec.class_id, k);
      io::write_trace_csv(out_dir / rel, make_friction_trace(spec, h, config.mm_per_pixel, config.kinematics, rng()));
      traces.push_back(rel);
    }
    entry["visual"] = std::move(visual);
    entry["tactile"] = std::move(tactile);
    entry["trace"] = std::move(traces);
    classes.push_back(std::move(entry));
  }

  CorpusSummary summary{config.classes.size(), config.classes.size() * config.visual_per_class,
                        config.classes.size() * tactile_per_class, config.classes.size() * traces_per_class,
                        config.classes.size() * records_per_class};

  json lights = json::array();
  for (const auto& l : cal.lights) lights.push_back({l.x(), l.y(), l.z()});
  const json index{
      {"format", "hapforge-raw-corpus"},
      {"version", 1},
      {"seed", config.seed},
      {"augment_per_raw", config.augment_per_raw},
      {"image_size", config.image_size},
      {"mm_per_pixel", config.mm_per_pixel},
      {"kinematics",
       {{"path_length_mm", config.kinematics.path_length_mm},
        {"speed_mm_s", config.kinematics.speed_mm_s},
        {"sample_rate_hz", config.kinematics.sample_rate_hz}}},
      {"calibration", {{"lights", lights}, {"albedo", cal.albedo}, {"max_slope", cal.max_slope}}},
      {"classes", classes},
      {"summary",
       {{"classes", summary.classes},
        {"visual", summary.visual},
        {"tactile", summary.tactile},
        {"traces", summary.traces},
        {"records", summary.records}}},
  };
  io::write_text(out_dir / kCorpusIndexName, index.dump(2) + "\n");
  return summary;
}

}  // namespace hapforge::synth
