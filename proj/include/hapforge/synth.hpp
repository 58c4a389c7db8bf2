#pragma once

// Procedural stand-in for a physical fabric corpus: relief fields, their visual and
// tactile appearance, and friction traces recorded along a straight sliding path.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hapforge/core/image.hpp"
#include "hapforge/photometric.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::synth {

enum class TextureKind { WovenSinusoid, KnitLattice, FilteredNoise };

std::string to_string(TextureKind kind);
TextureKind texture_kind_from_string(const std::string& name);

struct SurfaceSpec {
  std::string class_id = "fabric";
  TextureKind texture_kind = TextureKind::WovenSinusoid;
  double spatial_period_mm = 2.0;
  double relief_amplitude = 1.0;  // peak-to-valley, normalized height units
  double base_friction = 0.4;
  double friction_texture_gain = 0.05;  // friction per unit slope (height units / mm)
  std::array<double, 3> albedo_rgb{0.9, 0.9, 0.9};
  double friction_noise_sigma = 0.005;
  double sensor_noise_sigma = 0.01;
  std::uint64_t seed = 0;

  /// Throws Parameter when a field is outside its documented range.
  void validate() const;
};

/// Sampling window onto the (conceptually infinite) fabric.
struct FieldGeometry {
  std::size_t rows = 64;
  std::size_t cols = 64;
  double mm_per_pixel = 0.25;
  double origin_x_mm = 0.0;
  double origin_y_mm = 0.0;
};

/// Relief with exactly relief_amplitude peak-to-valley, minimum 0.
photometric::HeightMap make_height_field(const SurfaceSpec& spec, const FieldGeometry& geometry);

/// Albedo modulated by ambient occlusion of the relief, plus seeded sensor noise.
VisualImage make_visual(const SurfaceSpec& spec, const photometric::HeightMap& h,
                        std::uint64_t noise_seed);
inline VisualImage make_visual(const SurfaceSpec& spec, const photometric::HeightMap& h) {
  return make_visual(spec, h, spec.seed);
}

struct TraceKinematics {
  double path_length_mm = 40.0;
  double speed_mm_s = 5.0;
  double sample_rate_hz = signals::kNominalSampleRateHz;
};

/// base_friction + gain * (slope along the path) + noise, sampled along the middle row
/// of `h` starting one pixel in from the left edge. Throws Parameter if the path does
/// not fit in the field.
signals::FrictionTrace make_friction_trace(const SurfaceSpec& spec, const photometric::HeightMap& h,
                                           double mm_per_pixel, const TraceKinematics& kinematics,
                                           std::uint64_t noise_seed);

/// Varied fabric-like classes (kinds cycle, parameters drawn from `seed`).
std::vector<SurfaceSpec> default_fabric_specs(std::size_t count, std::uint64_t seed);

struct CorpusConfig {
  std::vector<SurfaceSpec> classes;
  std::size_t visual_per_class = 5;
  std::size_t augment_per_raw = 45;
  /// 0 = one tactile sample per final record (visual_per_class * augment_per_raw).
  std::size_t tactile_per_class = 0;
  /// 0 = enough traces for one spectrogram window per final record.
  std::size_t traces_per_class = 0;
  std::size_t image_size = 64;
  double mm_per_pixel = 0.25;
  TraceKinematics kinematics;
  /// Window length/overlap the dataset builder will cut traces into; used to size traces_per_class.
  std::size_t trace_window = 128;
  std::size_t trace_window_hop = 64;
  std::uint64_t seed = 0;
};

struct CorpusSummary {
  std::size_t classes = 0;
  std::size_t visual = 0;
  std::size_t tactile = 0;
  std::size_t traces = 0;
  /// Records a dataset build with augment_per_raw will produce.
  std::size_t records = 0;
};

inline constexpr const char* kCorpusIndexName = "corpus.json";

/// Writes a raw corpus: corpus.json, visual/*.png, tactile/*.png, trace/*.csv.
/// Visual and tactile samples of a class come from independent fabric locations.
CorpusSummary make_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir);

}  // namespace hapforge::synth
