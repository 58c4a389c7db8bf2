#pragma once

// Turns a raw corpus (see synth::make_corpus) into a training-ready dataset directory:
// augmented visual images, tactile-derived height maps, trace windows and their
// spectrograms, and a class-stratified train/val/test assignment.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hapforge/core/grid.hpp"
#include "hapforge/core/image.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::dataset {

// ---- augmentation ---------------------------------------------------------------

struct AugmentPolicy {
  /// Rotation drawn uniformly from [-range, +range] degrees.
  double rotation_range_deg = 180.0;
  bool allow_horizontal_flip = true;
  bool allow_vertical_flip = true;
  double flip_probability = 0.5;
  double noise_sigma = 0.01;

  static AugmentPolicy identity() { return {0.0, false, false, 0.0, 0.0}; }
  /// Throws Parameter for negative sigma/range or a probability outside [0,1].
  void validate() const;
};

/// One concrete draw from a policy. Applied as flips, then rotation, then noise.
struct Augmentation {
  double rotation_deg = 0.0;
  bool flip_horizontal = false;
  bool flip_vertical = false;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  bool is_identity() const noexcept {
    return rotation_deg == 0.0 && !flip_horizontal && !flip_vertical && noise_sigma == 0.0;
  }
};

Augmentation draw_augmentation(const AugmentPolicy& policy, std::uint64_t seed);

/// Mirror left-right (columns reversed).
RgbImage flip_horizontal(const RgbImage& img);
/// Mirror top-bottom (rows reversed).
RgbImage flip_vertical(const RgbImage& img);

/// Counter-clockwise rotation about the image centre with bilinear sampling; pixels
/// that come from outside the frame are filled by reflecting about the border.
/// Multiples of 90 degrees on square images are exact permutations.
Grid<double> rotate(const Grid<double>& img, double degrees);
RgbImage rotate(const RgbImage& img, double degrees);

/// Output clamped to [0,1]. Throws Parameter for negative noise sigma.
RgbImage apply_augmentation(const RgbImage& img, const Augmentation& aug);

/// draw_augmentation + apply_augmentation; deterministic per (policy, seed).
RgbImage augment(const RgbImage& img, const AugmentPolicy& policy, std::uint64_t seed);

// ---- splitting ------------------------------------------------------------------

enum class Split { Train, Val, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& name);

struct SplitRatio {
  unsigned train = 8;
  unsigned val = 1;
  unsigned test = 1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

/// floor for train and val, remainder to test. Throws Parameter for n < 3 or a zero ratio.
SplitSizes split_sizes(std::size_t n, const SplitRatio& ratio);

/// Class-stratified assignment of n = class_of.size() units. Global sizes follow
/// split_sizes(n); inside every class the shares track the ratio as closely as the
/// global totals allow. Deterministic for a given seed.
std::vector<Split> stratified_split(std::span<const std::size_t> class_of, const SplitRatio& ratio,
                                    std::uint64_t seed);

/// Unstratified convenience form (all units in one class).
std::vector<Split> split(std::size_t n, const SplitRatio& ratio, std::uint64_t seed);

// ---- build ----------------------------------------------------------------------

enum class SplitUnit {
  Raw,     // augmentations of one raw image share a split (no leakage)
  Record,  // each record assigned independently
};

std::string to_string(SplitUnit u);
SplitUnit split_unit_from_string(const std::string& name);

struct BuildConfig {
  AugmentPolicy policy;
  /// 0 = take augment_per_raw from the corpus index.
  std::size_t augment_per_raw = 0;
  SplitRatio ratio;
  SplitUnit split_unit = SplitUnit::Raw;
  signals::StftParams stft;
  std::size_t trace_window = 128;
  std::size_t trace_window_hop = 64;  // 50% overlap
  std::uint64_t seed = 0;
};

struct AugmentationInfo {
  bool none = true;
  double rotation_deg = 0.0;
  bool flip_horizontal = false;
  bool flip_vertical = false;
  double noise_sigma = 0.0;
};

struct SampleRecord {
  std::string id;
  std::string class_id;
  std::string raw_id;
  // Paths are relative to the dataset root.
  std::string visual_path;
  std::string tactile_path;
  std::string height_path;
  std::string trace_path;
  std::size_t trace_window_start = 0;
  std::size_t trace_window_length = 0;
  std::string spectrogram_path;
  Split split = Split::Train;
  AugmentationInfo augmentation;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::uint64_t seed = 0;
  SplitSizes counts;
  SplitUnit split_unit = SplitUnit::Raw;
  SplitRatio ratio;
  signals::StftParams stft;
  double sample_rate_hz = signals::kNominalSampleRateHz;
  std::size_t trace_window = 0;
  std::size_t trace_window_hop = 0;
  std::string provenance;

  std::size_t size() const noexcept { return records.size(); }
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kLockName = ".build.lock";

/// Reads raw_dir/corpus.json and writes the dataset into out_dir (manifest.json last).
/// Running twice with identical inputs produces byte-identical output files.
DatasetManifest build(const std::filesystem::path& raw_dir, const std::filesystem::path& out_dir,
                      const BuildConfig& config);

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace hapforge::dataset
