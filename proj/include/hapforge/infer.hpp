#pragma once

// Forward-only interpreter for exported generator networks: the V2HW weight archive,
// a graph descriptor over a fixed operator set, and CHW float execution.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hapforge/core/grid.hpp"
#include "hapforge/core/image.hpp"
#include "hapforge/photometric.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::infer {

// ---- archive --------------------------------------------------------------------
//
//   "V2HW" | u32 version | u32 descriptor length | UTF-8 JSON descriptor
//   | u32 tensor count | per tensor: u16 name length, name, u8 ndim, u32 dims[ndim],
//     f32 payload (row-major) | u32 CRC-32 of every preceding byte
//
// Little-endian throughout.

inline constexpr char kArchiveMagic[4] = {'V', '2', 'H', 'W'};
inline constexpr std::uint32_t kArchiveVersion = 1;

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t numel() const noexcept;
};

struct WeightArchive {
  std::string descriptor;
  std::vector<Tensor> tensors;  // file order
};

std::string encode_archive(const WeightArchive& archive);
void write_archive(const std::filesystem::path& path, const WeightArchive& archive);
/// Checks magic (BadMagic), version (BadVersion) and CRC (Checksum) in that order, then parses.
WeightArchive decode_archive(const std::string& bytes);
WeightArchive read_archive(const std::filesystem::path& path);

// ---- graph ----------------------------------------------------------------------

enum class OpKind { Conv2d, ConvTranspose2d, InstanceNorm, Relu, LeakyRelu, Tanh, Concat, Pad };

std::string to_string(OpKind op);

enum class PadMode { Reflect, Zero };

struct Node {
  std::string name;
  OpKind op = OpKind::Relu;
  /// Node names; "input" denotes the graph input.
  std::vector<std::string> inputs;
  std::string weight;  // tensor name, empty if unused
  std::string bias;    // tensor name, empty if unused
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;
  double alpha = 0.2;   // leaky_relu slope
  double eps = 1e-5;    // instance_norm
  PadMode pad_mode = PadMode::Zero;
};

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t numel() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class OutputKind { Height, Spectrogram, Raw };

struct HeightDecoding {
  double scale = 1.0;
  double offset = 0.0;
};

struct SpectrogramDecoding {
  std::size_t bins = 33;
  std::size_t frames = 5;
  double db_floor = signals::kDefaultDbFloor;
  double reference_magnitude = 1.0;
  std::size_t original_length = 128;
  signals::StftParams stft;
  double sample_rate_hz = signals::kNominalSampleRateHz;
};

struct InputSpec {
  Shape shape{3, 64, 64};
  std::vector<double> mean{0.5, 0.5, 0.5};
  std::vector<double> std{0.5, 0.5, 0.5};
};

struct OutputSpec {
  Shape shape{1, 64, 64};
  double range_min = -1.0;
  double range_max = 1.0;
  OutputKind kind = OutputKind::Raw;
  HeightDecoding height;
  SpectrogramDecoding spectrogram;
};

struct GeneratorGraph {
  InputSpec input;
  OutputSpec output;
  std::vector<Node> nodes;  // topological order; the last node is the output
  std::optional<std::uint64_t> training_seed;
  std::string name;
};

/// Parses the JSON descriptor (Validation on malformed content).
GeneratorGraph parse_descriptor(const std::string& json_text);
std::string descriptor_to_json(const GeneratorGraph& graph);

/// A graph whose shapes, tensor references and output range have been checked.
/// Immutable once built, so concurrent forward() calls are safe.
class Generator {
public:
  /// Static validation: nodes only read earlier nodes, every archive tensor is used
  /// exactly once, weight shapes agree with channel flow, spatial sizes stay positive,
  /// the final node produces output.shape, and a [-1,1] output ends in tanh.
  /// Throws Shape naming the tensor or node on mismatch, Validation otherwise.
  Generator(GeneratorGraph graph, std::vector<Tensor> tensors);

  const GeneratorGraph& graph() const noexcept { return graph_; }
  const std::vector<Shape>& node_shapes() const noexcept { return shapes_; }
  const Tensor& tensor(const std::string& name) const;
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

private:
  GeneratorGraph graph_;
  std::vector<Tensor> tensors_;
  std::vector<Shape> shapes_;
};

Generator load(const std::filesystem::path& path);
Generator from_archive(const WeightArchive& archive);
WeightArchive to_archive(const Generator& g);

/// CHW activations.
struct FeatureMap {
  Shape shape;
  std::vector<float> values;

  float& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * shape.height + y) * shape.width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * shape.height + y) * shape.width + x];
  }
};

/// Bilinear resize to the input shape, then per-channel (x - mean) / std.
FeatureMap prepare_input(const Generator& g, const VisualImage& x);

/// Runs the graph on an already prepared input. Throws Shape if `x` does not match.
FeatureMap forward(const Generator& g, const FeatureMap& x);
/// prepare_input + forward; returns channel 0 of the output.
Grid<double> forward(const Generator& g, const VisualImage& x);

struct GeneratedPair {
  photometric::HeightMap height;          // de-normalized, canonicalized
  signals::SpectrogramImage spectrogram_image;
  signals::Spectrogram spectrogram;       // magnitude-only
};

/// Decoding of raw generator outputs according to each archive's output spec.
photometric::HeightMap decode_height(const Generator& g_h, const Grid<double>& raw);
signals::SpectrogramImage decode_spectrogram_image(const Generator& g_s, const Grid<double>& raw);
signals::Spectrogram decode_spectrogram(const Generator& g_s, const signals::SpectrogramImage& image);

GeneratedPair generate_pair(const Generator& g_h, const Generator& g_s, const VisualImage& x);

}  // namespace hapforge::infer
