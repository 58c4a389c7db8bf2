#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "hapforge/core/error.hpp"
#include "hapforge/infer.hpp"

namespace hapforge::infer {

using nlohmann::json;

std::string to_string(OpKind op) {
  switch (op) {
    case OpKind::Conv2d: return "conv2d";
    case OpKind::ConvTranspose2d: return "conv_transpose2d";
    case OpKind::InstanceNorm: return "instance_norm";
    case OpKind::Relu: return "relu";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Concat: return "concat";
    case OpKind::Pad: return "pad";
  }
  return "unknown";
}

namespace {

OpKind op_from_string(const std::string& s) {
  for (OpKind k : {OpKind::Conv2d, OpKind::ConvTranspose2d, OpKind::InstanceNorm, OpKind::Relu, OpKind::LeakyRelu,
                   OpKind::Tanh, OpKind::Concat, OpKind::Pad})
    if (to_string(k) == s) return k;
  fail(ErrorKind::Validation, "unsupported op '" + s + "'");
}

const char* output_kind_name(OutputKind k) {
  switch (k) {
    case OutputKind::Height: return "height";
    case OutputKind::Spectrogram: return "spectrogram";
    case OutputKind::Raw: return "raw";
  }
  return "raw";
}

Shape shape_from_json(const json& j) {
  require(j.is_array() && j.size() == 3, ErrorKind::Validation, "shapes are [channels, height, width]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

json shape_to_json(const Shape& s) { return json::array({s.channels, s.height, s.width}); }

}  // namespace

GeneratorGraph parse_descriptor(const std::string& json_text) {
  GeneratorGraph g;
  try {
    const json doc = json::parse(json_text);
    const json& in = doc.at("input");
    g.input.shape = shape_from_json(in.at("shape"));
    g.input.mean = in.at("mean").get<std::vector<double>>();
    g.input.std = in.at("std").get<std::vector<double>>();

    const json& out = doc.at("output");
    g.output.shape = shape_from_json(out.at("shape"));
    const auto range = out.at("range").get<std::vector<double>>();
    require(range.size() == 2, ErrorKind::Validation, "output range must be [min, max]");
    g.output.range_min = range[0];
    g.output.range_max = range[1];
    const std::string kind = out.value("kind", std::string("raw"));
    if (kind == "height") {
      g.output.kind = OutputKind::Height;
      const json& d = out.at("decode");
      g.output.height = {d.at("scale").get<double>(), d.at("offset").get<double>()};
    } else if (kind == "spectrogram") {
      g.output.kind = OutputKind::Spectrogram;
      const json& d = out.at("decode");
      auto& s = g.output.spectrogram;
      s.bins = d.at("bins").get<std::size_t>();
      s.frames = d.at("frames").get<std::size_t>();
      s.db_floor = d.at("db_floor").get<double>();
      s.reference_magnitude = d.at("reference_magnitude").get<double>();
      s.original_length = d.at("original_length").get<std::size_t>();
      s.stft.window_length = d.at("window_length").get<std::size_t>();
      s.stft.hop_length = d.at("hop_length").get<std::size_t>();
      s.stft.fft_length = d.at("fft_length").get<std::size_t>();
      const std::string window = d.value("window", std::string("hann"));
      require(window == "hann" || window == "rectangular", ErrorKind::Validation, "unknown window " + window);
      s.stft.window = window == "hann" ? signals::WindowKind::Hann : signals::WindowKind::Rectangular;
      s.sample_rate_hz = d.value("sample_rate_hz", signals::kNominalSampleRateHz);
    } else {
      require(kind == "raw", ErrorKind::Validation, "unknown output kind '" + kind + "'");
    }

    for (const json& jn : doc.at("nodes")) {
      Node n;
      n.name = jn.at("name").get<std::string>();
      n.op = op_from_string(jn.at("op").get<std::string>());
      n.inputs = jn.at("inputs").get<std::vector<std::string>>();
      n.weight = jn.value("weight", std::string());
      n.bias = jn.value("bias", std::string());
      n.stride = jn.value("stride", std::size_t{1});
      n.padding = jn.value("padding", std::size_t{0});
      n.output_padding = jn.value("output_padding", std::size_t{0});
      n.alpha = jn.value("alpha", 0.2);
      n.eps = jn.value("eps", 1e-5);
      const std::string mode = jn.value("mode", std::string("zero"));
      require(mode == "zero" || mode == "reflect", ErrorKind::Validation,
              "node " + n.name + ": unknown pad mode '" + mode + "'");
      n.pad_mode = mode == "reflect" ? PadMode::Reflect : PadMode::Zero;
      g.nodes.push_back(std::move(n));
    }
    if (doc.contains("metadata")) {
      const json& meta = doc.at("metadata");
      g.name = meta.value("name", std::string());
      if (meta.contains("training_seed")) g.training_seed = meta.at("training_seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed graph descriptor: ") + e.what());
  }
  return g;
}

std::string descriptor_to_json(const GeneratorGraph& g) {
  json nodes = json::array();
  for (const Node& n : g.nodes) {
    json jn{{"name", n.name}, {"op", to_string(n.op)}, {"inputs", n.inputs}};
    if (!n.weight.empty()) jn["weight"] = n.weight;
    if (!n.bias.empty()) jn["bias"] = n.bias;
    switch (n.op) {
      case OpKind::ConvTranspose2d:
        jn["output_padding"] = n.output_padding;
        [[fallthrough]];
      case OpKind::Conv2d:
        jn["stride"] = n.stride;
        jn["padding"] = n.padding;
        break;
      case OpKind::LeakyRelu: jn["alpha"] = n.alpha; break;
      case OpKind::InstanceNorm: jn["eps"] = n.eps; break;
      case OpKind::Pad:
        jn["padding"] = n.padding;
        jn["mode"] = n.pad_mode == PadMode::Reflect ? "reflect" : "zero";
        break;
      default: break;
    }
    nodes.push_back(std::move(jn));
  }
  json out{{"shape", shape_to_json(g.output.shape)},
           {"range", {g.output.range_min, g.output.range_max}},
           {"kind", output_kind_name(g.output.kind)}};
  if (g.output.kind == OutputKind::Height) {
    out["decode"] = {{"scale", g.output.height.scale}, {"offset", g.output.height.offset}};
  } else if (g.output.kind == OutputKind::Spectrogram) {
    const auto& s = g.output.spectrogram;
    out["decode"] = {{"bins", s.bins},
                     {"frames", s.frames},
                     {"db_floor", s.db_floor},
                     {"reference_magnitude", s.reference_magnitude},
                     {"original_length", s.original_length},
                     {"window_length", s.stft.window_length},
                     {"hop_length", s.stft.hop_length},
                     {"fft_length", s.stft.fft_length},
                     {"window", s.stft.window == signals::WindowKind::Hann ? "hann" : "rectangular"},
                     {"sample_rate_hz", s.sample_rate_hz}};
  }
  json meta = json::object();
  if (!g.name.empty()) meta["name"] = g.name;
  if (g.training_seed) meta["training_seed"] = *g.training_seed;
  const json doc{{"input", {{"shape", shape_to_json(g.input.shape)}, {"mean", g.input.mean}, {"std", g.input.std}}},
                 {"output", out},
                 {"nodes", nodes},
                 {"metadata", meta}};
  return doc.dump();
}

Generator::Generator(GeneratorGraph graph, std::vector<Tensor> tensors)
    : graph_(std::move(graph)), tensors_(std::move(tensors)) {
  const InputSpec& in = graph_.input;
  require(in.shape.numel() > 0, ErrorKind::Validation, "input shape must be non-empty");
  require(in.mean.size() == in.shape.channels && in.std.size() == in.shape.channels, ErrorKind::Validation,
          "input normalization needs one mean and std per channel");
  for (double s : in.std) require(s > 0.0 && std::isfinite(s), ErrorKind::Validation, "input std must be positive");
  require(!graph_.nodes.empty(), ErrorKind::Validation, "graph has no nodes");
  require(graph_.output.range_min < graph_.output.range_max, ErrorKind::Validation, "output range is empty");

  std::map<std::string, const Tensor*> by_name;
  for (const Tensor& t : tensors_) {
    require(t.values.size() == t.numel(), ErrorKind::Shape, "tensor " + t.name + " payload does not match its shape");
    require(by_name.emplace(t.name, &t).second, ErrorKind::Validation, "duplicate tensor " + t.name);
  }
  std::set<std::string> used;
  auto use = [&](const Node& n, const std::string& name, std::vector<std::size_t> expected) {
    const auto it = by_name.find(name);
    require(it != by_name.end(), ErrorKind::Validation,
            fmt::format("node {} references missing tensor {}", n.name, name));
    require(used.insert(name).second, ErrorKind::Validation,
            fmt::format("tensor {} is referenced more than once (again by node {})", name, n.name));
    require(it->second->shape == expected, ErrorKind::Shape,
            fmt::format("tensor {} has shape [{}], node {} expects [{}]", name, fmt::join(it->second->shape, ","),
                        n.name, fmt::join(expected, ",")));
  };

  std::map<std::string, std::size_t> index;
  shapes_.reserve(graph_.nodes.size());
  for (std::size_t i = 0; i < graph_.nodes.size(); ++i) {
    const Node& n = graph_.nodes[i];
    require(!n.name.empty() && n.name != "input", ErrorKind::Validation, fmt::format("node {} has a reserved or empty name", i));
    require(!index.contains(n.name), ErrorKind::Validation, "duplicate node name " + n.name);
    std::vector<Shape> ins;
    for (const std::string& src : n.inputs) {
      if (src == "input") {
        ins.push_back(in.shape);
        continue;
      }
      const auto it = index.find(src);
      // Only earlier nodes are visible, which also rules out cycles.
      require(it != index.end(), ErrorKind::Validation,
              fmt::format("node {} reads {} which is not an earlier node", n.name, src));
      ins.push_back(shapes_[it->second]);
    }
    const std::size_t want_inputs = n.op == OpKind::Concat ? std::max<std::size_t>(2, n.inputs.size()) : 1;
    require(n.inputs.size() == want_inputs, ErrorKind::Validation,
            fmt::format("node {} ({}) has {} inputs", n.name, to_string(n.op), n.inputs.size()));
    const bool takes_weights = n.op == OpKind::Conv2d || n.op == OpKind::ConvTranspose2d || n.op == OpKind::InstanceNorm;
    require(takes_weights || (n.weight.empty() && n.bias.empty()), ErrorKind::Validation,
            "node " + n.name + " cannot take weight tensors");

    const Shape x = ins.front();
    Shape y = x;
    switch (n.op) {
      case OpKind::Conv2d: {
        require(!n.weight.empty(), ErrorKind::Validation, "conv node " + n.name + " has no weight");
        const auto it = by_name.find(n.weight);
        require(it != by_name.end(), ErrorKind::Validation,
                fmt::format("node {} references missing tensor {}", n.name, n.weight));
        require(it->second->shape.size() == 4, ErrorKind::Shape,
                fmt::format("tensor {} for node {} must be 4-D [out,in,kh,kw]", n.weight, n.name));
        const auto& w = it->second->shape;
        use(n, n.weight, {w[0], x.channels, w[2], w[3]});
        if (!n.bias.empty()) use(n, n.bias, {w[0]});
        require(n.stride >= 1, ErrorKind::Validation, "node " + n.name + " has stride 0");
        require(x.height + 2 * n.padding >= w[2] && x.width + 2 * n.padding >= w[3], ErrorKind::Shape,
                "node " + n.name + ": kernel larger than padded input");
        y = {w[0], (x.height + 2 * n.padding - w[2]) / n.stride + 1, (x.width + 2 * n.padding - w[3]) / n.stride + 1};
        break;
      }
      case OpKind::ConvTranspose2d: {
        require(!n.weight.empty(), ErrorKind::Validation, "conv node " + n.name + " has no weight");
        const auto it = by_name.find(n.weight);
        require(it != by_name.end(), ErrorKind::Validation,
                fmt::format("node {} references missing tensor {}", n.name, n.weight));
        require(it->second->shape.size() == 4, ErrorKind::Shape,
                fmt::format("tensor {} for node {} must be 4-D [in,out,kh,kw]", n.weight, n.name));
        const auto& w = it->second->shape;
        use(n, n.weight, {x.channels, w[1], w[2], w[3]});
        if (!n.bias.empty()) use(n, n.bias, {w[1]});
        require(n.stride >= 1 && n.output_padding < n.stride, ErrorKind::Validation,
                "node " + n.name + ": need stride >= 1 and output_padding < stride");
        const std::size_t full_h = (x.height - 1) * n.stride + w[2] + n.output_padding;
        const std::size_t full_w = (x.width - 1) * n.stride + w[3] + n.output_padding;
        require(full_h > 2 * n.padding && full_w > 2 * n.padding, ErrorKind::Shape,
                "node " + n.name + ": padding removes the whole output");
        y = {w[1], full_h - 2 * n.padding, full_w - 2 * n.padding};
        break;
      }
      case OpKind::InstanceNorm:
        require(n.eps > 0.0, ErrorKind::Validation, "node " + n.name + ": eps must be positive");
        require(n.weight.empty() == n.bias.empty(), ErrorKind::Validation,
                "node " + n.name + ": affine instance norm needs both weight and bias");
        if (!n.weight.empty()) {
          use(n, n.weight, {x.channels});
          use(n, n.bias, {x.channels});
        }
        break;
      case OpKind::Concat:
        y.channels = 0;
        for (const Shape& s : ins) {
          require(s.height == x.height && s.width == x.width, ErrorKind::Shape,
                  fmt::format("node {}: concat inputs differ in spatial size", n.name));
          y.channels += s.channels;
        }
        break;
      case OpKind::Pad:
        if (n.pad_mode == PadMode::Reflect)
          require(n.padding < x.height && n.padding < x.width, ErrorKind::Shape,
                  "node " + n.name + ": reflect padding must be smaller than the input");
        y.height += 2 * n.padding;
        y.width += 2 * n.padding;
        break;
      case OpKind::LeakyRelu:
        require(std::isfinite(n.alpha), ErrorKind::Validation, "node " + n.name + ": alpha must be finite");
        break;
      case OpKind::Relu:
      case OpKind::Tanh: break;
    }
    index.emplace(n.name, i);
    shapes_.push_back(y);
  }

  for (const Tensor& t : tensors_)
    require(used.contains(t.name), ErrorKind::Validation, "tensor " + t.name + " is never referenced");
  require(shapes_.back() == graph_.output.shape, ErrorKind::Shape,
          fmt::format("graph produces [{},{},{}] but the output spec says [{},{},{}]", shapes_.back().channels,
                      shapes_.back().height, shapes_.back().width, graph_.output.shape.channels,
                      graph_.output.shape.height, graph_.output.shape.width));
  if (graph_.output.range_min == -1.0 && graph_.output.range_max == 1.0)
    require(graph_.nodes.back().op == OpKind::Tanh, ErrorKind::Validation,
            "output range [-1,1] requires a final tanh");
  if (graph_.output.kind == OutputKind::Spectrogram) {
    const auto& s = graph_.output.spectrogram;
    s.stft.validate();
    require(s.bins == s.stft.bin_count() && s.frames == s.stft.frame_count(s.original_length),
            ErrorKind::Validation, "spectrogram decode size disagrees with its STFT parameters");
    require(s.reference_magnitude > 0.0 && s.db_floor < 0.0, ErrorKind::Validation,
            "spectrogram decode needs a positive reference and a negative dB floor");
  }
}

const Tensor& Generator::tensor(const std::string& name) const {
  for (const Tensor& t : tensors_)
    if (t.name == name) return t;
  fail(ErrorKind::Validation, "no tensor named " + name);
}

Generator from_archive(const WeightArchive& archive) {
  return Generator(parse_descriptor(archive.descriptor), archive.tensors);
}

Generator load(const std::filesystem::path& path) {
  const WeightArchive archive = read_archive(path);
  try {
    return from_archive(archive);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

WeightArchive to_archive(const Generator& g) { return {descriptor_to_json(g.graph()), g.tensors()}; }

}  // namespace hapforge::infer
