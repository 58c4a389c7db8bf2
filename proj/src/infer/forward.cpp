#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "hapforge/core/error.hpp"
#include "hapforge/infer.hpp"

namespace hapforge::infer {
namespace {

FeatureMap zeros(Shape s) { return {s, std::vector<float>(s.numel(), 0.0f)}; }

FeatureMap conv2d(const FeatureMap& x, const Tensor& w, const Tensor* b, std::size_t stride, std::size_t pad,
                  Shape out_shape) {
  FeatureMap y = zeros(out_shape);
  const std::size_t kh = w.shape[2], kw = w.shape[3];
  const std::size_t cin = x.shape.channels;
  const auto H = static_cast<long>(x.shape.height), W = static_cast<long>(x.shape.width);
  for (std::size_t o = 0; o < out_shape.channels; ++o) {
    for (std::size_t oy = 0; oy < out_shape.height; ++oy) {
      for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
        double acc = b != nullptr ? static_cast<double>(b->values[o]) : 0.0;
        for (std::size_t i = 0; i < cin; ++i) {
          const float* wk = &w.values[((o * cin + i) * kh) * kw];
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
            if (iy < 0 || iy >= H) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
              if (ix < 0 || ix >= W) continue;
              acc += static_cast<double>(wk[ky * kw + kx]) *
                     static_cast<double>(x.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)));
            }
          }
        }
        y.at(o, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return y;
}

// Scatter form of the transposed convolution: input pixel (iy, ix) feeds output
// (iy*stride - pad + ky, ix*stride - pad + kx). Weight layout [in, out, kh, kw].
FeatureMap conv_transpose2d(const FeatureMap& x, const Tensor& w, const Tensor* b, std::size_t stride,
                            std::size_t pad, Shape out_shape) {
  const std::size_t kh = w.shape[2], kw = w.shape[3];
  const std::size_t cin = x.shape.channels, cout = out_shape.channels;
  const auto OH = static_cast<long>(out_shape.height), OW = static_cast<long>(out_shape.width);
  std::vector<double> acc(out_shape.numel(), 0.0);
  for (std::size_t i = 0; i < cin; ++i) {
    for (std::size_t iy = 0; iy < x.shape.height; ++iy) {
      for (std::size_t ix = 0; ix < x.shape.width; ++ix) {
        const double v = x.at(i, iy, ix);
        if (v == 0.0) continue;
        for (std::size_t o = 0; o < cout; ++o) {
          const float* wk = &w.values[((i * cout + o) * kh) * kw];
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const long y = static_cast<long>(iy * stride + ky) - static_cast<long>(pad);
            if (y < 0 || y >= OH) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long xx = static_cast<long>(ix * stride + kx) - static_cast<long>(pad);
              if (xx < 0 || xx >= OW) continue;
              acc[(o * out_shape.height + static_cast<std::size_t>(y)) * out_shape.width + static_cast<std::size_t>(xx)] +=
                  v * static_cast<double>(wk[ky * kw + kx]);
            }
          }
        }
      }
    }
  }
  FeatureMap out = zeros(out_shape);
  const std::size_t plane = out_shape.height * out_shape.width;
  for (std::size_t o = 0; o < cout; ++o) {
    const double bias = b != nullptr ? static_cast<double>(b->values[o]) : 0.0;
    for (std::size_t k = 0; k < plane; ++k) out.values[o * plane + k] = static_cast<float>(acc[o * plane + k] + bias);
  }
  return out;
}

FeatureMap instance_norm(FeatureMap x, const Tensor* gamma, const Tensor* beta, double eps) {
  const std::size_t plane = x.shape.height * x.shape.width;
  for (std::size_t c = 0; c < x.shape.channels; ++c) {
    float* p = &x.values[c * plane];
    double mean = 0.0;
    for (std::size_t k = 0; k < plane; ++k) mean += p[k];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t k = 0; k < plane; ++k) var += (p[k] - mean) * (p[k] - mean);
    var /= static_cast<double>(plane);
    const double inv = 1.0 / std::sqrt(var + eps);
    const double g = gamma != nullptr ? static_cast<double>(gamma->values[c]) : 1.0;
    const double b = beta != nullptr ? static_cast<double>(beta->values[c]) : 0.0;
    for (std::size_t k = 0; k < plane; ++k) p[k] = static_cast<float>((p[k] - mean) * inv * g + b);
  }
  return x;
}

FeatureMap concat(const std::vector<const FeatureMap*>& parts, Shape out_shape) {
  FeatureMap out{out_shape, {}};
  out.values.reserve(out_shape.numel());
  for (const FeatureMap* p : parts) out.values.insert(out.values.end(), p->values.begin(), p->values.end());
  return out;
}

// Reflection excludes the edge sample: index -1 maps to 1.
std::size_t reflect_index(long i, std::size_t n) {
  if (i < 0) return static_cast<std::size_t>(-i);
  if (i >= static_cast<long>(n)) return 2 * (n - 1) - static_cast<std::size_t>(i);
  return static_cast<std::size_t>(i);
}

FeatureMap pad(const FeatureMap& x, std::size_t p, PadMode mode, Shape out_shape) {
  FeatureMap y = zeros(out_shape);
  for (std::size_t c = 0; c < out_shape.channels; ++c)
    for (std::size_t oy = 0; oy < out_shape.height; ++oy)
      for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
        const long iy = static_cast<long>(oy) - static_cast<long>(p);
        const long ix = static_cast<long>(ox) - static_cast<long>(p);
        const bool inside =
            iy >= 0 && ix >= 0 && iy < static_cast<long>(x.shape.height) && ix < static_cast<long>(x.shape.width);
        if (mode == PadMode::Zero) {
          if (inside) y.at(c, oy, ox) = x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
        } else {
          y.at(c, oy, ox) = x.at(c, reflect_index(iy, x.shape.height), reflect_index(ix, x.shape.width));
        }
      }
  return y;
}

}  // namespace

FeatureMap prepare_input(const Generator& g, const VisualImage& x) {
  const InputSpec& spec = g.graph().input;
  require(spec.shape.channels == 3, ErrorKind::Shape,
          fmt::format("graph expects {} input channels, visual images have 3", spec.shape.channels));
  require(!x.empty(), ErrorKind::Validation, "empty input image");
  const RgbImage sized = x.rows() == spec.shape.height && x.cols() == spec.shape.width
                             ? x
                             : resize_bilinear(x, spec.shape.height, spec.shape.width);
  FeatureMap out = zeros(spec.shape);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < spec.shape.height; ++r)
      for (std::size_t col = 0; col < spec.shape.width; ++col)
        out.at(c, r, col) = static_cast<float>((sized.at(r, col, c) - spec.mean[c]) / spec.std[c]);
  return out;
}

FeatureMap forward(const Generator& g, const FeatureMap& x) {
  const GeneratorGraph& graph = g.graph();
  require(x.shape == graph.input.shape && x.values.size() == x.shape.numel(), ErrorKind::Shape,
          fmt::format("input is [{},{},{}], graph expects [{},{},{}]", x.shape.channels, x.shape.height, x.shape.width,
                      graph.input.shape.channels, graph.input.shape.height, graph.input.shape.width));
  const auto& shapes = g.node_shapes();
  std::vector<FeatureMap> outputs(graph.nodes.size());
  std::map<std::string, std::size_t> index;

  auto source = [&](const std::string& name) -> const FeatureMap& {
    return name == "input" ? x : outputs[index.at(name)];
  };
  auto tensor_or_null = [&](const std::string& name) -> const Tensor* {
    return name.empty() ? nullptr : &g.tensor(name);
  };

  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    const Node& n = graph.nodes[k];
    const FeatureMap& in = source(n.inputs.front());
    switch (n.op) {
      case OpKind::Conv2d:
        outputs[k] = conv2d(in, g.tensor(n.weight), tensor_or_null(n.bias), n.stride, n.padding, shapes[k]);
        break;
      case OpKind::ConvTranspose2d:
        outputs[k] = conv_transpose2d(in, g.tensor(n.weight), tensor_or_null(n.bias), n.stride, n.padding, shapes[k]);
        break;
      case OpKind::InstanceNorm:
        outputs[k] = instance_norm(in, tensor_or_null(n.weight), tensor_or_null(n.bias), n.eps);
        break;
      case OpKind::Relu:
        outputs[k] = in;
        for (auto& v : outputs[k].values) v = v > 0.0f ? v : 0.0f;
        break;
      case OpKind::LeakyRelu:
        outputs[k] = in;
        for (auto& v : outputs[k].values) v = v > 0.0f ? v : static_cast<float>(n.alpha * v);
        break;
      case OpKind::Tanh:
        outputs[k] = in;
        for (auto& v : outputs[k].values) v = static_cast<float>(std::tanh(static_cast<double>(v)));
        break;
      case OpKind::Concat: {
        std::vector<const FeatureMap*> parts;
        for (const std::string& s : n.inputs) parts.push_back(&source(s));
        outputs[k] = concat(parts, shapes[k]);
        break;
      }
      case OpKind::Pad: outputs[k] = pad(in, n.padding, n.pad_mode, shapes[k]); break;
    }
    index.emplace(n.name, k);
  }
  return std::move(outputs.back());
}

Grid<double> forward(const Generator& g, const VisualImage& x) {
  const FeatureMap y = forward(g, prepare_input(g, x));
  Grid<double> out(y.shape.height, y.shape.width);
  for (std::size_t r = 0; r < y.shape.height; ++r)
    for (std::size_t c = 0; c < y.shape.width; ++c) out(r, c) = y.at(0, r, c);
  return out;
}

photometric::HeightMap decode_height(const Generator& g_h, const Grid<double>& raw) {
  const OutputSpec& spec = g_h.graph().output;
  require(spec.kind == OutputKind::Height, ErrorKind::Validation, "archive does not describe a height generator");
  Grid<double> h(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = raw.data()[i] * spec.height.scale + spec.height.offset;
  return photometric::HeightMap(std::move(h)).canonicalized();
}

signals::SpectrogramImage decode_spectrogram_image(const Generator& g_s, const Grid<double>& raw) {
  const OutputSpec& spec = g_s.graph().output;
  require(spec.kind == OutputKind::Spectrogram, ErrorKind::Validation,
          "archive does not describe a spectrogram generator");
  const auto& d = spec.spectrogram;
  Grid<double> unit(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < unit.size(); ++i) unit.data()[i] = std::clamp(0.5 * raw.data()[i] + 0.5, 0.0, 1.0);
  signals::SpectrogramImage img;
  img.pixels = unit.rows() == d.bins && unit.cols() == d.frames ? unit : resize_bilinear(unit, d.bins, d.frames);
  img.db_floor = d.db_floor;
  img.reference_magnitude = d.reference_magnitude;
  return img;
}

signals::Spectrogram decode_spectrogram(const Generator& g_s, const signals::SpectrogramImage& image) {
  const auto& d = g_s.graph().output.spectrogram;
  return signals::image_to_magnitude(image, d.stft, d.original_length, d.sample_rate_hz);
}

GeneratedPair generate_pair(const Generator& g_h, const Generator& g_s, const VisualImage& x) {
  GeneratedPair out;
  out.height = decode_height(g_h, forward(g_h, x));
  out.spectrogram_image = decode_spectrogram_image(g_s, forward(g_s, x));
  out.spectrogram = decode_spectrogram(g_s, out.spectrogram_image);
  return out;
}

}  // namespace hapforge::infer
