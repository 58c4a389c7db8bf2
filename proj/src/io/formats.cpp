#include "hapforge/io/formats.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "hapforge/core/error.hpp"
#include "hapforge/io/png.hpp"

namespace hapforge::io {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
public:
  Reader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return std::bit_cast<float>(u32()); }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  void need(std::size_t n) const {
    require(pos_ + n <= bytes_.size(), ErrorKind::Validation, what_ + " is truncated");
  }
  std::string_view bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(std::filesystem::exists(path) ? ErrorKind::Io : ErrorKind::MissingInput,
         "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

void write_spectrum(const std::filesystem::path& path, const Grid<std::complex<double>>& values,
                    bool is_complex) {
  std::string out(kSpectrogramMagic, 4);
  put_u32(out, kSpectrogramVersion);
  put_u32(out, static_cast<std::uint32_t>(values.rows()));
  put_u32(out, static_cast<std::uint32_t>(values.cols()));
  put_u32(out, is_complex ? 1u : 0u);
  for (const auto& v : values.values()) {
    put_f32(out, v.real());
    if (is_complex) put_f32(out, v.imag());
  }
  write_text(path, out);
}

void write_real_matrix(const std::filesystem::path& path, const Grid<double>& values) {
  Grid<std::complex<double>> c(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.size(); ++i) c.data()[i] = values.data()[i];
  write_spectrum(path, c, false);
}

SpectrumFile read_spectrum(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  Reader in(bytes, path.string());
  require(in.remaining() >= 4 && std::memcmp(bytes.data(), kSpectrogramMagic, 4) == 0, ErrorKind::BadMagic,
          path.string() + " is not a V2HS file");
  in.take(4);
  const std::uint32_t version = in.u32();
  require(version == kSpectrogramVersion, ErrorKind::BadVersion,
          path.string() + " has unsupported version " + std::to_string(version));
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  const std::uint32_t flag = in.u32();
  require(flag <= 1, ErrorKind::Validation, path.string() + " has an unknown value flag");
  SpectrumFile out{Grid<std::complex<double>>(rows, cols), flag == 1};
  for (auto& v : out.values.values()) {
    const double re = in.f32();
    const double im = out.is_complex ? in.f32() : 0.0;
    v = {re, im};
  }
  require(in.remaining() == 0, ErrorKind::Validation, path.string() + " has trailing bytes");
  return out;
}

Grid<double> read_real_matrix(const std::filesystem::path& path) {
  const SpectrumFile f = read_spectrum(path);
  require(!f.is_complex, ErrorKind::Validation, path.string() + " holds complex values");
  Grid<double> out(f.values.rows(), f.values.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = f.values.data()[i].real();
  return out;
}

void write_spectrogram(const std::filesystem::path& path, const signals::Spectrogram& spec) {
  write_spectrum(path, spec.bins, !spec.magnitude_only);
}

signals::Spectrogram read_spectrogram(const std::filesystem::path& path, const signals::StftParams& params,
                                      std::size_t original_length, double sample_rate_hz) {
  SpectrumFile f = read_spectrum(path);
  signals::Spectrogram spec;
  spec.bins = std::move(f.values);
  spec.magnitude_only = !f.is_complex;
  spec.params = params;
  spec.original_length = original_length;
  spec.sample_rate_hz = sample_rate_hz;
  spec.cola_ok = params.satisfies_cola();
  spec.validate();
  return spec;
}

void write_trace_csv(const std::filesystem::path& path, const signals::FrictionTrace& trace) {
  std::string out = "time_s,mu\n";
  const auto s = trace.samples();
  for (std::size_t i = 0; i < s.size(); ++i)
    out += fmt::format("{:.6f},{:.9g}\n", static_cast<double>(i) / trace.sample_rate_hz(), s[i]);
  write_text(path, out);
}

signals::FrictionTrace read_trace_csv(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::vector<double> times;
  std::vector<double> mu;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "time_s,mu") continue;
    const auto comma = line.find(',');
    require(comma != std::string_view::npos, ErrorKind::Validation,
            fmt::format("{}:{}: expected two columns", path.string(), line_no));
    times.push_back(parse_real(line.substr(0, comma), "time_s"));
    mu.push_back(parse_real(line.substr(comma + 1), "mu"));
  }
  require(!mu.empty(), ErrorKind::Validation, path.string() + " holds no samples");
  if (times.size() < 2) return signals::FrictionTrace(std::move(mu));
  require(times.back() > times.front(), ErrorKind::Validation, path.string() + ": time column does not increase");
  const double estimate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  // Times carry 6 decimals, so short traces only bound the rate. Take the coarsest rounding
  // of the estimate that regenerates every timestamp as written.
  auto reproduces = [&](double rate) {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(std::round(static_cast<double>(i) / rate * 1e6) - std::round(times[i] * 1e6)) > 1.0) return false;
    return true;
  };
  for (double scale = 1.0; scale <= 1e6; scale *= 10.0) {
    const double rate = std::round(estimate * scale) / scale;
    if (rate > 0.0 && reproduces(rate)) return signals::FrictionTrace(std::move(mu), rate);
  }
  return signals::FrictionTrace(std::move(mu), estimate);
}

std::filesystem::path height_sidecar_path(const std::filesystem::path& png_path) {
  auto p = png_path;
  p.replace_extension(".scale.txt");
  return p;
}

void write_height_map(const std::filesystem::path& png_path, const photometric::HeightMap& h) {
  const photometric::HeightMap canon = h.canonicalized();
  const double top = canon.max();
  const double scale = top > 0.0 ? top / 65535.0 : 1.0;
  Grid<std::uint16_t> levels(canon.rows(), canon.cols());
  for (std::size_t i = 0; i < levels.size(); ++i)
    levels.data()[i] = static_cast<std::uint16_t>(
        std::clamp(std::floor(canon.heights().data()[i] / scale + 0.5), 0.0, 65535.0));
  write_png_gray16(png_path, levels);
  write_record(height_sidecar_path(png_path), {{"scale", format_real(scale)}});
}

photometric::HeightMap read_height_map(const std::filesystem::path& png_path) {
  const Grid<std::uint16_t> levels = read_png_gray16(png_path);
  const Record sidecar = read_record(height_sidecar_path(png_path));
  const auto it = sidecar.find("scale");
  require(it != sidecar.end(), ErrorKind::Validation, "height sidecar lacks a scale entry");
  const double scale = parse_real(it->second, "scale");
  require(scale > 0.0, ErrorKind::Validation, "height scale must be positive");
  Grid<double> h(levels.rows(), levels.cols());
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = levels.data()[i] * scale;
  return photometric::HeightMap(std::move(h));
}

void write_record(const std::filesystem::path& path, const Record& record) {
  std::string out;
  for (const auto& [k, v] : record) out += k + "=" + v + "\n";
  write_text(path, out);
}

Record parse_record(std::string_view text) {
  Record out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorKind::Validation,
            fmt::format("line {}: expected key=value", line_no));
    const std::string_view key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorKind::Validation, fmt::format("line {}: empty key", line_no));
    out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

Record read_record(const std::filesystem::path& path) { return parse_record(read_text(path)); }

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

double parse_real(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v), ErrorKind::Validation,
          fmt::format("'{}' is not a finite number for {}", text, what));
  return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::Validation,
          fmt::format("'{}' is not an integer for {}", text, what));
  return v;
}

void write_normalization(const std::filesystem::path& path, const compose::NormalizationContext& ctx) {
  write_record(path, {{"global_min", format_real(ctx.global_min)},
                      {"global_max", format_real(ctx.global_max)},
                      {"object_count", std::to_string(ctx.object_count)}});
}

compose::NormalizationContext read_normalization(const std::filesystem::path& path) {
  const Record r = read_record(path);
  auto get = [&](const char* key) {
    const auto it = r.find(key);
    require(it != r.end(), ErrorKind::Validation, path.string() + " lacks " + key);
    return it->second;
  };
  compose::NormalizationContext ctx{parse_real(get("global_min"), "global_min"),
                                    parse_real(get("global_max"), "global_max"),
                                    static_cast<std::size_t>(parse_integer(get("object_count"), "object_count"))};
  ctx.validate();
  return ctx;
}

}  // namespace hapforge::io
