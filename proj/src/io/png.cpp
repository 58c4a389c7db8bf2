#include "hapforge/io/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "hapforge/core/error.hpp"

namespace hapforge::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) {
    const bool reading = mode[0] == 'r';
    fail(reading && !std::filesystem::exists(path) ? ErrorKind::MissingInput : ErrorKind::Io,
         std::string("cannot open ") + path.string());
  }
  return f;
}

// Rows are laid out before setjmp so no destructor is skipped by longjmp.
void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int color_type,
               int bit_depth, const std::vector<std::vector<png_byte>>& rows) {
  File f = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "libpng initialisation failed");
  }
  std::vector<png_bytep> pointers(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) pointers[r] = const_cast<png_bytep>(rows[r].data());

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "failed writing PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, pointers.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct Decoded {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // interleaved
};

Decoded read_png(const std::filesystem::path& path) {
  File f = open(path, "rb");
  png_byte header[8] = {};
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    fail(ErrorKind::Validation, path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Io, "libpng initialisation failed");
  }
  Decoded out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Io, "failed reading PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_PACKING, nullptr);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  png_bytepp rows = png_get_rows(png, info);
  out.samples.resize(out.width * out.height * static_cast<std::size_t>(out.channels));
  std::size_t k = 0;
  for (std::size_t r = 0; r < out.height; ++r) {
    const png_bytep row = rows[r];
    for (std::size_t i = 0; i < out.width * static_cast<std::size_t>(out.channels); ++i) {
      out.samples[k++] = out.bit_depth == 16
                             ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                             : row[i];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

// Channel layout after EXPAND: 1 gray, 2 gray+alpha, 3 rgb, 4 rgba.
std::array<double, 3> rgb_at(const Decoded& d, std::size_t pixel, double scale) {
  const std::size_t base = pixel * static_cast<std::size_t>(d.channels);
  if (d.channels <= 2) {
    const double g = d.samples[base] * scale;
    return {g, g, g};
  }
  return {d.samples[base] * scale, d.samples[base + 1] * scale, d.samples[base + 2] * scale};
}

}  // namespace

void write_png_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& pixels) {
  require(!pixels.empty(), ErrorKind::Validation, "cannot write an empty image");
  std::vector<std::vector<png_byte>> rows(pixels.rows());
  for (std::size_t r = 0; r < pixels.rows(); ++r) rows[r].assign(pixels.row(r).begin(), pixels.row(r).end());
  write_png(path, pixels.cols(), pixels.rows(), PNG_COLOR_TYPE_GRAY, 8, rows);
}

void write_png_gray16(const std::filesystem::path& path, const Grid<std::uint16_t>& pixels) {
  require(!pixels.empty(), ErrorKind::Validation, "cannot write an empty image");
  std::vector<std::vector<png_byte>> rows(pixels.rows(), std::vector<png_byte>(pixels.cols() * 2));
  for (std::size_t r = 0; r < pixels.rows(); ++r)
    for (std::size_t c = 0; c < pixels.cols(); ++c) {
      rows[r][2 * c] = static_cast<png_byte>(pixels(r, c) >> 8);
      rows[r][2 * c + 1] = static_cast<png_byte>(pixels(r, c) & 0xFF);
    }
  write_png(path, pixels.cols(), pixels.rows(), PNG_COLOR_TYPE_GRAY, 16, rows);
}

void write_png_rgb8(const std::filesystem::path& path, const RgbImage& image) {
  require(!image.empty(), ErrorKind::Validation, "cannot write an empty image");
  std::vector<std::vector<png_byte>> rows(image.rows(), std::vector<png_byte>(image.cols() * 3));
  for (std::size_t r = 0; r < image.rows(); ++r)
    for (std::size_t c = 0; c < image.cols(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        rows[r][3 * c + ch] =
            static_cast<png_byte>(std::floor(std::clamp(image.at(r, c, ch), 0.0, 1.0) * 255.0 + 0.5));
  write_png(path, image.cols(), image.rows(), PNG_COLOR_TYPE_RGB, 8, rows);
}

Grid<std::uint8_t> read_png_gray8(const std::filesystem::path& path) {
  const Decoded d = read_png(path);
  require(d.bit_depth == 8, ErrorKind::Validation, path.string() + " is not an 8-bit PNG");
  Grid<std::uint8_t> out(d.height, d.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (d.channels <= 2) {
      out.data()[i] = static_cast<std::uint8_t>(d.samples[i * static_cast<std::size_t>(d.channels)]);
    } else {
      const auto rgb = rgb_at(d, i, 1.0);
      const double y = kLumaWeights[0] * rgb[0] + kLumaWeights[1] * rgb[1] + kLumaWeights[2] * rgb[2];
      out.data()[i] = static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

Grid<std::uint16_t> read_png_gray16(const std::filesystem::path& path) {
  const Decoded d = read_png(path);
  require(d.channels <= 2, ErrorKind::Validation, path.string() + " is not a grayscale PNG");
  Grid<std::uint16_t> out(d.height, d.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint16_t v = d.samples[i * static_cast<std::size_t>(d.channels)];
    out.data()[i] = d.bit_depth == 16 ? v : static_cast<std::uint16_t>(v * 257);
  }
  return out;
}

RgbImage read_png_rgb8(const std::filesystem::path& path) {
  const Decoded d = read_png(path);
  require(d.bit_depth == 8, ErrorKind::Validation, path.string() + " is not an 8-bit PNG");
  RgbImage out(d.height, d.width);
  for (std::size_t r = 0; r < d.height; ++r)
    for (std::size_t c = 0; c < d.width; ++c) {
      const auto rgb = rgb_at(d, r * d.width + c, 1.0 / 255.0);
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = rgb[ch];
    }
  return out;
}

Grid<std::uint8_t> quantize8(const Grid<double>& unit) {
  Grid<std::uint8_t> out(unit.rows(), unit.cols());
  for (std::size_t i = 0; i < unit.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::floor(std::clamp(unit.data()[i], 0.0, 1.0) * 255.0 + 0.5));
  return out;
}

}  // namespace hapforge::io
