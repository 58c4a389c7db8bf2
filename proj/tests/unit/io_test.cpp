#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "hapforge/io/formats.hpp"
#include "hapforge/io/png.hpp"
#include "test_support.hpp"

namespace hf = hapforge;
namespace io = hapforge::io;
namespace sg = hapforge::signals;
using hapforge::Grid;
using hapforge::test::random_grid;
using hapforge::test::TempDir;

TEST(Spectrum, ComplexRoundTripAndLayout) {
  TempDir dir;
  Grid<std::complex<double>> g(3, 2);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = {0.5 * static_cast<double>(i), -0.25 * static_cast<double>(i)};
  io::write_spectrum(dir / "c.v2hs", g, true);
  const auto bytes = io::read_text(dir / "c.v2hs");
  // 20-byte header + 6 complex f32 values.
  ASSERT_EQ(bytes.size(), 20u + 6u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "V2HS");
  std::uint32_t header[4];
  std::memcpy(header, bytes.data() + 4, 16);
  EXPECT_EQ(header[0], 1u);
  EXPECT_EQ(header[1], 3u);
  EXPECT_EQ(header[2], 2u);
  EXPECT_EQ(header[3], 1u);
  float third_im;
  std::memcpy(&third_im, bytes.data() + 20 + 2 * 8 + 4, 4);
  EXPECT_EQ(third_im, -0.5f);
  const auto back = io::read_spectrum(dir / "c.v2hs");
  EXPECT_TRUE(back.is_complex);
  EXPECT_EQ(back.values, g);
}

TEST(Spectrum, RealMatrixRoundTripAndErrors) {
  TempDir dir;
  const auto m = random_grid(4, 5, 3);
  io::write_real_matrix(dir / "m.v2hs", m);
  const auto back = io::read_real_matrix(dir / "m.v2hs");
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], static_cast<double>(static_cast<float>(m.data()[i])));

  Grid<std::complex<double>> g(1, 1, {1.0, 1.0});
  io::write_spectrum(dir / "c.v2hs", g, true);
  EXPECT_HF_ERROR(io::read_real_matrix(dir / "c.v2hs"), Validation);

  auto bytes = io::read_text(dir / "m.v2hs");
  io::write_text(dir / "bad_magic.v2hs", "X" + bytes.substr(1));
  EXPECT_HF_ERROR(io::read_spectrum(dir / "bad_magic.v2hs"), BadMagic);
  auto wrong_version = bytes;
  wrong_version[4] = 9;
  io::write_text(dir / "bad_version.v2hs", wrong_version);
  EXPECT_HF_ERROR(io::read_spectrum(dir / "bad_version.v2hs"), BadVersion);
  io::write_text(dir / "short.v2hs", bytes.substr(0, bytes.size() - 2));
  EXPECT_HF_ERROR(io::read_spectrum(dir / "short.v2hs"), Validation);
  EXPECT_HF_ERROR(io::read_spectrum(dir / "absent.v2hs"), MissingInput);
}

TEST(Spectrogram, RoundTripReattachesMetadata) {
  TempDir dir;
  const auto params = sg::default_stft_params();
  const auto spec = sg::stft(sg::FrictionTrace(hapforge::test::random_vector(128, 1)), params);
  io::write_spectrogram(dir / "s.v2hs", spec);
  const auto back = io::read_spectrogram(dir / "s.v2hs", params, 128, 60.0);
  EXPECT_FALSE(back.magnitude_only);
  EXPECT_EQ(back.frame_count(), spec.frame_count());
  EXPECT_HF_ERROR(io::read_spectrogram(dir / "s.v2hs", params, 256, 60.0), Shape);
}

TEST(TraceCsv, FormatAndRoundTrip) {
  TempDir dir;
  const sg::FrictionTrace t({0.25, 0.5, 0.125}, 60.0);
  io::write_trace_csv(dir / "t.csv", t);
  EXPECT_EQ(io::read_text(dir / "t.csv"), "time_s,mu\n0.000000,0.25\n0.016667,0.5\n0.033333,0.125\n");
  const auto back = io::read_trace_csv(dir / "t.csv");
  EXPECT_EQ(back.sample_rate_hz(), 60.0);
  EXPECT_TRUE(std::equal(back.samples().begin(), back.samples().end(), t.samples().begin()));

  const auto x = hapforge::test::random_vector(480, 4, 0.2, 0.6);
  io::write_trace_csv(dir / "long.csv", sg::FrictionTrace(x));
  const auto y = io::read_trace_csv(dir / "long.csv");
  EXPECT_EQ(y.sample_rate_hz(), 60.0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples()[i], x[i], 1e-9);
}

TEST(TraceCsv, RecoversNonIntegerRates) {
  TempDir dir;
  for (double rate : {59.94, 125.5, 1000.0, 7.25}) {
    io::write_trace_csv(dir / "r.csv", sg::FrictionTrace(hapforge::test::random_vector(300, 2), rate));
    EXPECT_EQ(io::read_trace_csv(dir / "r.csv").sample_rate_hz(), rate);
  }
  io::write_trace_csv(dir / "one.csv", sg::FrictionTrace({0.3}, 30.0));
  EXPECT_EQ(io::read_trace_csv(dir / "one.csv").size(), 1u);
}

TEST(TraceCsv, MalformedAndMissing) {
  TempDir dir;
  io::write_text(dir / "bad.csv", "time_s,mu\n0.0;0.3\n");
  EXPECT_HF_ERROR(io::read_trace_csv(dir / "bad.csv"), Validation);
  io::write_text(dir / "empty.csv", "time_s,mu\n");
  EXPECT_HF_ERROR(io::read_trace_csv(dir / "empty.csv"), Validation);
  EXPECT_HF_ERROR(io::read_trace_csv(dir / "none.csv"), MissingInput);
}

TEST(HeightMapPng, RoundTripWithinOneLevel) {
  TempDir dir;
  const auto z = random_grid(17, 23, 8, 1.0, 4.0);
  const hf::photometric::HeightMap h(z);
  io::write_height_map(dir / "h.png", h);
  EXPECT_TRUE(std::filesystem::exists(dir / "h.scale.txt"));
  const auto back = io::read_height_map(dir / "h.png");
  const auto canon = h.canonicalized();
  const double step = canon.max() / 65535.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    EXPECT_LE(std::abs(back.heights().data()[i] - canon.heights().data()[i]), 0.5 * step + 1e-15);
  EXPECT_EQ(back.min(), 0.0);
}

TEST(HeightMapPng, FlatMap) {
  TempDir dir;
  io::write_height_map(dir / "flat.png", hf::photometric::HeightMap(Grid<double>(8, 8, 3.0)));
  const auto flat = io::read_height_map(dir / "flat.png");
  for (double v : flat.heights().values()) EXPECT_EQ(v, 0.0);
}

TEST(Png, Gray8Gray16AndRgbRoundTrip) {
  TempDir dir;
  Grid<std::uint8_t> g8(5, 7);
  for (std::size_t i = 0; i < g8.size(); ++i) g8.data()[i] = static_cast<std::uint8_t>(i * 7);
  io::write_png_gray8(dir / "g8.png", g8);
  EXPECT_EQ(io::read_png_gray8(dir / "g8.png"), g8);
  const auto widened = io::read_png_gray16(dir / "g8.png");
  EXPECT_EQ(widened(0, 1), 7 * 257);

  Grid<std::uint16_t> g16(3, 4);
  for (std::size_t i = 0; i < g16.size(); ++i) g16.data()[i] = static_cast<std::uint16_t>(i * 5000 + 3);
  io::write_png_gray16(dir / "g16.png", g16);
  EXPECT_EQ(io::read_png_gray16(dir / "g16.png"), g16);

  hf::RgbImage rgb(4, 3);
  for (std::size_t i = 0; i < rgb.raw().size(); ++i) rgb.raw()[i] = static_cast<double>(i * 7) / 255.0;
  io::write_png_rgb8(dir / "rgb.png", rgb);
  const auto back = io::read_png_rgb8(dir / "rgb.png");
  for (std::size_t i = 0; i < rgb.raw().size(); ++i) EXPECT_NEAR(back.raw()[i], rgb.raw()[i], 1e-12);
  const auto grey = io::read_png_gray8(dir / "rgb.png");
  EXPECT_EQ(grey.rows(), 4u);

  EXPECT_HF_ERROR(io::read_png_rgb8(dir / "missing.png"), MissingInput);
  io::write_text(dir / "junk.png", "not a png at all");
  EXPECT_ANY_THROW(io::read_png_rgb8(dir / "junk.png"));
}

TEST(Png, Quantize8RoundsHalfUpAndClamps) {
  Grid<double> u(1, 4);
  u(0, 0) = -0.2;
  u(0, 1) = 0.5 / 255.0;
  u(0, 2) = 127.5 / 255.0;
  u(0, 3) = 1.3;
  const auto q = io::quantize8(u);
  EXPECT_EQ(q(0, 0), 0);
  EXPECT_EQ(q(0, 1), 1);
  EXPECT_EQ(q(0, 2), 128);
  EXPECT_EQ(q(0, 3), 255);
}

TEST(Record, ParseWriteAndNumbers) {
  const auto r = io::parse_record("# comment\n  a = 1 \n\nb=two words\nc=\n");
  EXPECT_EQ(r.at("a"), "1");
  EXPECT_EQ(r.at("b"), "two words");
  EXPECT_EQ(r.at("c"), "");
  EXPECT_HF_ERROR(io::parse_record("novalue\n"), Validation);
  EXPECT_HF_ERROR(io::parse_record("=3\n"), Validation);

  TempDir dir;
  io::write_record(dir / "r.txt", {{"z", "1"}, {"a", "2"}});
  EXPECT_EQ(io::read_text(dir / "r.txt"), "a=2\nz=1\n");
  EXPECT_EQ(io::read_record(dir / "r.txt"), (io::Record{{"a", "2"}, {"z", "1"}}));

  for (double v : {0.1, 1.0 / 3.0, -2.5e-7, 12345.678}) EXPECT_EQ(io::parse_real(io::format_real(v), "v"), v);
  EXPECT_HF_ERROR(io::parse_real("1.5x", "v"), Validation);
  EXPECT_HF_ERROR(io::parse_real("nan", "v"), Validation);
  EXPECT_EQ(io::parse_integer("-42", "n"), -42);
  EXPECT_HF_ERROR(io::parse_integer("4.2", "n"), Validation);
}

TEST(Normalization, RoundTrip) {
  TempDir dir;
  const hf::compose::NormalizationContext ctx{0.0123, 1.75, 3};
  io::write_normalization(dir / "n.txt", ctx);
  const auto back = io::read_normalization(dir / "n.txt");
  EXPECT_EQ(back.global_min, ctx.global_min);
  EXPECT_EQ(back.global_max, ctx.global_max);
  EXPECT_EQ(back.object_count, 3u);
}

TEST(Text, MissingFileIsMissingInput) { EXPECT_HF_ERROR(io::read_text("/nonexistent/dir/file.txt"), MissingInput); }
