#pragma once

// On-disk records shared by the dataset layout, the CLI and the parity fixtures.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "hapforge/compose.hpp"
#include "hapforge/core/grid.hpp"
#include "hapforge/photometric.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::io {

// ---- spectrogram binary -------------------------------------------------------
//
//   "V2HS" | u32 version | u32 rows | u32 cols | u32 flag (0 magnitude, 1 complex)
//   | f32 payload, row-major, (re, im) interleaved when complex
//
// All integers and floats little-endian.

inline constexpr char kSpectrogramMagic[4] = {'V', '2', 'H', 'S'};
inline constexpr std::uint32_t kSpectrogramVersion = 1;

struct SpectrumFile {
  Grid<std::complex<double>> values;
  bool is_complex = false;
};

void write_spectrum(const std::filesystem::path& path, const Grid<std::complex<double>>& values,
                    bool is_complex);
void write_real_matrix(const std::filesystem::path& path, const Grid<double>& values);
SpectrumFile read_spectrum(const std::filesystem::path& path);
/// Reads a magnitude-flagged file as a real matrix (Validation error for complex files).
Grid<double> read_real_matrix(const std::filesystem::path& path);

/// Writes the spectrogram bins (complex unless magnitude_only).
void write_spectrogram(const std::filesystem::path& path, const signals::Spectrogram& spec);
/// Reattaches STFT metadata that the binary does not carry.
signals::Spectrogram read_spectrogram(const std::filesystem::path& path, const signals::StftParams& params,
                                      std::size_t original_length, double sample_rate_hz);

// ---- friction trace CSV -------------------------------------------------------
//
// Header "time_s,mu", then one "<time>,<mu>" row per sample, '.' decimal, LF endings.

void write_trace_csv(const std::filesystem::path& path, const signals::FrictionTrace& trace);
signals::FrictionTrace read_trace_csv(const std::filesystem::path& path);

// ---- height maps --------------------------------------------------------------
//
// 16-bit grayscale PNG plus "<stem>.scale.txt" holding scale=<height units per level>.
// Heights are canonicalized before quantization, so level 0 is the lowest point.

std::filesystem::path height_sidecar_path(const std::filesystem::path& png_path);
void write_height_map(const std::filesystem::path& png_path, const photometric::HeightMap& h);
photometric::HeightMap read_height_map(const std::filesystem::path& png_path);

// ---- key=value records --------------------------------------------------------

using Record = std::map<std::string, std::string>;

/// One "key=value" per line, keys sorted.
void write_record(const std::filesystem::path& path, const Record& record);
/// Skips blank lines and '#' comments; trims whitespace around keys and values.
Record parse_record(std::string_view text);
Record read_record(const std::filesystem::path& path);

std::string format_real(double v);
double parse_real(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

void write_normalization(const std::filesystem::path& path, const compose::NormalizationContext& ctx);
compose::NormalizationContext read_normalization(const std::filesystem::path& path);

// ---- small helpers ------------------------------------------------------------

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace hapforge::io
