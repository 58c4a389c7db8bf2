#pragma once

// The hapforge executable: subcommands over the library, flat key=value run configs,
// and the mapping from error kinds to process exit codes.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hapforge/compose.hpp"
#include "hapforge/core/error.hpp"
#include "hapforge/photometric.hpp"
#include "hapforge/signals.hpp"

namespace hapforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitDegenerate = 3;

int exit_code_for(ErrorKind kind) noexcept;

/// Resolved parameters of one run. Only keys that have a default are accepted, so a
/// typo in a config file is an error rather than a silently ignored setting.
class RunConfig {
public:
  RunConfig(std::string command, std::map<std::string, std::string> defaults);

  const std::string& command() const noexcept { return command_; }

  /// Flat UTF-8 key=value, '#' comments. Throws Validation on unknown keys.
  void merge_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::string& get(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool flag(const std::string& key) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Seed for one module, derived from the run seed.
  std::uint64_t module_seed(const std::string& module) const;
  /// The resolved config plus derived module seeds, as written to run_config.txt.
  std::string dump(const std::vector<std::string>& seeded_modules) const;

private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

std::map<std::string, std::string> default_config(const std::string& command);

/// "WxH" -> DisplaySize; Validation on malformed text or zero dimensions.
compose::DisplaySize parse_display_size(const std::string& text);

using Summary = std::vector<std::pair<std::string, std::string>>;
std::string format_summary(const Summary& summary);

Summary cmd_synth(const RunConfig& config);
Summary cmd_build(const RunConfig& config);
Summary cmd_render(const RunConfig& config, const std::vector<std::filesystem::path>& inputs);
Summary cmd_eval(const RunConfig& config);
Summary cmd_plot(const RunConfig& config, const std::vector<std::filesystem::path>& inputs);

// ---- figures --------------------------------------------------------------------

/// Time-series line plot on a white background with a light frame.
Grid<std::uint8_t> plot_trace(const signals::FrictionTrace& trace, std::size_t width, std::size_t height);
/// Spectrogram image with low frequencies at the bottom, each cell scaled up.
Grid<std::uint8_t> plot_spectrogram(const signals::SpectrogramImage& image, std::size_t cell_rows,
                                    std::size_t cell_cols);
/// Relief rendering: normalized height blended with a single-light hillshade.
Grid<std::uint8_t> plot_height(const photometric::HeightMap& h);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hapforge::cli
