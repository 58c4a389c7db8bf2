#include <charconv>
#include <string_view>

#include <fmt/format.h>

#include "hapforge/cli.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/io/formats.hpp"

namespace hapforge::cli {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingInput: return kExitMissingInput;
    case ErrorKind::Degenerate: return kExitDegenerate;
    default: return kExitValidation;
  }
}

RunConfig::RunConfig(std::string command, std::map<std::string, std::string> defaults)
    : command_(std::move(command)), values_(std::move(defaults)) {}

void RunConfig::merge_file(const std::filesystem::path& path) {
  io::Record rec;
  try {
    rec = io::parse_record(io::read_text(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
  for (const auto& [k, v] : rec) set(k, v);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::Validation,
          fmt::format("unknown setting '{}' for command {}", key, command_));
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::Validation, "no setting named " + key);
  return it->second;
}

double RunConfig::real(const std::string& key) const { return io::parse_real(get(key), key); }

long long RunConfig::integer(const std::string& key) const { return io::parse_integer(get(key), key); }

std::size_t RunConfig::count(const std::string& key) const {
  const long long v = integer(key);
  require(v >= 0, ErrorKind::Validation, key + " must not be negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  const std::string& text = get(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::Validation,
          fmt::format("'{}' is not an unsigned integer for {}", text, key));
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  fail(ErrorKind::Validation, fmt::format("'{}' is not a boolean for {}", v, key));
}

std::uint64_t RunConfig::module_seed(const std::string& module) const { return derive_seed(u64("seed"), module); }

std::string RunConfig::dump(const std::vector<std::string>& seeded_modules) const {
  std::string out = fmt::format("# hapforge {} resolved configuration\n", command_);
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  out += "# module seeds: splitmix64(seed ^ splitmix64(fnv1a(module)))\n";
  for (const std::string& m : seeded_modules) out += fmt::format("# seed.{}={}\n", m, module_seed(m));
  return out;
}

std::map<std::string, std::string> default_config(const std::string& command) {
  std::map<std::string, std::string> d{{"seed", "0"}, {"out", ""}};
  if (command == "synth") {
    d.insert({{"classes", "15"},
              {"visual_per_class", "5"},
              {"augment_per_raw", "45"},
              {"image_size", "64"},
              {"mm_per_pixel", "0.25"}});
  } else if (command == "build") {
    d.insert({{"raw", ""},
              {"split_unit", "raw"},
              {"augment_per_raw", "0"},
              {"rotation_range_deg", "180"},
              {"flip_probability", "0.5"},
              {"noise_sigma", "0.01"},
              {"stft_window", "64"},
              {"stft_hop", "16"},
              {"trace_window", "128"},
              {"trace_window_hop", "64"}});
  } else if (command == "render") {
    d.insert({{"manifest", ""},
              {"split", "test"},
              {"ground_truth", "false"},
              {"weights_h", ""},
              {"weights_s", ""},
              {"display_size", ""},
              {"resample", "nearest"},
              {"gl_iterations", "64"}});
  } else if (command == "eval") {
    d.insert({{"manifest", ""}, {"split", "test"}, {"weights_h", ""}, {"weights_s", ""}, {"gl_iterations", "64"}});
  } else if (command == "plot") {
    d.insert({{"width", "640"}, {"height", "240"}});
  } else {
    fail(ErrorKind::Validation, "unknown command " + command);
  }
  return d;
}

compose::DisplaySize parse_display_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  require(x != std::string::npos, ErrorKind::Validation, "display size must look like WIDTHxHEIGHT");
  const long long w = io::parse_integer(std::string_view(text).substr(0, x), "display width");
  const long long h = io::parse_integer(std::string_view(text).substr(x + 1), "display height");
  require(w > 0 && h > 0, ErrorKind::Validation, "display size must be positive");
  return {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
}

std::string format_summary(const Summary& summary) {
  std::string out;
  for (const auto& [k, v] : summary) {
    if (!out.empty()) out += ' ';
    out += k + "=" + v;
  }
  return out;
}

}  // namespace hapforge::cli
