#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "hapforge/core/error.hpp"
#include "hapforge/core/rng.hpp"
#include "hapforge/dataset.hpp"
#include "hapforge/io/formats.hpp"
#include "hapforge/io/png.hpp"
#include "hapforge/photometric.hpp"
#include "hapforge/synth.hpp"

namespace hapforge::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SplitUnit u) { return u == SplitUnit::Raw ? "raw" : "record"; }

SplitUnit split_unit_from_string(const std::string& name) {
  if (name == "raw") return SplitUnit::Raw;
  if (name == "record") return SplitUnit::Record;
  fail(ErrorKind::Parameter, "unknown split unit '" + name + "' (expected raw or record)");
}

namespace {

const char* window_name(signals::WindowKind w) { return w == signals::WindowKind::Hann ? "hann" : "rectangular"; }

signals::WindowKind window_from_name(const std::string& s) {
  if (s == "hann") return signals::WindowKind::Hann;
  if (s == "rectangular") return signals::WindowKind::Rectangular;
  fail(ErrorKind::Validation, "unknown window '" + s + "'");
}

// Exclusive ownership of the output directory for the duration of a build.
class LockFile {
public:
  explicit LockFile(fs::path path) : path_(std::move(path)) {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    require(f != nullptr, ErrorKind::Io,
            "cannot take build lock " + path_.string() + " (another build running, or a stale lock)");
    std::fclose(f);
  }
  ~LockFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

private:
  fs::path path_;
};

struct RawClass {
  std::string id;
  std::vector<std::string> visual;
  std::vector<std::string> tactile;
  std::vector<std::string> height;  // precomputed maps, used instead of tactile when present
  std::vector<std::string> trace;
};

struct RawCorpus {
  std::vector<RawClass> classes;
  std::size_t augment_per_raw = 0;
  photometric::PhotometricCalibration calibration = photometric::default_calibration();
};

std::vector<std::string> string_list(const json& entry, const char* key) {
  std::vector<std::string> out;
  if (!entry.contains(key)) return out;
  for (const auto& v : entry.at(key)) out.push_back(v.get<std::string>());
  return out;
}

RawCorpus read_corpus(const fs::path& raw_dir) {
  const fs::path index = raw_dir / synth::kCorpusIndexName;
  require(fs::exists(index), ErrorKind::MissingInput,
          "raw corpus " + raw_dir.string() + " has no " + synth::kCorpusIndexName);
  RawCorpus corpus;
  json doc;
  try {
    doc = json::parse(io::read_text(index));
    corpus.augment_per_raw = doc.value("augment_per_raw", std::size_t{1});
    if (doc.contains("calibration")) {
      const json& cal = doc.at("calibration");
      const auto& lights = cal.at("lights");
      require(lights.size() == 3, ErrorKind::Validation, "calibration needs exactly three lights");
      for (std::size_t i = 0; i < 3; ++i)
        corpus.calibration.lights[i] = {lights[i][0].get<double>(), lights[i][1].get<double>(),
                                        lights[i][2].get<double>()};
      corpus.calibration.albedo = cal.value("albedo", 1.0);
      corpus.calibration.max_slope = cal.value("max_slope", 5.0);
    }
    for (const json& entry : doc.at("classes")) {
      RawClass c;
      c.id = entry.at("id").get<std::string>();
      c.visual = string_list(entry, "visual");
      c.tactile = string_list(entry, "tactile");
      c.height = string_list(entry, "height");
      c.trace = string_list(entry, "trace");
      corpus.classes.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, index.string() + ": " + e.what());
  }
  corpus.calibration.validate();
  require(corpus.classes.size() >= 2, ErrorKind::Validation,
          index.string() + " must list at least two classes");
  for (const RawClass& c : corpus.classes) {
    require(!c.visual.empty(), ErrorKind::MissingInput, "class " + c.id + " has no visual images");
    require(!c.tactile.empty() || !c.height.empty(), ErrorKind::MissingInput,
            "class " + c.id + " has neither tactile images nor height maps");
    require(!c.trace.empty(), ErrorKind::MissingInput, "class " + c.id + " has no friction traces");
  }
  return corpus;
}

void copy_into(const fs::path& from, const fs::path& to) {
  io::write_text(to, io::read_text(from));
}

json augmentation_json(const AugmentationInfo& a) {
  if (a.none) return "none";
  return {{"rotation_deg", a.rotation_deg},
          {"flip_horizontal", a.flip_horizontal},
          {"flip_vertical", a.flip_vertical},
          {"noise_sigma", a.noise_sigma}};
}

}  // namespace

DatasetManifest build(const fs::path& raw_dir, const fs::path& out_dir, const BuildConfig& config) {
  config.policy.validate();
  config.stft.validate();
  require(config.trace_window >= config.stft.window_length, ErrorKind::Parameter,
          "trace window must hold at least one STFT window");
  require(config.trace_window_hop >= 1, ErrorKind::Parameter, "trace window hop must be positive");

  const RawCorpus corpus = read_corpus(raw_dir);
  const std::size_t per_raw = config.augment_per_raw > 0 ? config.augment_per_raw : corpus.augment_per_raw;
  require(per_raw >= 1, ErrorKind::Parameter, "augment_per_raw must be at least 1");

  std::error_code ec;
  for (const char* sub : {"visual", "tactile", "height", "trace", "spec"}) {
    fs::create_directories(out_dir / sub, ec);
    require(!ec, ErrorKind::Io, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  LockFile lock(out_dir / kLockName);

  DatasetManifest m;
  m.seed = config.seed;
  m.split_unit = config.split_unit;
  m.ratio = config.ratio;
  m.stft = config.stft;
  m.trace_window = config.trace_window;
  m.trace_window_hop = config.trace_window_hop;
  m.provenance = fmt::format("hapforge dataset build; raw corpus {} classes; {} augmentations per raw image",
                             corpus.classes.size(), per_raw);

  std::optional<double> sample_rate;
  std::vector<std::size_t> record_raw_unit;

  for (const RawClass& cls : corpus.classes) {
    // Trace windows of this class, in file order.
    struct Window {
      std::string rel;
      std::size_t start;
      signals::FrictionTrace trace;
    };
    std::vector<Window> windows;
    std::vector<std::string> trace_rel(cls.trace.size());
    for (std::size_t t = 0; t < cls.trace.size(); ++t) {
      const signals::FrictionTrace trace = io::read_trace_csv(raw_dir / cls.trace[t]);
      require(trace.size() >= config.trace_window, ErrorKind::Length,
              fmt::format("trace {} of class {} has {} samples, fewer than one window of {}", cls.trace[t], cls.id,
                          trace.size(), config.trace_window));
      if (!sample_rate) sample_rate = trace.sample_rate_hz();
      require(*sample_rate == trace.sample_rate_hz(), ErrorKind::Validation,
              "trace " + cls.trace[t] + " has a different sample rate from the rest of the corpus");
      trace_rel[t] = "trace/" + fs::path(cls.trace[t]).filename().string();
      copy_into(raw_dir / cls.trace[t], out_dir / trace_rel[t]);
      for (std::size_t s = 0; s + config.trace_window <= trace.size(); s += config.trace_window_hop) {
        const auto samples = trace.samples().subspan(s, config.trace_window);
        windows.push_back({trace_rel[t], s,
                           signals::FrictionTrace(std::vector<double>(samples.begin(), samples.end()),
                                                  trace.sample_rate_hz())});
      }
    }

    // Tactile images and their height maps, produced once per source file.
    const bool passthrough = !cls.height.empty();
    const std::size_t n_tactile = passthrough ? cls.height.size() : cls.tactile.size();
    std::vector<std::string> tactile_rel(n_tactile), height_rel(n_tactile);
    for (std::size_t k = 0; k < n_tactile; ++k) {
      if (passthrough) {
        const fs::path src = raw_dir / cls.height[k];
        height_rel[k] = "height/" + src.filename().string();
        const photometric::HeightMap h = io::read_height_map(src);
        io::write_height_map(out_dir / height_rel[k], h);
        if (k < cls.tactile.size()) {
          tactile_rel[k] = "tactile/" + fs::path(cls.tactile[k]).filename().string();
          copy_into(raw_dir / cls.tactile[k], out_dir / tactile_rel[k]);
        }
        continue;
      }
      const fs::path src = raw_dir / cls.tactile[k];
      tactile_rel[k] = "tactile/" + src.filename().string();
      const TactileImage t = io::read_png_rgb8(src);
      copy_into(src, out_dir / tactile_rel[k]);
      const auto estimate = photometric::estimate_gradients(t, corpus.calibration);
      const photometric::HeightMap h = photometric::integrate_heights(estimate.field);
      height_rel[k] = "height/" + src.stem().string() + ".png";
      io::write_height_map(out_dir / height_rel[k], h);
    }

    for (std::size_t v = 0; v < cls.visual.size(); ++v) {
      const RgbImage visual = io::read_png_rgb8(raw_dir / cls.visual[v]);
      const std::string raw_id = fmt::format("{}_{:02}", cls.id, v);
      const std::size_t raw_unit = record_raw_unit.empty() ? 0 : record_raw_unit.back() + 1;
      for (std::size_t a = 0; a < per_raw; ++a) {
        const std::size_t k = v * per_raw + a;
        SampleRecord r;
        r.id = fmt::format("{}_{:02}", raw_id, a);
        r.class_id = cls.id;
        r.raw_id = raw_id;

        RgbImage out_visual = visual;
        if (a > 0) {
          const Augmentation aug = draw_augmentation(config.policy, derive_seed(config.seed, r.id));
          out_visual = apply_augmentation(visual, aug);
          r.augmentation = {aug.is_identity(), aug.rotation_deg, aug.flip_horizontal, aug.flip_vertical,
                            aug.noise_sigma};
        }
        r.visual_path = "visual/" + r.id + ".png";
        io::write_png_rgb8(out_dir / r.visual_path, out_visual);

        r.tactile_path = tactile_rel[k % n_tactile];
        r.height_path = height_rel[k % n_tactile];

        const Window& w = windows[k % windows.size()];
        r.trace_path = w.rel;
        r.trace_window_start = w.start;
        r.trace_window_length = config.trace_window;
        r.spectrogram_path = "spec/" + r.id + ".v2hs";
        io::write_spectrogram(out_dir / r.spectrogram_path, signals::stft(w.trace, config.stft));

        m.records.push_back(std::move(r));
        record_raw_unit.push_back(raw_unit);
      }
    }
  }
  m.sample_rate_hz = sample_rate.value_or(signals::kNominalSampleRateHz);

  // Assignment: stratified by class over raw images or over individual records.
  std::map<std::string, std::size_t> class_index;
  for (const RawClass& c : corpus.classes) class_index.emplace(c.id, class_index.size());
  std::vector<std::size_t> unit_class;
  std::vector<std::size_t> unit_of(m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const bool new_unit = config.split_unit == SplitUnit::Record || i == 0 ||
                          record_raw_unit[i] != record_raw_unit[i - 1];
    if (new_unit) unit_class.push_back(class_index.at(m.records[i].class_id));
    unit_of[i] = unit_class.size() - 1;
  }
  const std::vector<Split> unit_split = stratified_split(unit_class, config.ratio, config.seed);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const Split s = unit_split[unit_of[i]];
    m.records[i].split = s;
    (s == Split::Train ? m.counts.train : s == Split::Val ? m.counts.val : m.counts.test) += 1;
  }

  io::write_text(out_dir / kManifestName, manifest_to_json(m));
  spdlog::info("dataset built: {} records ({} train / {} val / {} test) in {}", m.size(), m.counts.train,
               m.counts.val, m.counts.test, out_dir.string());
  return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json records = json::array();
  for (const SampleRecord& r : m.records) {
    records.push_back({{"id", r.id},
                       {"class_id", r.class_id},
                       {"raw_id", r.raw_id},
                       {"visual_path", r.visual_path},
                       {"tactile_path", r.tactile_path},
                       {"height_path", r.height_path},
                       {"trace_path", r.trace_path},
                       {"trace_window_start", r.trace_window_start},
                       {"trace_window_length", r.trace_window_length},
                       {"spectrogram_path", r.spectrogram_path},
                       {"split", to_string(r.split)},
                       {"augmentation", augmentation_json(r.augmentation)}});
  }
  const json doc{
      {"format", "hapforge-dataset"},
      {"version", 1},
      {"seed", m.seed},
      {"split_unit", to_string(m.split_unit)},
      {"ratio", {m.ratio.train, m.ratio.val, m.ratio.test}},
      {"counts",
       {{"train", m.counts.train},
        {"val", m.counts.val},
        {"test", m.counts.test},
        {"total", m.counts.train + m.counts.val + m.counts.test}}},
      {"stft",
       {{"window_length", m.stft.window_length},
        {"hop_length", m.stft.hop_length},
        {"fft_length", m.stft.fft_length},
        {"window", window_name(m.stft.window)},
        {"sample_rate_hz", m.sample_rate_hz}}},
      {"trace_window", m.trace_window},
      {"trace_window_hop", m.trace_window_hop},
      {"provenance", m.provenance},
      {"records", records},
  };
  return doc.dump(1) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json doc = json::parse(text);
    require(doc.value("format", std::string()) == "hapforge-dataset", ErrorKind::Validation,
            "not a hapforge dataset manifest");
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.split_unit = split_unit_from_string(doc.at("split_unit").get<std::string>());
    const auto& ratio = doc.at("ratio");
    m.ratio = {ratio[0].get<unsigned>(), ratio[1].get<unsigned>(), ratio[2].get<unsigned>()};
    m.counts = {doc.at("counts").at("train").get<std::size_t>(), doc.at("counts").at("val").get<std::size_t>(),
                doc.at("counts").at("test").get<std::size_t>()};
    const json& st = doc.at("stft");
    m.stft.window_length = st.at("window_length").get<std::size_t>();
    m.stft.hop_length = st.at("hop_length").get<std::size_t>();
    m.stft.fft_length = st.at("fft_length").get<std::size_t>();
    m.stft.window = window_from_name(st.at("window").get<std::string>());
    m.sample_rate_hz = st.at("sample_rate_hz").get<double>();
    m.trace_window = doc.at("trace_window").get<std::size_t>();
    m.trace_window_hop = doc.at("trace_window_hop").get<std::size_t>();
    m.provenance = doc.value("provenance", std::string());
    for (const json& j : doc.at("records")) {
      SampleRecord r;
      r.id = j.at("id").get<std::string>();
      r.class_id = j.at("class_id").get<std::string>();
      r.raw_id = j.at("raw_id").get<std::string>();
      r.visual_path = j.at("visual_path").get<std::string>();
      r.tactile_path = j.at("tactile_path").get<std::string>();
      r.height_path = j.at("height_path").get<std::string>();
      r.trace_path = j.at("trace_path").get<std::string>();
      r.trace_window_start = j.at("trace_window_start").get<std::size_t>();
      r.trace_window_length = j.at("trace_window_length").get<std::size_t>();
      r.spectrogram_path = j.at("spectrogram_path").get<std::string>();
      r.split = split_from_string(j.at("split").get<std::string>());
      const json& a = j.at("augmentation");
      if (!a.is_string()) {
        r.augmentation = {false, a.at("rotation_deg").get<double>(), a.at("flip_horizontal").get<bool>(),
                          a.at("flip_vertical").get<bool>(), a.at("noise_sigma").get<double>()};
      }
      m.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed manifest: ") + e.what());
  }
  m.stft.validate();
  return m;
}

DatasetManifest read_manifest(const fs::path& path) { return manifest_from_json(io::read_text(path)); }

}  // namespace hapforge::dataset
