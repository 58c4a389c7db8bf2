#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "hapforge/cli.hpp"
#include "hapforge/compose.hpp"
#include "hapforge/dataset.hpp"
#include "hapforge/infer.hpp"
#include "hapforge/io/formats.hpp"
#include "hapforge/io/png.hpp"
#include "hapforge/metrics.hpp"
#include "hapforge/synth.hpp"

namespace hapforge::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const RunConfig& config) {
  const std::string& out = config.get("out");
  require(!out.empty(), ErrorKind::MissingInput, "no output directory given (--out)");
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec, ErrorKind::Io, "cannot create " + out + ": " + ec.message());
  return out;
}

void echo_config(const RunConfig& config, const fs::path& out, const std::vector<std::string>& modules) {
  io::write_text(out / "run_config.txt", config.dump(modules));
}

signals::FrictionTrace trace_window(const fs::path& root, const dataset::SampleRecord& r) {
  const signals::FrictionTrace full = io::read_trace_csv(root / r.trace_path);
  require(r.trace_window_start + r.trace_window_length <= full.size(), ErrorKind::Validation,
          "record " + r.id + " points past the end of " + r.trace_path);
  const auto s = full.samples().subspan(r.trace_window_start, r.trace_window_length);
  return signals::FrictionTrace(std::vector<double>(s.begin(), s.end()), full.sample_rate_hz());
}

std::vector<const dataset::SampleRecord*> select(const dataset::DatasetManifest& m, const std::string& split) {
  std::vector<const dataset::SampleRecord*> out;
  const bool all = split == "all";
  const std::optional<dataset::Split> want = all ? std::nullopt : std::optional(dataset::split_from_string(split));
  for (const auto& r : m.records)
    if (all || r.split == *want) out.push_back(&r);
  return out;
}

struct Weights {
  infer::Generator g_h;
  infer::Generator g_s;
};

Weights load_weights(const RunConfig& config) {
  const std::string& wh = config.get("weights_h");
  const std::string& ws = config.get("weights_s");
  require(!wh.empty() && !ws.empty(), ErrorKind::MissingInput,
          "generator weights missing: pass --weights-h and --weights-s (or --ground-truth)");
  for (const std::string& p : {wh, ws})
    require(fs::exists(p), ErrorKind::MissingInput, "weight archive not found: " + p);
  return {infer::load(wh), infer::load(ws)};
}

// Everything the renderer needs about one object before batch normalization.
struct Rendered {
  std::string id;
  photometric::HeightMap height;
  signals::SpectrogramImage spectrogram_image;
  signals::FrictionTrace trace;
};

}  // namespace

Summary cmd_synth(const RunConfig& config) {
  const fs::path out = output_dir(config);
  synth::CorpusConfig cc;
  cc.classes = synth::default_fabric_specs(config.count("classes"), config.module_seed("synth.classes"));
  cc.visual_per_class = config.count("visual_per_class");
  cc.augment_per_raw = config.count("augment_per_raw");
  cc.image_size = config.count("image_size");
  cc.mm_per_pixel = config.real("mm_per_pixel");
  cc.seed = config.module_seed("synth");
  const synth::CorpusSummary s = synth::make_corpus(cc, out);
  echo_config(config, out, {"synth.classes", "synth"});
  return {{"command", "synth"},
          {"classes", std::to_string(s.classes)},
          {"visual", std::to_string(s.visual)},
          {"tactile", std::to_string(s.tactile)},
          {"traces", std::to_string(s.traces)},
          {"records", std::to_string(s.records)},
          {"out", out.string()}};
}

Summary cmd_build(const RunConfig& config) {
  const std::string& raw = config.get("raw");
  require(!raw.empty(), ErrorKind::MissingInput, "no raw corpus given (raw=DIR or positional argument)");
  const fs::path out = output_dir(config);
  dataset::BuildConfig bc;
  bc.policy.rotation_range_deg = config.real("rotation_range_deg");
  bc.policy.flip_probability = config.real("flip_probability");
  bc.policy.noise_sigma = config.real("noise_sigma");
  bc.augment_per_raw = config.count("augment_per_raw");
  bc.split_unit = dataset::split_unit_from_string(config.get("split_unit"));
  bc.stft = signals::default_stft_params(config.count("stft_window"));
  bc.stft.hop_length = config.count("stft_hop");
  bc.trace_window = config.count("trace_window");
  bc.trace_window_hop = config.count("trace_window_hop");
  bc.seed = config.module_seed("dataset");
  const dataset::DatasetManifest m = dataset::build(raw, out, bc);
  echo_config(config, out, {"dataset"});
  return {{"command", "build"},
          {"records", std::to_string(m.size())},
          {"train", std::to_string(m.counts.train)},
          {"val", std::to_string(m.counts.val)},
          {"test", std::to_string(m.counts.test)},
          {"manifest", (out / dataset::kManifestName).string()}};
}

Summary cmd_render(const RunConfig& config, const std::vector<fs::path>& inputs) {
  const bool ground_truth = config.flag("ground_truth");
  const std::string& manifest_path = config.get("manifest");
  require(!ground_truth || !manifest_path.empty(), ErrorKind::MissingInput,
          "--ground-truth rendering reads stored heights and traces from a dataset manifest (manifest=PATH)");
  std::optional<Weights> weights;
  if (!ground_truth) weights = load_weights(config);

  std::vector<Rendered> objects;
  signals::PhaseRetrievalOptions gl;
  gl.iterations = config.count("gl_iterations");
  gl.seed = config.module_seed("phase");

  auto from_image = [&](const std::string& id, const VisualImage& x) {
    const infer::GeneratedPair pair = infer::generate_pair(weights->g_h, weights->g_s, x);
    objects.push_back({id, pair.height, pair.spectrogram_image, signals::reconstruct_phase(pair.spectrogram, gl).trace});
  };

  if (!manifest_path.empty()) {
    const dataset::DatasetManifest m = dataset::read_manifest(manifest_path);
    const fs::path root = fs::path(manifest_path).parent_path();
    for (const dataset::SampleRecord* r : select(m, config.get("split"))) {
      if (ground_truth) {
        const signals::Spectrogram spec =
            io::read_spectrogram(root / r->spectrogram_path, m.stft, r->trace_window_length, m.sample_rate_hz);
        objects.push_back({r->id, io::read_height_map(root / r->height_path), signals::spectrogram_to_image(spec),
                           trace_window(root, *r)});
      } else {
        from_image(r->id, io::read_png_rgb8(root / r->visual_path));
      }
    }
  }
  for (const fs::path& p : inputs) {
    require(!ground_truth, ErrorKind::Validation, "--ground-truth takes its inputs from the manifest only");
    from_image(p.stem().string(), io::read_png_rgb8(p));
  }
  require(!objects.empty(), ErrorKind::MissingInput, "nothing to render: no input images or manifest records");

  std::vector<compose::ScaledHeightMap> scaled;
  scaled.reserve(objects.size());
  for (const Rendered& o : objects)
    scaled.push_back(compose::scale_height_map(o.height, signals::mean_friction(o.trace), o.id));
  const compose::NormalizationContext ctx = compose::build_normalization(scaled);

  const fs::path out = output_dir(config);
  const std::string& display = config.get("display_size");
  const std::string& resample = config.get("resample");
  require(resample == "nearest" || resample == "bilinear", ErrorKind::Validation,
          "resample must be nearest or bilinear");
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const Rendered& o = objects[i];
    io::write_height_map(out / (o.id + "_height.png"), o.height);
    io::write_png_gray8(out / (o.id + "_spectrogram.png"), io::quantize8(o.spectrogram_image.pixels));
    io::write_trace_csv(out / (o.id + "_trace.csv"), o.trace);
    compose::FrictionImageResult fi = compose::to_friction_image(scaled[i], ctx);
    clamped += fi.clamped_count;
    if (!display.empty())
      fi.image = compose::resample_to_display(fi.image, parse_display_size(display),
                                              resample == "nearest" ? compose::ResampleMode::Nearest
                                                                    : compose::ResampleMode::Bilinear);
    io::write_png_gray8(out / (o.id + "_friction.png"), fi.image.pixels);
  }
  io::write_normalization(out / "normalization.txt", ctx);
  echo_config(config, out, {"phase"});
  return {{"command", "render"},
          {"objects", std::to_string(objects.size())},
          {"mode", ground_truth ? "ground-truth" : "generated"},
          {"global_min", io::format_real(ctx.global_min)},
          {"global_max", io::format_real(ctx.global_max)},
          {"clamped", std::to_string(clamped)},
          {"out", out.string()}};
}

Summary cmd_eval(const RunConfig& config) {
  const std::string& manifest_path = config.get("manifest");
  require(!manifest_path.empty(), ErrorKind::MissingInput, "no dataset manifest given (manifest=PATH)");
  const Weights weights = load_weights(config);
  const dataset::DatasetManifest m = dataset::read_manifest(manifest_path);
  const fs::path root = fs::path(manifest_path).parent_path();
  const auto records = select(m, config.get("split"));
  require(!records.empty(), ErrorKind::MissingInput, "the selected split holds no records");

  signals::PhaseRetrievalOptions gl;
  gl.iterations = config.count("gl_iterations");
  gl.seed = config.module_seed("phase");

  const fs::path out = output_dir(config);
  std::string csv = "id,mae,ssim,f_avg_generated,f_avg_truth\n";
  std::vector<double> f_gen, f_true;
  double mae_sum = 0.0, truth_sum = 0.0, ssim_sum = 0.0;
  for (const dataset::SampleRecord* r : records) {
    const infer::GeneratedPair pair =
        infer::generate_pair(weights.g_h, weights.g_s, io::read_png_rgb8(root / r->visual_path));
    const signals::FrictionTrace truth = trace_window(root, *r);
    const signals::FrictionTrace gen = signals::reconstruct_phase(pair.spectrogram, gl).trace;
    require(gen.size() == truth.size(), ErrorKind::Length,
            fmt::format("generator spectrogram decodes to {} samples, record {} has {}", gen.size(), r->id,
                        truth.size()));
    const double e = metrics::mae(gen, truth);

    // Height maps compared as stored images: each scaled to its own unit range.
    auto unit = [](const photometric::HeightMap& h) {
      Grid<double> g = h.canonicalized().heights();
      const double top = grid_max(g);
      if (top > 0.0)
        for (auto& v : g.values()) v /= top;
      return g;
    };
    const photometric::HeightMap truth_h = io::read_height_map(root / r->height_path);
    Grid<double> gen_h = unit(pair.height);
    if (!gen_h.same_shape(truth_h.heights())) gen_h = resize_bilinear(gen_h, truth_h.rows(), truth_h.cols());
    const double s = metrics::ssim(gen_h, unit(truth_h));

    mae_sum += e;
    ssim_sum += s;
    truth_sum += signals::mean_friction(truth);
    f_gen.push_back(signals::mean_friction(gen));
    f_true.push_back(signals::mean_friction(truth));
    csv += fmt::format("{},{},{},{},{}\n", r->id, io::format_real(e), io::format_real(s),
                       io::format_real(f_gen.back()), io::format_real(f_true.back()));
  }
  const double n = static_cast<double>(records.size());
  metrics::EvalReport report;
  report.sample_count = records.size();
  report.mae = mae_sum / n;
  require(truth_sum != 0.0, ErrorKind::Degenerate, "ground-truth friction averages to zero");
  report.mae_ratio = report.mae / (truth_sum / n);
  report.ssim_mean = ssim_sum / n;
  if (records.size() >= 2) {
    const metrics::TTestResult t = metrics::welch_t_test(f_gen, f_true);
    report.t_statistic = t.t;
    report.p_value = t.p;
  }
  metrics::write_report(out / "eval_report.txt", report);
  io::write_text(out / "eval_samples.csv", csv);
  echo_config(config, out, {"phase"});
  return {{"command", "eval"},
          {"samples", std::to_string(report.sample_count)},
          {"mae", io::format_real(report.mae)},
          {"mae_ratio", io::format_real(report.mae_ratio)},
          {"ssim_mean", io::format_real(report.ssim_mean)},
          {"t", io::format_real(report.t_statistic)},
          {"p", io::format_real(report.p_value)},
          {"out", out.string()}};
}

Summary cmd_plot(const RunConfig& config, const std::vector<fs::path>& inputs) {
  require(!inputs.empty(), ErrorKind::MissingInput, "nothing to plot: pass trace CSV, V2HS or height PNG files");
  const fs::path out = output_dir(config);
  const std::size_t width = config.count("width"), height = config.count("height");
  require(width >= 16 && height >= 16, ErrorKind::Validation, "plot size must be at least 16x16");
  std::size_t written = 0;
  for (const fs::path& p : inputs) {
    const std::string ext = p.extension().string();
    const std::string stem = p.stem().string();
    if (ext == ".csv") {
      const signals::FrictionTrace t = io::read_trace_csv(p);
      io::write_png_gray8(out / (stem + "_trace.png"), plot_trace(t, width, height));
      ++written;
      if (t.size() >= signals::default_stft_params().window_length) {
        const auto img = signals::spectrogram_to_image(signals::stft(t, signals::default_stft_params()));
        io::write_png_gray8(out / (stem + "_spectrogram.png"), plot_spectrogram(img, 4, 8));
        ++written;
      }
    } else if (ext == ".v2hs") {
      const io::SpectrumFile f = io::read_spectrum(p);
      signals::Spectrogram s;
      s.bins = f.values;
      s.magnitude_only = !f.is_complex;
      io::write_png_gray8(out / (stem + "_spectrogram.png"),
                          plot_spectrogram(signals::spectrogram_to_image(s), 4, 8));
      ++written;
    } else if (ext == ".png") {
      io::write_png_gray8(out / (stem + "_relief.png"), plot_height(io::read_height_map(p)));
      ++written;
    } else {
      fail(ErrorKind::Validation, "cannot plot " + p.string() + " (expected .csv, .v2hs or a height .png)");
    }
  }
  echo_config(config, out, {});
  return {{"command", "plot"}, {"figures", std::to_string(written)}, {"out", out.string()}};
}

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_logger_mt("hapforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("HAPFORGE_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  if (!spdlog::get("hapforge")) configure_logging();

  CLI::App app{"hapforge: visual images to friction images for electrovibration displays"};
  app.require_subcommand(1);

  struct Options {
    std::string config_path;
    std::string seed;
    std::string out;
    bool ground_truth = false;
    std::string weights_h, weights_s, display_size;
    std::vector<std::string> set;
    std::vector<std::string> inputs;
  };
  std::map<std::string, Options> options;

  auto add = [&](const std::string& name, const std::string& help) {
    Options& o = options[name];
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "flat key=value config file");
    sub->add_option("--seed", o.seed, "run seed; module seeds are derived from it");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.set, "override one setting, KEY=VALUE (repeatable)");
    return sub;
  };
  add("synth", "generate a synthetic raw corpus");
  add("build", "build a dataset from a raw corpus")->add_option("raw", options["build"].inputs, "raw corpus directory");
  CLI::App* render = add("render", "render friction images");
  render->add_flag("--ground-truth", options["render"].ground_truth, "use stored heights and traces");
  render->add_option("--weights-h", options["render"].weights_h, "height generator archive");
  render->add_option("--weights-s", options["render"].weights_s, "spectrogram generator archive");
  render->add_option("--display-size", options["render"].display_size, "resample friction images to WxH");
  render->add_option("inputs", options["render"].inputs, "visual images");
  CLI::App* eval = add("eval", "evaluate generators on a dataset split");
  eval->add_option("--weights-h", options["eval"].weights_h, "height generator archive");
  eval->add_option("--weights-s", options["eval"].weights_s, "spectrogram generator archive");
  add("plot", "figures from traces, spectrograms and height maps")
      ->add_option("inputs", options["plot"].inputs, "files to plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const Options& o = options.at(name);
    RunConfig config(name, default_config(name));
    if (!o.config_path.empty()) config.merge_file(o.config_path);
    for (const std::string& kv : o.set) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos, ErrorKind::Validation, "--set expects KEY=VALUE, got " + kv);
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.seed.empty()) config.set("seed", o.seed);
    if (!o.out.empty()) config.set("out", o.out);
    if (o.ground_truth) config.set("ground_truth", "true");
    if (!o.weights_h.empty()) config.set("weights_h", o.weights_h);
    if (!o.weights_s.empty()) config.set("weights_s", o.weights_s);
    if (!o.display_size.empty()) config.set("display_size", o.display_size);

    std::vector<fs::path> inputs(o.inputs.begin(), o.inputs.end());
    Summary summary;
    if (name == "synth") {
      summary = cmd_synth(config);
    } else if (name == "build") {
      require(inputs.size() <= 1, ErrorKind::Validation, "build takes one raw corpus directory");
      if (!inputs.empty()) config.set("raw", inputs.front().string());
      summary = cmd_build(config);
    } else if (name == "render") {
      summary = cmd_render(config, inputs);
    } else if (name == "eval") {
      summary = cmd_eval(config);
    } else {
      summary = cmd_plot(config, inputs);
    }
    out << format_summary(summary) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "hapforge: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "hapforge: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace hapforge::cli
