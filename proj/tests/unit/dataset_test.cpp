#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hapforge/dataset.hpp"
#include "hapforge/io/formats.hpp"
#include "hapforge/synth.hpp"
#include "test_support.hpp"

namespace hf = hapforge;
namespace ds = hapforge::dataset;
namespace fs = std::filesystem;
using hapforge::RgbImage;
using hapforge::test::TempDir;

namespace {

RgbImage pattern(std::size_t rows, std::size_t cols) {
  RgbImage img(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        img.at(r, c, ch) = static_cast<double>(r * cols + c + 1) / static_cast<double>(rows * cols + 1) +
                           0.001 * static_cast<double>(ch);
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small corpus: 3 classes x 4 raw visuals x 3 augmentations = 36 records over 12 raw units.
void small_corpus(const fs::path& dir, std::size_t augment = 3) {
  hf::synth::CorpusConfig cfg;
  cfg.classes = hf::synth::default_fabric_specs(3, 5);
  cfg.visual_per_class = 4;
  cfg.augment_per_raw = augment;
  cfg.image_size = 16;
  cfg.seed = 5;
  hf::synth::make_corpus(cfg, dir);
}

}  // namespace

TEST(Augment, IdentityPolicyLeavesImageUnchanged) {
  const auto img = pattern(8, 8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_EQ(ds::augment(img, ds::AugmentPolicy::identity(), seed), img);
  EXPECT_TRUE(ds::draw_augmentation(ds::AugmentPolicy::identity(), 1).is_identity());
}

TEST(Augment, FlipTwiceIsIdentity) {
  const auto img = pattern(5, 7);
  EXPECT_EQ(ds::flip_horizontal(ds::flip_horizontal(img)), img);
  EXPECT_EQ(ds::flip_vertical(ds::flip_vertical(img)), img);
  EXPECT_NE(ds::flip_horizontal(img), img);
  EXPECT_EQ(ds::flip_horizontal(img).at(1, 0, 2), img.at(1, 6, 2));
  EXPECT_EQ(ds::flip_vertical(img).at(0, 3, 1), img.at(4, 3, 1));
}

TEST(Augment, QuarterTurnMatchesHandPermutation) {
  hf::Grid<double> g(3, 3);
  for (std::size_t i = 0; i < 9; ++i) g.data()[i] = static_cast<double>(i + 1);
  // 1 2 3        3 6 9
  // 4 5 6  ccw   2 5 8
  // 7 8 9  --->  1 4 7
  const double expected[9] = {3, 6, 9, 2, 5, 8, 1, 4, 7};
  const auto r = ds::rotate(g, 90.0);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(r.data()[i], expected[i]) << i;
  const double half[9] = {9, 8, 7, 6, 5, 4, 3, 2, 1};
  const auto r2 = ds::rotate(g, 180.0);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(r2.data()[i], half[i]);
  EXPECT_EQ(ds::rotate(g, -90.0), ds::rotate(g, 270.0));
  EXPECT_EQ(ds::rotate(ds::rotate(g, 90.0), -90.0), g);
  EXPECT_EQ(ds::rotate(g, 0.0), g);
  EXPECT_EQ(ds::rotate(g, 360.0), g);
}

TEST(Augment, SmallRotationStaysInRangeAndPreservesCentre) {
  const auto img = pattern(9, 9);
  const auto r = ds::rotate(img, 17.0);
  for (double v : r.raw()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (std::size_t ch = 0; ch < 3; ++ch) EXPECT_NEAR(r.at(4, 4, ch), img.at(4, 4, ch), 1e-12);
}

TEST(Augment, DeterministicAndSeedDependent) {
  const auto img = pattern(12, 12);
  const ds::AugmentPolicy p;
  EXPECT_EQ(ds::augment(img, p, 42), ds::augment(img, p, 42));
  EXPECT_NE(ds::augment(img, p, 42), ds::augment(img, p, 43));
}

TEST(Augment, DrawsRespectPolicy) {
  ds::AugmentPolicy p;
  p.rotation_range_deg = 30.0;
  p.allow_vertical_flip = false;
  p.flip_probability = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = ds::draw_augmentation(p, seed);
    EXPECT_LE(std::abs(a.rotation_deg), 30.0);
    EXPECT_TRUE(a.flip_horizontal);
    EXPECT_FALSE(a.flip_vertical);
    EXPECT_EQ(a.noise_sigma, 0.01);
  }
}

TEST(Augment, NegativeSigmaIsParameterError) {
  ds::AugmentPolicy p;
  p.noise_sigma = -0.1;
  EXPECT_HF_ERROR(ds::augment(pattern(4, 4), p, 0), Parameter);
  ds::Augmentation a;
  a.noise_sigma = -1.0;
  EXPECT_HF_ERROR(ds::apply_augmentation(pattern(4, 4), a), Parameter);
}

TEST(Split, Sizes) {
  EXPECT_EQ(ds::split_sizes(10, {}), (ds::SplitSizes{8, 1, 1}));
  EXPECT_EQ(ds::split_sizes(3375, {}), (ds::SplitSizes{2700, 337, 338}));
  EXPECT_EQ(ds::split_sizes(75, {}), (ds::SplitSizes{60, 7, 8}));
  EXPECT_EQ(ds::split_sizes(3, {}), (ds::SplitSizes{2, 0, 1}));
  EXPECT_HF_ERROR(ds::split_sizes(2, {}), Parameter);
  EXPECT_HF_ERROR(ds::split_sizes(10, {8, 0, 1}), Parameter);
}

TEST(Split, DeterministicAndSized) {
  const auto a = ds::split(3375, {}, 9);
  EXPECT_EQ(a, ds::split(3375, {}, 9));
  EXPECT_NE(a, ds::split(3375, {}, 10));
  std::map<ds::Split, std::size_t> n;
  for (auto s : a) ++n[s];
  EXPECT_EQ(n[ds::Split::Train], 2700u);
  EXPECT_EQ(n[ds::Split::Val], 337u);
  EXPECT_EQ(n[ds::Split::Test], 338u);
}

TEST(Split, StratifiedByClass) {
  std::vector<std::size_t> cls;
  for (std::size_t c = 0; c < 15; ++c)
    for (std::size_t k = 0; k < 5; ++k) cls.push_back(c);
  const auto s = ds::stratified_split(cls, {}, 3);
  std::map<std::size_t, std::map<ds::Split, std::size_t>> per;
  std::map<ds::Split, std::size_t> total;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    ++per[cls[i]][s[i]];
    ++total[s[i]];
  }
  EXPECT_EQ(total[ds::Split::Train], 60u);
  EXPECT_EQ(total[ds::Split::Val], 7u);
  EXPECT_EQ(total[ds::Split::Test], 8u);
  for (auto& [c, counts] : per) {
    // 4 of 5 per class go to training; the remaining one to val or test.
    EXPECT_EQ(counts[ds::Split::Train], 4u) << c;
    EXPECT_EQ(counts[ds::Split::Val] + counts[ds::Split::Test], 1u) << c;
  }
}

TEST(Split, NamesRoundTrip) {
  for (auto s : {ds::Split::Train, ds::Split::Val, ds::Split::Test}) EXPECT_EQ(ds::split_from_string(ds::to_string(s)), s);
  EXPECT_EQ(ds::split_unit_from_string("record"), ds::SplitUnit::Record);
  EXPECT_HF_ERROR(ds::split_unit_from_string("pixel"), Parameter);
}

class SmallBuild : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    root_ = new TempDir();
    small_corpus(root_->path() / "raw");
    manifest_ = new ds::DatasetManifest(ds::build(root_->path() / "raw", root_->path() / "ds", {}));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete root_;
  }
  static TempDir* root_;
  static ds::DatasetManifest* manifest_;
};
TempDir* SmallBuild::root_ = nullptr;
ds::DatasetManifest* SmallBuild::manifest_ = nullptr;

TEST_F(SmallBuild, CountsAndSplitSizes) {
  EXPECT_EQ(manifest_->size(), 36u);
  // 12 raw units at 8:1:1 -> 9 / 1 / 2 raw images, 3 records each.
  EXPECT_EQ(manifest_->counts, (ds::SplitSizes{27, 3, 6}));
}

TEST_F(SmallBuild, NoLeakageAcrossSplits) {
  std::map<std::string, std::set<ds::Split>> by_raw;
  for (const auto& r : manifest_->records) by_raw[r.raw_id].insert(r.split);
  EXPECT_EQ(by_raw.size(), 12u);
  for (const auto& [raw, splits] : by_raw) EXPECT_EQ(splits.size(), 1u) << raw;
}

TEST_F(SmallBuild, RecordsReferenceExistingFilesAndUniqueIds) {
  std::set<std::string> ids;
  const fs::path ds_dir = root_->path() / "ds";
  for (const auto& r : manifest_->records) {
    EXPECT_TRUE(ids.insert(r.id).second) << r.id;
    for (const auto& p : {r.visual_path, r.tactile_path, r.height_path, r.trace_path, r.spectrogram_path})
      EXPECT_TRUE(fs::exists(ds_dir / p)) << p;
    EXPECT_TRUE(fs::exists(hf::io::height_sidecar_path(ds_dir / r.height_path)));
    EXPECT_EQ(r.augmentation.none, r.id.ends_with("_00"));
  }
  EXPECT_FALSE(fs::exists(ds_dir / ds::kLockName));
}

TEST_F(SmallBuild, SpectrogramsInvertToTheirTraceWindows) {
  const fs::path ds_dir = root_->path() / "ds";
  for (const auto& r : manifest_->records) {
    const auto trace = hf::io::read_trace_csv(ds_dir / r.trace_path);
    const auto window = trace.samples().subspan(r.trace_window_start, r.trace_window_length);
    const auto spec = hf::io::read_spectrogram(ds_dir / r.spectrogram_path, manifest_->stft, r.trace_window_length,
                                               manifest_->sample_rate_hz);
    const auto fresh = hf::signals::stft(hf::signals::FrictionTrace(std::vector<double>(window.begin(), window.end())),
                                         manifest_->stft);
    ASSERT_TRUE(fresh.bins.same_shape(spec.bins));
    double peak = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < spec.bins.size(); ++k) {
      peak = std::max(peak, std::abs(fresh.bins.data()[k]));
      worst = std::max(worst, std::abs(fresh.bins.data()[k] - spec.bins.data()[k]));
    }
    EXPECT_LE(worst, 1e-6 * peak) << r.id;

    const auto back = hf::signals::istft(spec);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i) {
      num += (back.samples()[i] - window[i]) * (back.samples()[i] - window[i]);
      den += window[i] * window[i];
    }
    // f32 payload; the WOLA division by a small w^2 at the first and last samples magnifies it.
    EXPECT_LT(std::sqrt(num / den), 2e-5) << r.id;
  }
}

TEST_F(SmallBuild, ManifestJsonRoundTrip) {
  const auto text = hf::io::read_text(root_->path() / "ds" / ds::kManifestName);
  const auto parsed = ds::manifest_from_json(text);
  EXPECT_EQ(ds::manifest_to_json(parsed), text);
  EXPECT_EQ(parsed.size(), manifest_->size());
  EXPECT_EQ(parsed.stft, manifest_->stft);
}

TEST_F(SmallBuild, RebuildIsByteIdentical) {
  const fs::path again = root_->path() / "ds2";
  ds::build(root_->path() / "raw", again, {});
  const fs::path first = root_->path() / "ds";
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(first)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), first);
    ASSERT_TRUE(fs::exists(again / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(again / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 100u);
}

TEST_F(SmallBuild, RecordUnitSplitMatchesFloorSizes) {
  ds::BuildConfig cfg;
  cfg.split_unit = ds::SplitUnit::Record;
  const auto m = ds::build(root_->path() / "raw", root_->path() / "ds_record", cfg);
  EXPECT_EQ(m.counts, ds::split_sizes(36, {}));
}

TEST(Build, EmptyRawDirIsMissingInput) {
  TempDir dir;
  fs::create_directories(dir / "raw");
  EXPECT_HF_ERROR(ds::build(dir / "raw", dir / "out", {}), MissingInput);
}

TEST(Build, MissingModalityNamesTheClass) {
  TempDir dir;
  small_corpus(dir / "raw", 1);
  auto index = nlohmann::json::parse(slurp(dir / "raw" / "corpus.json"));
  const std::string victim = index["classes"][1]["id"];
  index["classes"][1]["trace"] = nlohmann::json::array();
  hf::io::write_text(dir / "raw" / "corpus.json", index.dump());
  try {
    ds::build(dir / "raw", dir / "out", {});
    FAIL() << "expected MissingInput";
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.kind(), hf::ErrorKind::MissingInput);
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
  }
}

TEST(Build, SingleClassIsRejected) {
  TempDir dir;
  small_corpus(dir / "raw", 1);
  auto index = nlohmann::json::parse(slurp(dir / "raw" / "corpus.json"));
  index["classes"].erase(1);
  index["classes"].erase(1);
  hf::io::write_text(dir / "raw" / "corpus.json", index.dump());
  EXPECT_HF_ERROR(ds::build(dir / "raw", dir / "out", {}), Validation);
}

TEST(Build, UnreadableFileIsIoErrorWithPath) {
  TempDir dir;
  small_corpus(dir / "raw", 1);
  const auto index = nlohmann::json::parse(slurp(dir / "raw" / "corpus.json"));
  const std::string rel = index["classes"][0]["visual"][0];
  fs::remove(dir / "raw" / rel);
  try {
    ds::build(dir / "raw", dir / "out", {});
    FAIL() << "expected an error";
  } catch (const hf::Error& e) {
    EXPECT_TRUE(e.kind() == hf::ErrorKind::Io || e.kind() == hf::ErrorKind::MissingInput) << e.what();
    EXPECT_NE(std::string(e.what()).find(fs::path(rel).filename().string()), std::string::npos) << e.what();
  }
}

TEST(Build, HeldLockRefusesConcurrentBuild) {
  TempDir dir;
  small_corpus(dir / "raw", 1);
  fs::create_directories(dir / "out");
  hf::io::write_text(dir / "out" / ds::kLockName, "");
  EXPECT_HF_ERROR(ds::build(dir / "raw", dir / "out", {}), Io);
}

TEST(Build, HeightPassthrough) {
  TempDir dir;
  small_corpus(dir / "raw", 1);
  auto index = nlohmann::json::parse(slurp(dir / "raw" / "corpus.json"));
  for (auto& cls : index["classes"]) {
    nlohmann::json heights = nlohmann::json::array();
    for (std::size_t k = 0; k < cls["tactile"].size(); ++k) {
      const std::string rel = "height_in/" + cls["id"].get<std::string>() + "_" + std::to_string(k) + ".png";
      fs::create_directories(dir / "raw" / "height_in");
      hf::Grid<double> z(16, 16);
      for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = static_cast<double>(i % 7) * 0.1;
      hf::io::write_height_map(dir / "raw" / rel, hf::photometric::HeightMap(z));
      heights.push_back(rel);
    }
    cls["height"] = heights;
  }
  hf::io::write_text(dir / "raw" / "corpus.json", index.dump());
  const auto m = ds::build(dir / "raw", dir / "out", {});
  const auto h = hf::io::read_height_map(dir / "out" / m.records[0].height_path);
  EXPECT_NEAR(h.max(), 0.6, 1e-4);
}
