#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/labeling.hpp"
#include "regionsel/scenes.hpp"

using namespace regionsel;
using testing::TempDir;

namespace {

CorpusManifest small_corpus(const std::filesystem::path& root, bool with_flat = false, double sigma = 4.0) {
  std::filesystem::create_directories(root / "sharp");
  std::filesystem::create_directories(root / "kernels");
  write_image(mixed_scene(64, 64, 1), root / "sharp" / "a.pgm");
  write_image(mixed_scene(64, 64, 2), root / "sharp" / "b.pgm");
  if (with_flat) write_image(Image(64, 64, 0.5), root / "sharp" / "c.pgm");
  write_kernel(random_motion_kernel(7, 3), root / "kernels" / "k1.txt");
  write_kernel(random_motion_kernel(9, 4), root / "kernels" / "k2.txt");
  return generate_corpus(root / "sharp", root / "kernels", {sigma, 5}, root / "corpus");
}

std::size_t positives(const LabeledDataset& ds) {
  return static_cast<std::size_t>(
      std::count_if(ds.samples.begin(), ds.samples.end(), [](const LabeledSample& s) { return s.label == 1; }));
}

LabeledDataset toy_dataset(const std::vector<int>& labels) {
  LabeledDataset ds;
  for (int y : labels) {
    LabeledSample s;
    s.label = y;
    s.similarity = y ? 0.9 : 0.1;
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace

TEST_CASE("dataset covers every patch of every image and is deterministic") {
  TempDir dir("label");
  const CorpusManifest m = small_corpus(dir.path());
  const PatchGridSpec grid{32, 16};
  const LabeledDataset a = build_dataset(m, grid, EstimatorConfig{}, LabelConfig{0.75});
  REQUIRE(a.samples.size() == m.entries.size() * 9);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].entry == i / 9);
    CHECK(a.samples[i].ref == patch_grid(64, 64, grid)[i % 9]);
    CHECK(a.samples[i].similarity >= 0.0);
    CHECK(a.samples[i].similarity <= 1.0);
    CHECK(a.samples[i].label == label(a.samples[i].similarity, LabelConfig{0.75}));
  }
  const LabeledDataset b = build_dataset(m, grid, EstimatorConfig{}, LabelConfig{0.75});
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].similarity == b.samples[i].similarity);
    CHECK(a.samples[i].estimated == b.samples[i].estimated);
  }
  CHECK(a.estimator_hash == estimator_config_hash(EstimatorConfig{}));

  SUBCASE("raising lambda never adds positives") {
    LabeledDataset ds = a;
    std::size_t last = ds.samples.size() + 1;
    for (double lambda = 0.05; lambda < 1.0; lambda += 0.05) {
      relabel(ds, LabelConfig{lambda});
      CHECK(positives(ds) <= last);
      last = positives(ds);
      for (const auto& s : ds.samples) CHECK(s.label == label(s.similarity, LabelConfig{lambda}));
    }
  }

  SUBCASE("save and load in both storage modes") {
    LabeledDataset refs = a;
    save_dataset(refs, m, dir.path() / "refs", false);
    LabeledDataset patches = a;
    save_dataset(patches, m, dir.path() / "patches", true);
    const LabeledDataset back = load_dataset(dir.path() / "refs" / kDatasetFileName);
    REQUIRE(back.samples.size() == a.samples.size());
    CHECK(back.lambda == a.lambda);
    CHECK(!back.patches_stored);
    CHECK(load_dataset(dir.path() / "patches" / kDatasetFileName).patches_stored);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(back.samples[i].similarity == a.samples[i].similarity);
      CHECK(back.samples[i].label == a.samples[i].label);
      CHECK(back.samples[i].ref == a.samples[i].ref);
      CHECK(std::filesystem::exists(dir.path() / "refs" / back.samples[i].estimated_kernel_path));
    }
    const auto from_refs = load_training_samples(dir.path() / "refs" / kDatasetFileName);
    const auto from_patches = load_training_samples(dir.path() / "patches" / kDatasetFileName);
    REQUIRE(from_refs.size() == from_patches.size());
    for (std::size_t i = 0; i < from_refs.size(); ++i) {
      CHECK(from_refs[i].label == from_patches[i].label);
      // PFM stores float32.
      CHECK(testing::max_abs_diff(from_refs[i].patch, from_patches[i].patch) < 1e-6);
      CHECK(from_refs[i].patch.height() == 32);
    }
  }
}

TEST_CASE("flat patches become degenerate negatives") {
  TempDir dir("label-flat");
  const CorpusManifest m = small_corpus(dir.path(), true, 0.0);
  const LabeledDataset ds = build_dataset(m, {32, 32}, EstimatorConfig{}, LabelConfig{0.75});
  int flat = 0;
  for (const auto& s : ds.samples) {
    if (m.entries[s.entry].sharp_path.find("c.pgm") == std::string::npos) continue;
    ++flat;
    CHECK(s.label == 0);
    CHECK(s.similarity == 0.0);
    CHECK(s.status == SampleStatus::Degenerate);
  }
  CHECK(flat == 2 * 4);
}

TEST_CASE("whole textured image blurred by its own kernel is a good region") {
  TempDir dir("label-whole");
  std::filesystem::create_directories(dir.path() / "sharp");
  std::filesystem::create_directories(dir.path() / "kernels");
  write_image(shapes_scene(128, 128, 4243), dir.path() / "sharp" / "s.pfm");
  write_kernel(random_motion_kernel(11, 4242), dir.path() / "kernels" / "k.txt");
  const CorpusManifest m = generate_corpus(dir.path() / "sharp", dir.path() / "kernels", {0.0, 1}, dir.path() / "c");
  const LabeledDataset ds = build_dataset(m, {128, 20}, EstimatorConfig{}, LabelConfig{0.75});
  REQUIRE(ds.samples.size() == 1);
  CHECK(ds.samples[0].label == 1);
}

TEST_CASE("a 450x450 image gives one sample per grid patch") {
  TempDir dir("label-450");
  std::filesystem::create_directories(dir.path() / "sharp");
  std::filesystem::create_directories(dir.path() / "kernels");
  write_image(mixed_scene(450, 450, 9), dir.path() / "sharp" / "s.pgm");
  write_kernel(Kernel::delta(3), dir.path() / "kernels" / "k.txt");
  const CorpusManifest m = generate_corpus(dir.path() / "sharp", dir.path() / "kernels", {4.0, 1}, dir.path() / "c");
  EstimatorConfig cfg;
  cfg.iterations_per_level = 1;
  CHECK(build_dataset(m, {228, 20}, cfg, LabelConfig{0.75}).samples.size() == 144);
}

TEST_CASE("balancing threshold is the upper median") {
  CHECK(balancing_lambda({0.4, 0.1, 0.3, 0.2}) == 0.3);
  CHECK(balancing_lambda({0.5, 0.9, 0.7}) == 0.7);
}

TEST_CASE("class balance report") {
  const BalanceReport all = class_balance_report(toy_dataset({1, 1, 1}));
  CHECK(all.positive_fraction == 1.0);
  CHECK(all.imbalanced);
  const BalanceReport even = class_balance_report(toy_dataset({1, 0, 0, 1}));
  CHECK(even.positive_fraction == 0.5);
  CHECK(!even.imbalanced);

  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> labels(static_cast<std::size_t>(testing::uniform_int(rng, 1, 50)));
    for (int& y : labels) y = static_cast<int>(rng() % 2);
    const BalanceReport r = class_balance_report(toy_dataset(labels));
    const auto count = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    CHECK(r.positives == count);
    CHECK(r.negatives == labels.size() - count);
    CHECK(r.positive_fraction == static_cast<double>(count) / static_cast<double>(labels.size()));
    CHECK(r.imbalanced == (r.positive_fraction < 0.3 || r.positive_fraction > 0.7));
  }
  CHECK_THROWS_AS(class_balance_report(LabeledDataset{}), ValidationError);
}
