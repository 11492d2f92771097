#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "regionsel/error.hpp"
#include "regionsel/estimator.hpp"
#include "regionsel/evaluation.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/scenes.hpp"

using namespace regionsel;
using testing::TempDir;

namespace {

std::vector<EvalRecord> with_ers(const std::vector<double>& ers) {
  std::vector<EvalRecord> out;
  for (double e : ers) {
    EvalRecord r;
    r.er = e;
    out.push_back(r);
  }
  return out;
}

CorpusManifest eval_corpus(const std::filesystem::path& root) {
  std::filesystem::create_directories(root / "sharp");
  std::filesystem::create_directories(root / "kernels");
  write_image(mixed_scene(80, 80, 31), root / "sharp" / "a.pgm");
  write_image(mixed_scene(80, 80, 32), root / "sharp" / "b.pgm");
  write_kernel(random_motion_kernel(9, 33), root / "kernels" / "k.txt");
  return generate_corpus(root / "sharp", root / "kernels", {1.0, 34}, root / "corpus");
}

Network toy_net() {
  SmallResNetSpec spec;
  spec.input_side = 40;
  spec.stem_channels = 4;
  spec.stage_channels = {4, 8};
  return make_small_resnet(spec, 35);
}

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("error ratio identities") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = testing::uniform_int(rng, 8, 30);
    const int w = testing::uniform_int(rng, 8, 30);
    const Image g = testing::random_image(h, w, rng);
    const Image kg = testing::random_image(h, w, rng);
    const int m = testing::uniform_int(rng, 0, 3);
    CHECK(error_ratio(kg, g, kg, m) == 1.0);
    CHECK(error_ratio(g, g, kg, m) == 0.0);
  }
}

TEST_CASE("error ratio by hand") {
  const Image g(3, 3, 0.5);
  Image e(3, 3, 0.5);
  Image kg(3, 3, 0.5);
  e(0, 0) = 0.7;   // 0.04
  e(2, 1) = 0.2;   // 0.09
  kg(1, 1) = 0.6;  // 0.01
  kg(0, 2) = 0.3;  // 0.04
  CHECK(error_ratio(e, g, kg, 0) == doctest::Approx(0.13 / 0.05).epsilon(1e-12));
  // Margin 1 keeps only the center pixel: numerator 0.
  CHECK(error_ratio(e, g, kg, 1) == 0.0);
  CHECK_THROWS_AS(error_ratio(e, g, g, 0), DegenerateDenominatorError);
  CHECK_THROWS_AS(error_ratio(e, Image(3, 4), kg, 0), DimensionError);
  CHECK_THROWS_AS(error_ratio(e, g, kg, -1), ValidationError);
}

TEST_CASE("psnr") {
  const Image a(10, 10, 0.2);
  CHECK(std::isinf(psnr(a, a)));
  Image b = a;
  for (double& v : b.pixels()) v += 0.1;  // MSE 0.01
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  const Image c(10, 10, 0.7);
  CHECK(std::abs(psnr(a, c) - 6.0206) < 1e-4);
  CHECK(psnr(a, c) == doctest::Approx(10 * std::log10(4.0)).epsilon(1e-12));
  std::mt19937_64 rng(92);
  const Image x = testing::random_image(7, 9, rng);
  const Image y = testing::random_image(7, 9, rng);
  CHECK(psnr(x, y) == psnr(y, x));
  CHECK_THROWS_AS(psnr(x, a), DimensionError);
}

TEST_CASE("success curve") {
  const auto t = default_thresholds();
  REQUIRE(t.size() == 41);
  CHECK(t.front() == 1.0);
  CHECK(t.back() == 5.0);
  const SuccessCurve ones = success_curve(with_ers({1.0, 1.0}), t);
  for (double r : ones.rates) CHECK(r == 1.0);
  const SuccessCurve three = success_curve(with_ers({1.0, 2.0, 6.0}), {2.0});
  CHECK(three.rates[0] == doctest::Approx(2.0 / 3.0));
  CHECK(success_curve(with_ers({std::nan("")}), {1e9}).rates[0] == 0.0);
  CHECK_THROWS_AS(success_curve({}, t), ValidationError);

  std::mt19937_64 rng(93);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ers(static_cast<std::size_t>(testing::uniform_int(rng, 1, 40)));
    for (double& e : ers) e = 0.5 + 6.0 * testing::unit(rng);
    const SuccessCurve c = success_curve(with_ers(ers), t);
    for (std::size_t i = 0; i < c.rates.size(); ++i) {
      CHECK(c.rates[i] >= 0.0);
      CHECK(c.rates[i] <= 1.0);
      if (i > 0) CHECK(c.rates[i] >= c.rates[i - 1]);
    }
  }
}

TEST_CASE("method names") {
  for (Method m : {Method::Top, Method::Random, Method::Whole, Method::Center, Method::GroundTruth}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("best"), ValidationError);
}

TEST_CASE("pipeline on a small corpus") {
  TempDir dir("eval");
  const CorpusManifest m = eval_corpus(dir.path());
  const Network net = toy_net();
  EvalConfig cfg;
  cfg.methods = {Method::Top, Method::Random, Method::Whole, Method::Center, Method::GroundTruth};
  cfg.grid = {40, 20};
  cfg.seed = 4;
  const EvalReport rep = evaluate_pipeline(m, &net, EstimatorConfig{}, cfg);
  REQUIRE(rep.records.size() == m.entries.size() * cfg.methods.size());
  CHECK(rep.failures.empty());
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const EvalRecord& r = rep.records[i];
    CHECK(r.method == cfg.methods[i % cfg.methods.size()]);
    CHECK(r.status == "ok");
    CHECK(r.er >= 0.0);
    if (r.method == Method::GroundTruth) {
      CHECK(r.er == 1.0);
      CHECK(r.similarity == 1.0);
    }
    if (r.method == Method::Whole || r.method == Method::GroundTruth) {
      CHECK(r.patch_row == -1);
    } else {
      CHECK(r.patch_row % 20 == 0);
      CHECK(r.patch_col % 20 == 0);
    }
    if (r.method == Method::Center) {
      CHECK(r.patch_row == 20);
      CHECK(r.patch_col == 20);
    }
  }
  CHECK(rep.records[0].image_id == "blur_a_k");

  SUBCASE("deterministic") {
    const EvalReport again = evaluate_pipeline(m, &net, EstimatorConfig{}, cfg);
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
      CHECK(again.records[i].er == rep.records[i].er);
      CHECK(again.records[i].patch_row == rep.records[i].patch_row);
    }
  }

  SUBCASE("reports") {
    write_eval_csv(rep.records, dir.path() / "eval.csv");
    const auto csv = lines(dir.path() / "eval.csv");
    REQUIRE(csv.size() == rep.records.size() + 1);
    CHECK(csv[0] == "image_id,method,ER,PSNR_dB,similarity,patch_row,patch_col,status");
    write_success_svg(rep.records, default_thresholds(), dir.path() / "s.svg");
    std::ifstream in(dir.path() / "s.svg");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string svg = ss.str();
    std::size_t polylines = 0;
    for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
    CHECK(polylines == cfg.methods.size());
    CHECK(svg.find("data-method=\"gt\"") != std::string::npos);
  }

  SUBCASE("missing model for a method that needs it") {
    CHECK_THROWS_AS(evaluate_pipeline(m, nullptr, EstimatorConfig{}, cfg), ValidationError);
  }

  SUBCASE("a missing blurred file is recorded, not fatal") {
    CorpusManifest broken = m;
    broken.entries[1].blurred_path = "nope.pfm";
    const EvalReport r = evaluate_pipeline(broken, &net, EstimatorConfig{}, cfg);
    REQUIRE(r.records.size() == rep.records.size());
    CHECK(r.records[0].status == "ok");
    CHECK(r.records.back().status.rfind("failed", 0) == 0);
    CHECK(std::isnan(r.records.back().er));
    CHECK(r.failures.size() == cfg.methods.size());
  }
}

TEST_CASE("a delta estimate on a strongly blurred image is worse than the true kernel") {
  const Image sharp = mixed_scene(96, 96, 36);
  const Kernel k = random_motion_kernel(15, 37);
  const Image blurred = blur_image(sharp, k, {1.0, 38});
  const Image with_delta = solve_latent(blurred, Kernel::delta(15), 2e-3);
  const Image with_truth = solve_latent(blurred, k, 2e-3);
  CHECK(error_ratio(with_delta, sharp, with_truth, 7) > 1.0);
}
