#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "regionsel/convolve.hpp"
#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"

using namespace regionsel;
using testing::max_abs_diff;
using testing::TempDir;

TEST_CASE("kernel invariants") {
  CHECK_THROWS_AS(Kernel(2, 3, std::vector<double>(6, 1.0 / 6)), ValidationError);
  CHECK_THROWS_AS(Kernel(1, 3, {0.5, 0.6, -0.1}), ValidationError);
  CHECK_THROWS_AS(Kernel(1, 3, {0.3, 0.3, 0.3}), ValidationError);
  CHECK_NOTHROW(Kernel(1, 3, {0.2, 0.5, 0.3}));
  CHECK_THROWS_AS(Kernel::normalized(1, 1, {0.0}), ValidationError);
  const Kernel d = Kernel::delta(5);
  CHECK(d(2, 2) == 1.0);
  CHECK(d(0, 0) == 0.0);
}

TEST_CASE("convolution with a delta kernel is the identity") {
  std::mt19937_64 rng(11);
  const Image img = testing::random_image(17, 23, rng);
  for (BoundaryMode mode : {BoundaryMode::ReplicatePad, BoundaryMode::Periodic, BoundaryMode::EdgeTaper}) {
    CHECK(convolve_direct(img, Kernel::delta(), mode) == img);
    CHECK(max_abs_diff(convolve_fft(img, Kernel::delta(), mode), img) < 1e-12);
    CHECK(max_abs_diff(convolve_direct(img, Kernel::delta(7), mode), img) < 1e-15);
  }
}

TEST_CASE("unit-sum kernels preserve constants under replicate padding") {
  std::mt19937_64 rng(12);
  const Image flat(20, 31, 0.37);
  for (int trial = 0; trial < 10; ++trial) {
    const int side = 1 + 2 * testing::uniform_int(rng, 0, 6);
    const Kernel k = testing::random_kernel(side, side, rng);
    const Image a = convolve_direct(flat, k, BoundaryMode::ReplicatePad);
    const Image b = convolve_fft(flat, k, BoundaryMode::ReplicatePad);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a.pixels()[i] - 0.37) < 1e-10);
      CHECK(std::abs(b.pixels()[i] - 0.37) < 1e-10);
    }
  }
}

TEST_CASE("direct convolution matches the nested-loop oracle") {
  std::mt19937_64 rng(13);
  const Image img = testing::random_image(16, 16, rng);
  const Kernel k = testing::random_kernel(5, 5, rng);
  CHECK(max_abs_diff(convolve_direct(img, k, BoundaryMode::ReplicatePad),
                     testing::oracle_convolve_replicate(img, k)) < 1e-12);
  CHECK(max_abs_diff(convolve_direct(img, k, BoundaryMode::Periodic), testing::oracle_convolve_periodic(img, k)) <
        1e-12);

  SUBCASE("non-square kernels and images") {
    for (int trial = 0; trial < 10; ++trial) {
      const Image x = testing::random_image(testing::uniform_int(rng, 9, 30), testing::uniform_int(rng, 9, 30), rng);
      const Kernel kk = testing::random_kernel(1 + 2 * testing::uniform_int(rng, 0, 4),
                                               1 + 2 * testing::uniform_int(rng, 0, 4), rng);
      CHECK(max_abs_diff(convolve_direct(x, kk, BoundaryMode::ReplicatePad),
                         testing::oracle_convolve_replicate(x, kk)) < 1e-12);
      CHECK(max_abs_diff(reference::convolve_direct(x, kk, BoundaryMode::ReplicatePad),
                         testing::oracle_convolve_replicate(x, kk)) < 1e-12);
    }
  }
}

TEST_CASE("fft convolution matches direct convolution") {
  std::mt19937_64 rng(14);
  const Image img = testing::random_image(64, 64, rng);
  const Kernel k = testing::random_kernel(13, 13, rng);
  for (BoundaryMode mode : {BoundaryMode::ReplicatePad, BoundaryMode::Periodic, BoundaryMode::EdgeTaper}) {
    CHECK(max_abs_diff(convolve_fft(img, k, mode), convolve_direct(img, k, mode)) < 1e-8);
  }

  SUBCASE("randomized sizes up to 128 and kernels up to 31") {
    for (int trial = 0; trial < 12; ++trial) {
      const int h = testing::uniform_int(rng, 31, 128);
      const int w = testing::uniform_int(rng, 31, 128);
      const int side = 1 + 2 * testing::uniform_int(rng, 0, 15);
      const Image x = testing::random_image(h, w, rng);
      const Kernel kk = testing::random_sparse_kernel(side, rng);
      CHECK(max_abs_diff(convolve_fft(x, kk, BoundaryMode::ReplicatePad),
                         convolve_direct(x, kk, BoundaryMode::ReplicatePad)) < 1e-8);
    }
  }
}

TEST_CASE("convolution is linear") {
  std::mt19937_64 rng(15);
  const Image x = testing::random_image(24, 19, rng);
  const Image z = testing::random_image(24, 19, rng);
  const Kernel k = testing::random_kernel(7, 5, rng);
  const double a = 0.7;
  const double b = -1.9;
  Image mix(24, 19);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.pixels()[i] = a * x.pixels()[i] + b * z.pixels()[i];
  for (BoundaryMode mode : {BoundaryMode::ReplicatePad, BoundaryMode::Periodic}) {
    const Image lhs = convolve_direct(mix, k, mode);
    const Image cx = convolve_direct(x, k, mode);
    const Image cz = convolve_direct(z, k, mode);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      CHECK(std::abs(lhs.pixels()[i] - (a * cx.pixels()[i] + b * cz.pixels()[i])) < 1e-10);
    }
  }
}

TEST_CASE("kernel larger than the image is a dimension error") {
  const Image img(5, 5, 0.5);
  CHECK_THROWS_AS(convolve_direct(img, Kernel::delta(7), BoundaryMode::ReplicatePad), DimensionError);
  CHECK_THROWS_AS(convolve_fft(img, Kernel::delta(7), BoundaryMode::ReplicatePad), DimensionError);
}

TEST_CASE("resample") {
  std::mt19937_64 rng(16);
  const Image img = testing::random_image(9, 13, rng);
  CHECK(resample(img, 1.0) == img);

  const Image flat(4, 4, 0.25);
  const Image half = resample(flat, 0.5);
  REQUIRE(half.height() == 2);
  REQUIRE(half.width() == 2);
  for (double v : half.pixels()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  // Corner-aligned grid: output column c samples input x = c * (1/3).
  const Image ramp(2, 2, std::vector<double>{0, 1, 0, 1});
  const Image up = resample(ramp, 2.0);
  REQUIRE(up.height() == 4);
  REQUIRE(up.width() == 4);
  const double expected[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(up(r, c) == doctest::Approx(expected[c]).epsilon(1e-14));
  }

  CHECK_THROWS_AS(resample(Image(2, 2), 0.1), DimensionError);
}

TEST_CASE("pad and crop") {
  const Image img(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Image rep = pad(img, 1, 2, BoundaryMode::ReplicatePad);
  CHECK(rep.height() == 4);
  CHECK(rep.width() == 7);
  CHECK(rep(0, 0) == 1);
  CHECK(rep(3, 6) == 6);
  const Image per = pad(img, 1, 1, BoundaryMode::Periodic);
  CHECK(per(0, 0) == 6);
  CHECK(per(1, 0) == 3);
  CHECK(crop(rep, 1, 2, 2, 3) == img);
  CHECK_THROWS_AS(crop(img, 1, 1, 2, 2), DimensionError);
}

TEST_CASE("PFM round trip is bit exact") {
  TempDir dir("pfm");
  std::mt19937_64 rng(17);
  Image img = testing::random_image(7, 11, rng);
  // Values representable in float survive exactly.
  for (double& v : img.pixels()) v = static_cast<float>(v);
  write_image(img, dir.path() / "a.pfm");
  CHECK(read_image(dir.path() / "a.pfm") == img);
}

TEST_CASE("PGM values map by v / 255") {
  TempDir dir("pgm");
  {
    std::ofstream out(dir.path() / "a.pgm", std::ios::binary);
    out << "P5\n# comment\n3 1\n255\n";
    out.put(static_cast<char>(0));
    out.put(static_cast<char>(128));
    out.put(static_cast<char>(255));
  }
  const Image img = read_image(dir.path() / "a.pgm");
  REQUIRE(img.width() == 3);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
  CHECK(std::abs(img(0, 1) - 0.50196) < 1e-5);
  CHECK(img(0, 2) == 1.0);
}

TEST_CASE("PGM round trip is idempotent after one quantization") {
  TempDir dir("pgm2");
  std::mt19937_64 rng(18);
  const Image img = testing::random_image(13, 8, rng);
  write_image(img, dir.path() / "a.pgm");
  const Image once = read_image(dir.path() / "a.pgm");
  CHECK(max_abs_diff(once, img) <= 0.5 / 255 + 1e-12);
  write_image(once, dir.path() / "b.pgm");
  CHECK(read_image(dir.path() / "b.pgm") == once);
}

TEST_CASE("malformed image files report a byte offset") {
  TempDir dir("bad");
  {
    std::ofstream out(dir.path() / "trunc.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out.write("abcd", 4);
  }
  {
    std::ofstream out(dir.path() / "magic.pgm", std::ios::binary);
    out << "P2\n1 1\n255\n0\n";
  }
  try {
    read_image(dir.path() / "trunc.pgm");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
  CHECK_THROWS_AS(read_image(dir.path() / "magic.pgm"), ParseError);
  CHECK_THROWS_AS(read_image(dir.path() / "missing.pgm"), IoError);
}

TEST_CASE("kernel text files") {
  TempDir dir("kernel");
  auto write = [&](const char* name, const char* text) {
    std::ofstream(dir.path() / name) << text;
    return dir.path() / name;
  };
  const Kernel one = read_kernel(write("one.txt", "1 1\n1.0\n"));
  CHECK(one == Kernel::delta());

  const Kernel box = read_kernel(write(
      "box.txt", "3 3\n0.111111111 0.111111111 0.111111111\n0.111111111 0.111111111 0.111111111\n"
                 "0.111111111 0.111111111 0.111111112\n"));
  CHECK(box.height() == 3);
  CHECK(box(1, 1) == doctest::Approx(1.0 / 9).epsilon(1e-8));

  CHECK_THROWS_AS(read_kernel(write("sum.txt", "1 3\n0.3 0.3 0.3\n")), ValidationError);
  CHECK_THROWS_AS(read_kernel(write("even.txt", "2 1\n0.5 0.5\n")), ValidationError);
  CHECK_THROWS_AS(read_kernel(write("neg.txt", "1 3\n-0.1 0.6 0.5\n")), ValidationError);

  std::mt19937_64 rng(19);
  const Kernel k = testing::random_kernel(9, 7, rng);
  write_kernel(k, dir.path() / "rt.txt");
  const Kernel back = read_kernel(dir.path() / "rt.txt");
  CHECK(back.height() == 9);
  CHECK(back.width() == 7);
  for (std::size_t i = 0; i < k.weights().size(); ++i) {
    CHECK(std::abs(back.weights()[i] - k.weights()[i]) <= 1e-9 * std::max(1.0, k.weights()[i]));
  }
}
