#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "regionsel/error.hpp"
#include "regionsel/model_io.hpp"
#include "regionsel/network.hpp"

using namespace regionsel;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

Network sample_net() {
  SmallResNetSpec spec;
  spec.input_side = 24;
  spec.stem_channels = 4;
  spec.stage_channels = {4, 8};
  spec.blocks_per_stage = 2;
  spec.input = {InputNorm::Standardize, 1.0};
  return make_small_resnet(spec, 77);
}

}  // namespace

TEST_CASE("save then load reproduces the network bit for bit") {
  TempDir dir("model");
  const Network net = sample_net();
  save_model(net, dir.path() / "m.bin");
  const Network back = load_model(dir.path() / "m.bin");
  CHECK(back == net);
  CHECK(back.input_transform() == net.input_transform());
  std::mt19937_64 rng(61);
  for (int i = 0; i < 5; ++i) {
    const Image x = testing::random_image(24, 24, rng);
    CHECK(logit(back, x) == logit(net, x));
  }
  save_model(back, dir.path() / "again.bin");
  CHECK(slurp(dir.path() / "m.bin") == slurp(dir.path() / "again.bin"));
}

TEST_CASE("damaged model files are rejected") {
  TempDir dir("model-bad");
  save_model(sample_net(), dir.path() / "m.bin");
  const std::string good = slurp(dir.path() / "m.bin");

  std::string magic = good;
  magic[0] = 'X';
  spit(dir.path() / "magic.bin", magic);
  CHECK_THROWS_AS(load_model(dir.path() / "magic.bin"), ModelFormatError);

  std::string version = good;
  version[8] = static_cast<char>(kModelFormatVersion + 1);
  spit(dir.path() / "version.bin", version);
  CHECK_THROWS_AS(load_model(dir.path() / "version.bin"), ModelFormatError);

  std::string flipped = good;
  flipped[good.size() / 2] = static_cast<char>(flipped[good.size() / 2] ^ 0x10);
  spit(dir.path() / "flip.bin", flipped);
  CHECK_THROWS_AS(load_model(dir.path() / "flip.bin"), ModelFormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, good.size() / 3, good.size() - 1}) {
    spit(dir.path() / "cut.bin", good.substr(0, cut));
    CHECK_THROWS_AS(load_model(dir.path() / "cut.bin"), ModelFormatError);
  }

  spit(dir.path() / "long.bin", good + "x");
  CHECK_THROWS_AS(load_model(dir.path() / "long.bin"), ModelFormatError);
  CHECK_THROWS_AS(load_model(dir.path() / "missing.bin"), IoError);
}
