#include "regionsel/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "regionsel/convolve.hpp"
#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/log.hpp"
#include "regionsel/parallel.hpp"

namespace regionsel {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

Image blur_image(const Image& sharp, const Kernel& k, const NoiseModel& noise) {
  if (noise.sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
  Image out = convolve(sharp, k, BoundaryMode::ReplicatePad);
  if (noise.sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma / 255.0);
    for (double& v : out.pixels()) v += gauss(rng);
  }
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<PatchRef> patch_grid(int height, int width, const PatchGridSpec& spec) {
  if (spec.patch_size < 1 || spec.stride < 1) {
    throw ValidationError("patch size and stride must be positive");
  }
  if (spec.patch_size > height || spec.patch_size > width) {
    throw DimensionError("patch " + std::to_string(spec.patch_size) + " exceeds image " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  const int rows = (height - spec.patch_size) / spec.stride + 1;
  const int cols = (width - spec.patch_size) / spec.stride + 1;
  std::vector<PatchRef> refs;
  refs.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) refs.push_back({r * spec.stride, c * spec.stride, spec.patch_size});
  }
  return refs;
}

std::vector<PatchRef> patch_grid(const Image& img, const PatchGridSpec& spec) {
  return patch_grid(img.height(), img.width(), spec);
}

Image extract(const Image& img, const PatchRef& p) { return crop(img, p.row0, p.col0, p.size, p.size); }

std::vector<fs::path> list_files(const fs::path& dir, const std::vector<std::string>& extensions) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a readable directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      out.push_back(entry.path());
    }
  }
  if (ec) throw IoError("cannot list directory " + dir.string());
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

CorpusManifest generate_corpus(const fs::path& sharp_dir, const fs::path& kernel_dir,
                               const NoiseModel& noise, const fs::path& out_dir) {
  if (noise.sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
  const auto sharps = list_files(sharp_dir, {".pgm", ".ppm", ".pfm"});
  const auto kernel_files = list_files(kernel_dir, {".txt"});
  if (sharps.empty()) throw ValidationError("no sharp images (.pgm/.ppm/.pfm) in " + sharp_dir.string());
  if (kernel_files.empty()) throw ValidationError("no kernel files (.txt) in " + kernel_dir.string());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());

  std::vector<Kernel> kernels;
  kernels.reserve(kernel_files.size());
  for (const auto& path : kernel_files) {
    kernels.push_back(read_kernel(path));
    const Kernel& k = kernels.back();
    if (k.max_side() < 11 || k.max_side() > 55) {
      log::warn(path.string() + ": kernel side " + std::to_string(k.max_side()) +
                " is outside the usual 11-55 range");
    }
  }

  CorpusManifest manifest;
  manifest.directory = out_dir;
  manifest.master_seed = noise.seed;
  manifest.sigma = noise.sigma;
  manifest.entries.resize(sharps.size() * kernels.size());

  const fs::path base = fs::absolute(out_dir);
  auto relative = [&](const fs::path& p) { return fs::absolute(p).lexically_relative(base).generic_string(); };

  parallel_for(sharps.size(), [&](std::size_t si) {
    const Image sharp = read_image(sharps[si]);
    for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
      const std::size_t index = si * kernels.size() + ki;
      const NoiseModel pair_noise{noise.sigma, derive_seed(noise.seed, index)};
      const Image blurred = blur_image(sharp, kernels[ki], pair_noise);
      const std::string name = "blur_" + sharps[si].stem().string() + "_" +
                               kernel_files[ki].stem().string() + ".pfm";
      write_pfm(blurred, out_dir / name);
      manifest.entries[index] = {relative(sharps[si]), relative(kernel_files[ki]), name,
                                 noise.sigma, pair_noise.seed};
    }
  });

  save_manifest(manifest, out_dir / kManifestFileName);
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const fs::path& path) {
  json doc;
  doc["master_seed"] = manifest.master_seed;
  doc["sigma"] = manifest.sigma;
  doc["noise_convention"] = "sigma is a standard deviation on the 0-255 scale, applied as sigma/255";
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    doc["entries"].push_back({{"sharp_path", e.sharp_path},
                              {"kernel_path", e.kernel_path},
                              {"blurred_path", e.blurred_path},
                              {"sigma", e.sigma},
                              {"seed", e.seed}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  CorpusManifest m;
  m.directory = path.parent_path();
  try {
    m.master_seed = doc.value("master_seed", std::uint64_t{0});
    m.sigma = doc.value("sigma", 0.0);
    for (const auto& e : doc.at("entries")) {
      m.entries.push_back({e.at("sharp_path").get<std::string>(), e.at("kernel_path").get<std::string>(),
                           e.at("blurred_path").get<std::string>(), e.at("sigma").get<double>(),
                           e.at("seed").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

}  // namespace regionsel
