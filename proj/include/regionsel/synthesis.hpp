#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "regionsel/image.hpp"

namespace regionsel {

// Additive Gaussian noise. `sigma` is a standard deviation on the 0-255
// intensity scale; pixels receive N(0, (sigma/255)^2).
struct NoiseModel {
  double sigma = 4.0;
  std::uint64_t seed = 0;
};

struct PatchGridSpec {
  int patch_size = 228;
  int stride = 20;
};

struct PatchRef {
  int row0 = 0;
  int col0 = 0;
  int size = 0;

  friend bool operator==(const PatchRef&, const PatchRef&) = default;
};

struct CorpusEntry {
  std::string sharp_path;  // relative to the manifest directory
  std::string kernel_path;
  std::string blurred_path;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::filesystem::path directory;  // paths in entries are relative to this
  std::uint64_t master_seed = 0;
  double sigma = 0.0;
  std::vector<CorpusEntry> entries;

  std::filesystem::path resolve(const std::string& relative) const { return directory / relative; }
};

inline constexpr const char* kManifestFileName = "manifest.json";

std::uint64_t splitmix64(std::uint64_t x);
// Seed of pair `index` under `master`: splitmix64(master + (index+1) * golden).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// clamp(convolve(sharp, k, replicate) + noise, 0, 1).
Image blur_image(const Image& sharp, const Kernel& k, const NoiseModel& noise);

// Row-major grid of fully contained patches.
std::vector<PatchRef> patch_grid(int height, int width, const PatchGridSpec& spec);
std::vector<PatchRef> patch_grid(const Image& img, const PatchGridSpec& spec);

Image extract(const Image& img, const PatchRef& p);

// One blurred PFM per (sharp, kernel) pair, named blur_<sharp>_<kernel>.pfm,
// plus manifest.json in out_dir. Inputs are the image files (.pgm/.ppm/.pfm)
// in sharp_dir and the kernel text files (.txt) in kernel_dir, each sorted by
// file name. noise.seed is the master seed.
CorpusManifest generate_corpus(const std::filesystem::path& sharp_dir,
                               const std::filesystem::path& kernel_dir, const NoiseModel& noise,
                               const std::filesystem::path& out_dir);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

// Sorted list of regular files in `dir` whose lowercase extension is listed.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::vector<std::string>& extensions);

}  // namespace regionsel
