#include "regionsel/labeling.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/log.hpp"
#include "regionsel/parallel.hpp"

namespace regionsel {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::Ok:
      return "ok";
    case SampleStatus::Degenerate:
      return "degenerate";
    case SampleStatus::Failed:
      return "failed";
  }
  return "failed";
}

SampleStatus sample_status_from_string(const std::string& s) {
  if (s == "ok") return SampleStatus::Ok;
  if (s == "degenerate") return SampleStatus::Degenerate;
  if (s == "failed") return SampleStatus::Failed;
  throw ValidationError("unknown sample status '" + s + "'");
}

std::string estimator_config_hash(const EstimatorConfig& cfg) {
  const std::string text = cfg.to_json().dump();
  const uLong c = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(text.data()),
                        static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(c));
  return buf;
}

LabeledDataset build_dataset(const CorpusManifest& manifest, const PatchGridSpec& spec, const EstimatorConfig& est,
                             const LabelConfig& label_cfg, const LabelingOptions& opts) {
  est.validate();
  label_cfg.validate();
  if (manifest.entries.empty()) throw ValidationError("manifest has no entries");

  const std::size_t n_entries = manifest.entries.size();
  std::vector<Image> blurred(n_entries, Image(1, 1));
  std::vector<Kernel> truth(n_entries, Kernel::delta());
  parallel_for(n_entries, [&](std::size_t i) {
    blurred[i] = read_image(manifest.resolve(manifest.entries[i].blurred_path));
    truth[i] = read_kernel(manifest.resolve(manifest.entries[i].kernel_path));
  });

  struct Job {
    std::size_t entry;
    PatchRef ref;
    int kernel_size;
  };
  std::vector<Job> jobs_list;
  for (std::size_t i = 0; i < n_entries; ++i) {
    const int ks = opts.use_true_kernel_size ? truth[i].max_side() : est.kernel_size;
    if (3 * ks > spec.patch_size) {
      throw ValidationError("patch size " + std::to_string(spec.patch_size) + " is below 3x the kernel size " +
                            std::to_string(ks) + " of " + manifest.entries[i].kernel_path);
    }
    for (const auto& ref : patch_grid(blurred[i], spec)) jobs_list.push_back({i, ref, ks});
  }

  LabeledDataset ds;
  ds.lambda = label_cfg.lambda;
  ds.grid = spec;
  ds.estimator = est;
  ds.estimator_hash = estimator_config_hash(est);
  ds.samples.resize(jobs_list.size());
  parallel_for(jobs_list.size(), [&](std::size_t j) {
    const Job& job = jobs_list[j];
    LabeledSample& s = ds.samples[j];
    s.entry = job.entry;
    s.blurred_path = manifest.entries[job.entry].blurred_path;
    s.ref = job.ref;
    EstimatorConfig cfg = est;
    cfg.kernel_size = job.kernel_size;
    try {
      KernelEstimate e = estimate_kernel(extract(blurred[job.entry], job.ref), cfg);
      s.estimated = e.kernel;
      if (e.ok()) {
        s.similarity = kernel_similarity(e.kernel, truth[job.entry]);
        s.status = SampleStatus::Ok;
      } else {
        s.similarity = 0.0;
        s.status = SampleStatus::Degenerate;
      }
    } catch (const Error&) {
      s.estimated = Kernel::delta(job.kernel_size);
      s.similarity = 0.0;
      s.status = SampleStatus::Failed;
    }
    s.label = s.status == SampleStatus::Ok ? label(s.similarity, label_cfg) : 0;
  });
  return ds;
}

void relabel(LabeledDataset& ds, const LabelConfig& label_cfg) {
  label_cfg.validate();
  ds.lambda = label_cfg.lambda;
  for (auto& s : ds.samples) s.label = s.status == SampleStatus::Ok ? label(s.similarity, label_cfg) : 0;
}

double balancing_lambda(std::vector<double> similarities) {
  if (similarities.empty()) throw ValidationError("balancing_lambda: no similarities");
  std::sort(similarities.begin(), similarities.end());
  return similarities[similarities.size() / 2];
}

BalanceReport class_balance_report(const LabeledDataset& ds) {
  if (ds.samples.empty()) throw ValidationError("class_balance_report: empty dataset");
  BalanceReport r;
  for (const auto& s : ds.samples) {
    if (s.label == 1) {
      ++r.positives;
    } else {
      ++r.negatives;
    }
    if (s.status != SampleStatus::Ok) ++r.degenerate;
  }
  r.positive_fraction = static_cast<double>(r.positives) / static_cast<double>(ds.samples.size());
  r.imbalanced = r.positive_fraction < 0.3 || r.positive_fraction > 0.7;
  if (r.imbalanced) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "positive fraction %.3f is outside [0.3, 0.7]; consider adjusting lambda (%.4g)",
                  r.positive_fraction, ds.lambda);
    log::warn(msg);
  }
  return r;
}

namespace {

std::string relative_to(const fs::path& target, const fs::path& base) {
  const fs::path rel = fs::relative(fs::absolute(target), fs::absolute(base));
  return rel.empty() ? target.generic_string() : rel.generic_string();
}

std::string sample_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

}  // namespace

void save_dataset(LabeledDataset& ds, const CorpusManifest& manifest, const fs::path& dir, bool store_patches) {
  std::error_code ec;
  fs::create_directories(dir / "kernels", ec);
  if (store_patches) fs::create_directories(dir / "patches", ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

  std::vector<Image> blurred;
  if (store_patches) {
    blurred.assign(manifest.entries.size(), Image(1, 1));
    parallel_for(manifest.entries.size(),
                 [&](std::size_t i) { blurred[i] = read_image(manifest.resolve(manifest.entries[i].blurred_path)); });
  }
  ds.patches_stored = store_patches;
  ds.manifest_path = relative_to(manifest.directory / kManifestFileName, dir);
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    LabeledSample& s = ds.samples[i];
    s.estimated_kernel_path = "kernels/" + sample_stem(i) + ".txt";
    write_kernel(s.estimated, dir / s.estimated_kernel_path);
    if (store_patches) {
      s.patch_path = "patches/" + sample_stem(i) + ".pfm";
      write_image(extract(blurred.at(s.entry), s.ref), dir / s.patch_path);
    } else {
      s.patch_path.clear();
    }
  });

  const BalanceReport balance = class_balance_report(ds);
  json samples = json::array();
  for (const auto& s : ds.samples) {
    json j{{"entry", s.entry},         {"blurred_path", s.blurred_path}, {"row0", s.ref.row0},
           {"col0", s.ref.col0},       {"size", s.ref.size},             {"similarity", s.similarity},
           {"label", s.label},         {"status", to_string(s.status)},  {"estimated_kernel_path", s.estimated_kernel_path}};
    if (store_patches) j["patch_path"] = s.patch_path;
    samples.push_back(std::move(j));
  }
  const json doc{{"lambda", ds.lambda},
                 {"patch_size", ds.grid.patch_size},
                 {"stride", ds.grid.stride},
                 {"estimator_config", ds.estimator.to_json()},
                 {"estimator_config_hash", ds.estimator_hash},
                 {"storage", store_patches ? "patches" : "refs"},
                 {"manifest", ds.manifest_path.generic_string()},
                 {"counts",
                  {{"total", ds.samples.size()},
                   {"positive", balance.positives},
                   {"negative", balance.negatives},
                   {"degenerate", balance.degenerate}}},
                 {"samples", std::move(samples)}};
  std::ofstream out(dir / kDatasetFileName, std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / kDatasetFileName).string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / kDatasetFileName).string());
}

LabeledDataset load_dataset(const fs::path& index_path) {
  std::ifstream in(index_path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset index " + index_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(index_path.string() + ": " + e.what(), e.byte);
  }
  const fs::path dir = index_path.parent_path();
  LabeledDataset ds;
  try {
    ds.lambda = doc.at("lambda").get<double>();
    ds.grid = {doc.at("patch_size").get<int>(), doc.at("stride").get<int>()};
    ds.estimator = EstimatorConfig::from_json(doc.at("estimator_config"));
    ds.estimator_hash = doc.at("estimator_config_hash").get<std::string>();
    ds.patches_stored = doc.at("storage").get<std::string>() == "patches";
    ds.manifest_path = doc.at("manifest").get<std::string>();
    for (const auto& j : doc.at("samples")) {
      LabeledSample s;
      s.entry = j.at("entry").get<std::size_t>();
      s.blurred_path = j.at("blurred_path").get<std::string>();
      s.ref = {j.at("row0").get<int>(), j.at("col0").get<int>(), j.at("size").get<int>()};
      s.similarity = j.at("similarity").get<double>();
      s.label = j.at("label").get<int>();
      s.status = sample_status_from_string(j.at("status").get<std::string>());
      s.estimated_kernel_path = j.at("estimated_kernel_path").get<std::string>();
      s.patch_path = j.value("patch_path", std::string{});
      if (s.label != 0 && s.label != 1) throw ValidationError("label must be 0 or 1");
      ds.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ValidationError(index_path.string() + ": malformed dataset index: " + e.what());
  }
  for (auto& s : ds.samples) {
    if (!s.estimated_kernel_path.empty() && fs::exists(dir / s.estimated_kernel_path)) {
      s.estimated = read_kernel(dir / s.estimated_kernel_path);
    }
  }
  return ds;
}

std::vector<TrainingSample> training_samples(const LabeledDataset& ds, const CorpusManifest& manifest) {
  std::vector<Image> blurred(manifest.entries.size(), Image(1, 1));
  std::vector<char> needed(manifest.entries.size(), 0);
  for (const auto& s : ds.samples) {
    if (s.entry >= manifest.entries.size()) throw ValidationError("dataset refers to a missing manifest entry");
    needed[s.entry] = 1;
  }
  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    if (needed[i]) blurred[i] = read_image(manifest.resolve(manifest.entries[i].blurred_path));
  });
  std::vector<TrainingSample> out(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    out[i] = {extract(blurred[s.entry], s.ref), s.label, s.similarity};
  }
  return out;
}

std::vector<TrainingSample> load_training_samples(const fs::path& index_path) {
  const LabeledDataset ds = load_dataset(index_path);
  const fs::path dir = index_path.parent_path();
  if (ds.patches_stored) {
    std::vector<TrainingSample> out(ds.samples.size());
    parallel_for(ds.samples.size(), [&](std::size_t i) {
      const auto& s = ds.samples[i];
      out[i] = {read_image(dir / s.patch_path), s.label, s.similarity};
    });
    return out;
  }
  const fs::path manifest_path = ds.manifest_path.is_absolute() ? ds.manifest_path : dir / ds.manifest_path;
  return training_samples(ds, load_manifest(manifest_path));
}

}  // namespace regionsel
