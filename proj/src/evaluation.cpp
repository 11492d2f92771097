#include "regionsel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/kernelsim.hpp"
#include "regionsel/parallel.hpp"
#include "regionsel/selector.hpp"

namespace regionsel {

namespace fs = std::filesystem;

double error_ratio(const Image& estimated, const Image& truth, const Image& with_true_kernel, int margin) {
  if (!estimated.same_shape(truth) || !with_true_kernel.same_shape(truth)) {
    throw DimensionError("error_ratio: images differ in size");
  }
  if (margin < 0) throw ValidationError("error_ratio: margin must be >= 0");
  if (2 * margin >= truth.height() || 2 * margin >= truth.width()) {
    throw DimensionError("error_ratio: margin " + std::to_string(margin) + " leaves no interior");
  }
  double num = 0.0;
  double den = 0.0;
  for (int r = margin; r < truth.height() - margin; ++r) {
    for (int c = margin; c < truth.width() - margin; ++c) {
      const double e = estimated(r, c) - truth(r, c);
      const double k = with_true_kernel(r, c) - truth(r, c);
      num += e * e;
      den += k * k;
    }
  }
  if (den == 0.0) throw DegenerateDenominatorError("error_ratio: ground-truth reconstruction equals the sharp image");
  return num / den;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("psnr: images differ in size");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(a.size()) / sse);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Top:
      return "top";
    case Method::Random:
      return "random";
    case Method::Whole:
      return "whole";
    case Method::Center:
      return "center";
    case Method::GroundTruth:
      return "gt";
  }
  return "top";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::Top, Method::Random, Method::Whole, Method::Center, Method::GroundTruth}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("unknown evaluation method '" + s + "' (expected top, random, whole, center or gt)");
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 10; i <= 50; ++i) t.push_back(i / 10.0);
  return t;
}

SuccessCurve success_curve(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds) {
  if (records.empty()) throw ValidationError("success_curve: no records");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ValidationError("success_curve: thresholds must be ascending");
  }
  SuccessCurve curve{thresholds, {}};
  for (double t : thresholds) {
    std::size_t hits = 0;
    for (const auto& r : records) hits += (std::isfinite(r.er) && r.er <= t) ? 1 : 0;
    curve.rates.push_back(static_cast<double>(hits) / static_cast<double>(records.size()));
  }
  return curve;
}

namespace {

std::size_t center_index(const std::vector<PatchRef>& grid, int height, int width) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double dr = grid[i].row0 + grid[i].size / 2.0 - height / 2.0;
    const double dc = grid[i].col0 + grid[i].size / 2.0 - width / 2.0;
    const double d = dr * dr + dc * dc;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct Estimated {
  Kernel kernel;
  int row;
  int col;
  bool degenerate;
};

}  // namespace

EvalReport evaluate_pipeline(const CorpusManifest& manifest, const Network* model, const EstimatorConfig& est,
                             const EvalConfig& cfg) {
  est.validate();
  if (cfg.methods.empty()) throw ValidationError("no evaluation methods selected");
  if (!(cfg.alpha > 0.0)) throw ValidationError("deconvolution alpha must be > 0");
  if (manifest.entries.empty()) throw ValidationError("manifest has no entries");
  const bool needs_model = std::find(cfg.methods.begin(), cfg.methods.end(), Method::Top) != cfg.methods.end();
  if (needs_model) {
    if (model == nullptr) throw ValidationError("method 'top' needs a trained model");
    if (model->input_side() != cfg.grid.patch_size) {
      throw ValidationError("model input side " + std::to_string(model->input_side()) + " differs from patch size " +
                            std::to_string(cfg.grid.patch_size));
    }
  }

  const std::size_t n = manifest.entries.size();
  const std::size_t m = cfg.methods.size();
  std::vector<EvalRecord> records(n * m);
  parallel_for(n, [&](std::size_t i) {
    const CorpusEntry& entry = manifest.entries[i];
    const std::string id = fs::path(entry.blurred_path).stem().string();
    for (std::size_t j = 0; j < m; ++j) {
      records[i * m + j].image_id = id;
      records[i * m + j].method = cfg.methods[j];
    }
    try {
      const Image sharp = read_image(manifest.resolve(entry.sharp_path));
      const Image blurred = read_image(manifest.resolve(entry.blurred_path));
      const Kernel truth = read_kernel(manifest.resolve(entry.kernel_path));
      if (!sharp.same_shape(blurred)) throw DimensionError("sharp and blurred images differ in size");
      const int ks = cfg.use_true_kernel_size ? truth.max_side() : est.kernel_size;
      const int margin = cfg.margin >= 0 ? cfg.margin : truth.max_side() / 2;
      EstimatorConfig ecfg = est;
      ecfg.kernel_size = ks;
      const BuiltinEstimator estimator(ecfg);
      // The same operator (solve_latent at cfg.alpha) produces every
      // reconstruction compared below.
      const Image with_truth = solve_latent(blurred, truth, cfg.alpha);
      const auto grid = patch_grid(blurred, cfg.grid);

      for (std::size_t j = 0; j < m; ++j) {
        EvalRecord& rec = records[i * m + j];
        try {
          auto from_patch = [&](const PatchRef& ref) {
            const KernelEstimate e = estimator.estimate(extract(blurred, ref), ks);
            return Estimated{e.kernel, ref.row0, ref.col0, !e.ok()};
          };
          Estimated got{truth, -1, -1, false};
          switch (cfg.methods[j]) {
            case Method::Top: {
              const RankedPatch best = select_top(score_patches(blurred, *model, cfg.grid), 1).front();
              got = from_patch(best.ref);
              break;
            }
            case Method::Random:
              got = from_patch(grid[derive_seed(cfg.seed, i) % grid.size()]);
              break;
            case Method::Center:
              got = from_patch(grid[center_index(grid, blurred.height(), blurred.width())]);
              break;
            case Method::Whole: {
              const KernelEstimate e = estimator.estimate(blurred, ks);
              got = Estimated{e.kernel, -1, -1, !e.ok()};
              break;
            }
            case Method::GroundTruth:
              break;
          }
          const Image recovered = solve_latent(blurred, got.kernel, cfg.alpha);
          rec.er = error_ratio(recovered, sharp, with_truth, margin);
          rec.psnr_db = psnr(recovered, sharp);
          rec.similarity = kernel_similarity(got.kernel, truth);
          rec.patch_row = got.row;
          rec.patch_col = got.col;
          rec.status = got.degenerate ? "degenerate" : "ok";
        } catch (const Error& e) {
          rec.er = rec.psnr_db = rec.similarity = std::numeric_limits<double>::quiet_NaN();
          rec.status = std::string("failed: ") + e.what();
        }
      }
    } catch (const Error& e) {
      for (std::size_t j = 0; j < m; ++j) {
        EvalRecord& rec = records[i * m + j];
        rec.er = rec.psnr_db = rec.similarity = std::numeric_limits<double>::quiet_NaN();
        rec.status = std::string("failed: ") + e.what();
      }
    }
  });

  EvalReport report{std::move(records), {}};
  for (const auto& r : report.records) {
    if (r.status.rfind("failed", 0) == 0) report.failures.push_back(r.image_id + " [" + to_string(r.method) + "]: " + r.status);
  }
  return report;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_eval_csv(const std::vector<EvalRecord>& records, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "image_id,method,ER,PSNR_dB,similarity,patch_row,patch_col,status\n";
  for (const auto& r : records) {
    out << csv_field(r.image_id) << ',' << to_string(r.method) << ',' << fmt(r.er) << ',' << fmt(r.psnr_db) << ','
        << fmt(r.similarity) << ',' << r.patch_row << ',' << r.patch_col << ',' << csv_field(r.status) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_success_svg(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                       const fs::path& path) {
  if (thresholds.size() < 2) throw ValidationError("success curve needs at least two thresholds");
  std::map<Method, std::vector<EvalRecord>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(r);

  constexpr double W = 640, H = 420, L = 60, R = 140, T = 30, B = 50;
  const double t0 = thresholds.front();
  const double t1 = thresholds.back();
  auto px = [&](double t) { return L + (t - t0) / (t1 - t0) * (W - L - R); };
  auto py = [&](double rate) { return H - B - rate * (H - T - B); };
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#7f7f7f"};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  out << "<metadata>\nthreshold";
  for (const auto& [method, recs] : by_method) out << ',' << to_string(method);
  out << '\n';
  std::map<Method, SuccessCurve> curves;
  for (const auto& [method, recs] : by_method) curves.emplace(method, success_curve(recs, thresholds));
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    out << fmt(thresholds[k]);
    for (const auto& [method, curve] : curves) out << ',' << fmt(curve.rates[k]);
    out << '\n';
  }
  out << "</metadata>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<path d=\"M%.1f %.1f V%.1f H%.1f\" fill=\"none\" stroke=\"black\"/>\n", L, T, H - B, W - R);
  out << buf;
  for (int i = 0; i <= 4; ++i) {
    const double t = t0 + (t1 - t0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.1f</text>\n",
                  px(t), H - B + 16, t);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  L - 6, py(i / 4.0) + 4, i / 4.0);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">error ratio</text>\n",
                (L + W - R) / 2, H - 12);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">"
                "success rate</text>\n",
                (T + H - B) / 2, (T + H - B) / 2);
  out << buf;
  int idx = 0;
  for (const auto& [method, curve] : curves) {
    const char* color = colors[idx % 5];
    out << "<polyline data-method=\"" << to_string(method) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", k ? " " : "", px(thresholds[k]), py(curve.rates[k]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n", W - R + 12,
                  T + 16.0 + 18.0 * idx, color, to_string(method).c_str());
    out << buf;
    ++idx;
  }
  out << "</svg>\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace regionsel
