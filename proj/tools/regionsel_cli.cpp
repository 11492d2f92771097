// regionsel command-line front end.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regionsel/error.hpp"
#include "regionsel/estimator.hpp"
#include "regionsel/evaluation.hpp"
#include "regionsel/image_io.hpp"
#include "regionsel/labeling.hpp"
#include "regionsel/log.hpp"
#include "regionsel/model_io.hpp"
#include "regionsel/parallel.hpp"
#include "regionsel/scenes.hpp"
#include "regionsel/selector.hpp"
#include "regionsel/synthesis.hpp"
#include "regionsel/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regionsel;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kIo = 3, kInternal = 4 };

// Options of one subcommand, settable from the command line or from a JSON
// config file using the flag name (without dashes) as key. Command-line
// values win.
class Bindings {
 public:
  explicit Bindings(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + name, var, help)->capture_default_str();
    add(name, o, var);
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* o = app_->add_flag("--" + name, var, help);
    add(name, o, var);
    return o;
  }

  // Fills every option not given on the command line from `cfg`. Shared
  // (top-level) sections may carry keys meant for other subcommands.
  void apply(const json& cfg, bool strict) {
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      if (it.key() == "estimator" || it.key() == "jobs") continue;
      auto b = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == it.key(); });
      if (b == entries_.end()) {
        if (!strict) continue;
        throw ValidationError("unknown config key '" + it.key() + "' for " + app_->get_name());
      }
      if (b->option->count() > 0) continue;
      try {
        b->load(it.value());
      } catch (const json::exception& e) {
        throw ValidationError("config key '" + it.key() + "': " + e.what());
      }
    }
  }

  json echo() const {
    json j = json::object();
    for (const auto& e : entries_) j[e.name] = e.save();
    return j;
  }

 private:
  struct Entry {
    std::string name;
    CLI::Option* option;
    std::function<void(const json&)> load;
    std::function<json()> save;
  };

  template <class T>
  void add(const std::string& name, CLI::Option* o, T& var) {
    entries_.push_back({name, o, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
  }

  CLI::App* app_;
  std::vector<Entry> entries_;
};

struct Common {
  std::string config_path;
  int jobs = 0;
  bool quiet = false;
  json config = json::object();
};

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw ValidationError(path + ": config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  }
}

// Top-level keys apply to every subcommand; an object under the subcommand's
// name overrides them.
json shared_section(const json& config, const std::vector<std::string>& subcommands) {
  json out = json::object();
  for (auto it = config.begin(); it != config.end(); ++it) {
    if (std::find(subcommands.begin(), subcommands.end(), it.key()) == subcommands.end()) out[it.key()] = it.value();
  }
  return out;
}

json own_section(const json& config, const std::string& name) {
  if (!config.contains(name)) return json::object();
  if (!config[name].is_object()) throw ValidationError("config section '" + name + "' must be an object");
  return config[name];
}

EstimatorConfig estimator_from(const json& cfg) {
  return cfg.contains("estimator") ? EstimatorConfig::from_json(cfg["estimator"]) : EstimatorConfig{};
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_run_config(const fs::path& dir, const std::string& command, json resolved) {
  make_dir(dir);
  resolved["command"] = command;
  resolved["jobs"] = jobs();
  std::ofstream out(dir / "run_config.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "run_config.json").string());
  out << resolved.dump(2) << '\n';
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- subcommands -----------------------------------------------------------

struct SynthesizeArgs {
  std::string sharp_dir, kernel_dir, out;
  double sigma = 4.0;
  std::uint64_t seed = 0;
};

int run_synthesize(const SynthesizeArgs& a, const json& echo) {
  if (a.sharp_dir.empty() || a.kernel_dir.empty() || a.out.empty()) {
    throw ValidationError("synthesize needs --sharp-dir, --kernel-dir and --out");
  }
  const CorpusManifest m = generate_corpus(a.sharp_dir, a.kernel_dir, {a.sigma, a.seed}, a.out);
  write_run_config(a.out, "synthesize", echo);
  std::cout << (fs::path(a.out) / kManifestFileName).string() << '\n';
  log::info(std::to_string(m.entries.size()) + " blurred images written");
  return kOk;
}

struct ScenesArgs {
  std::string out;
  int count = 20;
  int size = 192;
  int kernel_count = 8;
  std::vector<int> kernel_sizes{9, 11, 13, 15};
  std::uint64_t seed = 0;
  std::string kind = "mixed";
};

int run_scenes(const ScenesArgs& a, const json& echo) {
  if (a.out.empty()) throw ValidationError("scenes needs --out");
  if (a.count < 1 || a.kernel_count < 1 || a.size < 8) throw ValidationError("scenes: count and size too small");
  if (a.kind != "mixed" && a.kind != "shapes") throw ValidationError("--kind must be mixed or shapes");
  if (a.kernel_sizes.empty()) throw ValidationError("--kernel-sizes is empty");
  const fs::path out(a.out);
  make_dir(out / "sharp");
  make_dir(out / "kernels");
  parallel_for(static_cast<std::size_t>(a.count), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(a.seed, i);
    const Image img = a.kind == "mixed" ? mixed_scene(a.size, a.size, s) : shapes_scene(a.size, a.size, s);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu.pgm", i);
    write_image(img, out / "sharp" / name);
  });
  for (int k = 0; k < a.kernel_count; ++k) {
    const int side = a.kernel_sizes[static_cast<std::size_t>(k) % a.kernel_sizes.size()];
    char name[32];
    std::snprintf(name, sizeof name, "kernel_%02d.txt", k);
    write_kernel(random_motion_kernel(side, derive_seed(~a.seed, static_cast<std::uint64_t>(k))),
                 out / "kernels" / name);
  }
  write_run_config(out, "scenes", echo);
  std::cout << (out / "sharp").string() << '\n' << (out / "kernels").string() << '\n';
  return kOk;
}

struct LabelArgs {
  std::string manifest, out;
  int patch_size = 228;
  int stride = 20;
  double lambda = 0.75;
  int kernel_size = 0;
  bool balance = false;
  bool store_patches = false;
};

int run_label(const LabelArgs& a, const json& cfg, json echo) {
  if (a.manifest.empty() || a.out.empty()) throw ValidationError("label needs --manifest and --out");
  const CorpusManifest manifest = load_manifest(a.manifest);
  EstimatorConfig est = estimator_from(cfg);
  LabelingOptions opts;
  if (a.kernel_size > 0) {
    est.kernel_size = a.kernel_size;
    opts.use_true_kernel_size = false;
  }
  LabeledDataset ds = build_dataset(manifest, {a.patch_size, a.stride}, est, LabelConfig{a.lambda}, opts);
  if (a.balance) {
    std::vector<double> sims;
    for (const auto& s : ds.samples) sims.push_back(s.similarity);
    const double lambda = balancing_lambda(sims);
    relabel(ds, LabelConfig{lambda});
    echo["balanced_lambda"] = lambda;
  }
  save_dataset(ds, manifest, a.out, a.store_patches);
  echo["estimator"] = est.to_json();
  write_run_config(a.out, "label", echo);
  const BalanceReport r = class_balance_report(ds);
  std::cout << "samples " << ds.samples.size() << " positive " << r.positives << " negative " << r.negatives
            << " degenerate " << r.degenerate << " positive_fraction " << fmt(r.positive_fraction) << " lambda "
            << fmt(ds.lambda) << '\n';
  return kOk;
}

struct TrainArgs {
  std::string dataset, out_model, log;
  int epochs = 20;
  double lr = 0.001;
  double momentum = 0.9;
  int batch = 32;
  std::uint64_t seed = 0;
  std::string input_norm = "center";
  double input_gain = 8.0;
};

int run_train(const TrainArgs& a, const json& echo) {
  if (a.dataset.empty() || a.out_model.empty()) throw ValidationError("train needs --dataset and --out-model");
  const std::vector<TrainingSample> samples = load_training_samples(a.dataset);
  if (samples.empty()) throw ValidationError("dataset " + a.dataset + " is empty");
  TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.momentum = a.momentum;
  tc.batch_size = a.batch;
  tc.epochs = a.epochs;
  tc.seed = a.seed;
  tc.input_side = samples.front().patch.height();
  tc.validate();
  SmallResNetSpec spec;
  spec.input_side = tc.input_side;
  if (a.input_norm == "center") {
    spec.input.mode = InputNorm::Center;
  } else if (a.input_norm == "standardize") {
    spec.input.mode = InputNorm::Standardize;
  } else if (a.input_norm == "none") {
    spec.input.mode = InputNorm::None;
  } else {
    throw ValidationError("--input-norm must be center, standardize or none");
  }
  spec.input.gain = a.input_gain;
  const TrainResult result = train(make_small_resnet(spec, splitmix64(a.seed)), samples, tc);

  const fs::path model_path(a.out_model);
  const fs::path dir = model_path.has_parent_path() ? model_path.parent_path() : fs::path(".");
  make_dir(dir);
  save_model(result.network, model_path);
  const fs::path log_path = a.log.empty() ? dir / "training_log.csv" : fs::path(a.log);
  write_training_log(result.log, log_path);
  json e = echo;
  e["train_config"] = tc.to_json();
  write_run_config(dir, "train", e);
  const EpochStats& last = result.log.back();
  std::cout << "epochs " << result.log.size() << " final_loss " << fmt(last.mean_loss) << " train_accuracy "
            << fmt(last.accuracy) << '\n';
  return kOk;
}

struct SelectArgs {
  std::string image, model, annotate, out;
  int stride = 20;
  int top = 1;
};

int run_select(const SelectArgs& a, const json& echo) {
  if (a.image.empty() || a.model.empty()) throw ValidationError("select needs --image and --model");
  const Image img = read_image(a.image);
  const Network net = load_model(a.model);
  const PatchGridSpec spec{net.input_side(), a.stride};
  const auto top = select_top(score_patches(img, net, spec), a.top);
  std::ostringstream lines;
  for (const auto& p : top) {
    lines << json{{"row", p.ref.row0}, {"col", p.ref.col0}, {"size", p.ref.size}, {"score", p.score}}.dump() << '\n';
  }
  std::cout << lines.str();
  if (!a.annotate.empty()) write_image(annotate(img, top.front().ref), a.annotate);
  if (!a.out.empty()) {
    write_run_config(a.out, "select", echo);
    std::ofstream f(fs::path(a.out) / "selection.jsonl", std::ios::binary);
    if (!f) throw IoError("cannot write selection.jsonl in " + a.out);
    f << lines.str();
  }
  return kOk;
}

struct DeblurArgs {
  std::string image, model, out;
  int kernel_size = 31;
  int stride = 20;
  double alpha = 2e-3;
};

int run_deblur(const DeblurArgs& a, const json& cfg, json echo) {
  if (a.image.empty() || a.model.empty() || a.out.empty()) throw ValidationError("deblur needs --image, --model and --out");
  const Image img = read_image(a.image);
  const Network net = load_model(a.model);
  EstimatorConfig est = estimator_from(cfg);
  est.kernel_size = a.kernel_size;
  est.validate();
  const PatchGridSpec spec{net.input_side(), a.stride};
  const fs::path out(a.out);
  make_dir(out);
  Kernel k = Kernel::delta(a.kernel_size);
  PatchRef ref{};
  try {
    const Selection sel = select_and_estimate(img, net, spec, est);
    ref = sel.patch.ref;
    k = sel.estimate.kernel;
    if (!sel.estimate.ok()) log::warn("degenerate selection: " + sel.estimate.message + "; writing a delta kernel");
  } catch (const DegenerateInputError& e) {
    log::warn(std::string("degenerate selection: ") + e.what() + "; writing a delta kernel");
  }
  write_kernel(k, out / "kernel.txt");
  const Image latent = solve_latent(img, k, a.alpha);
  write_image(latent, out / "deblurred.pfm");
  write_image(latent, out / "deblurred.pgm");
  echo["estimator"] = est.to_json();
  write_run_config(out, "deblur", echo);
  std::cout << json{{"row", ref.row0}, {"col", ref.col0}, {"size", ref.size}}.dump() << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string manifest, model, out;
  std::string methods = "top,random,whole,center";
  int stride = 20;
  int patch_size = 0;
  double alpha = 2e-3;
  int margin = -1;
  int kernel_size = 0;
  std::uint64_t seed = 0;
};

int run_evaluate(const EvaluateArgs& a, const json& cfg, json echo) {
  if (a.manifest.empty() || a.out.empty()) throw ValidationError("evaluate needs --manifest and --out");
  const CorpusManifest manifest = load_manifest(a.manifest);
  for (const auto& e : manifest.entries) {
    for (const auto& p : {e.sharp_path, e.kernel_path}) {
      if (!fs::exists(manifest.resolve(p))) throw ValidationError("missing ground truth " + manifest.resolve(p).string());
    }
  }
  EvalConfig ec;
  ec.methods.clear();
  std::stringstream ss(a.methods);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) ec.methods.push_back(method_from_string(item));
  }
  std::optional<Network> net;
  if (!a.model.empty()) net = load_model(a.model);
  ec.grid = {a.patch_size > 0 ? a.patch_size : (net ? net->input_side() : 228), a.stride};
  ec.alpha = a.alpha;
  ec.margin = a.margin;
  ec.seed = a.seed;
  EstimatorConfig est = estimator_from(cfg);
  if (a.kernel_size > 0) {
    est.kernel_size = a.kernel_size;
    ec.use_true_kernel_size = false;
  }
  const EvalReport report = evaluate_pipeline(manifest, net ? &*net : nullptr, est, ec);
  const fs::path out(a.out);
  make_dir(out);
  write_eval_csv(report.records, out / "eval.csv");
  write_success_svg(report.records, default_thresholds(), out / "success.svg");
  echo["estimator"] = est.to_json();
  write_run_config(out, "evaluate", echo);
  for (Method m : ec.methods) {
    std::vector<double> ers;
    for (const auto& r : report.records) {
      if (r.method == m && std::isfinite(r.er)) ers.push_back(r.er);
    }
    if (ers.empty()) continue;
    double mean = 0.0;
    for (double v : ers) mean += v;
    mean /= static_cast<double>(ers.size());
    std::sort(ers.begin(), ers.end());
    const std::size_t h = ers.size() / 2;
    const double median = ers.size() % 2 ? ers[h] : 0.5 * (ers[h - 1] + ers[h]);
    std::cout << to_string(m) << " mean_er " << fmt(mean) << " median_er " << fmt(median) << '\n';
  }
  for (const auto& f : report.failures) log::warn(f);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned region selection for blind deblurring"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON config; keys are flag names");
  app.add_option("--jobs", common.jobs, "worker threads (default: REGIONSEL_JOBS or all cores)");
  app.add_flag("--quiet", common.quiet, "suppress warnings");
  const std::vector<std::string> names{"synthesize", "scenes", "label", "train", "select", "deblur", "evaluate"};

  SynthesizeArgs syn;
  auto* syn_cmd = app.add_subcommand("synthesize", "blur every sharp image with every kernel");
  Bindings syn_b(syn_cmd);
  syn_b.option("sharp-dir", syn.sharp_dir, "directory of sharp images");
  syn_b.option("kernel-dir", syn.kernel_dir, "directory of kernel text files");
  syn_b.option("sigma", syn.sigma, "noise standard deviation on the 0-255 scale");
  syn_b.option("seed", syn.seed, "master seed");
  syn_b.option("out", syn.out, "output directory");

  ScenesArgs sc;
  auto* sc_cmd = app.add_subcommand("scenes", "generate synthetic sharp images and motion kernels");
  Bindings sc_b(sc_cmd);
  sc_b.option("out", sc.out, "output directory (sharp/ and kernels/ are created)");
  sc_b.option("count", sc.count, "number of sharp images");
  sc_b.option("size", sc.size, "image side in pixels");
  sc_b.option("kernel-count", sc.kernel_count, "number of kernels");
  sc_b.option("kernel-sizes", sc.kernel_sizes, "kernel sides, used cyclically")->delimiter(',');
  sc_b.option("seed", sc.seed, "seed");
  sc_b.option("kind", sc.kind, "mixed or shapes");

  LabelArgs lab;
  auto* lab_cmd = app.add_subcommand("label", "estimate a kernel per patch and label it");
  Bindings lab_b(lab_cmd);
  lab_b.option("manifest", lab.manifest, "corpus manifest.json");
  lab_b.option("patch-size", lab.patch_size, "patch side");
  lab_b.option("stride", lab.stride, "grid stride");
  lab_b.option("lambda", lab.lambda, "similarity threshold for a positive label");
  lab_b.option("kernel-size", lab.kernel_size, "estimated kernel side; 0 uses each image's true kernel size");
  lab_b.flag("balance", lab.balance, "replace lambda by the median similarity");
  lab_b.flag("store-patches", lab.store_patches, "write patch PFMs instead of references");
  lab_b.option("out", lab.out, "dataset directory");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "train the patch classifier");
  Bindings tr_b(tr_cmd);
  tr_b.option("dataset", tr.dataset, "dataset.json");
  tr_b.option("epochs", tr.epochs, "epochs");
  tr_b.option("lr", tr.lr, "learning rate");
  tr_b.option("momentum", tr.momentum, "momentum");
  tr_b.option("batch", tr.batch, "batch size");
  tr_b.option("seed", tr.seed, "seed for initialization and shuffling");
  tr_b.option("input-norm", tr.input_norm, "patch preprocessing: center, standardize or none");
  tr_b.option("input-gain", tr.input_gain, "gain applied after centering (center, none)");
  tr_b.option("out-model", tr.out_model, "model file");
  tr_b.option("log", tr.log, "training log CSV (default: next to the model)");

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "rank the patches of an image");
  Bindings sel_b(sel_cmd);
  sel_b.option("image", sel.image, "blurred image");
  sel_b.option("model", sel.model, "model file");
  sel_b.option("stride", sel.stride, "grid stride");
  sel_b.option("top", sel.top, "number of patches to print");
  sel_b.option("annotate", sel.annotate, "write a copy with the best patch outlined");
  sel_b.option("out", sel.out, "directory for selection.jsonl and run_config.json");

  DeblurArgs db;
  auto* db_cmd = app.add_subcommand("deblur", "select, estimate and deconvolve");
  Bindings db_b(db_cmd);
  db_b.option("image", db.image, "blurred image");
  db_b.option("model", db.model, "model file");
  db_b.option("kernel-size", db.kernel_size, "estimated kernel side (odd)");
  db_b.option("stride", db.stride, "grid stride");
  db_b.option("alpha", db.alpha, "deconvolution regularization weight");
  db_b.option("out", db.out, "output directory");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "error ratio, PSNR and success curves");
  Bindings ev_b(ev_cmd);
  ev_b.option("manifest", ev.manifest, "corpus manifest.json");
  ev_b.option("model", ev.model, "model file (needed for 'top')");
  ev_b.option("methods", ev.methods, "comma list of top, random, whole, center, gt");
  ev_b.option("patch-size", ev.patch_size, "patch side; 0 uses the model input side");
  ev_b.option("stride", ev.stride, "grid stride");
  ev_b.option("alpha", ev.alpha, "deconvolution regularization weight");
  ev_b.option("margin", ev.margin, "border crop; negative uses half the true kernel size");
  ev_b.option("kernel-size", ev.kernel_size, "estimated kernel side; 0 uses the true size");
  ev_b.option("seed", ev.seed, "seed of the random-patch baseline");
  ev_b.option("out", ev.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    log::set_quiet(common.quiet);
    if (!common.config_path.empty()) common.config = load_config(common.config_path);
    const std::map<CLI::App*, Bindings*> bindings{{syn_cmd, &syn_b}, {sc_cmd, &sc_b}, {lab_cmd, &lab_b},
                                                  {tr_cmd, &tr_b},   {sel_cmd, &sel_b}, {db_cmd, &db_b},
                                                  {ev_cmd, &ev_b}};
    CLI::App* sub = app.get_subcommands().front();
    const json shared = shared_section(common.config, names);
    const json own = own_section(common.config, sub->get_name());
    json cfg = shared;
    for (auto it = own.begin(); it != own.end(); ++it) cfg[it.key()] = it.value();
    if (common.jobs > 0) {
      set_jobs(common.jobs);
    } else if (cfg.contains("jobs")) {
      set_jobs(cfg["jobs"].get<int>());
    }
    Bindings* b = bindings.at(sub);
    b->apply(shared, false);
    b->apply(own, true);
    const json echo = b->echo();
    if (sub == syn_cmd) return run_synthesize(syn, echo);
    if (sub == sc_cmd) return run_scenes(sc, echo);
    if (sub == lab_cmd) return run_label(lab, cfg, echo);
    if (sub == tr_cmd) return run_train(tr, echo);
    if (sub == sel_cmd) return run_select(sel, echo);
    if (sub == db_cmd) return run_deblur(db, cfg, echo);
    return run_evaluate(ev, cfg, echo);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ModelFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid configuration value: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
