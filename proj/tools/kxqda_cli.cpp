// kxqda: synthetic data, training, evaluation, self-tests and timing for
// KISSME / XQDA / k-XQDA.
//
// Exit codes: 0 ok, 1 usage or configuration, 2 data, 3 numerical,
// 4 self-test failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kxqda.hpp"

namespace fs = std::filesystem;
using namespace kxqda;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3, kSelftest = 4 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError: return kUsage;
    case ErrorKind::ShapeError:
    case ErrorKind::ParseError:
    case ErrorKind::LabelError:
    case ErrorKind::InsufficientPairs:
    case ErrorKind::TooLarge:
    case ErrorKind::EmptyEval:
    case ErrorKind::IoError: return kData;
    case ErrorKind::InvalidMatrix:
    case ErrorKind::SingularDenominator:
    case ErrorKind::SingularScatter:
    case ErrorKind::DegenerateBandwidth: return kNumerical;
  }
  return kData;
}

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, const std::string& out_help) {
  sub->add_option("--seed", c.seed, "64-bit seed for every random stream");
  sub->add_option("--config", c.config, "key=value file; command-line flags take precedence")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, out_help);
  sub->add_flag("--quiet", c.quiet, "print nothing on success");
}

// ---------------------------------------------------------------------------
// Config files: one key=value per line, '#' starts a comment. Keys are long
// option names without the leading dashes.

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  for (int no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(no);
    require(eq != std::string::npos, ErrorKind::ConfigError, where + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::ConfigError, where + ": empty key");
    require(seen.insert(key).second, ErrorKind::ConfigError, where + ": duplicate key '" + key + "'");
    out.emplace_back(std::move(key), value);
  }
  return out;
}

void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  for (const auto& [key, value] : read_config(path)) {
    require(key != "config", ErrorKind::ConfigError, path + ": 'config' cannot be set from a config file");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    require(opt != nullptr, ErrorKind::ConfigError,
            path + ": unknown key '" + key + "' for command '" + sub->get_name() + "'");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      fail(ErrorKind::ConfigError, path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

/// Every option of a command with its effective value. The output location
/// is left out so identical runs produce identical files.
Json echo_options(const CLI::App* sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "out") continue;
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? Json(r.front()) : Json(r);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  j["command"] = sub->get_name();
  return j;
}

// ---------------------------------------------------------------------------
// Data directories: X, Z (CSV or binary) plus labels_X.csv, labels_Z.csv.

CrossViewDataset load_data_dir(const fs::path& dir) {
  auto pick = [&](const std::string& stem) {
    for (const char* ext : {".csv", ".bin"})
      if (fs::exists(dir / (stem + ext))) return dir / (stem + ext);
    fail(ErrorKind::IoError, "missing " + (dir / (stem + ".csv")).string());
  };
  return load_features(pick("X"), pick("Z"), dir / "labels_X.csv", dir / "labels_Z.csv");
}

struct ModelFlags {
  std::string method = "kxqda";
  std::string kernel = "rbf";
  std::string gamma = "auto";
  int degree = 2;
  double offset = 1.0;
  std::string scale = "auto";
  double lambda = kDefaultRidge;
  long max_b = 0;
  int pca_dim = 0;
  bool no_normalize = false;

  CLI::Option* gamma_opt = nullptr;
  CLI::Option* degree_opt = nullptr;
  CLI::Option* offset_opt = nullptr;
  CLI::Option* scale_opt = nullptr;

  void add_to(CLI::App* sub) {
    sub->add_option("--method", method, "kissme | xqda | kxqda");
    sub->add_option("--kernel", kernel, "linear | rbf | poly, optionally with parameters ('rbf gamma=0.5')");
    gamma_opt = sub->add_option("--gamma", gamma, "rbf gamma, or auto (median heuristic)");
    degree_opt = sub->add_option("--degree", degree, "polynomial degree");
    offset_opt = sub->add_option("--offset", offset, "polynomial offset");
    scale_opt = sub->add_option("--scale", scale, "polynomial scale, or auto (1/d)");
    sub->add_option("--lambda", lambda, "ridge (relative for kissme/xqda, absolute for kxqda)");
    sub->add_option("--max-b", max_b, "cap on the subspace dimension, 0 for none");
    sub->add_option("--pca-dim", pca_dim, "kissme PCA dimension, 0 for none");
    sub->add_flag("--no-normalize", no_normalize, "kissme: keep unnormalized pair sums");
  }

  static std::optional<double> auto_or_number(const std::string& key, const std::string& v) {
    if (v == "auto") return std::nullopt;
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::ConfigError, key + " must be a number or 'auto', got '" + v + "'");
  }

  ModelConfig resolve() const {
    ModelConfig mc;
    mc.method = parse_method(method);
    mc.kernel = parse_kernel_spec(kernel);
    if (gamma_opt->count()) mc.kernel.gamma = auto_or_number("gamma", gamma);
    if (degree_opt->count()) mc.kernel.degree = degree;
    if (offset_opt->count()) mc.kernel.offset = offset;
    if (scale_opt->count()) mc.kernel.scale = auto_or_number("scale", scale);
    require(lambda >= 0.0, ErrorKind::ConfigError, "lambda must be >= 0");
    require(max_b >= 0, ErrorKind::ConfigError, "max-b must be >= 0");
    require(pca_dim >= 0, ErrorKind::ConfigError, "pca-dim must be >= 0");
    mc.lambda = lambda;
    if (max_b > 0) mc.max_b = max_b;
    if (pca_dim > 0) mc.pca_dim = pca_dim;
    mc.kissme_normalize = !no_normalize;
    return mc;
  }
};

void print_rank_table(const std::string& label, const CmcCurve& c) {
  std::printf("%-10s %8s %8s %8s %8s\n", "method", "rank-1", "rank-5", "rank-10", "rank-20");
  std::printf("%-10s %8.2f %8.2f %8.2f %8.2f\n", label.c_str(), 100.0 * c.at(1), 100.0 * c.at(5), 100.0 * c.at(10),
              100.0 * c.at(20));
}

// ---------------------------------------------------------------------------
// Commands

struct SynthFlags {
  SynthConfig cfg;
  int per_view = 1;
  std::string warp = "none";
  std::string format = "csv";
  CLI::Option* per_x_opt = nullptr;
  CLI::Option* per_z_opt = nullptr;
};

int cmd_synth(const CLI::App* sub, const Common& c, SynthFlags& f) {
  require(!c.out.empty(), ErrorKind::ConfigError, "synth needs --out <directory>");
  SynthConfig cfg = f.cfg;
  if (!f.per_x_opt->count()) cfg.per_class_x = f.per_view;
  if (!f.per_z_opt->count()) cfg.per_class_z = f.per_view;
  cfg.warp = parse_warp(f.warp);
  require(f.format == "csv" || f.format == "binary", ErrorKind::ConfigError, "format must be csv or binary");
  const CrossViewDataset ds = synth_crossview(cfg, c.seed);

  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const bool bin = f.format == "binary";
  const std::string fx = bin ? "X.bin" : "X.csv";
  const std::string fz = bin ? "Z.bin" : "Z.csv";
  save_features(ds, dir / fx, dir / fz, dir / "labels_X.csv", dir / "labels_Z.csv",
                bin ? FeatureFormat::Binary : FeatureFormat::Csv);

  Json manifest;
  manifest["config"] = echo_options(sub);
  manifest["files"] = {{"X", fx}, {"Z", fz}, {"labels_X", "labels_X.csv"}, {"labels_Z", "labels_Z.csv"}};
  manifest["n"] = ds.n();
  manifest["m"] = ds.m();
  manifest["d"] = ds.dim();
  manifest["classes"] = ds.class_count();
  manifest["distractors"] = cfg.distractors;
  io::write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  if (!c.quiet)
    std::printf("wrote %s: n=%ld m=%ld d=%ld classes=%d\n", dir.string().c_str(), long(ds.n()), long(ds.m()),
                long(ds.dim()), ds.class_count());
  return kOk;
}

int cmd_train(const CLI::App* sub, const Common& c, const std::string& data, const ModelFlags& mf) {
  require(!c.out.empty(), ErrorKind::ConfigError, "train needs --out <model file>");
  require(!data.empty(), ErrorKind::ConfigError, "train needs --data <directory>");
  const ModelConfig mc = mf.resolve();
  const CrossViewDataset ds = load_data_dir(data);
  const auto t0 = std::chrono::steady_clock::now();
  const FittedModel model = fit_model(ds, mc, derive_seed(c.seed, "train/fit"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json extra;
  extra["config"] = echo_options(sub);
  extra["fit_seconds"] = secs;
  extra["train"] = {{"n", ds.n()}, {"m", ds.m()}, {"d", ds.dim()}, {"classes", ds.class_count()}};
  save_model(c.out, model, extra);
  if (!c.quiet) {
    std::printf("trained %s: b=%ld fit=%.3fs -> %s\n", to_string(mc.method).c_str(), long(subspace_dim(model)), secs,
                c.out.c_str());
    if (const auto* km = std::get_if<KxqdaModel>(&model)) std::printf("kernel: %s\n", to_string(km->kernel).c_str());
  }
  return kOk;
}

int cmd_eval(const CLI::App* sub, const Common& c, const std::string& data, const ModelFlags& mf, int trials,
             const std::string& multishot, bool swap_views) {
  require(!data.empty(), ErrorKind::ConfigError, "eval needs --data <directory>");
  const ModelConfig mc = mf.resolve();
  ProtocolConfig pc;
  pc.trials = trials;
  pc.seed = c.seed;
  pc.swap_views = swap_views;
  pc.multishot = parse_multishot(multishot);
  const CrossViewDataset ds = load_data_dir(data);
  const EvalReport report = run_protocol(ds, mc, pc);

  if (!c.out.empty()) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    io::write_atomic(dir / "report.json", to_json(report, echo_options(sub)).dump(2) + "\n");
    io::write_atomic(dir / "cmc.csv", cmc_csv(report.mean));
  }
  const Index failed = report.failed();
  if (!c.quiet && failed < Index(report.trials.size()))
    print_rank_table(to_string(mc.method), report.mean);
  if (failed > 0) {
    for (const auto& t : report.trials)
      if (!t.ok) std::fprintf(stderr, "kxqda: trial %d failed: %s\n", t.index, t.error.c_str());
    for (const auto& t : report.trials)
      if (!t.ok && t.error_kind) return exit_code(*t.error_kind);
  }
  return kOk;
}

int cmd_selftest(const Common& c, bool quick, const std::string& fault) {
  SelftestOptions opts;
  opts.quick = quick;
  opts.seed = c.seed == 0 ? opts.seed : c.seed;
  if (!fault.empty()) {
    require(fault == "e-sign", ErrorKind::ConfigError, "unknown fault '" + fault + "' (expected e-sign)");
    opts.inject_e_sign_flip = true;
  }
  const std::vector<CheckResult> results = run_selftest(opts);
  int failures = 0;
  Json j = Json::array();
  for (const auto& r : results) {
    failures += !r.pass;
    if (!c.quiet || !r.pass)
      std::printf("%s  %-60s observed=%.3e tolerance=%g %.2fs%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                  r.observed, r.tolerance, r.seconds, r.detail.empty() ? "" : "  ", r.detail.c_str());
    j.push_back({{"name", r.name},
                 {"pass", r.pass},
                 {"observed", r.observed},
                 {"tolerance", r.tolerance},
                 {"seconds", r.seconds},
                 {"detail", r.detail}});
  }
  if (!c.out.empty())
    io::write_atomic(c.out, Json{{"quick", quick}, {"seed", opts.seed}, {"fault", fault}, {"checks", j}}.dump(2) + "\n");
  if (!c.quiet) std::printf("%zu checks, %d failed\n", results.size(), failures);
  return failures ? kSelftest : kOk;
}

int cmd_bench(const CLI::App* sub, const Common& c, const std::vector<long>& dims, const std::vector<long>& sizes,
              int reps) {
  require(reps >= 1, ErrorKind::ConfigError, "reps must be >= 1");
  for (long d : dims) require(d >= 1, ErrorKind::ConfigError, "dims must be >= 1");
  for (long s : sizes) require(s >= 8, ErrorKind::ConfigError, "sizes (n+m) must be >= 8");
  Json cells = Json::array();
  if (!c.quiet) std::printf("%8s %6s %12s %12s %8s  %s\n", "d", "n+m", "xqda_s", "kxqda_s", "ratio", "faster");
  for (long d : dims) {
    for (long s : sizes) {
      const BenchCell cell = bench_cell(d, s, reps, c.seed);
      const double tx = cell.xqda_median(), tk = cell.kxqda_median();
      const bool both = cell.xqda_error.empty() && cell.kxqda_error.empty();
      const std::string faster = !both ? "n/a" : (tk < tx ? "kxqda" : "xqda");
      Json jc{{"d", d},         {"n_plus_m", s},        {"reps", reps},
              {"xqda_runs_s", cell.xqda_seconds}, {"kxqda_runs_s", cell.kxqda_seconds},
              {"xqda_median_s", tx}, {"kxqda_median_s", tk}, {"faster", faster}};
      if (both && tk > 0) jc["ratio_xqda_over_kxqda"] = tx / tk;
      if (!cell.xqda_error.empty()) jc["xqda_error"] = cell.xqda_error;
      if (!cell.kxqda_error.empty()) jc["kxqda_error"] = cell.kxqda_error;
      cells.push_back(std::move(jc));
      if (!c.quiet)
        std::printf("%8ld %6ld %12.4f %12.4f %8.2f  %s\n", d, s, tx, tk, both && tk > 0 ? tx / tk : 0.0,
                    faster.c_str());
    }
  }
  if (!c.out.empty())
    io::write_atomic(c.out, Json{{"config", echo_options(sub)}, {"policy", "median of reps"}, {"cells", cells}}.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-view metric learning: KISSME, XQDA and kernel XQDA"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  Common common;

  SynthFlags sf;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cross-view dataset");
  add_common(synth, common, "output directory");
  synth->add_option("--classes", sf.cfg.classes, "number of identities");
  synth->add_option("--per-view", sf.per_view, "samples per identity in each view");
  sf.per_x_opt = synth->add_option("--per-view-x", sf.cfg.per_class_x, "samples per identity in view X");
  sf.per_z_opt = synth->add_option("--per-view-z", sf.cfg.per_class_z, "samples per identity in view Z");
  synth->add_option("--dim", sf.cfg.dim, "feature dimension");
  synth->add_option("--warp", sf.warp, "none | affine | quadratic (applied to view Z)");
  synth->add_option("--warp-strength", sf.cfg.warp_strength, "warp coefficient");
  synth->add_option("--noise", sf.cfg.noise, "per-sample noise standard deviation");
  synth->add_option("--distractors", sf.cfg.distractors, "extra identities present only in view Z");
  synth->add_option("--format", sf.format, "csv | binary");

  ModelFlags train_flags;
  std::string train_data;
  CLI::App* train = app.add_subcommand("train", "fit a model on a data directory");
  add_common(train, common, "model file (a .json sidecar is written next to it)");
  train->add_option("--data", train_data, "directory with X, Z, labels_X.csv, labels_Z.csv");
  train_flags.add_to(train);

  ModelFlags eval_flags;
  std::string eval_data;
  int trials = 10;
  std::string multishot = "min";
  bool swap_views = false;
  CLI::App* eval = app.add_subcommand("eval", "repeated half-split evaluation");
  add_common(eval, common, "report directory (report.json, cmc.csv)");
  eval->add_option("--data", eval_data, "directory with X, Z, labels_X.csv, labels_Z.csv");
  eval_flags.add_to(eval);
  eval->add_option("--trials", trials, "number of random splits");
  eval->add_option("--multishot", multishot, "gallery reduction per identity: min | mean");
  eval->add_flag("--swap-views", swap_views, "use view Z as queries and view X as gallery");

  bool quick = false;
  std::string fault;
  CLI::App* selftest = app.add_subcommand("selftest", "run the oracle checks");
  add_common(selftest, common, "JSON results file");
  selftest->add_flag("--quick", quick, "fast subset");
  selftest->add_option("--inject-fault", fault, "deliberately break a formula (e-sign)");

  std::vector<long> dims{20000};
  std::vector<long> sizes{200};
  int reps = 5;
  CLI::App* bench = app.add_subcommand("bench", "time xqda_fit against kxqda_fit");
  add_common(bench, common, "JSON timing report");
  bench->add_option("--dims", dims, "feature dimensions")->delimiter(',');
  bench->add_option("--sizes", sizes, "training set sizes n+m")->delimiter(',');
  bench->add_option("--reps", reps, "runs per cell (median reported)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, common.config);
    if (sub == synth) return cmd_synth(sub, common, sf);
    if (sub == train) return cmd_train(sub, common, train_data, train_flags);
    if (sub == eval) return cmd_eval(sub, common, eval_data, eval_flags, trials, multishot, swap_views);
    if (sub == selftest) return cmd_selftest(common, quick, fault);
    if (sub == bench) return cmd_bench(sub, common, dims, sizes, reps);
  } catch (const Error& e) {
    std::fprintf(stderr, "kxqda: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kxqda: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
