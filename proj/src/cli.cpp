#include "mcmklr/cli.hpp"

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mcmklr/data_io.hpp"
#include "mcmklr/dense_oracle.hpp"
#include "mcmklr/errors.hpp"
#include "mcmklr/klr_fast.hpp"
#include "mcmklr/metrics.hpp"
#include "mcmklr/model_io.hpp"
#include "mcmklr/multiclass.hpp"

namespace mcmklr::cli {

namespace {

using nlohmann::json;

/// Bad flag values; maps to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

template <typename T>
T parse_number(const std::string& text, const std::string& flag) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw UsageError(flag + ": cannot parse '" + text + "'");
  return v;
}

struct TrainFlags {
  std::string data;
  double sigma = 1.0;
  double lambda = 1e-3;
  std::string levels = "auto:3";
  std::string h = "1";
  std::size_t t_max = 30;
  double eps = 1e-5;
  double delta = 0.5;
  double beta = 0.1;
  std::size_t max_backtracks = 20;
  std::string solver = "mcm";
  bool multiclass = false;
  bool scale = false;
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
  std::size_t jobs = 1;
  std::size_t dense_cap = kDefaultDenseCap;
};

void apply_levels(TrainConfig& cfg, const std::string& levels, const std::string& h) {
  const bool smooth = levels.rfind("smooth:", 0) == 0;
  if (smooth || levels.rfind("auto:", 0) == 0) {
    cfg.auto_levels = parse_number<std::size_t>(levels.substr(smooth ? 7 : 5), "--levels");
    cfg.smooth_levels = smooth;
    if (cfg.auto_levels == 0) throw UsageError("--levels: need at least one level");
  } else {
    std::vector<std::size_t> dims;
    for (const auto& part : split_list(levels)) dims.push_back(parse_number<std::size_t>(part, "--levels"));
    if (dims.empty() || std::find(dims.begin(), dims.end(), 0) != dims.end())
      throw UsageError("--levels: expected auto:q, smooth:q or a comma list of positive sizes");
    cfg.levels = std::move(dims);
  }
  const std::size_t q = cfg.levels ? cfg.levels->size() : cfg.auto_levels;
  std::vector<double> steps;
  for (const auto& part : split_list(h)) steps.push_back(parse_number<double>(part, "--h"));
  if (steps.size() == 1) steps.assign(q, steps.front());
  if (steps.size() != q) throw UsageError("--h: give one step or one per level");
  if (std::all_of(steps.begin(), steps.end(), [](double s) { return s == 1.0; })) steps.clear();
  cfg.h = std::move(steps);
}

TrainConfig config_from(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.kernel.sigma = f.sigma;
  cfg.lambda = f.lambda;
  cfg.t_max = f.t_max;
  cfg.eps = f.eps;
  cfg.armijo_delta = f.delta;
  cfg.armijo_beta = f.beta;
  cfg.max_backtracks = f.max_backtracks;
  cfg.seed = f.seed;
  apply_levels(cfg, f.levels, f.h);
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::vector<const BinaryModel*> parts_of(const AnyModel& model) {
  std::vector<const BinaryModel*> parts;
  if (const auto* b = std::get_if<BinaryModel>(&model)) {
    parts.push_back(b);
  } else {
    for (const auto& m : std::get<MulticlassModel>(model).models) parts.push_back(&m);
  }
  return parts;
}

void write_report(const std::string& path, const AnyModel& model, const json& summary) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open report '" + path + "'");
  const auto parts = parts_of(model);
  for (std::size_t c = 0; c < parts.size(); ++c) {
    const auto& d = parts[c]->diagnostics;
    for (std::size_t t = 0; t < d.objective_trace.size(); ++t) {
      json rec = {{"record", "iteration"}, {"model", c},  {"iter", t},
                  {"objective", d.objective_trace[t]}, {"grad_norm", d.grad_norm_trace[t]}};
      if (t > 0) {
        rec["step"] = d.step_trace[t - 1];
        rec["backtracks"] = d.backtrack_trace[t - 1];
      }
      out << rec.dump() << '\n';
    }
  }
  out << summary.dump() << '\n';
}

int cmd_train(const TrainFlags& flags, std::ostream& out) {
  const TrainConfig cfg = config_from(flags);
  if (flags.solver != "mcm" && flags.solver != "exact") throw UsageError("--solver must be mcm or exact");
  const Solver solver = flags.solver == "mcm" ? Solver::Mcm : Solver::Exact;

  Dataset data = load_sparse_text(flags.data);
  if (solver == Solver::Exact && data.n() > flags.dense_cap)
    throw CapExceededError("--solver exact materializes the full " + std::to_string(data.n()) + "x" +
                           std::to_string(data.n()) + " kernel matrix; the dense cap is " +
                           std::to_string(flags.dense_cap) + " samples. Use --solver mcm.");
  if (solver == Solver::Mcm) {
    try {
      cfg.resolve_grid(data.n());
    } catch (const ValidationError& e) {
      throw UsageError(std::string("--levels: ") + e.what());
    }
  }
  ModelFile file;
  if (flags.scale) {
    file.scaler = MinMaxScaler::fit(data.x);
    file.scaler.apply(data.x);
  }

  const auto start = std::chrono::steady_clock::now();
  if (flags.multiclass || data.num_classes() > 2) {
    file.model = train_ova(data, cfg, solver, flags.jobs);
  } else if (solver == Solver::Exact) {
    file.model = train_exact(data, cfg, flags.dense_cap);
  } else {
    file.model = train(data, cfg);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_model(file, flags.out);

  const auto parts = parts_of(file.model);
  json summary = {{"record", "summary"},
                  {"solver", flags.solver},
                  {"kind", parts.size() > 1 ? "multiclass" : "binary"},
                  {"n", data.n()},
                  {"d", data.d()},
                  {"N", parts.front()->order.n()},
                  {"dims", parts.front()->order.dims()},
                  {"train_seconds", seconds}};
  std::size_t clamps = 0, stalls = 0;
  json iters = json::array(), gnorms = json::array(), loop = json::array();
  for (const auto* p : parts) {
    clamps += p->diagnostics.clamp_count;
    stalls += p->diagnostics.line_search_stalls;
    iters.push_back(p->diagnostics.iterations);
    gnorms.push_back(p->diagnostics.final_grad_norm);
    loop.push_back(p->diagnostics.loop_seconds);
  }
  summary["iterations"] = iters;
  summary["final_grad_norm"] = gnorms;
  summary["loop_seconds"] = loop;
  summary["clamp_count"] = clamps;
  summary["line_search_stalls"] = stalls;
  if (!flags.report.empty()) write_report(flags.report, file.model, summary);

  out << "trained " << parts.size() << (parts.size() > 1 ? " class models" : " binary model") << " on " << data.n()
      << " samples (N = " << parts.front()->order.n() << ", levels " << parts.front()->order.to_string() << ")\n";
  for (std::size_t c = 0; c < parts.size(); ++c)
    out << "  model " << c << ": iterations " << parts[c]->diagnostics.iterations << ", final gradient norm "
        << std::scientific << std::setprecision(3) << parts[c]->diagnostics.final_grad_norm << std::defaultfloat
        << "\n";
  out << "  clamped denominators " << clamps << ", line-search stalls " << stalls << "\n";
  out << "  training time " << std::fixed << std::setprecision(3) << seconds << " s\n" << std::defaultfloat;
  return kOk;
}

/// Maps a dataset's labels onto the model's class indices.
std::vector<int> labels_for_model(const Dataset& data, const std::vector<double>& model_classes) {
  std::vector<int> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double raw = data.meta.label_values.at(static_cast<std::size_t>(data.y[i]));
    const auto it = std::find(model_classes.begin(), model_classes.end(), raw);
    if (it == model_classes.end()) throw ValidationError("dataset label " + std::to_string(raw) + " unknown to model");
    out[i] = static_cast<int>(it - model_classes.begin());
  }
  return out;
}

struct Scored {
  Eigen::MatrixXd scores;  // n x 1 for binary, n x C for multiclass
  std::vector<int> labels;
  std::vector<double> classes;
};

Scored score(const ModelFile& file, Dataset& data) {
  if (!file.scaler.empty()) file.scaler.apply(data.x);
  Scored s;
  if (const auto* b = std::get_if<BinaryModel>(&file.model)) {
    if (data.d() != static_cast<std::size_t>(b->train_x->cols())) {
      throw DimensionError("dataset has " + std::to_string(data.d()) + " features, model expects " +
                           std::to_string(b->train_x->cols()));
    }
    const auto p = predict(*b, data.x);
    s.scores = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    s.labels.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) s.labels[i] = p[i] >= 0.5 ? 1 : 0;
    s.classes = b->class_labels;
  } else {
    const auto& mc = std::get<MulticlassModel>(file.model);
    const Eigen::MatrixXd raw = ova_decision_values(mc, data.x);
    s.labels = argmax_rows(raw);
    s.scores = raw.unaryExpr([](double v) { return clamped_sigmoid(v); });
    s.classes = mc.class_labels;
  }
  return s;
}

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

int cmd_eval(const std::string& model_path, const std::string& data_path, const std::string& report, std::ostream& out) {
  const ModelFile file = load_model(model_path);
  Dataset data = load_sparse_text(data_path);
  const Scored s = score(file, data);
  const auto truth = labels_for_model(data, s.classes);
  json summary = {{"record", "eval"}, {"n", data.n()}};
  const double acc = accuracy(truth, s.labels);
  out << "accuracy: " << fixed6(acc) << "\n";
  summary["accuracy"] = acc;
  if (std::holds_alternative<BinaryModel>(file.model)) {
    std::vector<double> sc(s.scores.data(), s.scores.data() + s.scores.rows());
    const bool both = std::find(truth.begin(), truth.end(), 0) != truth.end() &&
                      std::find(truth.begin(), truth.end(), 1) != truth.end();
    if (both) {
      const double auc = roc_auc(truth, sc);
      out << "auc: " << fixed6(auc) << "\n";
      summary["auc"] = auc;
    } else {
      out << "auc: undefined (single class in data)\n";
    }
  } else {
    const auto cm = ConfusionMatrix::from_labels(truth, s.labels, s.classes.size());
    const double f1 = macro_f1(cm);
    const double r = mcc(cm);
    out << "macro_f1: " << fixed6(f1) << "\n";
    out << "mcc: " << fixed6(r) << "\n";
    summary["macro_f1"] = f1;
    summary["mcc"] = r;
  }
  if (!report.empty()) {
    std::ofstream rep(report, std::ios::trunc);
    if (!rep) throw ValidationError("cannot open report '" + report + "'");
    rep << summary.dump() << '\n';
  }
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out_path,
                std::ostream& out) {
  const ModelFile file = load_model(model_path);
  Dataset data = load_sparse_text(data_path);
  const Scored s = score(file, data);
  std::ofstream file_out;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file_out.open(out_path, std::ios::trunc);
    if (!file_out) throw ValidationError("cannot open '" + out_path + "'");
    sink = &file_out;
  }
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    *sink << s.classes.at(static_cast<std::size_t>(s.labels[i]));
    for (Eigen::Index c = 0; c < s.scores.cols(); ++c)
      *sink << ' ' << std::setprecision(17) << s.scores(static_cast<Eigen::Index>(i), c);
    *sink << '\n';
  }
  return kOk;
}

struct GenerateFlags {
  std::string kind;
  std::size_t n = 1000;
  std::size_t n_test = 0;
  std::size_t classes = 3;
  std::uint64_t seed = 1;
  std::string out;
  std::string test_out;
};

void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  write_sparse_text(d, f);
}

int cmd_generate(const GenerateFlags& g, std::ostream& out) {
  if (g.kind == "checkerboard") {
    write_dataset(generate_checkerboard(g.n, g.seed), g.out);
  } else if (g.kind == "blobs") {
    write_dataset(generate_blobs(g.n, g.classes, g.seed), g.out);
  } else if (g.kind == "fig1") {
    if (g.test_out.empty()) throw UsageError("generate fig1 needs --test-out");
    auto [train_set, test_set] = generate_fig1_synthetic(g.n, g.n_test ? g.n_test : 625, g.seed);
    write_dataset(train_set, g.out);
    write_dataset(test_set, g.test_out);
  } else {
    throw UsageError("unknown generator '" + g.kind + "' (checkerboard, fig1, blobs)");
  }
  out << "wrote " << g.out << (g.test_out.empty() ? "" : " and " + g.test_out) << "\n";
  return kOk;
}

struct BenchFlags {
  std::string sizes;
  // One Newton step from alpha = 0 is always a genuine iteration; later ones
  // on the easy default problem only time roundoff-level line searches.
  std::size_t iters = 1;
  std::size_t reps = 3;
  double eps = 0.0;
  std::string levels = "auto:3";
  double sigma = 8.0;
  double lambda = 1e-3;
  std::string generator = "checkerboard";
  std::uint64_t seed = 1;
  bool isolate = false;
  std::string json_out;
};

struct BenchRow {
  std::size_t n = 0;
  std::size_t padded = 0;
  std::string dims;
  double seconds_per_iter = 0.0;
  std::size_t iterations = 0;
  long peak_rss_kb = 0;
};

long peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

// One timed training run after an untimed warm-up on the same data.
BenchRow bench_one(const BenchFlags& f, const TrainConfig& base, std::size_t n) {
  Dataset data = f.generator == "fig1" ? generate_fig1_synthetic(n, 1, f.seed).first : generate_checkerboard(n, f.seed);
  TrainConfig cfg = base;
  cfg.eps = f.eps;
  cfg.t_max = f.iters;
  train(data, cfg);
  const auto model = train(data, cfg);
  BenchRow row;
  row.n = n;
  row.iterations = model.diagnostics.iterations;
  row.seconds_per_iter = model.diagnostics.loop_seconds / static_cast<double>(std::max<std::size_t>(row.iterations, 1));
  row.padded = model.order.n();
  row.dims = model.order.to_string();
  row.peak_rss_kb = peak_rss_kb();
  return row;
}

// Runs bench_one in a child process so the peak RSS belongs to that size alone.
BenchRow bench_isolated(const BenchFlags& f, const TrainConfig& base, std::size_t n) {
  int fds[2];
  if (pipe(fds) != 0) throw Error("pipe failed");
  const pid_t pid = fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    close(fds[0]);
    int code = 0;
    std::string line;
    try {
      const BenchRow row = bench_one(f, base, n);
      std::ostringstream os;
      os << std::setprecision(17) << row.n << ' ' << row.padded << ' ' << row.dims << ' ' << row.seconds_per_iter
         << ' ' << row.iterations << ' ' << row.peak_rss_kb << '\n';
      line = os.str();
    } catch (...) {
      code = 3;
    }
    if (!line.empty() && write(fds[1], line.data(), line.size()) != static_cast<ssize_t>(line.size())) code = 3;
    close(fds[1]);
    _exit(code);
  }
  close(fds[1]);
  std::string text;
  char buf[256];
  ssize_t got;
  while ((got = read(fds[0], buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(got));
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw NumericalError("benchmark child failed");
  BenchRow row;
  std::istringstream is(text);
  is >> row.n >> row.padded >> row.dims >> row.seconds_per_iter >> row.iterations >> row.peak_rss_kb;
  if (!is) throw Error("benchmark child returned garbage");
  return row;
}

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  std::vector<std::size_t> sizes;
  for (const auto& part : split_list(f.sizes)) sizes.push_back(parse_number<std::size_t>(part, "--sizes"));
  if (sizes.empty()) throw UsageError("--sizes must list at least one size");
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end() || std::find(sizes.begin(), sizes.end(), 1) != sizes.end())
    throw UsageError("--sizes entries must be at least 2");
  if (f.iters == 0 || f.reps == 0) throw UsageError("--iters and --reps must be positive");
  if (!(f.eps >= 0.0)) throw UsageError("--eps must be non-negative");
  if (f.generator != "checkerboard" && f.generator != "fig1") throw UsageError("--generator must be checkerboard or fig1");

  TrainFlags tf;
  tf.sigma = f.sigma;
  tf.lambda = f.lambda;
  tf.levels = f.levels;
  const TrainConfig base = config_from(tf);

  std::ofstream json_file;
  if (!f.json_out.empty()) {
    json_file.open(f.json_out, std::ios::trunc);
    if (!json_file) throw ValidationError("cannot open '" + f.json_out + "'");
  }
  out << std::left << std::setw(10) << "n" << std::setw(10) << "N" << std::setw(14) << "levels" << std::setw(16)
      << "sec/iter" << std::setw(8) << "iters" << std::setw(10) << "ratio" << "peak_rss_kb\n";
  // Sizes are interleaved round by round so slow drift in machine load hits
  // every size alike; each size reports its median over the rounds.
  std::vector<BenchRow> rows(sizes.size());
  std::vector<std::vector<double>> times(sizes.size());
  for (std::size_t r = 0; r < f.reps; ++r)
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const BenchRow one = f.isolate ? bench_isolated(f, base, sizes[i]) : bench_one(f, base, sizes[i]);
      times[i].push_back(one.seconds_per_iter);
      // In one process the high-water mark carries over from earlier sizes,
      // so only the first round is meaningful there.
      const long rss = r == 0 || f.isolate ? std::max(rows[i].peak_rss_kb, one.peak_rss_kb) : rows[i].peak_rss_kb;
      rows[i] = one;
      rows[i].peak_rss_kb = rss;
    }
  double prev = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto& t = times[i];
    std::sort(t.begin(), t.end());
    const std::size_t mid = t.size() / 2;
    BenchRow& row = rows[i];
    row.seconds_per_iter = t.size() % 2 ? t[mid] : 0.5 * (t[mid - 1] + t[mid]);
    const double ratio = prev > 0.0 ? row.seconds_per_iter / prev : 0.0;
    out << std::left << std::setw(10) << row.n << std::setw(10) << row.padded << std::setw(14) << row.dims
        << std::setw(16) << std::scientific << std::setprecision(4) << row.seconds_per_iter << std::defaultfloat
        << std::setw(8) << row.iterations << std::setw(10) << (prev > 0.0 ? fixed6(ratio).substr(0, 6) : "-") << row.peak_rss_kb << "\n";
    if (json_file) {
      json rec = {{"n", row.n},
                  {"N", row.padded},
                  {"levels", row.dims},
                  {"seconds_per_iter", row.seconds_per_iter},
                  {"iterations", row.iterations},
                  {"peak_rss_kb", row.peak_rss_kb}};
      if (prev > 0.0) rec["ratio"] = ratio;
      json_file << rec.dump() << '\n';
    }
    prev = row.seconds_per_iter;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel logistic regression with multilevel circulant kernel approximations", "mcmklr"};
  app.require_subcommand(1);
  // `--h` is the lattice-step flag, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a binary or one-vs-all model");
  train_cmd->add_option("--data", tf.data, "Training set in sparse index:value text")->required();
  train_cmd->add_option("--sigma", tf.sigma, "Gaussian kernel parameter in exp(-sigma r^2)");
  train_cmd->add_option("--lambda", tf.lambda, "Regularization strength");
  train_cmd->add_option("--levels", tf.levels, "auto:q, smooth:q or comma list of level sizes");
  train_cmd->add_option("--h", tf.h, "Lattice step, one value or one per level");
  train_cmd->add_option("--tmax", tf.t_max, "Maximum Newton iterations");
  train_cmd->add_option("--eps", tf.eps, "Gradient-norm tolerance");
  train_cmd->add_option("--delta", tf.delta, "Armijo backtracking factor in (0,1)");
  train_cmd->add_option("--beta", tf.beta, "Armijo sufficient-decrease constant in (0,0.5)");
  train_cmd->add_option("--max-backtracks", tf.max_backtracks, "Armijo backtrack cap");
  train_cmd->add_option("--solver", tf.solver, "mcm (fast) or exact (dense)");
  train_cmd->add_flag("--multiclass", tf.multiclass, "Force one-vs-all training");
  train_cmd->add_flag("--scale", tf.scale, "Min-max scale features to [0,1] before training");
  train_cmd->add_option("--seed", tf.seed, "Recorded in the model file");
  train_cmd->add_option("--out", tf.out, "Model output path")->required();
  train_cmd->add_option("--report", tf.report, "JSON-lines report path");
  train_cmd->add_option("--jobs", tf.jobs, "Concurrent one-vs-all class jobs");
  train_cmd->add_option("--dense-cap", tf.dense_cap, "Largest n the exact solver accepts");

  std::string model_path, data_path, out_path, report_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labeled dataset");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data", data_path)->required();
  eval_cmd->add_option("--report", report_path, "JSON summary path");

  auto* predict_cmd = app.add_subcommand("predict", "Write predicted labels and scores");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--data", data_path)->required();
  predict_cmd->add_option("--out", out_path, "Output path (stdout when omitted)");

  GenerateFlags gf;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset");
  gen_cmd->add_option("kind", gf.kind, "checkerboard, fig1 or blobs")->required();
  gen_cmd->add_option("--n", gf.n, "Number of (training) points");
  gen_cmd->add_option("--n-test", gf.n_test, "Test points (fig1, default 625)");
  gen_cmd->add_option("--classes", gf.classes, "Classes (blobs)");
  gen_cmd->add_option("--seed", gf.seed);
  gen_cmd->add_option("--out", gf.out)->required();
  gen_cmd->add_option("--test-out", gf.test_out, "Test split path (fig1)");

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench-scaling", "Per-iteration wall time of the fast solver across sizes");
  bench_cmd->add_option("--sizes", bf.sizes, "Comma list of sample counts")->required();
  bench_cmd->add_option("--iters", bf.iters, "Newton iterations per run");
  bench_cmd->add_option("--reps", bf.reps, "Rounds over all sizes, one timed run per size each (median reported)");
  bench_cmd->add_option("--eps", bf.eps, "Gradient-norm stop tolerance");
  bench_cmd->add_option("--levels", bf.levels, "auto:q, smooth:q or comma list");
  bench_cmd->add_option("--sigma", bf.sigma);
  bench_cmd->add_option("--lambda", bf.lambda);
  bench_cmd->add_option("--generator", bf.generator, "checkerboard or fig1");
  bench_cmd->add_option("--seed", bf.seed);
  bench_cmd->add_flag("--isolate", bf.isolate, "Measure each size in a fresh child process");
  bench_cmd->add_option("--json", bf.json_out, "JSON-lines output path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(tf, out);
    if (*eval_cmd) return cmd_eval(model_path, data_path, report_path, out);
    if (*predict_cmd) return cmd_predict(model_path, data_path, out_path, out);
    if (*gen_cmd) return cmd_generate(gf, out);
    if (*bench_cmd) return cmd_bench(bf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapExceededError& e) {
    err << "refused: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace mcmklr::cli
