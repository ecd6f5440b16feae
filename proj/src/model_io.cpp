#include "mcmklr/model_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

constexpr std::string_view kMagic = "MCMKLR1";

// Header keys in the order they are written. Keys marked optional may be
// absent; every other key is required, and any key not listed is rejected.
struct KeySpec {
  std::string_view name;
  bool optional;
};
constexpr std::array<KeySpec, 25> kKeys = {{
    {"kind", false},         {"solver", false},   {"kernel", false},        {"sigma", false},
    {"lambda", false},       {"t_max", false},    {"eps", false},           {"delta", false},
    {"beta", false},         {"max_backtracks", false}, {"seed", false},    {"levels", false},
    {"h", false},            {"n", false},        {"N", false},             {"d", false},
    {"q", false},            {"dims", false},     {"classes", false},       {"models", false},
    {"column_length", false}, {"alpha_length", false}, {"scaling", false},  {"scale_lo", true},
    {"scale_hi", true},
}};

std::string real_text(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += real_text(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

double parse_real(const std::string& key, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw FormatError("header key '" + key + "': bad real '" + std::string(text) + "'");
  return v;
}

std::size_t parse_count(const std::string& key, std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw FormatError("header key '" + key + "': bad integer '" + std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view text) {
  std::vector<std::string_view> parts;
  if (text.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    parts.push_back(text.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::vector<double> parse_reals(const std::string& key, std::string_view text) {
  std::vector<double> out;
  for (auto part : split(text)) out.push_back(parse_real(key, part));
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& key, std::string_view text) {
  std::vector<std::size_t> out;
  for (auto part : split(text)) out.push_back(parse_count(key, part));
  return out;
}

void write_array(std::ostream& out, const double* data, std::size_t count) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(bytes.data(), 8);
  }
}

void read_array(std::istream& in, double* data, std::size_t count, const char* what) {
  std::array<unsigned char, 8> bytes{};
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(bytes.data()), 8))
      throw FormatError(std::string("truncated ") + what + " array");
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[static_cast<std::size_t>(b)];
    data[i] = std::bit_cast<double>(bits);
  }
}

const char* solver_name(Solver s) { return s == Solver::Mcm ? "mcm" : "exact"; }

}  // namespace

void write_model(const ModelFile& file, std::ostream& out) {
  const bool multi = std::holds_alternative<MulticlassModel>(file.model);
  std::vector<const BinaryModel*> parts;
  std::vector<double> classes;
  if (multi) {
    const auto& mc = std::get<MulticlassModel>(file.model);
    for (const auto& m : mc.models) parts.push_back(&m);
    classes = mc.class_labels;
  } else {
    const auto& b = std::get<BinaryModel>(file.model);
    parts.push_back(&b);
    classes = b.class_labels;
  }
  if (parts.empty()) throw ValidationError("model has no class models");
  const BinaryModel& ref = *parts.front();
  if (!ref.train_x) throw ValidationError("model carries no training features");
  const auto& cfg = ref.config;
  for (const auto* p : parts)
    if (p->alpha.size() != ref.alpha.size() || p->train_x != ref.train_x)
      throw ValidationError("class models disagree in shape");

  std::ostringstream head;
  head << kMagic << '\n';
  head << "kind=" << (multi ? "multiclass" : "binary") << '\n';
  head << "solver=" << solver_name(ref.solver) << '\n';
  head << "kernel=gaussian\n";
  head << "sigma=" << real_text(cfg.kernel.sigma) << '\n';
  head << "lambda=" << real_text(cfg.lambda) << '\n';
  head << "t_max=" << cfg.t_max << '\n';
  head << "eps=" << real_text(cfg.eps) << '\n';
  head << "delta=" << real_text(cfg.armijo_delta) << '\n';
  head << "beta=" << real_text(cfg.armijo_beta) << '\n';
  head << "max_backtracks=" << cfg.max_backtracks << '\n';
  head << "seed=" << cfg.seed << '\n';
  head << "levels="
       << (cfg.levels ? join(*cfg.levels) : (cfg.smooth_levels ? "smooth:" : "auto:") + std::to_string(cfg.auto_levels))
       << '\n';
  head << "h=" << join(cfg.h) << '\n';
  head << "n=" << ref.n_train() << '\n';
  head << "N=" << ref.order.n() << '\n';
  head << "d=" << ref.train_x->cols() << '\n';
  head << "q=" << ref.order.q() << '\n';
  head << "dims=" << join(ref.order.dims()) << '\n';
  head << "classes=" << join(classes) << '\n';
  head << "models=" << parts.size() << '\n';
  head << "column_length=" << ref.column.size() << '\n';
  head << "alpha_length=" << ref.alpha.size() << '\n';
  head << "scaling=" << (file.scaler.empty() ? "none" : "minmax") << '\n';
  if (!file.scaler.empty()) {
    head << "scale_lo=" << join(file.scaler.lo) << '\n';
    head << "scale_hi=" << join(file.scaler.hi) << '\n';
  }
  head << '\n';
  const std::string text = head.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  write_array(out, ref.column.data(), ref.column.size());
  for (const auto* p : parts) write_array(out, p->alpha.data(), p->alpha.size());
  const auto& x = *ref.train_x;
  write_array(out, x.data(), static_cast<std::size_t>(x.size()));
  if (!out) throw FormatError("failed writing model");
}

ModelFile read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("bad magic: not an MCMKLR1 model file");

  std::map<std::string, std::string> header;
  std::size_t last_rank = 0;
  while (true) {
    if (!std::getline(in, line)) throw FormatError("truncated header");
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("header line without '=': '" + line + "'");
    std::string key = line.substr(0, eq);
    std::size_t rank = 0;
    while (rank < kKeys.size() && kKeys[rank].name != key) ++rank;
    if (rank == kKeys.size()) throw FormatError("unknown header key '" + key + "'");
    if (header.count(key)) throw FormatError("duplicate header key '" + key + "'");
    if (rank + 1 <= last_rank) throw FormatError("header key '" + key + "' out of order");
    last_rank = rank + 1;
    header.emplace(std::move(key), line.substr(eq + 1));
  }
  for (const auto& k : kKeys)
    if (!k.optional && !header.count(std::string(k.name)))
      throw FormatError("missing header key '" + std::string(k.name) + "'");

  auto get = [&](const std::string& k) -> const std::string& { return header.at(k); };
  auto count = [&](const std::string& k) { return parse_count(k, get(k)); };

  const std::string kind = get("kind");
  if (kind != "binary" && kind != "multiclass") throw FormatError("header key 'kind': unknown kind '" + kind + "'");
  const std::string solver_text = get("solver");
  if (solver_text != "mcm" && solver_text != "exact") throw FormatError("header key 'solver': unknown solver");
  const Solver solver = solver_text == "mcm" ? Solver::Mcm : Solver::Exact;
  if (get("kernel") != "gaussian") throw FormatError("header key 'kernel': unsupported kernel");

  TrainConfig cfg;
  cfg.kernel.sigma = parse_real("sigma", get("sigma"));
  cfg.lambda = parse_real("lambda", get("lambda"));
  cfg.t_max = count("t_max");
  cfg.eps = parse_real("eps", get("eps"));
  cfg.armijo_delta = parse_real("delta", get("delta"));
  cfg.armijo_beta = parse_real("beta", get("beta"));
  cfg.max_backtracks = count("max_backtracks");
  cfg.seed = count("seed");
  const std::string& levels = get("levels");
  if (levels.rfind("auto:", 0) == 0) {
    cfg.auto_levels = parse_count("levels", std::string_view(levels).substr(5));
  } else if (levels.rfind("smooth:", 0) == 0) {
    cfg.auto_levels = parse_count("levels", std::string_view(levels).substr(7));
    cfg.smooth_levels = true;
  } else
    cfg.levels = parse_counts("levels", levels);
  cfg.h = parse_reals("h", get("h"));
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("invalid stored configuration: ") + e.what());
  }

  const std::size_t n = count("n");
  const std::size_t big_n = count("N");
  const std::size_t d = count("d");
  const std::size_t q = count("q");
  const auto dims = parse_counts("dims", get("dims"));
  const auto classes = parse_reals("classes", get("classes"));
  const std::size_t models = count("models");
  const std::size_t column_length = count("column_length");
  const std::size_t alpha_length = count("alpha_length");

  if (dims.size() != q) throw FormatError("header key 'dims': expected " + std::to_string(q) + " levels");
  std::size_t product = 1;
  for (auto v : dims) {
    if (v == 0) throw FormatError("header key 'dims': zero dimension");
    product *= v;
  }
  if (product != big_n) throw FormatError("header key 'N': does not equal the product of dims");
  if (alpha_length != big_n) throw FormatError("header key 'alpha_length': does not equal N");
  if (solver == Solver::Mcm && column_length != big_n) throw FormatError("header key 'column_length': does not equal N");
  if (solver == Solver::Exact && column_length != 0) throw FormatError("header key 'column_length': exact models carry no column");
  if (n < 1 || n > big_n) throw FormatError("header key 'n': out of range");
  if (kind == "binary" && (models != 1 || classes.size() != 2))
    throw FormatError("header key 'models': binary models hold one coefficient vector over two classes");
  if (kind == "multiclass" && (models != classes.size() || models < 2))
    throw FormatError("header key 'models': one model per class required");

  MinMaxScaler scaler;
  const std::string& scaling = get("scaling");
  if (scaling == "minmax") {
    if (!header.count("scale_lo") || !header.count("scale_hi")) throw FormatError("missing header key 'scale_lo'");
    scaler.lo = parse_reals("scale_lo", get("scale_lo"));
    scaler.hi = parse_reals("scale_hi", get("scale_hi"));
    if (scaler.lo.size() != d || scaler.hi.size() != d) throw FormatError("header key 'scale_lo': length differs from d");
  } else if (scaling != "none" || header.count("scale_lo") || header.count("scale_hi")) {
    throw FormatError("header key 'scaling': inconsistent scaling entries");
  }

  std::vector<double> column(column_length);
  read_array(in, column.data(), column.size(), "column");
  std::vector<std::vector<double>> alphas(models, std::vector<double>(alpha_length));
  for (auto& a : alphas) read_array(in, a.data(), a.size(), "alpha");
  auto x = std::make_shared<FeatureMatrix>(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  read_array(in, x->data(), n * d, "feature");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after feature array");

  std::shared_ptr<const FeatureMatrix> shared_x = std::move(x);
  LevelOrder order(dims);
  auto make_binary = [&](std::vector<double> alpha, std::vector<double> labels) {
    BinaryModel b;
    b.solver = solver;
    b.alpha = std::move(alpha);
    b.config = cfg;
    b.order = order;
    b.column = column;
    b.train_x = shared_x;
    b.class_labels = std::move(labels);
    return b;
  };

  ModelFile file;
  file.scaler = std::move(scaler);
  if (kind == "binary") {
    file.model = make_binary(std::move(alphas.front()), classes);
  } else {
    MulticlassModel mc;
    mc.class_labels = classes;
    mc.config = cfg;
    mc.solver = solver;
    for (auto& a : alphas) mc.models.push_back(make_binary(std::move(a), {0.0, 1.0}));
    file.model = std::move(mc);
  }
  return file;
}

void save_model(const ModelFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_model(file, out);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model '" + path + "'");
  return read_model(in);
}

}  // namespace mcmklr
