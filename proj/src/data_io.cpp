#include "mcmklr/data_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : rng_(seed) {}
  double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double normal() {
    // Box-Muller, one deviate per call.
    double u1 = next();
    while (u1 <= 0.0) u1 = next();
    const double u2 = next();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
};

bool parse_double(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  const char* first = tok.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, std::size_t& out) {
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

Dataset with_labels(FeatureMatrix x, const std::vector<double>& raw, std::string source) {
  std::vector<double> values(raw);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Dataset data;
  data.x = std::move(x);
  data.y.reserve(raw.size());
  for (double r : raw)
    data.y.push_back(static_cast<int>(std::lower_bound(values.begin(), values.end(), r) - values.begin()));
  data.meta.source = std::move(source);
  data.meta.label_values = std::move(values);
  return data;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1) throw ValidationError("dataset is empty");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DimensionError("feature rows and labels differ in count");
  if (!x.allFinite()) throw ValidationError("dataset contains non-finite features");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= meta.label_values.size())
      throw ValidationError("label index out of range");
}

Dataset parse_sparse_text(std::istream& in, const std::string& source) {
  struct Row {
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::vector<double> labels;
  std::size_t dim = 0;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;

    double label = 0.0;
    if (!parse_double(tok, label)) throw ParseError(lineno, "bad label '" + tok + "'");

    Row row;
    std::size_t last = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(lineno, "expected index:value, got '" + tok + "'");
      std::size_t idx = 0;
      double val = 0.0;
      if (!parse_index(std::string_view(tok).substr(0, colon), idx) || idx == 0)
        throw ParseError(lineno, "bad feature index in '" + tok + "'");
      if (!parse_double(std::string_view(tok).substr(colon + 1), val))
        throw ParseError(lineno, "bad feature value in '" + tok + "'");
      if (idx <= last) throw ParseError(lineno, "feature indices must be strictly increasing");
      last = idx;
      row.entries.emplace_back(idx, val);
    }
    dim = std::max(dim, last);
    labels.push_back(label);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(source + ": no samples");

  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto [idx, val] : rows[i].entries) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx - 1)) = val;
  auto data = with_labels(std::move(x), labels, source);
  data.validate();
  return data;
}

Dataset load_sparse_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path + "'");
  return parse_sparse_text(in, path);
}

void write_sparse_text(const Dataset& data, std::ostream& out) {
  std::array<char, 64> buf{};
  auto put = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), ptr - buf.data());
  };
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    put(data.meta.label_values.at(static_cast<std::size_t>(data.y[static_cast<std::size_t>(i)])));
    for (Eigen::Index k = 0; k < data.x.cols(); ++k) {
      const double v = data.x(i, k);
      if (v == 0.0) continue;
      out << ' ' << (k + 1) << ':';
      put(v);
    }
    out << '\n';
  }
}

Dataset generate_checkerboard(std::size_t n_points, std::uint64_t seed) {
  if (n_points < 1) throw ValidationError("checkerboard needs at least one point");
  UniformStream u(seed);
  FeatureMatrix x(static_cast<Eigen::Index>(n_points), 2);
  std::vector<double> labels(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double a = u.next();
    const double b = u.next();
    x(static_cast<Eigen::Index>(i), 0) = a;
    x(static_cast<Eigen::Index>(i), 1) = b;
    const auto cell = static_cast<long>(std::floor(4.0 * a)) + static_cast<long>(std::floor(4.0 * b));
    labels[i] = static_cast<double>(cell % 2);
  }
  auto data = with_labels(std::move(x), labels, "checkerboard");
  // Both classes are always listed so a tiny sample keeps a binary meta.
  data.meta.label_values = {0.0, 1.0};
  for (std::size_t i = 0; i < n_points; ++i) data.y[i] = static_cast<int>(labels[i]);
  return data;
}

std::pair<Dataset, Dataset> generate_fig1_synthetic(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  if (n_train < 1 || n_test < 1) throw ValidationError("synthetic split sizes must be positive");
  constexpr double kBand = 0.035;
  UniformStream u(seed);
  auto draw = [&](std::size_t count, const char* name) {
    FeatureMatrix x(static_cast<Eigen::Index>(count), 2);
    Dataset data;
    data.y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double a = u.next();
      const double b = u.next();
      const double coin = u.next();
      x(static_cast<Eigen::Index>(i), 0) = a;
      x(static_cast<Eigen::Index>(i), 1) = b;
      const double gap = b - (0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * a));
      data.y[i] = std::abs(gap) < kBand ? (coin < 0.5 ? 1 : 0) : (gap > 0.0 ? 1 : 0);
    }
    data.x = std::move(x);
    data.meta = {name, {0.0, 1.0}};
    return data;
  };
  Dataset train = draw(n_train, "fig1-train");
  Dataset test = draw(n_test, "fig1-test");
  return {std::move(train), std::move(test)};
}

Dataset generate_blobs(std::size_t n_points, std::size_t classes, std::uint64_t seed) {
  static constexpr std::array<std::array<double, 2>, 6> kCenters = {
      {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.8}, {0.2, 0.8}, {0.8, 0.8}, {0.5, 0.2}}};
  constexpr double kSpread = 0.05;
  if (n_points < 1) throw ValidationError("blobs need at least one point");
  if (classes < 2 || classes > kCenters.size()) throw ValidationError("blobs support 2 to 6 classes");
  UniformStream u(seed);
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(n_points), 2);
  data.y.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const std::size_t c = i % classes;
    data.x(static_cast<Eigen::Index>(i), 0) = kCenters[c][0] + kSpread * u.normal();
    data.x(static_cast<Eigen::Index>(i), 1) = kCenters[c][1] + kSpread * u.normal();
    data.y[i] = static_cast<int>(c);
  }
  data.meta.source = "blobs";
  for (std::size_t c = 0; c < classes; ++c) data.meta.label_values.push_back(static_cast<double>(c));
  return data;
}

MinMaxScaler MinMaxScaler::fit(const FeatureMatrix& x) {
  MinMaxScaler s;
  s.lo.resize(static_cast<std::size_t>(x.cols()));
  s.hi.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    s.lo[static_cast<std::size_t>(k)] = x.col(k).minCoeff();
    s.hi[static_cast<std::size_t>(k)] = x.col(k).maxCoeff();
  }
  return s;
}

void MinMaxScaler::apply(FeatureMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != lo.size()) throw DimensionError("scaler fitted on a different dimension");
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double lo_k = lo[static_cast<std::size_t>(k)];
    const double span = hi[static_cast<std::size_t>(k)] - lo_k;
    if (span > 0.0)
      x.col(k) = (x.col(k).array() - lo_k) / span;
    else
      x.col(k).setZero();
  }
}

}  // namespace mcmklr
