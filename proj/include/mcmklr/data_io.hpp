#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mcmklr/kernel.hpp"

namespace mcmklr {

struct DatasetMeta {
  std::string source;
  /// Original label value for each canonical class index 0..C-1, ascending.
  std::vector<double> label_values;
};

/// Dense labeled dataset. y holds canonical class indices into
/// meta.label_values.
struct Dataset {
  FeatureMatrix x;
  std::vector<int> y;
  DatasetMeta meta;

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::size_t num_classes() const noexcept { return meta.label_values.size(); }

  /// Throws ValidationError on empty data, non-finite features, or labels
  /// outside 0..C-1.
  void validate() const;
};

/// Reads `<label> <idx>:<val> ...` lines (1-based, strictly increasing
/// indices). Blank lines and text after '#' are ignored. d is the largest
/// index seen; labels are mapped to 0..C-1 in ascending numeric order.
Dataset parse_sparse_text(std::istream& in, const std::string& source = "<stream>");
Dataset load_sparse_text(const std::string& path);

/// Writes the dataset back in sparse text form, original labels, zero
/// features omitted, values printed round-trip exact.
void write_sparse_text(const Dataset& data, std::ostream& out);

/// Uniform points on [0,1]^2 labeled by the parity of their cell in a 4x4
/// grid: (floor(4x) + floor(4y)) mod 2.
Dataset generate_checkerboard(std::size_t n_points, std::uint64_t seed);

/// Two-class problem on [0,1]^2 with the sinusoidal boundary
/// y = 0.5 + 0.25 sin(2 pi x). Points within a vertical distance of 0.035 of
/// the boundary get a fair-coin label, everything else is labeled by side, so
/// the Bayes accuracy is about 0.965. Train and test are drawn from one stream.
std::pair<Dataset, Dataset> generate_fig1_synthetic(std::size_t n_train = 3375, std::size_t n_test = 625,
                                                    std::uint64_t seed = 1);

/// Isotropic Gaussian blobs (std 0.05) around fixed, well separated centers in
/// [0,1]^2; class i % classes for point i. Up to 6 classes.
Dataset generate_blobs(std::size_t n_points, std::size_t classes, std::uint64_t seed);

/// Per-feature affine map of the training range onto [0,1]. Constant
/// features map to 0.
struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static MinMaxScaler fit(const FeatureMatrix& x);
  void apply(FeatureMatrix& x) const;
  bool empty() const noexcept { return lo.empty(); }
};

}  // namespace mcmklr
