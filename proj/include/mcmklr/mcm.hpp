#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "mcmklr/tensor_fft.hpp"

namespace mcmklr {

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Multilevel circulant matrix circ_q[k]. Immutable once built; holds the
/// first column and the real eigenvalue vector Re(phi k), nothing else of
/// size n.
class MultilevelCirculant {
 public:
  /// Builds from a first column and caches its eigenvalues with one forward
  /// transform.
  static MultilevelCirculant from_first_column(std::vector<double> column, const LevelOrder& order);
  static MultilevelCirculant from_first_column(std::vector<double> column, FftPlan& plan);

  static MultilevelCirculant identity(const LevelOrder& order);
  static MultilevelCirculant zero(const LevelOrder& order);

  const LevelOrder& order() const noexcept { return order_; }
  std::size_t n() const noexcept { return order_.n(); }
  const std::vector<double>& column() const noexcept { return column_; }
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

  /// Largest |Im(phi k)| discarded at construction.
  double imag_residue() const noexcept { return imag_residue_; }
  /// True when the discarded imaginary part exceeded 1e-8 * max|v|, i.e. the
  /// column is not multilevel-symmetric.
  bool asymmetric() const noexcept { return asymmetric_; }

  /// Floating-point values held at O(n) size (column plus eigenvalues).
  std::size_t payload_doubles() const noexcept { return column_.size() + eigenvalues_.size(); }

 private:
  friend MultilevelCirculant add(const MultilevelCirculant& a, const MultilevelCirculant& b);
  friend MultilevelCirculant scale(const MultilevelCirculant& a, double c);

  MultilevelCirculant(LevelOrder order, std::vector<double> column, std::vector<double> eigenvalues,
                      double imag_residue);

  LevelOrder order_;
  std::vector<double> column_;
  std::vector<double> eigenvalues_;
  double imag_residue_ = 0.0;
  bool asymmetric_ = false;
};

struct ShiftedSolve {
  std::vector<double> x;
  /// Number of denominators |v_j + shift| clamped to the floor.
  std::size_t clamped = 0;
};

/// M x via (1/n) phi^* diag(v) phi x, real part kept.
std::vector<double> matvec(const MultilevelCirculant& m, std::span<const double> x, FftPlan& plan);
std::vector<double> matvec(const MultilevelCirculant& m, std::span<const double> x);

/// Solves (M + shift I) x = b spectrally. Denominators below
/// 1e-12 * (max|v| + shift) in magnitude are clamped to that floor (sign kept)
/// and counted.
ShiftedSolve solve_shifted(const MultilevelCirculant& m, double shift, std::span<const double> b, FftPlan& plan);
ShiftedSolve solve_shifted(const MultilevelCirculant& m, double shift, std::span<const double> b);

MultilevelCirculant add(const MultilevelCirculant& a, const MultilevelCirculant& b);
MultilevelCirculant scale(const MultilevelCirculant& a, double c);

/// Materializes M entrywise from the multilevel index rule
/// M[i, j] = k[(i_s - j_s) mod n_s]. Refuses above `cap`.
Eigen::MatrixXd to_dense(const MultilevelCirculant& m, std::size_t cap = kDefaultDenseCap);

}  // namespace mcmklr
