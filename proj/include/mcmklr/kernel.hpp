#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mcmklr/mcm.hpp"
#include "mcmklr/tensor_fft.hpp"

namespace mcmklr {

/// Row-major n x d feature storage used throughout.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelFamily { Gaussian };

/// Radial kernel kappa(x, z) = g(||x - z||). Only the Gaussian profile
/// g(r) = exp(-sigma r^2) is provided.
struct RadialKernel {
  KernelFamily family = KernelFamily::Gaussian;
  double sigma = 1.0;

  void validate() const;
  double profile(double r) const { return profile_sq(r * r); }
  double profile_sq(double r2) const;
};

/// Lattice steps for the kernel column, one per level.
struct GridSpec {
  std::vector<double> h;
  LevelOrder order;

  /// h_s = 1 on every level.
  static GridSpec unit(const LevelOrder& order);
  void validate() const;
};

/// t at flat(i) = g(|| (i_s h_s)_s ||) for every multilevel index i.
std::vector<double> lattice_values(const RadialKernel& kern, const GridSpec& grid);

/// First column k of the MCM approximating the Gram matrix: k_i is the sum of
/// t_j over j in D_i, where D_{i,s} = {0} for i_s = 0 and the set
/// {i_s, n_s - i_s} otherwise (a single element when the two coincide).
std::vector<double> construct_column(const RadialKernel& kern, const GridSpec& grid);

/// Full Gram matrix K_ij = g(||x_i - x_j||). Refuses n > cap.
Eigen::MatrixXd exact_gram(const RadialKernel& kern, const FeatureMatrix& x, std::size_t cap = kDefaultDenseCap);

/// Cross-kernel block K_ij = g(||a_i - b_j||).
Eigen::MatrixXd gram_block(const RadialKernel& kern, const FeatureMatrix& a, const FeatureMatrix& b);

/// Raw kernel expansions sum_j coef(j, c) g(||x_i - train_j||) for every test
/// row i and coefficient column c, streamed in row blocks so no full Gram
/// matrix is formed. coef has one row per training point.
Eigen::MatrixXd kernel_expansion(const RadialKernel& kern, const FeatureMatrix& train, const Eigen::MatrixXd& coef,
                                 const FeatureMatrix& test);

}  // namespace mcmklr
