#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>

#include "mcmklr/klr_fast.hpp"

namespace mcmklr {

/// Exact KLR problem on a materialized kernel matrix.
struct DenseProblem {
  Eigen::MatrixXd k;
  Eigen::VectorXd y;
  double lambda = 1e-3;

  Eigen::Index n() const noexcept { return k.rows(); }
  void validate() const;
};

Eigen::VectorXd exact_probabilities(const DenseProblem& prob, const Eigen::VectorXd& alpha);

/// (lambda/2) a^T K a - (1/n)(y^T ln p + (1-y)^T ln(1-p)).
double exact_objective(const DenseProblem& prob, const Eigen::VectorXd& alpha);

/// lambda K a - (1/n) K (y - p).
Eigen::VectorXd exact_gradient(const DenseProblem& prob, const Eigen::VectorXd& alpha);

/// (1/n) K^T Lambda K + lambda K with Lambda_ii = p_i (1 - p_i).
Eigen::MatrixXd exact_hessian(const DenseProblem& prob, const Eigen::VectorXd& alpha);

/// Solves the simplified Newton system (Lambda K + n lambda I) d = y - p - n lambda a
/// by LU. When the factorization looks near-singular, 1e-10 trace(K)/n is added
/// to K's diagonal and the system refactored.
Eigen::VectorXd exact_newton_direction(const DenseProblem& prob, const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& p);

/// Solves the unsimplified system (K^T Lambda K + n lambda K) d = K (y - p - n lambda a).
/// Requires K positive definite.
Eigen::VectorXd unsimplified_newton_direction(const DenseProblem& prob, const Eigen::VectorXd& alpha,
                                              const Eigen::VectorXd& p);

/// ||(K^T Lambda K + n lambda K) d - K (y - p - n lambda a)|| / ||K (y - p - n lambda a)||.
double unsimplified_newton_residual(const DenseProblem& prob, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& d);

/// Newton iteration on the exact kernel with the simplified direction and the
/// same Armijo rule as the fast solver. O(n^3) per iteration.
BinaryModel train_exact(const Dataset& data, const TrainConfig& config, std::size_t cap = kDefaultDenseCap);

/// Same with a precomputed Gram matrix, for sharing across one-vs-all runs.
BinaryModel train_exact_with_gram(std::shared_ptr<const FeatureMatrix> x, const Eigen::MatrixXd& gram,
                                  std::span<const int> y01, const TrainConfig& config);

}  // namespace mcmklr
