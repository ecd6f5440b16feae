#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "mcmklr/klr_fast.hpp"

namespace mcmklr {

/// One binary model per class, trained class-vs-rest.
struct MulticlassModel {
  /// Original label value of each class, in class-index order.
  std::vector<double> class_labels;
  std::vector<BinaryModel> models;
  TrainConfig config;
  Solver solver = Solver::Mcm;
};

/// Trains one model per class with y = 1 on that class. The column matrix (or
/// Gram matrix for the exact solver) is built once and shared; up to `jobs`
/// classes train concurrently.
MulticlassModel train_ova(const Dataset& data, const TrainConfig& config, Solver solver = Solver::Mcm,
                          std::size_t jobs = 1);

/// Per-class raw kernel expansions, n x C.
Eigen::MatrixXd ova_decision_values(const MulticlassModel& model, const FeatureMatrix& x);

/// Per-class scores sigmoid(expansion), n x C.
Eigen::MatrixXd ova_scores(const MulticlassModel& model, const FeatureMatrix& x);

/// Class index of the highest score; ties go to the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

std::vector<int> predict_ova(const MulticlassModel& model, const FeatureMatrix& x);

}  // namespace mcmklr
