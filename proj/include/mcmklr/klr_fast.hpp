#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mcmklr/data_io.hpp"
#include "mcmklr/kernel.hpp"
#include "mcmklr/mcm.hpp"

namespace mcmklr {

/// Probabilities are kept inside [kProbClamp, 1 - kProbClamp] so every log in
/// the objective stays finite.
inline constexpr double kProbClamp = 1e-15;

enum class Solver { Mcm, Exact };

struct TrainConfig {
  double lambda = 1e-3;
  RadialKernel kernel{};
  /// Explicit level order; when empty the order is sized from the data with
  /// `auto_levels` levels.
  std::optional<std::vector<std::size_t>> levels;
  std::size_t auto_levels = 3;
  /// Size automatic orders with LevelOrder::smooth_for_size instead.
  bool smooth_levels = false;
  /// Lattice steps per level; empty means 1 everywhere.
  std::vector<double> h;
  std::size_t t_max = 30;
  double eps = 1e-5;
  double armijo_delta = 0.5;
  double armijo_beta = 0.1;
  std::size_t max_backtracks = 20;
  std::uint64_t seed = 0;

  /// Throws ValidationError for lambda <= 0, delta outside (0,1), beta
  /// outside (0,0.5), t_max or max_backtracks of zero, eps < 0.
  void validate() const;

  /// Level order and lattice for m training samples.
  GridSpec resolve_grid(std::size_t m) const;
};

struct SolverDiagnostics {
  std::size_t iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  /// Objective and gradient norm at alpha_0 .. alpha_T (length T + 1).
  std::vector<double> objective_trace;
  std::vector<double> grad_norm_trace;
  /// Accepted step and backtrack count per iteration (length T).
  std::vector<double> step_trace;
  std::vector<std::size_t> backtrack_trace;
  std::size_t clamp_count = 0;
  std::size_t line_search_stalls = 0;
  double column_imag_residue = 0.0;
  /// Wall time of the Newton loop alone, and of the whole training call.
  double loop_seconds = 0.0;
  double train_seconds = 0.0;
};

/// Trained binary classifier: kernel expansion coefficients over the training
/// points. For the MCM solver alpha has the padded length N = order.n() and
/// only its first n_train() entries score new points.
struct BinaryModel {
  Solver solver = Solver::Mcm;
  std::vector<double> alpha;
  TrainConfig config;
  LevelOrder order{{1}};
  std::vector<double> column;
  std::shared_ptr<const FeatureMatrix> train_x;
  /// Original label values meaning y = 0 and y = 1.
  std::vector<double> class_labels{0.0, 1.0};
  SolverDiagnostics diagnostics;

  std::size_t n_train() const { return train_x ? static_cast<std::size_t>(train_x->rows()) : 0; }
};

/// Newton iterate plus the cached quantities the loop reuses.
struct TrainState {
  std::vector<double> alpha;
  std::vector<double> z;  // K_q alpha
  std::vector<double> p;
  std::vector<double> grad;
  double objective = 0.0;
  std::size_t iter = 0;
  std::vector<double> mask;
  std::vector<double> y;
};

struct Probabilities {
  std::vector<double> z;
  std::vector<double> p;
};

/// Logistic sigmoid evaluated without overflow, then clamped.
double clamped_sigmoid(double z);

/// z = K_q alpha and p = sigmoid(z).
Probabilities probabilities(const MultilevelCirculant& k, std::span<const double> alpha, FftPlan& plan);

/// (lambda/2) alpha^T z - (1/n_eff) sum over masked-in i of
/// y_i ln p_i + (1 - y_i) ln(1 - p_i), with p = sigmoid(z). O(N).
double objective_from_margins(std::span<const double> alpha, std::span<const double> z, std::span<const double> y,
                              std::span<const double> mask, double lambda);

double objective(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> y,
                 std::span<const double> mask, double lambda, FftPlan& plan);

/// K_q (lambda alpha - (1/n_eff) mask o (y - p)).
std::vector<double> gradient(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> p,
                             std::span<const double> y, std::span<const double> mask, double lambda, FftPlan& plan);

/// Mean of p_i (1 - p_i) over masked-in entries.
double tau(std::span<const double> p, std::span<const double> mask);

/// Approximate Newton direction (1/tau) (K_q + tau~ I)^{-1} (mask o (y - p) -
/// n_eff lambda alpha) with tau~ = n_eff lambda / tau.
ShiftedSolve newton_direction(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> p,
                              std::span<const double> y, std::span<const double> mask, double lambda, FftPlan& plan);

struct LineSearchResult {
  double step = 1.0;
  std::size_t backtracks = 0;
  bool stalled = false;
  double objective = 0.0;
};

/// Backtracking on r = delta^m, m = 0 .. max_backtracks, accepting the first r
/// with f(r) <= f0 + beta r slope. When none passes, the last trial is
/// returned with `stalled` set.
LineSearchResult armijo_backtrack(double f0, double slope, double delta, double beta, std::size_t max_backtracks,
                                  const std::function<double(double)>& f);

struct ArmijoStep {
  LineSearchResult search;
  /// K_q d, cached so the caller can advance z without another matvec.
  std::vector<double> dz;
};

/// Armijo search along `direction` for the MCM objective. One matvec for K_q d,
/// then O(N) per trial using the cached K_q alpha in `state.z`.
ArmijoStep armijo_search(const MultilevelCirculant& k, const TrainState& state, std::span<const double> direction,
                         const TrainConfig& config, FftPlan& plan);

/// Fast Newton training on a binary dataset (labels 0/1).
BinaryModel train(const Dataset& data, const TrainConfig& config);

/// Same loop with a prebuilt column matrix; `k.n()` must be at least the
/// number of samples. Used to share one column across one-vs-all problems.
BinaryModel train_with_matrix(std::shared_ptr<const FeatureMatrix> x, std::span<const int> y01,
                              const TrainConfig& config, const MultilevelCirculant& k, FftPlan& plan);

/// Raw expansions sum_j alpha_j g(||x - x_j||) over the unpadded training points.
std::vector<double> decision_values(const BinaryModel& model, const FeatureMatrix& x);

/// sigmoid(decision_values), in (0,1).
std::vector<double> predict(const BinaryModel& model, const FeatureMatrix& x);

/// 1 where the score is >= 0.5.
std::vector<int> predict_labels(const BinaryModel& model, const FeatureMatrix& x);

}  // namespace mcmklr
