#include "mcmklr/dense_oracle.hpp"

#include <chrono>
#include <cmath>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kNearSingularRcond = 1e-14;
constexpr double kJitterRelative = 1e-10;

void check_shapes(const DenseProblem& prob, const Eigen::VectorXd& alpha) {
  if (alpha.size() != prob.n()) throw DimensionError("coefficient vector does not match kernel size");
}

double objective_from_margins(const DenseProblem& prob, const Eigen::VectorXd& alpha, const Eigen::VectorXd& z) {
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = clamped_sigmoid(z(i));
    loglik += prob.y(i) * std::log(p) + (1.0 - prob.y(i)) * std::log1p(-p);
  }
  return 0.5 * prob.lambda * alpha.dot(z) - loglik / static_cast<double>(prob.n());
}

Eigen::VectorXd sigmoid_of(const Eigen::VectorXd& z) { return z.unaryExpr([](double v) { return clamped_sigmoid(v); }); }

}  // namespace

void DenseProblem::validate() const {
  if (k.rows() != k.cols()) throw DimensionError("kernel matrix is not square");
  if (y.size() != k.rows()) throw DimensionError("labels do not match kernel size");
  if (k.rows() < 1) throw ValidationError("empty problem");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
}

Eigen::VectorXd exact_probabilities(const DenseProblem& prob, const Eigen::VectorXd& alpha) {
  check_shapes(prob, alpha);
  return sigmoid_of(prob.k * alpha);
}

double exact_objective(const DenseProblem& prob, const Eigen::VectorXd& alpha) {
  check_shapes(prob, alpha);
  return objective_from_margins(prob, alpha, prob.k * alpha);
}

Eigen::VectorXd exact_gradient(const DenseProblem& prob, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd p = exact_probabilities(prob, alpha);
  const double n = static_cast<double>(prob.n());
  return prob.lambda * (prob.k * alpha) - prob.k * (prob.y - p) / n;
}

Eigen::MatrixXd exact_hessian(const DenseProblem& prob, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd p = exact_probabilities(prob, alpha);
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  const double n = static_cast<double>(prob.n());
  return prob.k.transpose() * w.asDiagonal() * prob.k / n + prob.lambda * prob.k;
}

Eigen::VectorXd exact_newton_direction(const DenseProblem& prob, const Eigen::VectorXd& alpha,
                                       const Eigen::VectorXd& p) {
  check_shapes(prob, alpha);
  const Eigen::Index n = prob.n();
  const double nl = static_cast<double>(n) * prob.lambda;
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  const Eigen::VectorXd rhs = prob.y - p - nl * alpha;

  auto assemble = [&](const Eigen::MatrixXd& k) {
    Eigen::MatrixXd a = w.asDiagonal() * k;
    a.diagonal().array() += nl;
    return a;
  };
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(assemble(prob.k));
  if (!(lu.rcond() > kNearSingularRcond)) {
    Eigen::MatrixXd jittered = prob.k;
    jittered.diagonal().array() += kJitterRelative * prob.k.trace() / static_cast<double>(n);
    lu.compute(assemble(jittered));
  }
  Eigen::VectorXd d = lu.solve(rhs);
  if (!d.allFinite()) throw NumericalError("simplified Newton system is singular");
  return d;
}

Eigen::VectorXd unsimplified_newton_direction(const DenseProblem& prob, const Eigen::VectorXd& alpha,
                                              const Eigen::VectorXd& p) {
  check_shapes(prob, alpha);
  const double nl = static_cast<double>(prob.n()) * prob.lambda;
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  const Eigen::MatrixXd a = prob.k.transpose() * w.asDiagonal() * prob.k + nl * prob.k;
  const Eigen::VectorXd rhs = prob.k * (prob.y - p - nl * alpha);
  Eigen::VectorXd d = a.partialPivLu().solve(rhs);
  if (!d.allFinite()) throw NumericalError("Newton system is singular");
  return d;
}

double unsimplified_newton_residual(const DenseProblem& prob, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& d) {
  const double nl = static_cast<double>(prob.n()) * prob.lambda;
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  const Eigen::VectorXd rhs = prob.k * (prob.y - p - nl * alpha);
  const Eigen::VectorXd lhs = prob.k.transpose() * (w.asDiagonal() * (prob.k * d)) + nl * (prob.k * d);
  return (lhs - rhs).norm() / rhs.norm();
}

BinaryModel train_exact_with_gram(std::shared_ptr<const FeatureMatrix> x, const Eigen::MatrixXd& gram,
                                  std::span<const int> y01, const TrainConfig& config) {
  const auto start = Clock::now();
  config.validate();
  const auto m = static_cast<Eigen::Index>(y01.size());
  if (m < 2) throw ValidationError("training needs at least two samples");
  if (!x || x->rows() != m || gram.rows() != m) throw DimensionError("features, Gram matrix and labels disagree");

  DenseProblem prob{gram, Eigen::VectorXd(m), config.lambda};
  for (Eigen::Index i = 0; i < m; ++i) {
    const int label = y01[static_cast<std::size_t>(i)];
    if (label != 0 && label != 1) throw ValidationError("binary training needs 0/1 labels");
    prob.y(i) = label;
  }
  prob.validate();

  BinaryModel model;
  model.solver = Solver::Exact;
  model.config = config;
  model.order = LevelOrder({static_cast<std::size_t>(m)});
  model.train_x = std::move(x);
  auto& diag = model.diagnostics;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd p = sigmoid_of(z);
  double f = objective_from_margins(prob, alpha, z);
  auto grad_at = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& probs) {
    return Eigen::VectorXd(prob.lambda * (prob.k * a) - prob.k * (prob.y - probs) / static_cast<double>(m));
  };
  Eigen::VectorXd g = grad_at(alpha, p);
  diag.objective_trace.push_back(f);
  diag.grad_norm_trace.push_back(g.norm());

  const auto loop_start = Clock::now();
  std::size_t iter = 0;
  Eigen::VectorXd trial_a, trial_z;
  while (iter < config.t_max && g.norm() > config.eps) {
    const Eigen::VectorXd d = exact_newton_direction(prob, alpha, p);
    const Eigen::VectorXd dz = prob.k * d;
    auto search = armijo_backtrack(f, g.dot(d), config.armijo_delta, config.armijo_beta, config.max_backtracks,
                                   [&](double r) {
                                     trial_a = alpha + r * d;
                                     trial_z = z + r * dz;
                                     return objective_from_margins(prob, trial_a, trial_z);
                                   });
    alpha += search.step * d;
    z += search.step * dz;
    p = sigmoid_of(z);
    f = search.objective;
    if (!std::isfinite(f)) throw NumericalError("training diverged: objective is not finite");
    g = grad_at(alpha, p);
    ++iter;
    diag.line_search_stalls += search.stalled;
    diag.step_trace.push_back(search.step);
    diag.backtrack_trace.push_back(search.backtracks);
    diag.objective_trace.push_back(f);
    diag.grad_norm_trace.push_back(g.norm());
  }
  diag.loop_seconds = std::chrono::duration<double>(Clock::now() - loop_start).count();
  diag.iterations = iter;
  diag.final_grad_norm = g.norm();
  diag.converged = diag.final_grad_norm <= config.eps;
  model.alpha.assign(alpha.data(), alpha.data() + m);
  diag.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return model;
}

BinaryModel train_exact(const Dataset& data, const TrainConfig& config, std::size_t cap) {
  const auto start = Clock::now();
  config.validate();
  data.validate();
  if (data.num_classes() != 2) throw ValidationError("binary training needs exactly two classes");
  if (data.n() > cap)
    throw CapExceededError("exact solver refuses " + std::to_string(data.n()) + " samples (dense cap " +
                           std::to_string(cap) + ")");
  auto x = std::make_shared<const FeatureMatrix>(data.x);
  const Eigen::MatrixXd gram = exact_gram(config.kernel, *x, cap);
  auto model = train_exact_with_gram(std::move(x), gram, data.y, config);
  model.class_labels = data.meta.label_values;
  model.diagnostics.train_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return model;
}

}  // namespace mcmklr
