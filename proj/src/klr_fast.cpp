#include "mcmklr/klr_fast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double masked_count(std::span<const double> mask) {
  double n = 0.0;
  for (double m : mask) n += m;
  if (n < 1.0) throw ValidationError("no masked-in samples");
  return n;
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + " length mismatch");
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  kernel.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
  if (!(armijo_delta > 0.0 && armijo_delta < 1.0)) throw ValidationError("Armijo delta must lie in (0,1)");
  if (!(armijo_beta > 0.0 && armijo_beta < 0.5)) throw ValidationError("Armijo beta must lie in (0,0.5)");
  if (t_max == 0) throw ValidationError("t_max must be positive");
  if (max_backtracks == 0) throw ValidationError("max_backtracks must be positive");
  if (!(eps >= 0.0)) throw ValidationError("eps must be non-negative");
  if (levels && levels->empty()) throw ValidationError("explicit level order is empty");
  if (!levels && auto_levels == 0) throw ValidationError("level count must be positive");
}

GridSpec TrainConfig::resolve_grid(std::size_t m) const {
  LevelOrder order = levels          ? LevelOrder(*levels)
                     : smooth_levels ? LevelOrder::smooth_for_size(m, auto_levels)
                                     : LevelOrder::for_size(m, auto_levels);
  if (order.n() < m)
    throw ValidationError("level order " + order.to_string() + " holds " + std::to_string(order.n()) +
                          " entries, fewer than " + std::to_string(m) + " samples");
  GridSpec grid{h.empty() ? std::vector<double>(order.q(), 1.0) : h, order};
  grid.validate();
  return grid;
}

double clamped_sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

Probabilities probabilities(const MultilevelCirculant& k, std::span<const double> alpha, FftPlan& plan) {
  Probabilities out;
  out.z = matvec(k, alpha, plan);
  out.p.resize(out.z.size());
  std::transform(out.z.begin(), out.z.end(), out.p.begin(), clamped_sigmoid);
  return out;
}

double objective_from_margins(std::span<const double> alpha, std::span<const double> z, std::span<const double> y,
                              std::span<const double> mask, double lambda) {
  require_same(alpha.size(), z.size(), "margin");
  require_same(alpha.size(), y.size(), "label");
  require_same(alpha.size(), mask.size(), "mask");
  const double n_eff = masked_count(mask);
  double quad = 0.0;
  double loglik = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    quad += alpha[i] * z[i];
    if (mask[i] != 0.0) {
      const double p = clamped_sigmoid(z[i]);
      double term;
      if (y[i] == 1.0)
        term = std::log(p);
      else if (y[i] == 0.0)
        term = std::log1p(-p);
      else
        term = y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p);
      loglik += mask[i] * term;
    }
  }
  return 0.5 * lambda * quad - loglik / n_eff;
}

double objective(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> y,
                 std::span<const double> mask, double lambda, FftPlan& plan) {
  const auto z = matvec(k, alpha, plan);
  return objective_from_margins(alpha, z, y, mask, lambda);
}

std::vector<double> gradient(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> p,
                             std::span<const double> y, std::span<const double> mask, double lambda, FftPlan& plan) {
  require_same(alpha.size(), p.size(), "probability");
  require_same(alpha.size(), y.size(), "label");
  require_same(alpha.size(), mask.size(), "mask");
  const double inv_n = 1.0 / masked_count(mask);
  std::vector<double> inner(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) inner[i] = lambda * alpha[i] - inv_n * mask[i] * (y[i] - p[i]);
  return matvec(k, inner, plan);
}

double tau(std::span<const double> p, std::span<const double> mask) {
  require_same(p.size(), mask.size(), "mask");
  const double n_eff = masked_count(mask);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += mask[i] * p[i] * (1.0 - p[i]);
  return s / n_eff;
}

ShiftedSolve newton_direction(const MultilevelCirculant& k, std::span<const double> alpha, std::span<const double> p,
                              std::span<const double> y, std::span<const double> mask, double lambda, FftPlan& plan) {
  require_same(alpha.size(), p.size(), "probability");
  require_same(alpha.size(), y.size(), "label");
  require_same(alpha.size(), mask.size(), "mask");
  if (!(lambda > 0.0)) throw ValidationError("newton_direction needs lambda > 0");
  const double n_eff = masked_count(mask);
  const double t = tau(p, mask);
  const double shift = n_eff * lambda / t;

  std::vector<double> eta(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    eta[i] = (mask[i] * (y[i] - p[i]) - n_eff * lambda * alpha[i]) / t;
  return solve_shifted(k, shift, eta, plan);
}

LineSearchResult armijo_backtrack(double f0, double slope, double delta, double beta, std::size_t max_backtracks,
                                  const std::function<double(double)>& f) {
  LineSearchResult r;
  double step = 1.0;
  for (std::size_t m = 0; m <= max_backtracks; ++m) {
    const double value = f(step);
    r.step = step;
    r.backtracks = m;
    r.objective = value;
    if (value <= f0 + beta * step * slope) return r;
    step *= delta;
  }
  r.stalled = true;
  return r;
}

ArmijoStep armijo_search(const MultilevelCirculant& k, const TrainState& state, std::span<const double> direction,
                         const TrainConfig& config, FftPlan& plan) {
  const std::size_t n = state.alpha.size();
  require_same(direction.size(), n, "direction");
  ArmijoStep out;
  out.dz = matvec(k, direction, plan);
  const double slope = dot(state.grad, direction);

  std::vector<double> trial_alpha(n), trial_z(n);
  auto f = [&](double r) {
    for (std::size_t i = 0; i < n; ++i) {
      trial_alpha[i] = state.alpha[i] + r * direction[i];
      trial_z[i] = state.z[i] + r * out.dz[i];
    }
    return objective_from_margins(trial_alpha, trial_z, state.y, state.mask, config.lambda);
  };
  out.search =
      armijo_backtrack(state.objective, slope, config.armijo_delta, config.armijo_beta, config.max_backtracks, f);
  return out;
}

BinaryModel train_with_matrix(std::shared_ptr<const FeatureMatrix> x, std::span<const int> y01,
                              const TrainConfig& config, const MultilevelCirculant& k, FftPlan& plan) {
  const auto start = Clock::now();
  config.validate();
  const std::size_t m = y01.size();
  const std::size_t n = k.n();
  if (!x || static_cast<std::size_t>(x->rows()) != m) throw DimensionError("features and labels differ in count");
  if (m < 2) throw ValidationError("training needs at least two samples");
  if (n < m) throw DimensionError("column matrix smaller than the dataset");

  TrainState st;
  st.mask.assign(n, 0.0);
  st.y.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (y01[i] != 0 && y01[i] != 1) throw ValidationError("binary training needs 0/1 labels");
    st.mask[i] = 1.0;
    st.y[i] = static_cast<double>(y01[i]);
  }
  st.alpha.assign(n, 0.0);
  st.z.assign(n, 0.0);
  st.p.assign(n, 0.5);
  st.objective = objective_from_margins(st.alpha, st.z, st.y, st.mask, config.lambda);
  st.grad = gradient(k, st.alpha, st.p, st.y, st.mask, config.lambda, plan);

  BinaryModel model;
  model.solver = Solver::Mcm;
  model.config = config;
  model.order = k.order();
  model.column = k.column();
  model.train_x = std::move(x);
  auto& diag = model.diagnostics;
  diag.column_imag_residue = k.imag_residue();

  double gnorm = norm2(st.grad);
  diag.objective_trace.push_back(st.objective);
  diag.grad_norm_trace.push_back(gnorm);

  const auto loop_start = Clock::now();
  while (st.iter < config.t_max && gnorm > config.eps) {
    auto dir = newton_direction(k, st.alpha, st.p, st.y, st.mask, config.lambda, plan);
    diag.clamp_count += dir.clamped;
    auto step = armijo_search(k, st, dir.x, config, plan);
    const double r = step.search.step;
    for (std::size_t i = 0; i < n; ++i) {
      st.alpha[i] += r * dir.x[i];
      st.z[i] += r * step.dz[i];
      st.p[i] = clamped_sigmoid(st.z[i]);
    }
    st.objective = step.search.objective;
    if (!std::isfinite(st.objective)) throw NumericalError("training diverged: objective is not finite");
    st.grad = gradient(k, st.alpha, st.p, st.y, st.mask, config.lambda, plan);
    gnorm = norm2(st.grad);
    ++st.iter;

    diag.line_search_stalls += step.search.stalled;
    diag.step_trace.push_back(r);
    diag.backtrack_trace.push_back(step.search.backtracks);
    diag.objective_trace.push_back(st.objective);
    diag.grad_norm_trace.push_back(gnorm);
  }
  diag.loop_seconds = seconds_since(loop_start);
  diag.iterations = st.iter;
  diag.final_grad_norm = gnorm;
  diag.converged = gnorm <= config.eps;
  model.alpha = std::move(st.alpha);
  diag.train_seconds = seconds_since(start);
  return model;
}

BinaryModel train(const Dataset& data, const TrainConfig& config) {
  const auto start = Clock::now();
  config.validate();
  data.validate();
  if (data.num_classes() != 2) throw ValidationError("binary training needs exactly two classes");
  const auto grid = config.resolve_grid(data.n());
  FftPlan plan(grid.order);
  const auto k = MultilevelCirculant::from_first_column(construct_column(config.kernel, grid), plan);
  auto model = train_with_matrix(std::make_shared<const FeatureMatrix>(data.x), data.y, config, k, plan);
  model.class_labels = data.meta.label_values;
  model.diagnostics.train_seconds = seconds_since(start);
  return model;
}

std::vector<double> decision_values(const BinaryModel& model, const FeatureMatrix& x) {
  if (!model.train_x) throw ValidationError("model carries no training features");
  const auto m = static_cast<Eigen::Index>(model.n_train());
  if (static_cast<Eigen::Index>(model.alpha.size()) < m) throw DimensionError("model coefficients shorter than data");
  const Eigen::MatrixXd coef = Eigen::Map<const Eigen::VectorXd>(model.alpha.data(), m);
  const Eigen::MatrixXd raw = kernel_expansion(model.config.kernel, *model.train_x, coef, x);
  return {raw.data(), raw.data() + raw.rows()};
}

std::vector<double> predict(const BinaryModel& model, const FeatureMatrix& x) {
  auto s = decision_values(model, x);
  std::transform(s.begin(), s.end(), s.begin(), clamped_sigmoid);
  return s;
}

std::vector<int> predict_labels(const BinaryModel& model, const FeatureMatrix& x) {
  const auto s = predict(model, x);
  std::vector<int> labels(s.size());
  std::transform(s.begin(), s.end(), labels.begin(), [](double v) { return v >= 0.5 ? 1 : 0; });
  return labels;
}

}  // namespace mcmklr
