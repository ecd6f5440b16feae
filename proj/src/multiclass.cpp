#include "mcmklr/multiclass.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "mcmklr/dense_oracle.hpp"
#include "mcmklr/errors.hpp"

namespace mcmklr {

MulticlassModel train_ova(const Dataset& data, const TrainConfig& config, Solver solver, std::size_t jobs) {
  config.validate();
  data.validate();
  const std::size_t classes = data.num_classes();
  if (classes < 2) throw ValidationError("one-vs-all needs at least two classes");
  if (data.n() < 2) throw ValidationError("training needs at least two samples");

  auto x = std::make_shared<const FeatureMatrix>(data.x);
  std::optional<GridSpec> grid;
  std::optional<MultilevelCirculant> column;
  Eigen::MatrixXd gram;
  if (solver == Solver::Mcm) {
    grid = config.resolve_grid(data.n());
    column = MultilevelCirculant::from_first_column(construct_column(config.kernel, *grid), grid->order);
  } else {
    gram = exact_gram(config.kernel, *x);
  }

  MulticlassModel out;
  out.class_labels = data.meta.label_values;
  out.config = config;
  out.solver = solver;
  out.models.resize(classes);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    std::optional<FftPlan> plan;
    if (column) plan.emplace(column->order());
    std::vector<int> y(data.n());
    for (std::size_t c = next++; c < classes; c = next++) {
      try {
        for (std::size_t i = 0; i < data.n(); ++i) y[i] = data.y[i] == static_cast<int>(c) ? 1 : 0;
        auto model = solver == Solver::Mcm ? train_with_matrix(x, y, config, *column, *plan)
                                           : train_exact_with_gram(x, gram, y, config);
        model.class_labels = {0.0, 1.0};
        out.models[c] = std::move(model);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, classes);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Eigen::MatrixXd ova_decision_values(const MulticlassModel& model, const FeatureMatrix& x) {
  if (model.models.empty()) throw ValidationError("multiclass model has no class models");
  const auto& first = model.models.front();
  const auto m = static_cast<Eigen::Index>(first.n_train());
  // Every class model shares the training features, so one kernel pass
  // scores all classes.
  Eigen::MatrixXd coef(m, static_cast<Eigen::Index>(model.models.size()));
  for (std::size_t c = 0; c < model.models.size(); ++c) {
    const auto& alpha = model.models[c].alpha;
    if (static_cast<Eigen::Index>(alpha.size()) < m) throw DimensionError("class model coefficients too short");
    coef.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
  }
  return kernel_expansion(model.config.kernel, *first.train_x, coef, x);
}

Eigen::MatrixXd ova_scores(const MulticlassModel& model, const FeatureMatrix& x) {
  return ova_decision_values(model, x).unaryExpr([](double v) { return clamped_sigmoid(v); });
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

std::vector<int> predict_ova(const MulticlassModel& model, const FeatureMatrix& x) {
  // Raw expansions order the same as the scores but do not saturate into ties.
  return argmax_rows(ova_decision_values(model, x));
}

}  // namespace mcmklr
