#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mcmklr {

/// C x C counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  static ConfusionMatrix from_labels(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t at(std::size_t true_class, std::size_t predicted) const { return counts_.at(true_class * classes_ + predicted); }
  void add(std::size_t true_class, std::size_t predicted, std::size_t count = 1);

  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  std::size_t row_sum(std::size_t c) const;
  std::size_t col_sum(std::size_t c) const;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Rank-statistic AUC, P(score+ > score-) + P(tie)/2, midranks for ties.
/// y_true holds 0/1 and must contain both classes.
double roc_auc(std::span<const int> y_true, std::span<const double> scores);

/// Mean per-class F1 (F1 = 0 when precision + recall = 0).
double macro_f1(const ConfusionMatrix& cm);

/// Multiclass Matthews correlation R_K; 0 when a denominator factor vanishes.
double mcc(const ConfusionMatrix& cm);

}  // namespace mcmklr
