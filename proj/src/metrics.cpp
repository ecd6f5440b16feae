#include "mcmklr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcmklr/errors.hpp"

namespace mcmklr {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 1) throw ValidationError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> y_true, std::span<const int> y_pred,
                                             std::size_t classes) {
  if (y_true.size() != y_pred.size()) throw DimensionError("label vectors differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0 || static_cast<std::size_t>(y_true[i]) >= classes ||
        static_cast<std::size_t>(y_pred[i]) >= classes)
      throw ValidationError("label outside 0.." + std::to_string(classes - 1));
    cm.add(static_cast<std::size_t>(y_true[i]), static_cast<std::size_t>(y_pred[i]));
  }
  return cm;
}

void ConfusionMatrix::add(std::size_t true_class, std::size_t predicted, std::size_t count) {
  counts_.at(true_class * classes_ + predicted) += count;
}

std::size_t ConfusionMatrix::total() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t c = 0; c < classes_; ++c) t += counts_[c * classes_ + c];
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(c, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += at(t, c);
  return s;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw DimensionError("label vectors differ in length");
  if (y_true.empty()) throw ValidationError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double roc_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw DimensionError("labels and scores differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks (1-based) over positives.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (y_true[order[k]] == 1) {
        rank_sum += midrank;
        ++positives;
      } else if (y_true[order[k]] != 0) {
        throw ValidationError("roc_auc expects 0/1 labels");
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw ValidationError("roc_auc is undefined with a single class");
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double macro_f1(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double predicted = static_cast<double>(cm.col_sum(c));
    const double actual = static_cast<double>(cm.row_sum(c));
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = actual > 0 ? tp / actual : 0.0;
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(cm.classes());
}

double mcc(const ConfusionMatrix& cm) {
  const double c = static_cast<double>(cm.trace());
  const double s = static_cast<double>(cm.total());
  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    const double t = static_cast<double>(cm.row_sum(k));
    const double p = static_cast<double>(cm.col_sum(k));
    pt += p * t;
    pp += p * p;
    tt += t * t;
  }
  const double left = s * s - pp;
  const double right = s * s - tt;
  if (left <= 0.0 || right <= 0.0) return 0.0;
  return (c * s - pt) / std::sqrt(left * right);
}

}  // namespace mcmklr
