#include <doctest.h>

#include <cmath>

#include "mcmklr/errors.hpp"
#include "mcmklr/metrics.hpp"
#include "oracles.hpp"

using namespace mcmklr;

namespace {

double classic_binary_mcc(const ConfusionMatrix& cm) {
  const double tn = cm.at(0, 0), fp = cm.at(0, 1), fn = cm.at(1, 0), tp = cm.at(1, 1);
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / den;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("accuracy fixtures") {
  const std::vector<int> t{0, 1, 1, 0, 2, 2, 1, 0, 1, 2};
  CHECK(accuracy(t, t) == 1.0);
  std::vector<int> none(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) none[i] = (t[i] + 1) % 3;
  CHECK(accuracy(t, none) == 0.0);
  std::vector<int> seven = t;
  seven[0] = 1;
  seven[4] = 0;
  seven[9] = 1;
  CHECK(accuracy(t, seven) == doctest::Approx(0.7));
  const auto cm = ConfusionMatrix::from_labels(t, seven, 3);
  CHECK(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()) == doctest::Approx(0.7));
  CHECK_THROWS_AS(accuracy(t, std::vector<int>{1, 2}), DimensionError);
}

TEST_CASE("roc_auc fixtures") {
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  CHECK(roc_auc(y, std::vector<double>{0.1, 0.2, 0.3, 0.7, 0.8, 0.9}) == 1.0);
  CHECK(roc_auc(y, std::vector<double>(6, 0.4)) == 0.5);
  // One inverted pair out of nine.
  const std::vector<double> s{0.1, 0.2, 0.75, 0.7, 0.8, 0.9};
  CHECK(roc_auc(y, s) == doctest::Approx(8.0 / 9.0));
  CHECK(roc_auc(y, s) == doctest::Approx(oracle::pairwise_auc(y, s)));
  CHECK_THROWS_AS(roc_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(roc_auc(std::vector<int>{0, 2}, std::vector<double>{0.1, 0.2}), ValidationError);
}

TEST_CASE("roc_auc matches the pairwise oracle, ties included") {
  oracle::Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + 7 * trial;
    auto y = oracle::bits(rng, n);
    y[0] = 0;
    y[1] = 1;
    auto s = oracle::uniform(rng, n);
    for (auto& v : s) v = std::round(v * 4.0) / 4.0;  // plenty of ties
    CHECK(roc_auc(y, s) == doctest::Approx(oracle::pairwise_auc(y, s)).epsilon(1e-12));
  }
}

TEST_CASE("roc_auc is invariant under increasing transforms") {
  oracle::Rng rng(32);
  auto y = oracle::bits(rng, 200);
  y[0] = 0;
  y[1] = 1;
  const auto s = oracle::uniform(rng, 200);
  std::vector<double> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) + 7.0;
  CHECK(roc_auc(y, s) == roc_auc(y, t));
}

TEST_CASE("macro F1 fixtures") {
  ConfusionMatrix perfect(3);
  for (std::size_t c = 0; c < 3; ++c) perfect.add(c, c, 5);
  CHECK(macro_f1(perfect) == 1.0);

  // rows true, cols predicted
  ConfusionMatrix cm(3);
  cm.add(0, 0, 5);
  cm.add(0, 1, 1);
  cm.add(1, 1, 3);
  cm.add(1, 2, 2);
  cm.add(2, 0, 1);
  cm.add(2, 2, 4);
  // class 0: P = 5/6, R = 5/6; class 1: P = 3/4, R = 3/5; class 2: P = 4/6, R = 4/5
  const double f0 = 5.0 / 6.0;
  const double f1 = 2.0 * (0.75 * 0.6) / (0.75 + 0.6);
  const double f2 = 2.0 * (4.0 / 6.0 * 0.8) / (4.0 / 6.0 + 0.8);
  CHECK(macro_f1(cm) == doctest::Approx((f0 + f1 + f2) / 3.0).epsilon(1e-14));

  // Class 2 never true and never predicted: contributes 0.
  ConfusionMatrix missing(3);
  missing.add(0, 0, 4);
  missing.add(1, 1, 4);
  CHECK(macro_f1(missing) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("MCC fixtures") {
  ConfusionMatrix perfect(4);
  for (std::size_t c = 0; c < 4; ++c) perfect.add(c, c, 3);
  CHECK(mcc(perfect) == doctest::Approx(1.0));

  ConfusionMatrix one_class(3);
  one_class.add(0, 1, 4);
  one_class.add(1, 1, 4);
  one_class.add(2, 1, 4);
  CHECK(mcc(one_class) == 0.0);

  ConfusionMatrix bin(2);
  bin.add(0, 0, 40);
  bin.add(0, 1, 7);
  bin.add(1, 0, 12);
  bin.add(1, 1, 31);
  CHECK(mcc(bin) == doctest::Approx(classic_binary_mcc(bin)).epsilon(1e-14));
}

TEST_CASE("binary MCC reduction and label-swap symmetry") {
  oracle::Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = oracle::bits(rng, 40), p = oracle::bits(rng, 40);
    const auto cm = ConfusionMatrix::from_labels(t, p, 2);
    CHECK(mcc(cm) == doctest::Approx(classic_binary_mcc(cm)).epsilon(1e-12));
    std::vector<int> ts(t.size()), ps(p.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      ts[i] = 1 - t[i];
      ps[i] = 1 - p[i];
    }
    CHECK(mcc(ConfusionMatrix::from_labels(ts, ps, 2)) == doctest::Approx(mcc(cm)).epsilon(1e-12));
  }
}

TEST_CASE("confusion matrix bookkeeping") {
  const std::vector<int> t{0, 1, 2, 2}, p{0, 2, 2, 1};
  const auto cm = ConfusionMatrix::from_labels(t, p, 3);
  CHECK(cm.total() == 4);
  CHECK(cm.trace() == 2);
  CHECK(cm.row_sum(2) == 2);
  CHECK(cm.col_sum(2) == 2);
  CHECK(cm.at(1, 2) == 1);
  CHECK_THROWS_AS(ConfusionMatrix::from_labels(std::vector<int>{3}, std::vector<int>{0}, 3), ValidationError);
}

}
