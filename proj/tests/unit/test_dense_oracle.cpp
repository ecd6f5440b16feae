#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcmklr/data_io.hpp"
#include "mcmklr/dense_oracle.hpp"
#include "mcmklr/errors.hpp"
#include "oracles.hpp"

using namespace mcmklr;

namespace {

FeatureMatrix random_points(oracle::Rng& rng, Eigen::Index n, Eigen::Index d) {
  FeatureMatrix x(n, d);
  const auto v = oracle::uniform(rng, static_cast<std::size_t>(n * d), 0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v[static_cast<std::size_t>(i * d + j)];
  return x;
}

DenseProblem random_problem(oracle::Rng& rng, Eigen::Index n, double sigma) {
  DenseProblem prob;
  const FeatureMatrix x = random_points(rng, n, 2);
  prob.k = oracle::gaussian_gram(x, x, sigma);
  const auto b = oracle::bits(rng, static_cast<std::size_t>(n));
  prob.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) prob.y[i] = b[static_cast<std::size_t>(i)];
  prob.lambda = oracle::uniform(rng, 1, 1e-3, 1e-1)[0];
  return prob;
}

Eigen::VectorXd random_alpha(oracle::Rng& rng, Eigen::Index n, double r = 1.0) {
  return oracle::view(oracle::uniform(rng, static_cast<std::size_t>(n), -r, r));
}

}  // namespace

TEST_SUITE("dense_oracle") {

TEST_CASE("objective and gradient at alpha = 0") {
  oracle::Rng rng(51);
  const auto prob = random_problem(rng, 12, 0.4);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(12);
  CHECK(exact_objective(prob, zero) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  const Eigen::VectorXd want = -(1.0 / 12.0) * prob.k * (prob.y - Eigen::VectorXd::Constant(12, 0.5));
  CHECK(oracle::rel_err(exact_gradient(prob, zero), want) <= 1e-14);
  CHECK(exact_probabilities(prob, zero).isConstant(0.5));
}

TEST_CASE("gradient matches central differences, n <= 32") {
  oracle::Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial * 3 / 2;
    const auto prob = random_problem(rng, n, 0.3 + 0.1 * trial);
    const Eigen::VectorXd a = random_alpha(rng, n);
    Eigen::VectorXd fd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-5;
      Eigen::VectorXd up = a, dn = a;
      up[i] += h;
      dn[i] -= h;
      fd[i] = (exact_objective(prob, up) - exact_objective(prob, dn)) / (2.0 * h);
    }
    CHECK(oracle::rel_err(exact_gradient(prob, a), fd) <= 1e-5);
  }
}

TEST_CASE("Hessian matches differences of the gradient, n <= 16") {
  oracle::Rng rng(53);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 2 + trial;
    const auto prob = random_problem(rng, n, 0.5);
    const Eigen::VectorXd a = random_alpha(rng, n);
    Eigen::MatrixXd fd(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-5;
      Eigen::VectorXd up = a, dn = a;
      up[i] += h;
      dn[i] -= h;
      fd.col(i) = (exact_gradient(prob, up) - exact_gradient(prob, dn)) / (2.0 * h);
    }
    const Eigen::MatrixXd hess = exact_hessian(prob, a);
    CHECK((hess - fd).norm() <= 1e-4 * std::max(1.0, hess.norm()));
    CHECK((hess - hess.transpose()).norm() <= 1e-14 * hess.norm());
  }
}

TEST_CASE("identity kernel has a closed-form direction") {
  oracle::Rng rng(54);
  DenseProblem prob;
  prob.k = Eigen::MatrixXd::Identity(8, 8);
  prob.y = oracle::view(std::vector<double>{1, 0, 1, 1, 0, 0, 1, 0});
  prob.lambda = 0.05;
  const Eigen::VectorXd a = random_alpha(rng, 8, 0.5);
  const Eigen::VectorXd p = exact_probabilities(prob, a);
  const Eigen::VectorXd d = exact_newton_direction(prob, a, p);
  for (Eigen::Index i = 0; i < 8; ++i) {
    const double lam = p[i] * (1.0 - p[i]);
    CHECK(d[i] == doctest::Approx((prob.y[i] - p[i] - 8.0 * prob.lambda * a[i]) / (lam + 8.0 * prob.lambda)).epsilon(1e-13));
  }
}

TEST_CASE("simplified direction solves the unsimplified Newton system, n <= 64") {
  oracle::Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 4 + 3 * trial;
    const auto prob = random_problem(rng, n, 30.0);
    const Eigen::VectorXd a = random_alpha(rng, n);
    const Eigen::VectorXd p = exact_probabilities(prob, a);
    const Eigen::VectorXd d = exact_newton_direction(prob, a, p);
    CHECK(unsimplified_newton_residual(prob, a, p, d) <= 1e-8);
    const Eigen::VectorXd u = unsimplified_newton_direction(prob, a, p);
    CHECK(unsimplified_newton_residual(prob, a, p, u) <= 1e-8);
    CHECK(oracle::rel_err(d, u) <= 1e-6);
  }
}

TEST_CASE("simplified direction solves its own system") {
  oracle::Rng rng(56);
  const auto prob = random_problem(rng, 40, 0.3);
  const Eigen::VectorXd a = random_alpha(rng, 40);
  const Eigen::VectorXd p = exact_probabilities(prob, a);
  const Eigen::VectorXd d = exact_newton_direction(prob, a, p);
  const Eigen::VectorXd lam = p.array() * (1.0 - p.array());
  const Eigen::MatrixXd sys = lam.asDiagonal() * prob.k + 40.0 * prob.lambda * Eigen::MatrixXd::Identity(40, 40);
  const Eigen::VectorXd rhs = prob.y - p - 40.0 * prob.lambda * a;
  CHECK(oracle::rel_err(sys * d, rhs) <= 1e-10);
}

TEST_CASE("exact training reaches at least the fast objective on the exact problem, n = 128") {
  const Dataset data = generate_checkerboard(128, 57);
  TrainConfig cfg;
  cfg.kernel.sigma = 16.0;
  cfg.lambda = 1e-3;
  cfg.t_max = 60;
  cfg.eps = 1e-9;
  const auto exact = train_exact(data, cfg);
  const auto fast = train(data, cfg);
  DenseProblem prob;
  prob.k = exact_gram(cfg.kernel, data.x);
  prob.y.resize(128);
  for (int i = 0; i < 128; ++i) prob.y[i] = data.y[static_cast<std::size_t>(i)];
  prob.lambda = cfg.lambda;
  const double f_exact = exact_objective(prob, oracle::view(exact.alpha));
  const double f_fast = exact_objective(prob, oracle::view(fast.alpha).head(128));
  CHECK(f_exact <= f_fast + 1e-3);
  CHECK(exact.alpha.size() == 128);
  CHECK(exact.solver == Solver::Exact);
}

TEST_CASE("exact traces decrease and two points separate") {
  const auto [train_set, test_set] = generate_fig1_synthetic(300, 50, 5);
  TrainConfig cfg;
  cfg.kernel.sigma = 8.0;
  const auto model = train_exact(train_set, cfg);
  const auto& tr = model.diagnostics.objective_trace;
  CHECK(tr.size() == model.diagnostics.iterations + 1);
  for (std::size_t t = 0; t + 1 < tr.size(); ++t) CHECK(tr[t + 1] < tr[t]);

  Dataset two;
  two.x.resize(2, 2);
  two.x << 0.0, 0.0, 1.0, 1.0;
  two.y = {0, 1};
  two.meta = {"two", {0.0, 1.0}};
  cfg.kernel.sigma = 1.0;
  const auto m2 = train_exact(two, cfg);
  CHECK(m2.diagnostics.converged);
  CHECK(m2.diagnostics.iterations <= 10);
  CHECK(predict_labels(m2, two.x) == std::vector<int>{0, 1});
}

TEST_CASE("refusals and validation") {
  const Dataset data = generate_checkerboard(50, 58);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_exact(data, cfg, 49), CapExceededError);
  CHECK_NOTHROW(train_exact(data, cfg, 50));
  CHECK_THROWS_AS(train_exact(generate_blobs(30, 3, 2), cfg), ValidationError);

  DenseProblem bad;
  bad.k = Eigen::MatrixXd::Identity(3, 2);
  bad.y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad.k = Eigen::MatrixXd::Identity(3, 3);
  bad.lambda = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

}
