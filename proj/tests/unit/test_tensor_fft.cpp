#include <doctest.h>

#include <algorithm>
#include <thread>

#include "mcmklr/errors.hpp"
#include "mcmklr/tensor_fft.hpp"
#include "oracles.hpp"

using namespace mcmklr;

namespace {

Eigen::VectorXcd as_eigen(const std::vector<cplx>& v) {
  return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<cplx> random_complex(oracle::Rng& rng, std::size_t n) {
  auto re = oracle::uniform(rng, n), im = oracle::uniform(rng, n);
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = {re[i], im[i]};
  return v;
}

bool seven_smooth(std::size_t v) {
  for (std::size_t p : {2, 3, 5, 7})
    while (v % p == 0) v /= p;
  return v == 1;
}

}  // namespace

TEST_SUITE("tensor_fft") {

TEST_CASE("level order indexing") {
  LevelOrder o({3, 4, 2});
  CHECK(o.n() == 24);
  CHECK(o.q() == 3);
  CHECK(o.stride(0) == 8);
  CHECK(o.stride(2) == 1);
  for (std::size_t f = 0; f < o.n(); ++f) CHECK(o.flat(o.multi(f)) == f);
  const std::size_t idx[] = {2, 1, 1};
  CHECK(o.flat(idx) == 2 * 8 + 1 * 2 + 1);
  CHECK(o.to_string() == "3,4,2");
  CHECK_THROWS_AS(LevelOrder({}), ValidationError);
  CHECK_THROWS_AS(LevelOrder({3, 0}), ValidationError);
}

TEST_CASE("automatic level orders") {
  CHECK(LevelOrder::for_size(16384, 3).dims() == std::vector<std::size_t>{26, 26, 25});
  CHECK(LevelOrder::for_size(3375, 3).dims() == std::vector<std::size_t>{15, 15, 15});
  CHECK(LevelOrder::for_size(100000, 3).dims() == std::vector<std::size_t>{47, 47, 46});
  CHECK(LevelOrder::for_size(1, 3).n() == 1);
  for (std::size_t m : {2u, 7u, 100u, 999u, 4097u, 65536u, 123457u})
    for (std::size_t q : {1u, 2u, 3u, 4u}) {
      const auto o = LevelOrder::for_size(m, q);
      CHECK(o.q() == q);
      CHECK(o.n() >= m);
      const auto s = LevelOrder::smooth_for_size(m, q);
      CHECK(s.n() >= m);
      for (auto d : s.dims()) CHECK(seven_smooth(d));
      CHECK(std::is_sorted(s.dims().rbegin(), s.dims().rend()));
      CHECK(s.dims().front() <= 2 * s.dims().back());
    }
  for (std::size_t k = 10; k <= 20; ++k) CHECK(LevelOrder::smooth_for_size(std::size_t{1} << k, 3).n() == std::size_t{1} << k);
  CHECK(LevelOrder::smooth_for_size(16384, 3).dims() == std::vector<std::size_t>{32, 32, 16});
  CHECK(LevelOrder::smooth_for_size(1000, 3).dims() == std::vector<std::size_t>{10, 10, 10});
  CHECK(LevelOrder::smooth_for_size(11, 1).dims() == std::vector<std::size_t>{12});
  CHECK_THROWS_AS(LevelOrder::for_size(0, 3), ValidationError);
  CHECK_THROWS_AS(LevelOrder::for_size(5, 0), ValidationError);
}

TEST_CASE("delta transforms to all ones") {
  for (auto dims : {std::vector<std::size_t>{7}, {4, 4}, {2, 3, 5}, {3, 1, 2, 2}}) {
    LevelOrder o(dims);
    std::vector<double> e0(o.n(), 0.0);
    e0[0] = 1.0;
    const auto s = mfft(e0, o);
    for (auto v : s.values) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-14);
  }
}

TEST_CASE("constant transforms to n e0") {
  const auto s = mfft(std::vector<double>(4, 1.0), LevelOrder({4}));
  CHECK(std::abs(s.values[0] - cplx(4.0, 0.0)) < 1e-14);
  for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(s.values[j]) < 1e-14);
}

TEST_CASE("forward matches explicit Kronecker product for [2,2,2]") {
  oracle::Rng rng(3);
  LevelOrder o({2, 2, 2});
  const auto x = oracle::uniform(rng, 8);
  const Eigen::VectorXcd want = oracle::kron_dft(o, +1) * oracle::view(x).cast<cplx>();
  CHECK(oracle::rel_err_c(as_eigen(mfft(x, o).values), want) <= 1e-12);
}

TEST_CASE("adjoint fixtures") {
  oracle::Rng rng(4);
  {
    LevelOrder o({3, 4});
    const auto x = random_complex(rng, o.n());
    auto back = mfft_adjoint(mfft(x, o));
    for (auto& v : back) v /= static_cast<double>(o.n());
    CHECK(oracle::rel_err_c(as_eigen(back), as_eigen(x)) <= 1e-14);
  }
  {
    const auto e = mfft_adjoint({std::vector<cplx>(4, cplx(1.0, 0.0)), LevelOrder({4})});
    CHECK(std::abs(e[0] - cplx(4.0, 0.0)) < 1e-14);
    for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(e[j]) < 1e-14);
  }
  {
    LevelOrder o({2, 3});
    const auto s = random_complex(rng, o.n());
    const Eigen::VectorXcd want = oracle::kron_dft(o, +1).adjoint() * as_eigen(s);
    CHECK(oracle::rel_err_c(as_eigen(mfft_adjoint({s, o})), want) <= 1e-12);
  }
}

TEST_CASE("Kronecker equivalence property, n <= 64") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto o = oracle::random_order(rng, 1 + trial % 4, 64);
    const auto x = random_complex(rng, o.n());
    const Eigen::VectorXcd want = oracle::kron_dft(o, +1) * as_eigen(x);
    CHECK_MESSAGE(oracle::rel_err_c(as_eigen(mfft(x, o).values), want) <= 1e-12, o.to_string());
  }
}

TEST_CASE("roundtrip property, q in 1..4, n <= 4096") {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    const auto o = oracle::random_order(rng, 1 + trial % 4, 4096);
    const auto x = random_complex(rng, o.n());
    const auto back = mfft_adjoint(mfft(x, o));
    const double n = static_cast<double>(o.n());
    CHECK_MESSAGE((as_eigen(back) - n * as_eigen(x)).norm() <= 1e-10 * n * as_eigen(x).norm(), o.to_string());
  }
}

TEST_CASE("linearity") {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto o = oracle::random_order(rng, 1 + trial % 3, 1000);
    const auto x = random_complex(rng, o.n()), y = random_complex(rng, o.n());
    const cplx a(0.7, -1.3), b(-2.1, 0.4);
    std::vector<cplx> comb(o.n());
    for (std::size_t i = 0; i < o.n(); ++i) comb[i] = a * x[i] + b * y[i];
    const Eigen::VectorXcd want = a * as_eigen(mfft(x, o).values) + b * as_eigen(mfft(y, o).values);
    CHECK(oracle::rel_err_c(as_eigen(mfft(comb, o).values), want) <= 1e-10);
  }
}

TEST_CASE("half spectrum agrees with the full spectrum up to conjugation") {
  // r2c runs the opposite sign, so for real x its entries are conj(phi x) on
  // the kept half of the last axis.
  oracle::Rng rng(8);
  for (auto dims : {std::vector<std::size_t>{9}, {4, 6}, {3, 5, 4}, {2, 3, 7}}) {
    LevelOrder o(dims);
    FftPlan plan(o);
    const auto x = oracle::uniform(rng, o.n());
    const auto full = mfft(x, o).values;
    const auto half = plan.forward_half(x);
    const std::size_t last = dims.back(), kept = last / 2 + 1;
    REQUIRE(half.size() == o.n() / last * kept);
    double worst = 0.0;
    for (std::size_t outer = 0, h = 0; outer < o.n() / last; ++outer)
      for (std::size_t j = 0; j < kept; ++j, ++h) worst = std::max(worst, std::abs(half[h] - std::conj(full[outer * last + j])));
    CHECK(worst <= 1e-12 * static_cast<double>(o.n()));
  }
}

TEST_CASE("plan counters and shape checks") {
  FftPlan plan(LevelOrder({4, 2}));
  std::vector<cplx> v(8, cplx(1.0, 0.0));
  plan.forward_inplace(v);
  plan.adjoint_inplace(v);
  plan.adjoint_inplace(v);
  CHECK(plan.forward_count() == 1);
  CHECK(plan.adjoint_count() == 2);
  plan.reset_counters();
  CHECK(plan.forward_count() == 0);
  std::vector<cplx> wrong(7);
  CHECK_THROWS_AS(plan.forward_inplace(wrong), DimensionError);
  CHECK_THROWS_AS(mfft(std::vector<double>(5, 0.0), LevelOrder({2, 2})), DimensionError);
}

TEST_CASE("distinct plans on distinct threads") {
  oracle::Rng rng(9);
  LevelOrder o({8, 6});
  const auto x = random_complex(rng, o.n());
  const auto want = mfft(x, o).values;
  std::vector<std::vector<cplx>> got(4);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < got.size(); ++t)
    pool.emplace_back([&, t] {
      FftPlan plan(o);
      for (int r = 0; r < 50; ++r) got[t] = plan.forward(x);
    });
  for (auto& th : pool) th.join();
  for (const auto& g : got) CHECK(g == want);
}

}
