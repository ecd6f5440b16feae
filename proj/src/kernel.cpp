#include "mcmklr/kernel.hpp"

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include <algorithm>
#include <cmath>

#include "mcmklr/errors.hpp"

namespace mcmklr {

void RadialKernel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("kernel sigma must be positive and finite");
}

double RadialKernel::profile_sq(double r2) const {
  switch (family) {
    case KernelFamily::Gaussian:
      return std::exp(-sigma * r2);
  }
  return 0.0;
}

GridSpec GridSpec::unit(const LevelOrder& order) { return GridSpec{std::vector<double>(order.q(), 1.0), order}; }

void GridSpec::validate() const {
  if (h.size() != order.q())
    throw ValidationError("grid has " + std::to_string(h.size()) + " steps for " + std::to_string(order.q()) +
                          " levels");
  for (double step : h)
    if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("grid steps must be positive");
}

std::vector<double> lattice_values(const RadialKernel& kern, const GridSpec& grid) {
  kern.validate();
  grid.validate();
  const auto& order = grid.order;
  std::vector<double> t(order.n());
  for (std::size_t f = 0; f < order.n(); ++f) {
    const auto idx = order.multi(f);
    double r2 = 0.0;
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const double c = static_cast<double>(idx[s]) * grid.h[s];
      r2 += c * c;
    }
    t[f] = kern.profile_sq(r2);
  }
  return t;
}

std::vector<double> construct_column(const RadialKernel& kern, const GridSpec& grid) {
  const auto t = lattice_values(kern, grid);
  const auto& order = grid.order;
  const std::size_t q = order.q();

  std::vector<double> k(order.n(), 0.0);
  std::vector<std::vector<std::size_t>> sets(q);
  std::vector<std::size_t> pick(q), j(q);
  for (std::size_t f = 0; f < order.n(); ++f) {
    const auto idx = order.multi(f);
    for (std::size_t s = 0; s < q; ++s) {
      const std::size_t ns = order.dim(s);
      // Ascending order, so i and -i (which share every D-set) sum the same
      // terms in the same order and the column is exactly symmetric.
      sets[s].clear();
      const std::size_t a = std::min(idx[s], (ns - idx[s]) % ns), b = std::max(idx[s], (ns - idx[s]) % ns);
      sets[s].push_back(a);
      if (b != a) sets[s].push_back(b);
    }
    // Odometer over the Cartesian product D_i.
    std::fill(pick.begin(), pick.end(), 0);
    double sum = 0.0;
    while (true) {
      for (std::size_t s = 0; s < q; ++s) j[s] = sets[s][pick[s]];
      sum += t[order.flat(j)];
      std::size_t s = q;
      while (s-- > 0) {
        if (++pick[s] < sets[s].size()) break;
        pick[s] = 0;
      }
      if (s == static_cast<std::size_t>(-1)) break;
    }
    k[f] = sum;
  }
  return k;
}

Eigen::MatrixXd exact_gram(const RadialKernel& kern, const FeatureMatrix& x, std::size_t cap) {
  if (static_cast<std::size_t>(x.rows()) > cap)
    throw CapExceededError("Gram matrix of " + std::to_string(x.rows()) + " points exceeds dense cap " +
                           std::to_string(cap));
  return gram_block(kern, x, x);
}

Eigen::MatrixXd gram_block(const RadialKernel& kern, const FeatureMatrix& a, const FeatureMatrix& b) {
  kern.validate();
  if (a.cols() != b.cols()) throw DimensionError("feature dimensions differ");
  Eigen::MatrixXd g(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) g(i, j) = kern.profile_sq((a.row(i) - b.row(j)).squaredNorm());
  return g;
}

namespace {

class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

}  // namespace

Eigen::MatrixXd kernel_expansion(const RadialKernel& kern, const FeatureMatrix& train, const Eigen::MatrixXd& coef,
                                 const FeatureMatrix& test) {
  kern.validate();
  if (train.cols() != test.cols())
    throw DimensionError("test points have " + std::to_string(test.cols()) + " features, model expects " +
                         std::to_string(train.cols()));
  if (coef.rows() != train.rows()) throw DimensionError("one coefficient row per training point required");

  constexpr Eigen::Index kTestBlock = 32;
  constexpr Eigen::Index kTrainBlock = 1024;
  const Eigen::Index d = train.cols();
  const Eigen::Index m = train.rows();
  // d x m column-major, so each feature is a contiguous row.
  const Eigen::MatrixXd by_feature = train.transpose();

  // Far-field kernel values underflow into subnormals, which are very slow
  // to multiply; flush them to zero while the expansion runs.
  const FlushSubnormals flush;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(test.rows(), coef.cols());
  // Column i of `block` holds the kernel row of test point t0 + i over one
  // training chunk, so the inner loops run over contiguous memory.
  Eigen::ArrayXXd block;
  for (Eigen::Index t0 = 0; t0 < test.rows(); t0 += kTestBlock) {
    const Eigen::Index tb = std::min(kTestBlock, test.rows() - t0);
    for (Eigen::Index c0 = 0; c0 < m; c0 += kTrainBlock) {
      const Eigen::Index cb = std::min(kTrainBlock, m - c0);
      block.setZero(cb, tb);
      for (Eigen::Index i = 0; i < tb; ++i)
        for (Eigen::Index k = 0; k < d; ++k)
          block.col(i) += (by_feature.row(k).segment(c0, cb).transpose().array() - test(t0 + i, k)).square();
      block = (-kern.sigma * block).exp();
      out.middleRows(t0, tb).noalias() += block.matrix().transpose() * coef.middleRows(c0, cb);
    }
  }
  return out;
}

}  // namespace mcmklr
