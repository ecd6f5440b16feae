#include "mcmklr/mcm.hpp"

#include <algorithm>
#include <cmath>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

constexpr double kSymmetryTolerance = 1e-8;
constexpr double kClampRelative = 1e-12;

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DimensionError(std::string(what) + ": length " + std::to_string(got) + " != " + std::to_string(want));
}

void require_plan(const MultilevelCirculant& m, const FftPlan& plan) {
  if (!(plan.order() == m.order())) throw DimensionError("transform plan level order differs from matrix");
}

}  // namespace

MultilevelCirculant::MultilevelCirculant(LevelOrder order, std::vector<double> column,
                                         std::vector<double> eigenvalues, double imag_residue)
    : order_(std::move(order)),
      column_(std::move(column)),
      eigenvalues_(std::move(eigenvalues)),
      imag_residue_(imag_residue) {
  double vmax = 0.0;
  for (double v : eigenvalues_) vmax = std::max(vmax, std::abs(v));
  asymmetric_ = imag_residue_ > kSymmetryTolerance * vmax;
}

MultilevelCirculant MultilevelCirculant::from_first_column(std::vector<double> column, FftPlan& plan) {
  require_length(column.size(), plan.order().n(), "first column");
  auto spectrum = plan.forward_real(column);
  std::vector<double> eig(spectrum.size());
  double residue = 0.0;
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    eig[j] = spectrum[j].real();
    residue = std::max(residue, std::abs(spectrum[j].imag()));
  }
  return MultilevelCirculant(plan.order(), std::move(column), std::move(eig), residue);
}

MultilevelCirculant MultilevelCirculant::from_first_column(std::vector<double> column, const LevelOrder& order) {
  FftPlan plan(order);
  return from_first_column(std::move(column), plan);
}

MultilevelCirculant MultilevelCirculant::identity(const LevelOrder& order) {
  std::vector<double> k(order.n(), 0.0);
  k[0] = 1.0;
  return MultilevelCirculant(order, std::move(k), std::vector<double>(order.n(), 1.0), 0.0);
}

MultilevelCirculant MultilevelCirculant::zero(const LevelOrder& order) {
  return MultilevelCirculant(order, std::vector<double>(order.n(), 0.0), std::vector<double>(order.n(), 0.0), 0.0);
}

namespace {

// Multiplies the half spectrum of x by mult(v_j) for each stored eigenvalue v_j
// and transforms back. Real v keeps the product Hermitian, so the real inverse
// equals the real part of the full complex path.
template <class Mult>
std::vector<double> spectral_apply(const MultilevelCirculant& m, std::span<const double> x, FftPlan& plan, Mult mult) {
  auto half = plan.forward_half(x);
  const auto& v = m.eigenvalues();
  const std::size_t last = m.order().dims().back();
  const std::size_t kept = last / 2 + 1;
  const double inv_n = 1.0 / static_cast<double>(m.n());
  for (std::size_t outer = 0, h = 0; outer < m.n() / last; ++outer)
    for (std::size_t j = 0; j < kept; ++j, ++h) half[h] *= mult(v[outer * last + j]) * inv_n;
  std::vector<double> out(m.n());
  plan.adjoint_half(out);
  return out;
}

}  // namespace

std::vector<double> matvec(const MultilevelCirculant& m, std::span<const double> x, FftPlan& plan) {
  require_plan(m, plan);
  require_length(x.size(), m.n(), "matvec operand");
  return spectral_apply(m, x, plan, [](double v) { return v; });
}

std::vector<double> matvec(const MultilevelCirculant& m, std::span<const double> x) {
  FftPlan plan(m.order());
  return matvec(m, x, plan);
}

ShiftedSolve solve_shifted(const MultilevelCirculant& m, double shift, std::span<const double> b, FftPlan& plan) {
  require_plan(m, plan);
  require_length(b.size(), m.n(), "right-hand side");
  if (!(shift > 0.0)) throw ValidationError("shift must be positive");

  const auto& v = m.eigenvalues();
  double vmax = 0.0;
  for (double e : v) vmax = std::max(vmax, std::abs(e));
  const double floor = kClampRelative * (vmax + shift);

  ShiftedSolve result;
  for (double e : v) result.clamped += std::abs(e + shift) < floor;
  result.x = spectral_apply(m, b, plan, [&](double vj) {
    const double denom = vj + shift;
    if (std::abs(denom) < floor) return 1.0 / (denom < 0.0 ? -floor : floor);
    return 1.0 / denom;
  });
  return result;
}

ShiftedSolve solve_shifted(const MultilevelCirculant& m, double shift, std::span<const double> b) {
  FftPlan plan(m.order());
  return solve_shifted(m, shift, b, plan);
}

MultilevelCirculant add(const MultilevelCirculant& a, const MultilevelCirculant& b) {
  if (!(a.order() == b.order()))
    throw DimensionError("cannot add MCMs of level orders " + a.order().to_string() + " and " +
                         b.order().to_string());
  std::vector<double> k(a.n()), v(a.n());
  for (std::size_t j = 0; j < a.n(); ++j) {
    k[j] = a.column()[j] + b.column()[j];
    v[j] = a.eigenvalues()[j] + b.eigenvalues()[j];
  }
  return MultilevelCirculant(a.order(), std::move(k), std::move(v), a.imag_residue() + b.imag_residue());
}

MultilevelCirculant scale(const MultilevelCirculant& a, double c) {
  std::vector<double> k(a.column()), v(a.eigenvalues());
  for (auto& e : k) e *= c;
  for (auto& e : v) e *= c;
  return MultilevelCirculant(a.order(), std::move(k), std::move(v), std::abs(c) * a.imag_residue());
}

Eigen::MatrixXd to_dense(const MultilevelCirculant& m, std::size_t cap) {
  const std::size_t n = m.n();
  if (n > cap)
    throw CapExceededError("dense materialization of size " + std::to_string(n) + " exceeds cap " +
                           std::to_string(cap));
  const auto& order = m.order();
  const std::size_t q = order.q();
  std::vector<std::vector<std::size_t>> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = order.multi(i);

  Eigen::MatrixXd dense(n, n);
  std::vector<std::size_t> diff(q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t s = 0; s < q; ++s) {
        const std::size_t ns = order.dim(s);
        diff[s] = (idx[i][s] + ns - idx[j][s]) % ns;
      }
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.column()[order.flat(diff)];
    }
  }
  return dense;
}

}  // namespace mcmklr
