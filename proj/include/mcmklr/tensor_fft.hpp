#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mcmklr {

using cplx = std::complex<double>;

/// Factorization n = n0 * n1 * ... * n_{q-1} fixing the block structure of a
/// multilevel circulant matrix. Level 0 is the slowest-varying axis of the
/// row-major tensor view, so (i0, ..., i_{q-1}) flattens to
/// ((i0 * n1 + i1) * n2 + ...).
class LevelOrder {
 public:
  explicit LevelOrder(std::vector<std::size_t> dims);

  /// Near-cubic padded order for m samples over q levels: every n_s starts at
  /// ceil(m^(1/q)), then trailing factors are decremented while the product
  /// stays >= m.
  static LevelOrder for_size(std::size_t m, std::size_t q);

  /// Smallest N >= m whose q levels are all 7-smooth (factors 2, 3, 5, 7
  /// only) and within a factor 2 of each other, levels nonincreasing. Exact
  /// for powers of two.
  static LevelOrder smooth_for_size(std::size_t m, std::size_t q);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t s) const { return dims_.at(s); }
  std::size_t n() const noexcept { return n_; }
  std::size_t q() const noexcept { return dims_.size(); }

  /// Row-major stride of axis s.
  std::size_t stride(std::size_t s) const;

  std::size_t flat(std::span<const std::size_t> multi) const;
  std::vector<std::size_t> multi(std::size_t flat) const;

  std::string to_string() const;

  friend bool operator==(const LevelOrder&, const LevelOrder&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t n_ = 1;
};

/// Values of phi applied to some vector, tagged with the level order they
/// live on.
struct SpectralVector {
  std::vector<cplx> values;
  LevelOrder order;
};

/// Reusable transform workspace for one level order. Applies
/// phi = F_{n0} (x) ... (x) F_{n_{q-1}}, with F_m[s, t] = exp(+2 pi i s t / m),
/// one axis at a time, and its conjugate transpose. Neither direction is
/// normalized, so adjoint(forward(x)) == n * x.
///
/// A plan is single-caller; separate plans may run on separate threads.
class FftPlan {
 public:
  explicit FftPlan(LevelOrder order);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  const LevelOrder& order() const noexcept { return order_; }

  void forward_inplace(std::span<cplx> data);
  void adjoint_inplace(std::span<cplx> data);

  /// Real input is widened into the plan's scratch buffer; the returned span
  /// aliases that buffer and is valid until the next call on this plan.
  std::span<cplx> forward_real(std::span<const double> x);

  std::vector<cplx> forward(std::span<const cplx> x);
  std::vector<cplx> adjoint(std::span<const cplx> x);

  /// Scratch buffer of length n owned by the plan.
  std::span<cplx> scratch() noexcept;

  /// Real-input path over the half spectrum: the last axis keeps indices
  /// 0 .. n_last/2 (row-major, length half_size()). Valid for operators whose
  /// spectral multiplier is real and even, where the conjugate halves drop out.
  std::size_t half_size() const noexcept;
  /// Half spectrum of a real vector, written to an internal buffer. Counts as
  /// one forward transform.
  std::span<cplx> forward_half(std::span<const double> x);
  /// Real inverse of the internal half buffer (unnormalized), which it
  /// overwrites. Counts as one adjoint transform.
  void adjoint_half(std::span<double> out);

  std::size_t forward_count() const noexcept { return forward_count_; }
  std::size_t adjoint_count() const noexcept { return adjoint_count_; }
  void reset_counters() noexcept { forward_count_ = adjoint_count_ = 0; }

 private:
  struct Impl;
  void check_length(std::size_t len) const;

  LevelOrder order_;
  std::unique_ptr<Impl> impl_;
  std::size_t forward_count_ = 0;
  std::size_t adjoint_count_ = 0;
};

/// One-shot phi * x. Builds a temporary plan.
SpectralVector mfft(std::span<const double> x, const LevelOrder& order);
SpectralVector mfft(std::span<const cplx> x, const LevelOrder& order);

/// One-shot phi^* * s.
std::vector<cplx> mfft_adjoint(const SpectralVector& s);

}  // namespace mcmklr
