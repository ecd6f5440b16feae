#include "mcmklr/tensor_fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "mcmklr/errors.hpp"

namespace mcmklr {

namespace {

// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Saturating power, enough to compare against m.
std::size_t ipow_capped(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

}  // namespace

LevelOrder::LevelOrder(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ValidationError("level order needs at least one level");
  for (std::size_t d : dims_) {
    if (d == 0) throw ValidationError("level order dimensions must be positive");
    n_ *= d;
  }
}

LevelOrder LevelOrder::for_size(std::size_t m, std::size_t q) {
  if (m == 0) throw ValidationError("cannot size a level order for zero samples");
  if (q == 0) throw ValidationError("level count must be positive");
  auto root = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(m), 1.0 / q)));
  root = std::max<std::size_t>(root, 1);
  while (ipow_capped(root, q, m) < m) ++root;
  while (root > 1 && ipow_capped(root - 1, q, m) >= m) --root;

  std::vector<std::size_t> dims(q, root);
  auto product = [&] {
    std::size_t p = 1;
    for (auto d : dims) p *= d;
    return p;
  };
  for (std::size_t s = q; s-- > 0;) {
    while (dims[s] > 1) {
      --dims[s];
      if (product() < m) {
        ++dims[s];
        break;
      }
    }
  }
  return LevelOrder(std::move(dims));
}

namespace {

bool seven_smooth(std::size_t v) {
  for (std::size_t p : {2, 3, 5, 7})
    while (v % p == 0) v /= p;
  return v == 1;
}

}  // namespace

LevelOrder LevelOrder::smooth_for_size(std::size_t m, std::size_t q) {
  const std::size_t root = for_size(m, q).dim(0);
  // A power of two lies in [root, 2 root], so q copies of it always qualify.
  std::vector<std::size_t> smooth;
  for (std::size_t v = 1; v <= 2 * root; ++v)
    if (seven_smooth(v)) smooth.push_back(v);

  // Nonincreasing levels with largest <= 2 * smallest; least product >= m,
  // then the least spread.
  std::vector<std::size_t> best, cur;
  std::size_t best_n = std::numeric_limits<std::size_t>::max();
  auto search = [&](auto&& self, std::size_t top, std::size_t prod) -> void {
    const std::size_t s = cur.size();
    if (s == q) {
      if (prod < m) return;
      if (prod < best_n || (prod == best_n && cur.front() * best.back() < best.front() * cur.back())) {
        best = cur;
        best_n = prod;
      }
      return;
    }
    for (std::size_t i = 0; i <= top; ++i) {
      const std::size_t d = smooth[i];
      if (s > 0 && 2 * d < cur.front()) continue;
      if (prod * d > best_n) break;
      std::size_t reach = prod * d;
      for (std::size_t t = s + 1; t < q; ++t) reach *= d;
      if (reach < m) continue;
      cur.push_back(d);
      self(self, i, prod * d);
      cur.pop_back();
    }
  };
  search(search, smooth.size() - 1, 1);
  return LevelOrder(std::move(best));
}

std::size_t LevelOrder::stride(std::size_t s) const {
  std::size_t st = 1;
  for (std::size_t t = s + 1; t < dims_.size(); ++t) st *= dims_[t];
  return st;
}

std::size_t LevelOrder::flat(std::span<const std::size_t> multi) const {
  if (multi.size() != dims_.size()) throw DimensionError("multi-index has wrong level count");
  std::size_t f = 0;
  for (std::size_t s = 0; s < dims_.size(); ++s) f = f * dims_[s] + multi[s];
  return f;
}

std::vector<std::size_t> LevelOrder::multi(std::size_t flat) const {
  std::vector<std::size_t> idx(dims_.size());
  for (std::size_t s = dims_.size(); s-- > 0;) {
    idx[s] = flat % dims_[s];
    flat /= dims_[s];
  }
  return idx;
}

std::string LevelOrder::to_string() const {
  std::ostringstream os;
  for (std::size_t s = 0; s < dims_.size(); ++s) os << (s ? "," : "") << dims_[s];
  return os.str();
}

struct FftPlan::Impl {
  // Rank-q FFTW plans over the row-major tensor view; FFTW applies the 1-D
  // transform along each axis, which is the Kronecker product of the level DFTs.
  fftw_plan forward = nullptr;
  fftw_plan adjoint = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  std::vector<cplx> scratch;
  std::vector<cplx> half;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    for (auto p : {forward, adjoint, r2c, c2r})
      if (p) fftw_destroy_plan(p);
  }
};

FftPlan::FftPlan(LevelOrder order) : order_(std::move(order)), impl_(std::make_unique<Impl>()) {
  const std::size_t n = order_.n();
  impl_->scratch.assign(n, cplx{});
  auto* buf = reinterpret_cast<fftw_complex*>(impl_->scratch.data());

  std::vector<int> dims;
  for (std::size_t d : order_.dims()) dims.push_back(static_cast<int>(d));
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int rank = static_cast<int>(dims.size());
  impl_->forward = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_BACKWARD, flags);
  impl_->adjoint = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_FORWARD, flags);
  // r2c runs e^{-i}; with a real even multiplier the conjugation cancels
  // between the two halves, so no sign fix-up is needed.
  impl_->half.assign(half_size(), cplx{});
  auto* half = reinterpret_cast<fftw_complex*>(impl_->half.data());
  std::vector<double> real_probe(n);
  impl_->r2c = fftw_plan_dft_r2c(rank, dims.data(), real_probe.data(), half, flags);
  impl_->c2r = fftw_plan_dft_c2r(rank, dims.data(), half, real_probe.data(), flags);
  if (!impl_->forward || !impl_->adjoint || !impl_->r2c || !impl_->c2r)
    throw Error("FFTW failed to plan level order " + order_.to_string());
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::check_length(std::size_t len) const {
  if (len != order_.n())
    throw DimensionError("transform length " + std::to_string(len) + " does not match level order size " +
                         std::to_string(order_.n()));
}

void FftPlan::forward_inplace(std::span<cplx> data) {
  check_length(data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->forward, p, p);
  ++forward_count_;
}

void FftPlan::adjoint_inplace(std::span<cplx> data) {
  check_length(data.size());
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->adjoint, p, p);
  ++adjoint_count_;
}

std::span<cplx> FftPlan::forward_real(std::span<const double> x) {
  check_length(x.size());
  auto& buf = impl_->scratch;
  std::transform(x.begin(), x.end(), buf.begin(), [](double v) { return cplx(v, 0.0); });
  forward_inplace(buf);
  return buf;
}

std::vector<cplx> FftPlan::forward(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  forward_inplace(out);
  return out;
}

std::vector<cplx> FftPlan::adjoint(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  adjoint_inplace(out);
  return out;
}

std::span<cplx> FftPlan::scratch() noexcept { return impl_->scratch; }

std::size_t FftPlan::half_size() const noexcept {
  const std::size_t last = order_.dims().back();
  return order_.n() / last * (last / 2 + 1);
}

std::span<cplx> FftPlan::forward_half(std::span<const double> x) {
  check_length(x.size());
  fftw_execute_dft_r2c(impl_->r2c, const_cast<double*>(x.data()), reinterpret_cast<fftw_complex*>(impl_->half.data()));
  ++forward_count_;
  return impl_->half;
}

void FftPlan::adjoint_half(std::span<double> out) {
  check_length(out.size());
  fftw_execute_dft_c2r(impl_->c2r, reinterpret_cast<fftw_complex*>(impl_->half.data()), out.data());
  ++adjoint_count_;
}

SpectralVector mfft(std::span<const double> x, const LevelOrder& order) {
  FftPlan plan(order);
  auto v = plan.forward_real(x);
  return {std::vector<cplx>(v.begin(), v.end()), order};
}

SpectralVector mfft(std::span<const cplx> x, const LevelOrder& order) {
  FftPlan plan(order);
  return {plan.forward(x), order};
}

std::vector<cplx> mfft_adjoint(const SpectralVector& s) {
  FftPlan plan(s.order);
  return plan.adjoint(s.values);
}

}  // namespace mcmklr
