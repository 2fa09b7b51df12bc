#include "fft.hpp"

#include <algorithm>
#include <mutex>
#include <new>

#include "bigreg/error.hpp"

namespace bigreg::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftwBuffer<double> alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<double>(p);
}

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<fftw_complex>(p);
}

RealFft3::RealFft3(Dims padded) : dims_(padded) {
  if (!padded.positive()) throw InvalidArgument("fft: dims must be positive");
  auto r = alloc_real(real_size());
  auto c = alloc_complex(complex_size());
  std::lock_guard lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c_3d(dims_.z, dims_.y, dims_.x, r.get(), c.get(), FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_3d(dims_.z, dims_.y, dims_.x, c.get(), r.get(), FFTW_ESTIMATE);
  if (!fwd_ || !inv_) throw Error("fft: plan creation failed");
}

RealFft3::~RealFft3() {
  std::lock_guard lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(fwd_);
  if (inv_) fftw_destroy_plan(inv_);
}

void RealFft3::forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(fwd_, in, out); }

void RealFft3::inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inv_, in, out); }

int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace bigreg::detail
