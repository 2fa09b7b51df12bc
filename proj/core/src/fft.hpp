#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>

#include "bigreg/volume.hpp"

namespace bigreg::detail {

template <typename T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree<T>>;

FftwBuffer<double> alloc_real(std::size_t n);
FftwBuffer<fftw_complex> alloc_complex(std::size_t n);

/// Real-to-complex 3-D transform pair for one padded grid. Plans use
/// FFTW_ESTIMATE so results never depend on timing measurements; plan
/// creation is serialized because the FFTW planner is not thread-safe.
class RealFft3 {
 public:
  explicit RealFft3(Dims padded);
  ~RealFft3();
  RealFft3(const RealFft3&) = delete;
  RealFft3& operator=(const RealFft3&) = delete;

  const Dims& dims() const { return dims_; }
  std::size_t real_size() const { return dims_.count(); }
  std::size_t complex_size() const {
    return static_cast<std::size_t>(dims_.x / 2 + 1) * dims_.y * dims_.z;
  }

  /// in: real_size() values (x fastest); out: complex_size() values.
  void forward(double* in, fftw_complex* out) const;
  /// Unnormalized inverse; destroys `in`.
  void inverse(fftw_complex* in, double* out) const;

 private:
  Dims dims_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
int fft_friendly_size(int n);

}  // namespace bigreg::detail
