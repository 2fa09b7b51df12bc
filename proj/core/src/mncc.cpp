#include "bigreg/mncc.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "bigreg/error.hpp"
#include "bigreg/morphology.hpp"
#include "bigreg/volume_io.hpp"
#include "fft.hpp"

namespace bigreg {

namespace {

void check_pair(const Volume& v1, const BinaryMask& m1, const Volume& v2, const BinaryMask& m2) {
  if (!(v1.dims() == m1.dims() && v1.dims() == v2.dims() && v1.dims() == m2.dims()))
    throw DimsMismatch("mncc: volumes and masks must share dims");
}

double overlap_floor(const BinaryMask& m1, const BinaryMask& m2, double fraction) {
  return std::max(1.0, fraction * static_cast<double>(std::min(m1.count(), m2.count())));
}

double masked_mean(const Volume& v, const BinaryMask& m) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (m[i]) {
      s += v.data()[i];
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

}  // namespace

std::optional<double> mncc_spatial(const Volume& v1, const BinaryMask& m1, const Volume& v2,
                                   const BinaryMask& m2, const Shift3& u, const MnccOptions& opts) {
  check_pair(v1, m1, v2, m2);
  const Dims& d = v1.dims();
  const int i0 = std::max(0, -u.dx), i1 = std::min(d.x, d.x - u.dx);
  const int j0 = std::max(0, -u.dy), j1 = std::min(d.y, d.y - u.dy);
  const int k0 = std::max(0, -u.dz), k1 = std::min(d.z, d.z - u.dz);

  std::int64_t n = 0;
  double sum1 = 0.0, sum2 = 0.0;
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i)
        if (m1.get(i, j, k) && m2.get(i + u.dx, j + u.dy, k + u.dz)) {
          ++n;
          sum1 += v1.at(i, j, k);
          sum2 += v2.at(i + u.dx, j + u.dy, k + u.dz);
        }
  if (static_cast<double>(n) < overlap_floor(m1, m2, opts.min_overlap_fraction)) return std::nullopt;
  const double mu1 = sum1 / static_cast<double>(n);
  const double mu2 = sum2 / static_cast<double>(n);

  double num = 0.0, den1 = 0.0, den2 = 0.0;
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i)
        if (m1.get(i, j, k) && m2.get(i + u.dx, j + u.dy, k + u.dz)) {
          const double a = v1.at(i, j, k) - mu1;
          const double b = v2.at(i + u.dx, j + u.dy, k + u.dz) - mu2;
          num += a * b;
          den1 += a * a;
          den2 += b * b;
        }
  if (den1 <= opts.epsilon || den2 <= opts.epsilon) return std::nullopt;
  return std::clamp(num / std::sqrt(den1 * den2), -1.0, 1.0);
}

CorrelationVolume mncc_fft(const Volume& v1, const BinaryMask& m1, const Volume& v2,
                           const BinaryMask& m2, const MnccOptions& opts) {
  check_pair(v1, m1, v2, m2);
  const Dims& n = v1.dims();
  Eigen::Vector3i w(n.x - 1, n.y - 1, n.z - 1);
  if (opts.half_window) w = opts.half_window->cwiseMax(0).cwiseMin(w);

  const Dims padded{detail::fft_friendly_size(n.x + w.x()), detail::fft_friendly_size(n.y + w.y()),
                    detail::fft_friendly_size(n.z + w.z())};
  const detail::RealFft3 fft(padded);
  const std::size_t nr = fft.real_size(), nc = fft.complex_size();
  auto real = detail::alloc_real(nr);

  // Intensities are shifted by their masked means first; the score is
  // invariant to that and the variance sums lose far less precision.
  const double mean1 = masked_mean(v1, m1), mean2 = masked_mean(v2, m2);
  const auto spectrum = [&](auto value) {
    std::fill(real.get(), real.get() + nr, 0.0);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n.z; ++k)
      for (int j = 0; j < n.y; ++j)
        for (int i = 0; i < n.x; ++i)
          real[padded.index(i, j, k)] = value(n.index(i, j, k));
    auto spec = detail::alloc_complex(nc);
    fft.forward(real.get(), spec.get());
    return spec;
  };
  const auto mask_of = [](const BinaryMask& m) {
    return [&m](std::size_t idx) { return m[idx] ? 1.0 : 0.0; };
  };
  const auto power_of = [](const Volume& v, const BinaryMask& m, double mean, int power) {
    return [&v, &m, mean, power](std::size_t idx) {
      if (!m[idx]) return 0.0;
      const double x = v.data()[idx] - mean;
      return power == 1 ? x : x * x;
    };
  };

  CorrelationVolume out;
  out.dims = Dims{2 * w.x() + 1, 2 * w.y() + 1, 2 * w.z() + 1};
  out.zero_shift_index = w;
  const std::size_t cells = out.dims.count();
  auto work = detail::alloc_complex(nc);
  const double scale = 1.0 / static_cast<double>(nr);

  // c(u) = sum_x a(x) b(x + u) = IFFT(conj(A) B)(u), read back over the window.
  const auto correlate = [&](const fftw_complex* a, const fftw_complex* b) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nc); ++i) {
      const double ar = a[i][0], ai = a[i][1], br = b[i][0], bi = b[i][1];
      work[i][0] = ar * br + ai * bi;
      work[i][1] = ar * bi - ai * br;
    }
    fft.inverse(work.get(), real.get());
    std::vector<double> win(cells);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < out.dims.z; ++k)
      for (int j = 0; j < out.dims.y; ++j)
        for (int i = 0; i < out.dims.x; ++i) {
          const Shift3 s = out.shift_of(i, j, k);
          const int pi = (s.dx + padded.x) % padded.x;
          const int pj = (s.dy + padded.y) % padded.y;
          const int pk = (s.dz + padded.z) % padded.z;
          win[out.dims.index(i, j, k)] = real[padded.index(pi, pj, pk)] * scale;
        }
    return win;
  };

  const auto fm1 = spectrum(mask_of(m1));
  const auto fm2 = spectrum(mask_of(m2));
  const std::vector<double> cn = correlate(fm1.get(), fm2.get());
  std::vector<double> s1, s2, s11, s22, s12;
  {
    const auto a1 = spectrum(power_of(v1, m1, mean1, 1));
    s1 = correlate(a1.get(), fm2.get());
    const auto a2 = spectrum(power_of(v2, m2, mean2, 1));
    s2 = correlate(fm1.get(), a2.get());
    s12 = correlate(a1.get(), a2.get());
  }
  {
    const auto q1 = spectrum(power_of(v1, m1, mean1, 2));
    s11 = correlate(q1.get(), fm2.get());
  }
  {
    const auto q2 = spectrum(power_of(v2, m2, mean2, 2));
    s22 = correlate(fm1.get(), q2.get());
  }

  const double floor = overlap_floor(m1, m2, opts.min_overlap_fraction);
  out.scores.assign(cells, 0.0);
  out.overlap.assign(cells, 0);
  out.valid.assign(cells, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells); ++c) {
    const double cnt = std::round(cn[c]);
    out.overlap[c] = static_cast<std::int64_t>(std::max(0.0, cnt));
    if (cnt < floor) continue;
    const double var1 = std::max(s11[c] - s1[c] * s1[c] / cnt, 0.0);
    const double var2 = std::max(s22[c] - s2[c] * s2[c] / cnt, 0.0);
    if (var1 <= opts.epsilon || var2 <= opts.epsilon) continue;
    out.scores[c] = std::clamp((s12[c] - s1[c] * s2[c] / cnt) / std::sqrt(var1 * var2), -1.0, 1.0);
    out.valid[c] = 1;
  }
  return out;
}

Peak find_peak(const CorrelationVolume& c) {
  bool found = false;
  Peak best;
  for (int k = 0; k < c.dims.z; ++k)
    for (int j = 0; j < c.dims.y; ++j)
      for (int i = 0; i < c.dims.x; ++i) {
        const std::size_t idx = c.dims.index(i, j, k);
        if (!c.valid[idx]) continue;
        const Shift3 s = c.shift_of(i, j, k);
        const double v = c.scores[idx];
        if (!found || v > best.score ||
            (v == best.score &&
             std::tie(s.dx, s.dy, s.dz) < std::tie(best.shift.dx, best.shift.dy, best.shift.dz))) {
          best = {s, v};
          found = true;
        }
      }
  if (!found) throw AllInvalid("find_peak: no valid correlation cell");
  return best;
}

void save_correlation(const CorrelationVolume& c, const std::filesystem::path& path) {
  std::vector<float> data(c.dims.count());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = c.valid[i] ? static_cast<float>(c.scores[i]) : -2.0f;
  save_volume(Volume(c.dims, Eigen::Vector3d::Ones(), std::move(data)), path);
}

Stage2Result stage2_refine(const Volume& moving_aligned, const Volume& fixed, const Stage2Config& cfg) {
  if (!(moving_aligned.dims() == fixed.dims()))
    throw DimsMismatch("stage2: moving and fixed dims differ");
  const BinaryMask h_f = fill_holes_3d(threshold(fixed, 0.0, true));
  const BinaryMask h_m = fill_holes_3d(threshold(moving_aligned, 0.0, true));
  const Volume v1 = mask_apply(unsharp_mask(fixed, cfg.unsharp_sigma, cfg.unsharp_weight), h_f);
  const Volume v2 = mask_apply(invert_intensity(moving_aligned), h_m);

  MnccOptions opts;
  opts.min_overlap_fraction = cfg.min_overlap_fraction;
  if (!cfg.full_search) {
    const Dims& d = fixed.dims();
    opts.half_window = cfg.half_window.value_or(Eigen::Vector3i(d.x / 4, d.y / 4, d.z / 4));
  }
  Stage2Result res;
  res.correlation = mncc_fft(v1, h_f, v2, h_m, opts);
  const Peak p = find_peak(res.correlation);
  res.shift = p.shift;
  res.score = p.score;
  res.t2 = RigidTransform::translation(-p.shift.dx, -p.shift.dy, -p.shift.dz);
  return res;
}

}  // namespace bigreg
