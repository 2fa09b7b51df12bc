#include "bigreg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bigreg/error.hpp"

namespace bigreg {

std::string Dims::str() const {
  std::ostringstream out;
  out << x << 'x' << y << 'x' << z;
  return out.str();
}

Volume::Volume(Dims dims, Eigen::Vector3d voxel_size_um, float fill)
    : dims_(dims), data_(dims.count(), fill) {
  if (!dims.positive()) throw InvalidArgument("volume dims must be positive, got " + dims.str());
  set_voxel_size(voxel_size_um);
}

Volume::Volume(Dims dims, Eigen::Vector3d voxel_size_um, std::vector<float> data)
    : dims_(dims), data_(std::move(data)) {
  if (!dims.positive()) throw InvalidArgument("volume dims must be positive, got " + dims.str());
  if (data_.size() != dims.count())
    throw FormatError("volume data length " + std::to_string(data_.size()) +
                      " does not match dims " + dims.str());
  set_voxel_size(voxel_size_um);
}

void Volume::set_voxel_size(const Eigen::Vector3d& v) {
  if (!(v.array() > 0.0).all() || !v.allFinite())
    throw InvalidArgument("voxel size components must be positive");
  voxel_size_ = v;
}

float Volume::min_value() const {
  return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float Volume::max_value() const {
  return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

BinaryMask::BinaryMask(Dims dims, bool fill) : dims_(dims), bits_(dims.count(), fill ? 1 : 0) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Interpolation parse_interpolation(const std::string& name) {
  if (name == "nearest") return Interpolation::Nearest;
  if (name == "linear") return Interpolation::Linear;
  if (name == "cubic") return Interpolation::Cubic;
  throw InvalidArgument("unknown interpolation '" + name + "'");
}

std::string to_string(Interpolation interp) {
  switch (interp) {
    case Interpolation::Nearest: return "nearest";
    case Interpolation::Linear: return "linear";
    case Interpolation::Cubic: return "cubic";
  }
  return "linear";
}

namespace {

// Trilinear sample at continuous index (x, y, z); caller guarantees
// 0 <= coord <= n - 1 on every axis.
double sample_linear(const Volume& v, double x, double y, double z) {
  const Dims& d = v.dims();
  const int i0 = std::min(static_cast<int>(x), d.x - 1);
  const int j0 = std::min(static_cast<int>(y), d.y - 1);
  const int k0 = std::min(static_cast<int>(z), d.z - 1);
  const double fx = x - i0, fy = y - j0, fz = z - k0;
  const int i1 = std::min(i0 + 1, d.x - 1);
  const int j1 = std::min(j0 + 1, d.y - 1);
  const int k1 = std::min(k0 + 1, d.z - 1);
  const auto s = v.data();
  auto at = [&](int i, int j, int k) { return static_cast<double>(s[d.index(i, j, k)]); };
  const double c00 = at(i0, j0, k0) * (1 - fx) + at(i1, j0, k0) * fx;
  const double c10 = at(i0, j1, k0) * (1 - fx) + at(i1, j1, k0) * fx;
  const double c01 = at(i0, j0, k1) * (1 - fx) + at(i1, j0, k1) * fx;
  const double c11 = at(i0, j1, k1) * (1 - fx) + at(i1, j1, k1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

void catmull_rom_weights(double f, double w[4]) {
  const double f2 = f * f, f3 = f2 * f;
  w[0] = 0.5 * (-f3 + 2.0 * f2 - f);
  w[1] = 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0);
  w[2] = 0.5 * (-3.0 * f3 + 4.0 * f2 + f);
  w[3] = 0.5 * (f3 - f2);
}

double sample_cubic(const Volume& v, double x, double y, double z) {
  const Dims& d = v.dims();
  const int i0 = static_cast<int>(std::floor(x));
  const int j0 = static_cast<int>(std::floor(y));
  const int k0 = static_cast<int>(std::floor(z));
  double wx[4], wy[4], wz[4];
  catmull_rom_weights(x - i0, wx);
  catmull_rom_weights(y - j0, wy);
  catmull_rom_weights(z - k0, wz);
  int ix[4], iy[4], iz[4];
  for (int a = 0; a < 4; ++a) {
    ix[a] = std::clamp(i0 - 1 + a, 0, d.x - 1);
    iy[a] = std::clamp(j0 - 1 + a, 0, d.y - 1);
    iz[a] = std::clamp(k0 - 1 + a, 0, d.z - 1);
  }
  const auto s = v.data();
  double acc = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (wz[c] == 0.0) continue;
    double plane = 0.0;
    for (int b = 0; b < 4; ++b) {
      if (wy[b] == 0.0) continue;
      double row = 0.0;
      for (int a = 0; a < 4; ++a) row += wx[a] * s[d.index(ix[a], iy[b], iz[c])];
      plane += wy[b] * row;
    }
    acc += wz[c] * plane;
  }
  return acc;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& w : k) w /= sum;
  return k;
}

// One separable pass along `axis` with edge replication.
void convolve_axis(const std::vector<double>& src, std::vector<double>& dst, const Dims& d,
                   int axis, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = d[axis];
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(d.x)
                                                         : static_cast<std::size_t>(d.x) * d.y);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.z; ++k) {
    for (int j = 0; j < d.y; ++j) {
      for (int i = 0; i < d.x; ++i) {
        const int pos = axis == 0 ? i : (axis == 1 ? j : k);
        const std::size_t base = d.index(i, j, k) - static_cast<std::size_t>(pos) * stride;
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int q = std::clamp(pos + t, 0, n - 1);
          acc += kernel[t + radius] * src[base + static_cast<std::size_t>(q) * stride];
        }
        dst[d.index(i, j, k)] = acc;
      }
    }
  }
}

}  // namespace

Volume resample_to(const Volume& v, const Eigen::Vector3d& target_voxel_um) {
  if (!(target_voxel_um.array() > 0.0).all())
    throw InvalidArgument("resample_to: target voxel size must be positive");
  const Dims& d = v.dims();
  Dims out_dims;
  Eigen::Vector3d scale;
  for (int a = 0; a < 3; ++a) {
    const double extent = d[a] * v.voxel_size()(a) / target_voxel_um(a);
    const int n = std::max(1, static_cast<int>(std::lround(extent)));
    (a == 0 ? out_dims.x : (a == 1 ? out_dims.y : out_dims.z)) = n;
    scale(a) = target_voxel_um(a) / v.voxel_size()(a);
  }
  if (out_dims == d && scale.isOnes(0.0)) return v;

  Volume out(out_dims, target_voxel_um);
  const Eigen::Vector3d c_in = d.center();
  const Eigen::Vector3d c_out = out_dims.center();
  auto dst = out.data();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < out_dims.z; ++k) {
    const double z = std::clamp((k - c_out.z()) * scale.z() + c_in.z(), 0.0, d.z - 1.0);
    for (int j = 0; j < out_dims.y; ++j) {
      const double y = std::clamp((j - c_out.y()) * scale.y() + c_in.y(), 0.0, d.y - 1.0);
      for (int i = 0; i < out_dims.x; ++i) {
        const double x = std::clamp((i - c_out.x()) * scale.x() + c_in.x(), 0.0, d.x - 1.0);
        dst[out_dims.index(i, j, k)] = static_cast<float>(sample_linear(v, x, y, z));
      }
    }
  }
  return out;
}

Eigen::Vector3i pad_offset(Dims source, Dims target) {
  return {(target.x - source.x) / 2, (target.y - source.y) / 2, (target.z - source.z) / 2};
}

Volume pad_to(const Volume& v, Dims target) {
  const Dims& d = v.dims();
  if (target.x < d.x || target.y < d.y || target.z < d.z)
    throw DimsTooSmall("pad_to: target " + target.str() + " smaller than source " + d.str());
  if (target == d) return v;
  Volume out(target, v.voxel_size());
  const Eigen::Vector3i off = pad_offset(d, target);
  for (int k = 0; k < d.z; ++k)
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i) out.at(i + off.x(), j + off.y(), k + off.z()) = v.at(i, j, k);
  return out;
}

Volume crop(const Volume& v, const Eigen::Vector3i& offset, Dims extent) {
  const Dims& d = v.dims();
  if (offset.minCoeff() < 0 || offset.x() + extent.x > d.x || offset.y() + extent.y > d.y ||
      offset.z() + extent.z > d.z)
    throw InvalidArgument("crop: block exceeds source volume " + d.str());
  Volume out(extent, v.voxel_size());
  for (int k = 0; k < extent.z; ++k)
    for (int j = 0; j < extent.y; ++j)
      for (int i = 0; i < extent.x; ++i)
        out.at(i, j, k) = v.at(i + offset.x(), j + offset.y(), k + offset.z());
  return out;
}

Volume normalize_0_255(const Volume& v) {
  const double mn = v.min_value();
  const double mx = v.max_value();
  if (!(mx > mn)) throw ConstantVolume("normalize_0_255: volume is constant");
  Volume out(v.dims(), v.voxel_size());
  auto src = v.data();
  auto dst = out.data();
  const double range = mx - mn;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double s = (static_cast<double>(src[i]) - mn) * 255.0 / range;
    dst[i] = static_cast<float>(std::clamp(s, 0.0, 255.0));
  }
  return out;
}

Volume invert_intensity(const Volume& v) {
  Volume out(v.dims(), v.voxel_size());
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 255.0f - src[i];
  return out;
}

Volume gaussian_blur(const Volume& v, double sigma_voxels) {
  if (!(sigma_voxels > 0.0)) throw InvalidArgument("gaussian_blur: sigma must be positive");
  const auto kernel = gaussian_kernel(sigma_voxels);
  const Dims& d = v.dims();
  std::vector<double> a(v.data().begin(), v.data().end());
  std::vector<double> b(a.size());
  convolve_axis(a, b, d, 0, kernel);
  convolve_axis(b, a, d, 1, kernel);
  convolve_axis(a, b, d, 2, kernel);
  Volume out(d, v.voxel_size());
  auto dst = out.data();
  for (std::size_t i = 0; i < b.size(); ++i) dst[i] = static_cast<float>(b[i]);
  return out;
}

Volume unsharp_mask(const Volume& v, double sigma_voxels, double weight) {
  if (!(weight >= 0.0)) throw InvalidArgument("unsharp_mask: weight must be non-negative");
  if (weight == 0.0) return v;
  const Volume blurred = gaussian_blur(v, sigma_voxels);
  Volume out(v.dims(), v.voxel_size());
  auto src = v.data();
  auto blur = blurred.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double s = src[i] + weight * (static_cast<double>(src[i]) - blur[i]);
    dst[i] = static_cast<float>(std::clamp(s, 0.0, 255.0));
  }
  return out;
}

BinaryMask threshold(const Volume& v, double tau, bool strict) {
  BinaryMask m(v.dims());
  auto src = v.data();
  auto bits = m.bits();
  for (std::size_t i = 0; i < src.size(); ++i)
    bits[i] = (strict ? src[i] > tau : src[i] >= tau) ? 1 : 0;
  return m;
}

Volume mask_apply(const Volume& v, const BinaryMask& m) {
  if (!(v.dims() == m.dims()))
    throw DimsMismatch("mask_apply: volume " + v.dims().str() + " vs mask " + m.dims().str());
  Volume out(v.dims(), v.voxel_size());
  auto src = v.data();
  auto bits = m.bits();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = bits[i] ? src[i] : 0.0f;
  return out;
}

Volume resample_rigid(const Volume& v, const RigidTransform& t, Interpolation interp) {
  const Dims& d = v.dims();
  Volume out(d, v.voxel_size());
  const Eigen::Matrix3d rinv = t.rotation().transpose();
  const Eigen::Vector3d c = d.center();
  // source_index = rinv * (i - c - t) + c = rinv * i + offset
  const Eigen::Vector3d offset = c - rinv * (c + t.translation());
  const bool identity_rotation = t.rotation() == Eigen::Matrix3d::Identity();
  auto dst = out.data();
  const auto src = v.data();

#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.z; ++k) {
    for (int j = 0; j < d.y; ++j) {
      for (int i = 0; i < d.x; ++i) {
        Eigen::Vector3d q;
        if (identity_rotation) {
          // Keeps lattice-aligned translations exact.
          q = Eigen::Vector3d(i, j, k) - t.translation();
        } else {
          q = rinv * Eigen::Vector3d(i, j, k) + offset;
        }
        double value = 0.0;
        switch (interp) {
          case Interpolation::Nearest: {
            const int a = static_cast<int>(std::floor(q.x() + 0.5));
            const int b = static_cast<int>(std::floor(q.y() + 0.5));
            const int e = static_cast<int>(std::floor(q.z() + 0.5));
            if (d.contains(a, b, e)) value = src[d.index(a, b, e)];
            break;
          }
          case Interpolation::Linear:
            if (q.x() >= 0.0 && q.y() >= 0.0 && q.z() >= 0.0 && q.x() <= d.x - 1.0 &&
                q.y() <= d.y - 1.0 && q.z() <= d.z - 1.0)
              value = sample_linear(v, q.x(), q.y(), q.z());
            break;
          case Interpolation::Cubic:
            if (q.x() >= 0.0 && q.y() >= 0.0 && q.z() >= 0.0 && q.x() <= d.x - 1.0 &&
                q.y() <= d.y - 1.0 && q.z() <= d.z - 1.0)
              value = sample_cubic(v, q.x(), q.y(), q.z());
            break;
        }
        dst[d.index(i, j, k)] = static_cast<float>(value);
      }
    }
  }
  return out;
}

}  // namespace bigreg
