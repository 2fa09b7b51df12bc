#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bigreg/transform.hpp"

namespace bigreg {

/// Grid extent (nx, ny, nz); x varies fastest in memory.
struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(x) * (static_cast<std::size_t>(j) +
                                          static_cast<std::size_t>(y) * static_cast<std::size_t>(k));
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < x && j < y && k < z;
  }
  bool positive() const { return x > 0 && y > 0 && z > 0; }
  /// Voxel-index coordinate of the geometric center, (n - 1) / 2 per axis.
  Eigen::Vector3d center() const {
    return {0.5 * (x - 1), 0.5 * (y - 1), 0.5 * (z - 1)};
  }
  int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  bool operator==(const Dims&) const = default;
  std::string str() const;
};

/// Dense scalar grid of 32-bit reals with voxel size in micrometers.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Eigen::Vector3d voxel_size_um, float fill = 0.0f);
  /// Throws FormatError when data.size() != dims.count().
  Volume(Dims dims, Eigen::Vector3d voxel_size_um, std::vector<float> data);

  const Dims& dims() const { return dims_; }
  const Eigen::Vector3d& voxel_size() const { return voxel_size_; }
  void set_voxel_size(const Eigen::Vector3d& v);

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  float& at(int i, int j, int k) { return data_[dims_.index(i, j, k)]; }
  float at(int i, int j, int k) const { return data_[dims_.index(i, j, k)]; }

  /// Centered-frame coordinate of voxel (i, j, k).
  Eigen::Vector3d to_centered(int i, int j, int k) const {
    return Eigen::Vector3d(i, j, k) - dims_.center();
  }

  float min_value() const;
  float max_value() const;

  bool operator==(const Volume&) const = default;

 private:
  Dims dims_;
  Eigen::Vector3d voxel_size_ = Eigen::Vector3d::Ones();
  std::vector<float> data_;
};

/// Dense boolean grid with the same layout as Volume.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Dims dims, bool fill = false);

  const Dims& dims() const { return dims_; }
  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool get(int i, int j, int k) const { return bits_[dims_.index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool v) { bits_[dims_.index(i, j, k)] = v ? 1 : 0; }
  bool operator[](std::size_t idx) const { return bits_[idx] != 0; }

  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> bits_;
};

enum class Interpolation { Nearest, Linear, Cubic };

Interpolation parse_interpolation(const std::string& name);
std::string to_string(Interpolation interp);

/// Trilinear resampling onto a new voxel size. Grids are aligned at their
/// centers; output dims = round(dims * old_voxel / new_voxel). Samples
/// beyond the source edge take the edge value.
Volume resample_to(const Volume& v, const Eigen::Vector3d& target_voxel_um);

/// Zero-pads to `target` with content centered at offset floor((target - src) / 2).
/// Throws DimsTooSmall if any target axis is smaller than the source.
Volume pad_to(const Volume& v, Dims target);
Eigen::Vector3i pad_offset(Dims source, Dims target);

/// Extracts a sub-block starting at `offset` with extent `extent`.
Volume crop(const Volume& v, const Eigen::Vector3i& offset, Dims extent);

/// Affine map of [min, max] onto [0, 255]. Throws ConstantVolume if max == min.
Volume normalize_0_255(const Volume& v);

/// 255 - v element-wise.
Volume invert_intensity(const Volume& v);

/// Separable Gaussian blur, kernel truncated at ceil(3 sigma), edges replicated.
Volume gaussian_blur(const Volume& v, double sigma_voxels);

/// clamp(v + weight (v - blur(v, sigma)), 0, 255).
Volume unsharp_mask(const Volume& v, double sigma_voxels, double weight);

/// v > tau when strict, v >= tau otherwise.
BinaryMask threshold(const Volume& v, double tau, bool strict);

/// Element-wise product with a mask. Throws DimsMismatch.
Volume mask_apply(const Volume& v, const BinaryMask& m);

/// Resamples `v` under rigid transform `t` (centered voxel frame):
/// out(x) = interp(v, t^-1 x); samples outside the source grid are 0.
/// Cubic uses separable Catmull-Rom weights.
Volume resample_rigid(const Volume& v, const RigidTransform& t, Interpolation interp);

}  // namespace bigreg
