#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bigreg {

/// A point in voxel units.
using Point3 = Eigen::Vector3d;

/// Rigid motion x -> R x + t stored as a rotation block and a translation.
///
/// Transforms that act on volumes are expressed in the volume-centered voxel
/// frame: voxel index i maps to coordinate i - (dims - 1) / 2, so rotations
/// pivot about the volume center. Point clouds and landmarks handed to the
/// registration stages use the same frame.
class RigidTransform {
 public:
  RigidTransform() = default;

  /// Throws InvalidArgument unless `rotation` is orthonormal with det +1
  /// (tolerance 1e-6; the block is re-orthonormalized afterwards).
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  /// Throws InvalidArgument if the bottom row is not [0 0 0 1] or the
  /// rotation block is not a proper rotation.
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(double x, double y, double z);
  static RigidTransform translation(const Eigen::Vector3d& t);
  /// Right-handed rotation about a unit (or normalizable) axis through the origin.
  static RigidTransform axis_angle(const Eigen::Vector3d& axis, double radians);
  static RigidTransform rotation_z(double radians);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Eigen::Vector3d apply_vector(const Eigen::Vector3d& v) const { return rotation_ * v; }

  /// Applies `rhs` first, then `*this`.
  RigidTransform operator*(const RigidTransform& rhs) const;

  bool operator==(const RigidTransform& o) const {
    return rotation_ == o.rotation_ && translation_ == o.translation_;
  }

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// a * b with the drift guard: R is polar-projected back onto SO(3) when
/// ||R^T R - I|| exceeds 1e-9.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
Point3 apply_point(const RigidTransform& t, const Point3& p);

/// Nearest proper rotation (polar decomposition with det correction).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

/// Least-squares rigid fit (Umeyama, scale fixed to 1) minimizing
/// sum ||dst_i - (R src_i + t)||^2. Throws DegenerateConfiguration for fewer
/// than three pairs or collinear sources, InvalidArgument on length mismatch.
RigidTransform umeyama_fit(std::span<const Point3> src, std::span<const Point3> dst);

/// Geodesic angle between the two rotation blocks, degrees in [0, 180].
double rotation_error_deg(const RigidTransform& est, const RigidTransform& gt);
/// Rotation angle of a transform's rotation block, degrees.
double rotation_angle_deg(const RigidTransform& t);
/// ||t_est - t_gt|| with each axis scaled by its voxel size (um per voxel).
double translation_error_um(const RigidTransform& est, const RigidTransform& gt,
                            const Eigen::Vector3d& voxel_size_um);

/// Plain-text 4x4 row-major matrix, four numbers per line, 17 significant digits.
void save_transform(const RigidTransform& t, const std::filesystem::path& path);
RigidTransform load_transform(const std::filesystem::path& path);
std::string format_transform(const RigidTransform& t);
RigidTransform parse_transform(const std::string& text);

}  // namespace bigreg
