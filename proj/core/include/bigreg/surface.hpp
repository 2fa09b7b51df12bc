#pragma once

#include <filesystem>
#include <vector>

#include "bigreg/transform.hpp"
#include "bigreg/volume.hpp"

namespace bigreg {

/// Points in voxel units with optional unit normals (empty or same length).
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Eigen::Vector3d> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

/// outline_2d(fill_holes_2d(binary_closing_2d(m, closing_radius))), i.e. the
/// per-slice contour mask the surface points are read from.
BinaryMask surface_mask(const BinaryMask& m, int closing_radius = 2);

/// Voxel-index coordinates of every surface_mask voxel, z-major scan order.
/// Throws EmptySurface when nothing survives.
PointCloud extract_surface(const BinaryMask& m, int closing_radius = 2);

struct NormalEstimate {
  PointCloud cloud;
  /// Indices whose neighborhood covariance has rank < 2; their normal is +z.
  std::vector<std::size_t> degenerate;
};

/// PCA normals from the k nearest neighbors (the point itself included),
/// oriented away from the cloud centroid. Throws InvalidArgument when k < 3
/// or the cloud has fewer than k points.
NormalEstimate estimate_normals(const PointCloud& c, int k = 30);

Point3 centroid(std::span<const Point3> points);

/// Pure translation centroid(fixed) - centroid(moving).
RigidTransform center_align(const PointCloud& moving, const PointCloud& fixed);

PointCloud transform_cloud(const PointCloud& c, const RigidTransform& t);
PointCloud translate_cloud(const PointCloud& c, const Eigen::Vector3d& offset);

/// Averages points (and renormalized normals) per cubic cell of `cell`
/// voxels. Output order follows the first occurrence of each cell.
PointCloud voxel_downsample(const PointCloud& c, double cell);

/// ASCII "x y z [nx ny nz]" one point per line.
void save_xyz(const PointCloud& c, const std::filesystem::path& path);

}  // namespace bigreg
