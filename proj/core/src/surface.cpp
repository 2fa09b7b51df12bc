#include "bigreg/surface.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <unordered_map>

#include "bigreg/error.hpp"
#include "bigreg/kdtree.hpp"
#include "bigreg/morphology.hpp"

namespace bigreg {

BinaryMask surface_mask(const BinaryMask& m, int closing_radius) {
  return outline_2d(fill_holes_2d(binary_closing_2d(m, closing_radius)));
}

PointCloud extract_surface(const BinaryMask& m, int closing_radius) {
  const BinaryMask outline = surface_mask(m, closing_radius);
  const Dims& d = outline.dims();
  PointCloud out;
  for (int k = 0; k < d.z; ++k)
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i)
        if (outline.get(i, j, k)) out.points.emplace_back(i, j, k);
  if (out.empty()) throw EmptySurface("extract_surface: mask has no surface voxels");
  return out;
}

Point3 centroid(std::span<const Point3> points) {
  Point3 c = Point3::Zero();
  for (const auto& p : points) c += p;
  return points.empty() ? c : Point3(c / static_cast<double>(points.size()));
}

NormalEstimate estimate_normals(const PointCloud& c, int k) {
  if (k < 3) throw InvalidArgument("estimate_normals: k must be at least 3");
  if (c.size() < static_cast<std::size_t>(k))
    throw InvalidArgument("estimate_normals: cloud has fewer than k points");

  const KdTree tree = KdTree::from_points(c.points);
  const Point3 center = centroid(c.points);
  NormalEstimate out;
  out.cloud.points = c.points;
  out.cloud.normals.resize(c.size());
  std::vector<std::uint8_t> flagged(c.size(), 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(c.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto nbrs = tree.knn(c.points[i], static_cast<std::size_t>(k));
    Point3 mean = Point3::Zero();
    for (const auto& n : nbrs) mean += c.points[n.index];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& n : nbrs) {
      const Eigen::Vector3d d = c.points[n.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
    Eigen::Vector3d normal;
    if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
      normal = Eigen::Vector3d::UnitZ();
      flagged[i] = 1;
    } else {
      normal = eig.eigenvectors().col(0).normalized();
      if (normal.dot(c.points[i] - center) < 0.0) normal = -normal;
    }
    out.cloud.normals[i] = normal;
  }
  for (std::size_t i = 0; i < flagged.size(); ++i)
    if (flagged[i]) out.degenerate.push_back(i);
  return out;
}

RigidTransform center_align(const PointCloud& moving, const PointCloud& fixed) {
  if (moving.empty() || fixed.empty())
    throw InvalidArgument("center_align: clouds must be non-empty");
  return RigidTransform::translation(centroid(fixed.points) - centroid(moving.points));
}

PointCloud transform_cloud(const PointCloud& c, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(c.size());
  for (const auto& p : c.points) out.points.push_back(t.apply(p));
  out.normals.reserve(c.normals.size());
  for (const auto& n : c.normals) out.normals.push_back(t.apply_vector(n));
  return out;
}

PointCloud translate_cloud(const PointCloud& c, const Eigen::Vector3d& offset) {
  PointCloud out = c;
  for (auto& p : out.points) p += offset;
  return out;
}

PointCloud voxel_downsample(const PointCloud& c, double cell) {
  if (!(cell > 0.0)) throw InvalidArgument("voxel_downsample: cell must be positive");
  struct Acc {
    Point3 p = Point3::Zero();
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    int count = 0;
  };
  auto key_of = [cell](const Point3& p) {
    const auto q = [cell](double v) {
      return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / cell)) + (1 << 20)) &
             0x1fffff;
    };
    return q(p.x()) | (q(p.y()) << 21) | (q(p.z()) << 42);
  };
  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<Acc> cells;
  const bool normals = c.has_normals();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto [it, inserted] = slot.try_emplace(key_of(c.points[i]), cells.size());
    if (inserted) cells.emplace_back();
    Acc& a = cells[it->second];
    a.p += c.points[i];
    if (normals) a.n += c.normals[i];
    ++a.count;
  }
  PointCloud out;
  out.points.reserve(cells.size());
  for (const auto& a : cells) {
    out.points.push_back(a.p / a.count);
    if (normals) {
      const double len = a.n.norm();
      out.normals.push_back(len > 0.0 ? Eigen::Vector3d(a.n / len) : Eigen::Vector3d::UnitZ());
    }
  }
  return out;
}

void save_xyz(const PointCloud& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  const bool normals = c.has_normals();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& p = c.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (normals) out << ' ' << c.normals[i].x() << ' ' << c.normals[i].y() << ' ' << c.normals[i].z();
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bigreg
