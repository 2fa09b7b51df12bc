#include "bigreg/icp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <cmath>
#include <limits>

#include "bigreg/error.hpp"
#include "bigreg/kdtree.hpp"

namespace bigreg {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Nearest fixed index per moving point under t, or kNone beyond max_distance.
std::vector<std::size_t> correspond(const PointCloud& moving, const KdTree& tree,
                                    const RigidTransform& t, double max_distance) {
  const double d2 = max_distance * max_distance;
  std::vector<std::size_t> idx(moving.size(), kNone);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(moving.size()); ++i) {
    const auto nb = tree.nearest(t.apply(moving.points[i]));
    if (nb.sq_dist <= d2) idx[i] = nb.index;
  }
  return idx;
}

PlaneLoss loss_of(const PointCloud& moving, const PointCloud& fixed, const RigidTransform& t,
                  const std::vector<std::size_t>& idx) {
  PlaneLoss l;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] == kNone) continue;
    const double r = fixed.normals[idx[i]].dot(t.apply(moving.points[i]) - fixed.points[idx[i]]);
    l.loss += r * r;
    ++l.pairs;
  }
  return l;
}

void check_inputs(const PointCloud& moving, const PointCloud& fixed, double d) {
  if (moving.empty() || fixed.empty()) throw InvalidArgument("icp: clouds must be non-empty");
  if (!fixed.has_normals()) throw InvalidArgument("icp: fixed cloud needs normals");
  if (!(d > 0.0)) throw InvalidArgument("icp: correspondence distance must be positive");
}

}  // namespace

PlaneLoss point_to_plane_loss(const PointCloud& moving, const PointCloud& fixed,
                              const RigidTransform& t, double max_distance) {
  check_inputs(moving, fixed, max_distance);
  const KdTree tree = KdTree::from_points(fixed.points);
  return loss_of(moving, fixed, t, correspond(moving, tree, t, max_distance));
}

IcpResult point_to_plane_icp(const PointCloud& moving, const PointCloud& fixed,
                             const RigidTransform& init, const IcpParams& params) {
  check_inputs(moving, fixed, params.max_correspondence_distance);
  if (params.max_iterations < 1) throw InvalidArgument("icp: max_iterations must be >= 1");
  const double d = params.max_correspondence_distance;
  const KdTree tree = KdTree::from_points(fixed.points);

  IcpResult res;
  RigidTransform t = init;
  auto idx = correspond(moving, tree, t, d);
  res.initial_loss = loss_of(moving, fixed, t, idx);
  if (res.initial_loss.pairs == 0) {
    res.transform = init;
    res.no_correspondences = true;
    return res;
  }

  using Vec6 = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  for (int it = 0; it < params.max_iterations; ++it) {
    Mat6 a = Mat6::Zero();
    Vec6 b = Vec6::Zero();
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] == kNone) continue;
      const Point3 p = t.apply(moving.points[i]);
      const Eigen::Vector3d& n = fixed.normals[idx[i]];
      Vec6 j;
      j << p.cross(n), n;
      const double r = n.dot(p - fixed.points[idx[i]]);
      a.selfadjointView<Eigen::Lower>().rankUpdate(j);
      b += j * r;
      ++pairs;
    }
    if (pairs == 0) break;
    a = a.selfadjointView<Eigen::Lower>();

    Eigen::LDLT<Mat6> ldlt(a);
    Vec6 delta;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      delta = ldlt.solve(-b);
    } else {
      delta = (a + 1e-9 * Mat6::Identity()).ldlt().solve(-b);
    }

    const Eigen::Vector3d w = delta.head<3>();
    const Eigen::Vector3d v = delta.tail<3>();
    const double angle = w.norm();
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    if (angle > 0.0) rot = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    t = RigidTransform(orthonormalize(rot), v) * t;
    t = RigidTransform(orthonormalize(t.rotation()), t.translation());
    res.iterations = it + 1;

    if (angle < params.epsilon && v.norm() < params.epsilon) {
      res.converged = true;
      break;
    }
    idx = correspond(moving, tree, t, d);
  }

  idx = correspond(moving, tree, t, d);
  res.transform = t;
  res.final_loss = loss_of(moving, fixed, t, idx);
  double sum = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] == kNone) continue;
    sum += (t.apply(moving.points[i]) - fixed.points[idx[i]]).squaredNorm();
    ++res.score.inlier_count;
  }
  res.score.fitness = static_cast<double>(res.score.inlier_count) / static_cast<double>(moving.size());
  res.score.rmse = res.score.inlier_count ? std::sqrt(sum / static_cast<double>(res.score.inlier_count)) : 0.0;
  return res;
}

}  // namespace bigreg
