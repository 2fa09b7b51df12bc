#include "bigreg/fpfh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bigreg/error.hpp"
#include "bigreg/kdtree.hpp"

namespace bigreg {

namespace {

// Features in the Darboux frame built at the source point; `dp` points from
// source to target and has unit length.
PairFeature frame_features(const Eigen::Vector3d& ns, const Eigen::Vector3d& nt, const Eigen::Vector3d& dp,
                           double dist) {
  PairFeature f{0.0, ns.dot(dp), 0.0, dist};
  Eigen::Vector3d v = dp.cross(ns);
  const double vn = v.norm();
  if (vn == 0.0) return f;  // connecting line parallel to the source normal
  v /= vn;
  const Eigen::Vector3d w = ns.cross(v);
  f.alpha = v.dot(nt);
  f.theta = std::atan2(w.dot(nt), ns.dot(nt));
  return f;
}

// Orders two candidate feature triples, ignoring rounding-level differences.
bool greater_features(const PairFeature& a, const PairFeature& b) {
  constexpr double tol = 1e-9;
  if (std::abs(a.phi - b.phi) > tol) return a.phi > b.phi;
  if (std::abs(a.alpha - b.alpha) > tol) return a.alpha > b.alpha;
  if (std::abs(a.theta - b.theta) > tol) return a.theta > b.theta;
  return false;
}

}  // namespace

std::optional<PairFeature> pair_features(const Point3& p1, const Eigen::Vector3d& n1,
                                         const Point3& p2, const Eigen::Vector3d& n2) {
  Eigen::Vector3d dp = p2 - p1;
  const double dist = dp.norm();
  if (dist == 0.0) return std::nullopt;
  dp /= dist;

  // The source is the point whose normal makes the smaller angle with the
  // line. On voxel surfaces the two angles often tie exactly (repeated or
  // mirrored normals), and rounding would then pick a frame at random, so
  // near-ties take whichever frame gives the larger features. Either way
  // the result does not depend on argument order or on a rigid motion.
  const double c1 = std::min(1.0, std::abs(n1.dot(dp)));
  const double c2 = std::min(1.0, std::abs(n2.dot(dp)));
  if (std::abs(c1 - c2) > 1e-12) return c1 > c2 ? frame_features(n1, n2, dp, dist) : frame_features(n2, n1, -dp, dist);
  const PairFeature a = frame_features(n1, n2, dp, dist);
  const PairFeature b = frame_features(n2, n1, -dp, dist);
  return greater_features(b, a) ? b : a;
}

int feature_bin(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor(kFpfhBins * (value - lo) / (hi - lo)));
  return std::clamp(b, 0, kFpfhBins - 1);
}

namespace {

void add_pair(std::span<double> hist, const PairFeature& f, double increment) {
  hist[feature_bin(f.alpha, -1.0, 1.0)] += increment;
  hist[kFpfhBins + feature_bin(f.phi, -1.0, 1.0)] += increment;
  hist[2 * kFpfhBins + feature_bin(f.theta, -std::numbers::pi, std::numbers::pi)] += increment;
}

}  // namespace

FeatureCloud compute_fpfh(const PointCloud& c, double radius, int max_neighbors) {
  if (!c.has_normals()) throw InvalidArgument("compute_fpfh: cloud needs normals");
  if (!(radius > 0.0)) throw InvalidArgument("compute_fpfh: radius must be positive");
  if (max_neighbors < 1) throw InvalidArgument("compute_fpfh: max_neighbors must be >= 1");

  const std::size_t n = c.size();
  FeatureCloud out;
  out.cloud = c;
  out.descriptors.assign(n * kFpfhDim, 0.0);
  if (n == 0) return out;

  const KdTree tree = KdTree::from_points(c.points);
  std::vector<std::vector<KdTree::Neighbor>> neighbors(n);
  std::vector<double> spfh(n * kFpfhDim, 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto hits = tree.radius_search(c.points[i], radius, static_cast<std::size_t>(max_neighbors) + 1);
    std::erase_if(hits, [i](const KdTree::Neighbor& h) { return h.index == i; });
    if (hits.size() > static_cast<std::size_t>(max_neighbors)) hits.resize(max_neighbors);
    std::erase_if(hits, [](const KdTree::Neighbor& h) { return h.sq_dist == 0.0; });

    std::vector<PairFeature> feats;
    feats.reserve(hits.size());
    for (const auto& h : hits) {
      if (auto f = pair_features(c.points[i], c.normals[i], c.points[h.index], c.normals[h.index]))
        feats.push_back(*f);
    }
    if (!feats.empty()) {
      std::span<double> hist(spfh.data() + i * kFpfhDim, kFpfhDim);
      const double inc = 100.0 / static_cast<double>(feats.size());
      for (const auto& f : feats) add_pair(hist, f, inc);
    }
    neighbors[i] = std::move(hits);
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& hits = neighbors[i];
    if (hits.empty()) continue;  // isolated point keeps a zero descriptor
    std::array<double, kFpfhDim> acc{};
    for (const auto& h : hits) {
      const double w = 1.0 / std::sqrt(h.sq_dist);
      const double* s = spfh.data() + h.index * kFpfhDim;
      for (int b = 0; b < kFpfhDim; ++b) acc[b] += w * s[b];
    }
    const double inv_k = 1.0 / static_cast<double>(hits.size());
    const double* self = spfh.data() + i * kFpfhDim;
    for (int b = 0; b < kFpfhDim; ++b) acc[b] = self[b] + inv_k * acc[b];

    double* dst = out.descriptors.data() + i * kFpfhDim;
    for (int h = 0; h < 3; ++h) {
      double sum = 0.0;
      for (int b = 0; b < kFpfhBins; ++b) sum += acc[h * kFpfhBins + b];
      if (sum <= 0.0) continue;
      for (int b = 0; b < kFpfhBins; ++b) dst[h * kFpfhBins + b] = acc[h * kFpfhBins + b] * 100.0 / sum;
    }
  }
  return out;
}

}  // namespace bigreg
