#include "bigreg/ransac.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bigreg/error.hpp"
#include "bigreg/kdtree.hpp"
#include "bigreg/rng.hpp"

namespace bigreg {

namespace {

constexpr std::int64_t kBlock = 256;
constexpr double kMaxGridCells = 2.0e6;

// Exact "nearest fixed point closer than d" test. A coarse grid classifies
// most query positions from the distance at the cell center; only cells
// straddling the d-shell fall back to a k-d tree query.
class InlierGrid {
 public:
  InlierGrid(const PointCloud& fixed, double d) : tree_(KdTree::from_points(fixed.points)), d2_(d * d) {
    Point3 lo = fixed.points.front(), hi = lo;
    for (const auto& p : fixed.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    lo_ = lo.array() - d;
    const Eigen::Vector3d ext = (hi - lo).array() + 2.0 * d;
    cell_ = std::max(d / 6.0, std::cbrt(ext.prod() / kMaxGridCells));
    cell_ = std::max(cell_, 1e-9);
    for (int a = 0; a < 3; ++a) n_[a] = static_cast<int>(std::ceil(ext[a] / cell_)) + 1;
    state_.assign(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2], 0);
    const double half_diag = 0.5 * std::sqrt(3.0) * cell_;

#pragma omp parallel for schedule(static)
    for (int k = 0; k < n_[2]; ++k)
      for (int j = 0; j < n_[1]; ++j)
        for (int i = 0; i < n_[0]; ++i) {
          const Point3 c = lo_ + cell_ * Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5);
          const double dist = std::sqrt(tree_.nearest(c).sq_dist);
          std::uint8_t s = 2;  // ambiguous
          if (dist + half_diag < d) s = 1;
          else if (dist - half_diag >= d) s = 0;
          state_[(static_cast<std::size_t>(k) * n_[1] + j) * n_[0] + i] = s;
        }
  }

  bool inlier(const Point3& p) const {
    std::array<int, 3> idx;
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor((p[a] - lo_[a]) / cell_);
      if (!(f >= 0.0) || f >= n_[a]) return false;
      idx[a] = static_cast<int>(f);
    }
    const std::uint8_t s = state_[(static_cast<std::size_t>(idx[2]) * n_[1] + idx[1]) * n_[0] + idx[0]];
    if (s != 2) return s == 1;
    return tree_.nearest(p).sq_dist < d2_;
  }

 private:
  KdTree tree_;
  double d2_;
  Point3 lo_;
  double cell_ = 1.0;
  std::array<int, 3> n_{};
  std::vector<std::uint8_t> state_;
};

struct Hypothesis {
  bool valid = false;
  std::int64_t inliers = -1;
  RigidTransform t;
};

bool edges_similar(const std::array<Point3, 3>& a, const std::array<Point3, 3>& b, double sim) {
  if (sim <= 0.0) return true;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double da = (a[i] - a[j]).norm();
      const double db = (b[i] - b[j]).norm();
      const double hi = std::max(da, db);
      if (hi <= 0.0 || std::min(da, db) < sim * hi) return false;
    }
  return true;
}

}  // namespace

RegistrationScore evaluate_registration(const PointCloud& moving, const PointCloud& fixed,
                                        const RigidTransform& t, double distance) {
  RegistrationScore s;
  if (moving.empty() || fixed.empty()) return s;
  const KdTree tree = KdTree::from_points(fixed.points);
  const double d2 = distance * distance;
  std::vector<double> sq(moving.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(moving.size()); ++i)
    sq[i] = tree.nearest(t.apply(moving.points[i])).sq_dist;
  double sum = 0.0;
  for (double v : sq)
    if (v < d2) {
      ++s.inlier_count;
      sum += v;
    }
  s.fitness = static_cast<double>(s.inlier_count) / static_cast<double>(moving.size());
  s.rmse = s.inlier_count ? std::sqrt(sum / static_cast<double>(s.inlier_count)) : 0.0;
  return s;
}

RansacResult ransac_register(const FeatureCloud& moving, const FeatureCloud& fixed,
                             const RansacParams& params, const RigidTransform& prior) {
  if (params.iterations < 1) throw InvalidArgument("ransac: iterations must be >= 1");
  if (!(params.inlier_distance > 0.0)) throw InvalidArgument("ransac: inlier distance must be positive");
  if (!(params.confidence > 0.0 && params.confidence <= 1.0))
    throw InvalidArgument("ransac: confidence must lie in (0, 1]");
  if (moving.size() < 3 || fixed.size() < 3)
    throw InvalidArgument("ransac: both clouds need at least three points");
  if (moving.descriptors.size() != moving.size() * kFpfhDim ||
      fixed.descriptors.size() != fixed.size() * kFpfhDim)
    throw InvalidArgument("ransac: descriptor count does not match point count");

  const std::size_t nm = moving.size();
  const KdTree feature_tree(fixed.descriptors, kFpfhDim);
  std::vector<std::size_t> match(nm);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nm); ++i)
    match[i] = feature_tree.nearest(moving.descriptor(i)).index;

  const InlierGrid grid(fixed.cloud, params.inlier_distance);
  const auto& mp = moving.cloud.points;
  const auto& fp = fixed.cloud.points;
  const double d2 = params.inlier_distance * params.inlier_distance;

  RansacResult res;
  Hypothesis best;
  std::int64_t best_iter = -1;
  std::vector<Hypothesis> block(kBlock);

  for (std::int64_t start = 0; start < params.iterations; start += kBlock) {
    const std::int64_t count = std::min(kBlock, params.iterations - start);
    const std::int64_t bar = best.inliers;  // from earlier blocks only

#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < count; ++b) {
      Hypothesis& h = block[b];
      h = Hypothesis{};
      StreamRng rng(params.seed, static_cast<std::uint64_t>(start + b));
      std::array<std::size_t, 3> s;
      s[0] = rng.below(nm);
      do s[1] = rng.below(nm); while (s[1] == s[0]);
      do s[2] = rng.below(nm); while (s[2] == s[0] || s[2] == s[1]);
      std::array<Point3, 3> src, dst;
      for (int k = 0; k < 3; ++k) {
        src[k] = mp[s[k]];
        dst[k] = fp[match[s[k]]];
      }
      if (!edges_similar(src, dst, params.edge_similarity)) continue;
      try {
        h.t = umeyama_fit(src, dst);
      } catch (const DegenerateConfiguration&) {
        continue;
      }
      h.valid = true;
      // A hypothesis that cannot beat the running best is abandoned early;
      // ties would lose to the earlier iteration anyway.
      std::int64_t in = 0;
      for (std::size_t i = 0; i < nm; ++i) {
        if (grid.inlier(h.t.apply(mp[i]))) ++in;
        if (in + static_cast<std::int64_t>(nm - 1 - i) <= bar) break;
      }
      h.inliers = in;
    }

    for (std::int64_t b = 0; b < count; ++b) {
      if (!block[b].valid) continue;
      ++res.valid_hypotheses;
      if (block[b].inliers > best.inliers) {
        best = block[b];
        best_iter = start + b;
      }
    }
    res.iterations_run = start + count;

    if (best.valid && params.confidence < 1.0) {
      std::int64_t good = 0;
      for (std::size_t i = 0; i < nm; ++i)
        if ((best.t.apply(mp[i]) - fp[match[i]]).squaredNorm() < d2) ++good;
      const double w = static_cast<double>(good) / static_cast<double>(nm);
      const double p_all = w * w * w;
      if (p_all >= 1.0) break;
      if (p_all > 0.0) {
        const double needed = std::log(1.0 - params.confidence) / std::log1p(-p_all);
        if (static_cast<double>(res.iterations_run) >= needed) break;
      }
    }
  }

  if (!best.valid) throw NoValidModel("ransac: every sampled triple was degenerate");
  res.best_iteration = best_iter;
  res.score = evaluate_registration(moving.cloud, fixed.cloud, best.t, params.inlier_distance);
  res.transform = best.t * prior;
  return res;
}

}  // namespace bigreg
