#pragma once

#include <cstdint>

#include "bigreg/fpfh.hpp"
#include "bigreg/transform.hpp"

namespace bigreg {

struct RansacParams {
  std::int64_t iterations = 2'500'000;
  double inlier_distance = 30.0;  // voxels
  /// Early-exit confidence; 1.0 runs every iteration.
  double confidence = 0.999;
  std::uint64_t seed = 0;
  /// Each sampled edge must satisfy min/max length ratio >= this; 0 disables.
  double edge_similarity = 0.9;
};

struct RegistrationScore {
  std::int64_t inlier_count = 0;
  double fitness = 0.0;  // inliers / moving points
  double rmse = 0.0;     // over inliers, voxels
};

struct RansacResult {
  RigidTransform transform;  // includes `prior`
  RegistrationScore score;
  std::int64_t iterations_run = 0;
  std::int64_t valid_hypotheses = 0;
  std::int64_t best_iteration = -1;
};

/// Moving points whose nearest fixed point after `t` lies strictly closer
/// than `distance`.
RegistrationScore evaluate_registration(const PointCloud& moving, const PointCloud& fixed,
                                        const RigidTransform& t, double distance);

/// Feature-matched RANSAC. Each iteration draws three moving points from a
/// counter-based stream keyed by (seed, iteration), pairs them with their
/// nearest fixed descriptors, fits a rigid transform and counts inliers over
/// the whole moving cloud. The best hypothesis (most inliers, lowest
/// iteration on ties) is returned composed with `prior`. Throws
/// NoValidModel when no sampled triple produced a transform.
RansacResult ransac_register(const FeatureCloud& moving, const FeatureCloud& fixed,
                             const RansacParams& params,
                             const RigidTransform& prior = RigidTransform::identity());

}  // namespace bigreg
