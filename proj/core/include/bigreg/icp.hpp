#pragma once

#include "bigreg/ransac.hpp"

namespace bigreg {

struct IcpParams {
  double max_correspondence_distance = 16.0;  // voxels
  int max_iterations = 2000;
  /// Stop once the update rotation angle (radians) and translation norm
  /// (voxels) both fall below this.
  double epsilon = 1e-6;
};

struct PlaneLoss {
  double loss = 0.0;  // sum of squared point-to-plane residuals
  std::int64_t pairs = 0;
};

/// Point-to-plane objective of `t` over closest-point pairs (each moving
/// point to its nearest fixed point, kept when within `max_distance`).
PlaneLoss point_to_plane_loss(const PointCloud& moving, const PointCloud& fixed,
                              const RigidTransform& t, double max_distance);

struct IcpResult {
  RigidTransform transform;  // absolute, init already folded in
  RegistrationScore score;   // at the final transform, within d_ICP
  PlaneLoss initial_loss;
  PlaneLoss final_loss;
  int iterations = 0;
  bool converged = false;
  /// No pair within d_ICP at init; transform == init, zero fitness.
  bool no_correspondences = false;
};

/// Gauss-Newton point-to-plane ICP. Each step linearizes the rotation,
/// solves the 6x6 normal equations by Cholesky (with a tiny ridge when
/// singular) and applies the update as an exact rotation on the left.
IcpResult point_to_plane_icp(const PointCloud& moving, const PointCloud& fixed,
                             const RigidTransform& init, const IcpParams& params);

}  // namespace bigreg
