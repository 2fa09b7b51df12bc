#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bigreg/transform.hpp"

namespace bigreg {

/// Corresponding landmark pairs in centered voxel coordinates; the intended
/// transform maps each moving point onto its fixed partner.
struct LandmarkSet {
  std::vector<Point3> moving;
  std::vector<Point3> fixed;
  double voxel_size_um = 1.42;

  std::size_t size() const { return moving.size(); }
  bool empty() const { return moving.empty(); }
};

/// Smallest nearest-neighbor distance within a point set, in micrometers
/// (infinity for fewer than two points).
double min_spacing_um(const std::vector<Point3>& points, double voxel_size_um);

/// Throws InvalidArgument when either side has a pair closer than `min_um`.
void check_landmark_spacing(const LandmarkSet& l, double min_um = 100.0);

struct LandmarkGt {
  RigidTransform transform;
  std::vector<std::size_t> inliers;
};

/// RANSAC over 3-pair samples (stream keyed by (seed, iteration)); a pair is
/// an inlier when its residual is <= inlier_tau_um. The winner is re-fit on
/// its inlier set. Throws DegenerateConfiguration for < 3 pairs or when no
/// sample is usable.
LandmarkGt landmark_ransac_gt(const LandmarkSet& l, std::int64_t iterations = 100000,
                              double inlier_tau_um = 12.0, std::uint64_t seed = 0);

/// Per-pair ||t * moving - fixed|| in micrometers.
std::vector<double> landmark_residuals_um(const LandmarkSet& l, const RigidTransform& t);
/// Mean residual (LMD), micrometers. Throws InvalidArgument when empty.
double landmark_distance(const LandmarkSet& l, const RigidTransform& t);
/// Fraction of pairs with residual <= tau_um. Throws InvalidArgument when empty.
double landmark_fitness(const LandmarkSet& l, const RigidTransform& t, double tau_um = 12.0);

struct Metrics {
  double lmd_um = 0.0;
  double lm_fitness = 0.0;
  double rot_err_deg = 0.0;
  double trans_err_um = 0.0;
};

Metrics evaluate_metrics(const LandmarkSet& l, const RigidTransform& t, const RigidTransform& gt,
                         double tau_um = 12.0);

/// CSV with header mx,my,mz,fx,fy,fz. Throws IoError / FormatError.
LandmarkSet load_landmarks(const std::filesystem::path& path, double voxel_size_um = 1.42);
void save_landmarks(const LandmarkSet& l, const std::filesystem::path& path);

}  // namespace bigreg
