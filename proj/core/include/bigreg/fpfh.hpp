#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "bigreg/surface.hpp"

namespace bigreg {

inline constexpr int kFpfhBins = 11;
inline constexpr int kFpfhDim = 3 * kFpfhBins;

/// Per-point 33-bin descriptors laid out as [alpha(11) | phi(11) | theta(11)],
/// each sub-histogram in percent (sums to 100, or all zero for isolated points).
struct FeatureCloud {
  PointCloud cloud;
  std::vector<double> descriptors;  // row-major size() x 33

  std::size_t size() const { return cloud.size(); }
  std::span<const double> descriptor(std::size_t i) const {
    return {descriptors.data() + i * kFpfhDim, static_cast<std::size_t>(kFpfhDim)};
  }
};

/// Darboux-frame pair angles. The source of the frame is the point whose
/// normal makes the smaller angle with the connecting line.
struct PairFeature {
  double alpha;  // v . n_t, in [-1, 1]
  double phi;    // u . (p_t - p_s) / d, in [-1, 1]
  double theta;  // atan2(w . n_t, u . n_t), in [-pi, pi]
  double distance;
};

/// nullopt for coincident points.
std::optional<PairFeature> pair_features(const Point3& p1, const Eigen::Vector3d& n1,
                                         const Point3& p2, const Eigen::Vector3d& n2);

/// Bin index in [0, 10] for a value in [lo, hi].
int feature_bin(double value, double lo, double hi);

/// FPFH over neighbors within `radius` (at most `max_neighbors`, nearest
/// first, exact duplicates skipped). Requires normals.
FeatureCloud compute_fpfh(const PointCloud& c, double radius, int max_neighbors);

}  // namespace bigreg
