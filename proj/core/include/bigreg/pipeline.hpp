#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bigreg/icp.hpp"
#include "bigreg/mncc.hpp"
#include "bigreg/ransac.hpp"
#include "bigreg/volume.hpp"

namespace bigreg {

struct StageToggles {
  bool s11 = true;
  bool s12 = true;
  bool s2 = true;

  /// Parses a comma-separated subset of {s11, s12, s2}. Throws InvalidArgument.
  static StageToggles parse(const std::string& text);
  std::string str() const;
};

struct PipelineConfig {
  double moving_threshold = 5.0;  // strict
  double fixed_threshold = 0.0;   // strict
  int closing_radius = 2;
  int normal_neighbors = 30;
  /// Cell size (voxels) for thinning both clouds before FPFH/RANSAC; 0 keeps
  /// every surface point. ICP always runs on the full clouds.
  double stage1_downsample = 0.0;
  double fpfh_radius = 200.0;
  int fpfh_max_neighbors = 400;
  RansacParams ransac;
  IcpParams icp;
  Stage2Config stage2;
  StageToggles stages;
  /// Permit S1.2 or S2 without S1.1 (ablation runs).
  bool allow_partial_stages = false;
  Interpolation intermediate_interpolation = Interpolation::Linear;
  Interpolation final_interpolation = Interpolation::Cubic;

  /// Parameters tuned for the full-size bone volumes (FPFH r=200, n=400,
  /// 2.5e6 RANSAC iterations, d=30, ICP d=16 for 2000 iterations).
  static PipelineConfig bone();
  /// Scaled parameters for the 256 x 256 x 128 synthetic phantoms.
  static PipelineConfig phantom();

  /// Throws InvalidArgument on out-of-range values or an illegal stage set.
  void validate() const;
};

struct StageTimings {
  double surface_s = 0.0;
  double s11_s = 0.0;
  double s12_s = 0.0;
  double s2_s = 0.0;
  double resample_s = 0.0;
};

struct RegistrationResult {
  RigidTransform t_11;
  RigidTransform t_12;
  RigidTransform t_1;
  RigidTransform t_2;
  RigidTransform t_overall;  // t_2 * t_1
  std::optional<RansacResult> ransac;
  std::optional<IcpResult> icp;
  std::optional<Peak> stage2_peak;
  std::size_t moving_points = 0;
  std::size_t fixed_points = 0;
  StageTimings timings;
  /// Moving volume resampled by t_overall (final interpolation), when requested.
  std::optional<Volume> moved;
};

/// Runs the enabled stages in order. Disabled stages contribute identity.
/// Stage 1 works on surface point clouds in the centered voxel frame; stage
/// 2 sees the moving volume resampled once by t_1 with the intermediate
/// interpolation. Failures are rethrown as StageError tagged with
/// "surface", "s11", "s12", "s2" or "resample".
RegistrationResult register_volumes(const Volume& moving, const Volume& fixed,
                                    const PipelineConfig& cfg, bool emit_moved = false);

struct PreprocessConfig {
  /// Half-open [first, last) slice ranges applied after resampling.
  std::optional<std::pair<int, int>> moving_z_range;
  std::optional<std::pair<int, int>> fixed_z_range;
};

struct VolumePair {
  Volume moving;
  Volume fixed;
};

/// Resamples fixed onto the moving voxel size, applies the optional z
/// crops, zero-pads both to the element-wise max dims (content centered)
/// and normalizes both to [0, 255].
VolumePair preprocess_pair(const Volume& moving_raw, const Volume& fixed_raw,
                           const PreprocessConfig& cfg = {});

/// Rotation about z uniform in [-180, 180] degrees, then a translation in the
/// xy-plane with magnitude uniform in [0, max_translation] voxels and uniform
/// direction. Deterministic per seed.
RigidTransform random_pretransform(std::uint64_t seed, double max_translation = 100.0);

}  // namespace bigreg
