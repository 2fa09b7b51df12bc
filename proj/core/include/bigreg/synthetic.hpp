#pragma once

#include <cstdint>
#include <optional>

#include "bigreg/evaluation.hpp"
#include "bigreg/volume.hpp"

namespace bigreg {

/// Geometry and contrast of a bone-like phantom: a bent, flaring, twisted
/// elliptic shaft with rounded ends (cortical shell around a marrow
/// cavity), a crest ridge and an optional three-lobed cross-section, plus small
/// ellipsoidal cavities (lacunae) and short axial tubes (canals) inside the
/// shell. Lengths are in voxels.
struct PhantomSpec {
  Dims dims{256, 256, 128};
  double voxel_size_um = 1.42;

  double outer_a = 24.0;  // outer semi-axes at mid-length
  double outer_b = 13.0;
  double inner_a = 16.0;  // marrow semi-axes at mid-length
  double inner_b = 5.0;
  double bend = 1.5;      // centerline offset at the ends
  double flare = 1.5;     // semi-axis growth from mid-length to the +z end
  double twist = 0.6;     // cross-section rotation end to end, radians
  double crest = 4.0;     // ridge height on the outer surface
  double lobe = 0.0;      // three-lobed cross-section modulation (fraction)
  double end_cap = 16.0;  // length of the rounded ends
  double end_margin = 3.0;  // tube stops this far from the z faces

  int lacuna_count = 60;
  Eigen::Vector3d lacuna_radii{1.5, 1.5, 2.5};
  int canal_count = 15;
  double canal_radius = 1.5;
  double canal_length = 12.0;
  double min_spacing = 6.0;

  double noise_sigma = 3.0;
  double lsfm_crop_fraction = 0.2;   // bottom share of the cross-section removed
  double haze_amplitude = 25.5;      // 10% of full scale
  double haze_sigma = 12.0;
  int haze_blobs = 4;
  // Fluorescent soft tissue on the +y side of the shaft, seen only in the
  // LSFM-like volume: the region swept by the outer surface moved this far
  // along +y. It shifts part of the LSFM surface but carries no features.
  // Off by default, which keeps the fixed support inside the moving one.
  double lsfm_tissue_thickness = 0.0;

  // XRM-like (moving): bright bone, dark cavities, faint marrow.
  double xrm_bone = 200.0, xrm_marrow = 12.0, xrm_feature = 20.0;
  // LSFM-like (fixed): dark bone, bright cavities and marrow.
  double lsfm_bone = 40.0, lsfm_marrow = 200.0, lsfm_feature = 220.0, lsfm_tissue = 70.0;

  int landmark_count = 50;
  std::uint64_t seed = 0;
  /// fixed = gt * moving; drawn with random_pretransform when unset.
  std::optional<RigidTransform> gt;
  double max_translation = 100.0;

  /// Default geometry on other grids: translation range and feature counts
  /// shrink so the object and its largest displacement still fit.
  static PhantomSpec for_dims(Dims d);
};

struct PhantomPair {
  Volume moving;  // XRM-like, object displaced by gt^-1
  Volume fixed;   // LSFM-like, object at the volume center
  RigidTransform gt;
  LandmarkSet landmarks;  // exact feature centers, fixed = gt * moving
};

/// Deterministic per spec (including seed). Throws SpecInfeasible naming the
/// violated constraint.
PhantomPair generate_phantom(const PhantomSpec& spec);

}  // namespace bigreg
