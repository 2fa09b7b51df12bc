#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <vector>

#include "bigreg/volume.hpp"

namespace bigreg {

struct Shift3 {
  int dx = 0;
  int dy = 0;
  int dz = 0;
  bool operator==(const Shift3&) const = default;
};

struct MnccOptions {
  /// Overlap floor as a fraction of min(|m1|, |m2|).
  double min_overlap_fraction = 0.3;
  /// Each variance factor must exceed this for a score to be defined.
  double epsilon = 1e-9;
  /// Largest |shift| searched per axis; nullopt searches every shift with
  /// any overlap (n - 1 per axis).
  std::optional<Eigen::Vector3i> half_window;
};

/// Scores over the shift window. Cell (i, j, k) holds shift
/// (i, j, k) - zero_shift_index. score(u) correlates v1(x) with v2(x + u),
/// so v2 equal to v1 translated by s peaks at u = s.
struct CorrelationVolume {
  Dims dims;
  Eigen::Vector3i zero_shift_index = Eigen::Vector3i::Zero();
  std::vector<double> scores;            // clamped to [-1, 1]; 0 where invalid
  std::vector<std::int64_t> overlap;     // rounded overlap voxel count
  std::vector<std::uint8_t> valid;

  std::size_t index_of(const Shift3& s) const {
    return dims.index(s.dx + zero_shift_index.x(), s.dy + zero_shift_index.y(),
                      s.dz + zero_shift_index.z());
  }
  bool contains(const Shift3& s) const {
    return dims.contains(s.dx + zero_shift_index.x(), s.dy + zero_shift_index.y(),
                         s.dz + zero_shift_index.z());
  }
  Shift3 shift_of(int i, int j, int k) const {
    return {i - zero_shift_index.x(), j - zero_shift_index.y(), k - zero_shift_index.z()};
  }
};

/// Direct evaluation at one shift over the mask overlap; nullopt when the
/// overlap is below the floor or a variance factor is <= epsilon.
/// Throws DimsMismatch.
std::optional<double> mncc_spatial(const Volume& v1, const BinaryMask& m1, const Volume& v2,
                                   const BinaryMask& m2, const Shift3& shift,
                                   const MnccOptions& opts = {});

/// Every shift of the window at once from six FFT correlations of the
/// zero-padded inputs. Throws DimsMismatch.
CorrelationVolume mncc_fft(const Volume& v1, const BinaryMask& m1, const Volume& v2,
                           const BinaryMask& m2, const MnccOptions& opts = {});

struct Peak {
  Shift3 shift;
  double score = 0.0;
};

/// Highest valid score. Ties go to the lexicographically smallest
/// (dx, dy, dz). Throws AllInvalid.
Peak find_peak(const CorrelationVolume& c);

/// Writes scores as a float32 volume (invalid cells stored as -2).
void save_correlation(const CorrelationVolume& c, const std::filesystem::path& path);

struct Stage2Config {
  double unsharp_sigma = 5.0;  // voxels
  double unsharp_weight = 0.8;
  /// Per-axis half window; nullopt uses floor(dim / 4).
  std::optional<Eigen::Vector3i> half_window;
  bool full_search = false;  // overrides half_window
  double min_overlap_fraction = 0.3;
};

struct Stage2Result {
  RigidTransform t2;  // pure translation
  Shift3 shift;
  double score = 0.0;
  CorrelationVolume correlation;
};

/// V1 = unsharp(fixed) * h_F and V2 = invert(moving_aligned) * h_M, with
/// h = fill_holes_3d(volume > 0) (h_M taken before inversion); the MNCC peak
/// u gives T2 = translation(-u). Throws DimsMismatch, AllInvalid.
Stage2Result stage2_refine(const Volume& moving_aligned, const Volume& fixed,
                           const Stage2Config& cfg = {});

}  // namespace bigreg
