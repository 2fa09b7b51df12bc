#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bigreg/volume.hpp"

namespace bigreg {

// On-disk volume format: a raw payload `<base>.raw` plus a JSON sidecar
// `<base>.json`:
//
//   {
//     "dims": [nx, ny, nz],              // x fastest
//     "voxel_size_um": [sx, sy, sz],
//     "intensity_range": [min, max],     // informational
//     "dtype": "float32"                 // or "uint8" (legacy payloads)
//     "byte_order": "little"
//   }
//
// Transforms that refer to a volume act on centered voxel coordinates,
// i.e. voxel index minus (dims - 1) / 2.

/// Returns the sidecar and payload paths for `path`, which may name either
/// file or the common base.
std::filesystem::path sidecar_path(const std::filesystem::path& path);
std::filesystem::path payload_path(const std::filesystem::path& path);

/// Throws IoError or FormatError.
Volume load_volume(const std::filesystem::path& path);
/// Writes float32 payload + sidecar; load(save(v)) is bit-identical.
void save_volume(const Volume& v, const std::filesystem::path& path);

/// 2D grayscale image, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

enum class SlicePlane { XY, XZ, YZ };

/// Central slice through the volume, values rounded and clamped to [0, 255].
Image8 central_slice(const Volume& v, SlicePlane plane);
/// Alternates tiles of `a` and `b` (same size) in a checkerboard.
Image8 checkerboard(const Image8& a, const Image8& b, int tile);
/// Binary (P5) PGM.
void write_pgm(const Image8& img, const std::filesystem::path& path);

}  // namespace bigreg
