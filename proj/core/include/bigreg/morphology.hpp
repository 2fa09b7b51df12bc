#pragma once

#include "bigreg/volume.hpp"

namespace bigreg {

// Slice-wise operators work on each z-slice independently.

/// Dilation with a disk of `radius` (offsets with dx^2 + dy^2 <= r^2).
BinaryMask dilate_2d(const BinaryMask& m, int radius);
/// Erosion with the same disk; voxels outside the slice count as set, so
/// erosion never eats into content that touches the border.
BinaryMask erode_2d(const BinaryMask& m, int radius);
/// Dilation followed by erosion. Extensive: m is a subset of the result.
BinaryMask binary_closing_2d(const BinaryMask& m, int radius);
/// Background flood (4-connected) from the slice border; every unreached
/// voxel becomes foreground.
BinaryMask fill_holes_2d(const BinaryMask& m);
/// m minus its 3x3 (8-neighbor) erosion, with outside-slice counted as unset.
BinaryMask outline_2d(const BinaryMask& m);

/// Background flood (6-connected) from the volume boundary.
BinaryMask fill_holes_3d(const BinaryMask& m);

}  // namespace bigreg
