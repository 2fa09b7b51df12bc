#include <vector>

#include "bigreg/morphology.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bigreg;

namespace {

// Brute-force disk morphology; `outside` is the value assumed beyond the slice.
BinaryMask disk_op(const BinaryMask& m, int r, bool dilate, bool outside) {
  const Dims& d = m.dims();
  BinaryMask out(d);
  for (int k = 0; k < d.z; ++k)
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i) {
        bool acc = !dilate;
        for (int b = -r; b <= r; ++b)
          for (int a = -r; a <= r; ++a) {
            if (a * a + b * b > r * r) continue;
            const bool v = d.contains(i + a, j + b, k) ? m.get(i + a, j + b, k) : outside;
            acc = dilate ? (acc || v) : (acc && v);
          }
        out.set(i, j, k, acc);
      }
  return out;
}

// Per-slice 4-connected background flood from the border.
BinaryMask fill_2d_oracle(const BinaryMask& m) {
  const Dims& d = m.dims();
  BinaryMask out = m;
  for (int k = 0; k < d.z; ++k) {
    BinaryMask slice(Dims{d.x, d.y, 1});
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i) slice.set(i, j, 0, m.get(i, j, k));
    std::vector<int> labels;
    oracle::label_components(slice, false, &labels);
    std::vector<bool> open(labels.size() + 1, false);
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i)
        if (i == 0 || j == 0 || i == d.x - 1 || j == d.y - 1) open[static_cast<std::size_t>(labels[slice.dims().index(i, j, 0)])] = true;
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i) {
        const int l = labels[slice.dims().index(i, j, 0)];
        if (l && !open[static_cast<std::size_t>(l)]) out.set(i, j, k, true);
      }
  }
  return out;
}

BinaryMask fill_3d_oracle(const BinaryMask& m) {
  const Dims& d = m.dims();
  std::vector<int> labels;
  const int n = oracle::label_components(m, false, &labels);
  std::vector<bool> open(static_cast<std::size_t>(n) + 1, false);
  for (int k = 0; k < d.z; ++k)
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i)
        if (i == 0 || j == 0 || k == 0 || i == d.x - 1 || j == d.y - 1 || k == d.z - 1)
          open[static_cast<std::size_t>(labels[d.index(i, j, k)])] = true;
  BinaryMask out = m;
  for (std::size_t idx = 0; idx < labels.size(); ++idx)
    if (labels[idx] && !open[static_cast<std::size_t>(labels[idx])]) out.bits()[idx] = 1;
  return out;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.bits().size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

}  // namespace

TEST_SUITE("morphology") {

TEST_CASE("disk dilation and erosion match brute force") {
  StreamRng rng(20, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const BinaryMask m = trial % 2 ? oracle::random_mask(rng, Dims{14, 11, 3}, 0.3) : oracle::blob_mask(rng, Dims{14, 11, 3});
    const int r = 1 + static_cast<int>(rng.below(3));
    CHECK(dilate_2d(m, r) == disk_op(m, r, true, false));
    CHECK(erode_2d(m, r) == disk_op(m, r, false, true));
  }
}

TEST_CASE("closing is extensive and idempotent") {
  StreamRng rng(21, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, Dims{16, 16, 2}, 0.4);
    const BinaryMask c = binary_closing_2d(m, 2);
    CHECK(subset(m, c));
    CHECK(binary_closing_2d(c, 2) == c);
  }
}

TEST_CASE("slice hole filling matches the component oracle") {
  StreamRng rng(22, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, Dims{12, 10, 3}, 0.55);
    CHECK(fill_holes_2d(m) == fill_2d_oracle(m));
  }
}

TEST_CASE("volume hole filling matches the component oracle") {
  StreamRng rng(23, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, Dims{10, 9, 8}, 0.6);
    const BinaryMask f = fill_holes_3d(m);
    CHECK(f == fill_3d_oracle(m));
    CHECK(oracle::count_cavities(f) == 0);
  }
}

TEST_CASE("hollow cube is filled by both hole fillers") {
  const Dims d{9, 9, 9};
  BinaryMask m(d);
  for (int k = 1; k < 8; ++k)
    for (int j = 1; j < 8; ++j)
      for (int i = 1; i < 8; ++i) m.set(i, j, k, i == 1 || i == 7 || j == 1 || j == 7 || k == 1 || k == 7);
  CHECK(oracle::count_cavities(m) == 1);
  const BinaryMask f = fill_holes_3d(m);
  CHECK(f.count() == 7u * 7u * 7u);
  // Every interior slice is a ring, so the slice fill also closes it.
  CHECK(fill_holes_2d(m).count() == 7u * 7u * 7u);
}

TEST_CASE("outline keeps only boundary voxels") {
  const Dims d{8, 8, 1};
  BinaryMask m(d);
  for (int j = 2; j < 6; ++j)
    for (int i = 2; i < 6; ++i) m.set(i, j, 0, true);
  const BinaryMask o = outline_2d(m);
  CHECK(o.count() == 12u);
  CHECK_FALSE(o.get(3, 3, 0));
  CHECK(o.get(2, 2, 0));

  // Content touching the slice border is outlined there too.
  const BinaryMask full(d, true);
  CHECK(outline_2d(full).count() == 28u);
}

}
