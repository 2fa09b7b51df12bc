#include "bigreg/morphology.hpp"

#include <utility>
#include <vector>

namespace bigreg {

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> offs;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offs.emplace_back(dx, dy);
  return offs;
}

// Shared kernel for slice-wise dilation (any neighbor set) and erosion
// (all neighbors set). `outside` is the value assumed beyond the slice.
BinaryMask slice_filter(const BinaryMask& m, const std::vector<std::pair<int, int>>& offs,
                        bool dilate, bool outside) {
  const Dims& d = m.dims();
  BinaryMask out(d);
  auto dst = out.bits();
  const auto src = m.bits();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.z; ++k) {
    for (int j = 0; j < d.y; ++j) {
      for (int i = 0; i < d.x; ++i) {
        bool result = !dilate;
        for (const auto& [dx, dy] : offs) {
          const int a = i + dx, b = j + dy;
          const bool v = (a >= 0 && b >= 0 && a < d.x && b < d.y) ? src[d.index(a, b, k)] != 0
                                                                  : outside;
          if (dilate && v) {
            result = true;
            break;
          }
          if (!dilate && !v) {
            result = false;
            break;
          }
        }
        dst[d.index(i, j, k)] = result ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate_2d(const BinaryMask& m, int radius) {
  return slice_filter(m, disk_offsets(radius), true, false);
}

BinaryMask erode_2d(const BinaryMask& m, int radius) {
  return slice_filter(m, disk_offsets(radius), false, true);
}

BinaryMask binary_closing_2d(const BinaryMask& m, int radius) {
  if (radius <= 0) return m;
  return erode_2d(dilate_2d(m, radius), radius);
}

BinaryMask fill_holes_2d(const BinaryMask& m) {
  const Dims& d = m.dims();
  BinaryMask out(d);
  auto dst = out.bits();
  const auto src = m.bits();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < d.z; ++k) {
    // reached background, flooded from the slice border
    std::vector<std::uint8_t> reached(static_cast<std::size_t>(d.x) * d.y, 0);
    std::vector<int> stack;
    auto seed = [&](int i, int j) {
      const std::size_t s = static_cast<std::size_t>(i) + static_cast<std::size_t>(d.x) * j;
      if (!reached[s] && !src[d.index(i, j, k)]) {
        reached[s] = 1;
        stack.push_back(static_cast<int>(s));
      }
    };
    for (int i = 0; i < d.x; ++i) {
      seed(i, 0);
      seed(i, d.y - 1);
    }
    for (int j = 0; j < d.y; ++j) {
      seed(0, j);
      seed(d.x - 1, j);
    }
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      const int i = s % d.x, j = s / d.x;
      if (i > 0) seed(i - 1, j);
      if (i + 1 < d.x) seed(i + 1, j);
      if (j > 0) seed(i, j - 1);
      if (j + 1 < d.y) seed(i, j + 1);
    }
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i)
        dst[d.index(i, j, k)] = reached[static_cast<std::size_t>(i) + static_cast<std::size_t>(d.x) * j] ? 0 : 1;
  }
  return out;
}

BinaryMask outline_2d(const BinaryMask& m) {
  std::vector<std::pair<int, int>> square;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) square.emplace_back(dx, dy);
  const BinaryMask eroded = slice_filter(m, square, false, false);
  BinaryMask out(m.dims());
  auto dst = out.bits();
  const auto a = m.bits();
  const auto b = eroded.bits();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = (a[i] && !b[i]) ? 1 : 0;
  return out;
}

BinaryMask fill_holes_3d(const BinaryMask& m) {
  const Dims& d = m.dims();
  const auto src = m.bits();
  std::vector<std::uint8_t> reached(d.count(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int i, int j, int k) {
    const std::size_t s = d.index(i, j, k);
    if (!reached[s] && !src[s]) {
      reached[s] = 1;
      stack.push_back(s);
    }
  };
  for (int k = 0; k < d.z; ++k)
    for (int j = 0; j < d.y; ++j)
      for (int i = 0; i < d.x; ++i)
        if (i == 0 || j == 0 || k == 0 || i == d.x - 1 || j == d.y - 1 || k == d.z - 1)
          seed(i, j, k);
  const std::size_t plane = static_cast<std::size_t>(d.x) * d.y;
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    const int i = static_cast<int>(s % d.x);
    const int j = static_cast<int>((s / d.x) % d.y);
    const int k = static_cast<int>(s / plane);
    if (i > 0) seed(i - 1, j, k);
    if (i + 1 < d.x) seed(i + 1, j, k);
    if (j > 0) seed(i, j - 1, k);
    if (j + 1 < d.y) seed(i, j + 1, k);
    if (k > 0) seed(i, j, k - 1);
    if (k + 1 < d.z) seed(i, j, k + 1);
  }
  BinaryMask out(d);
  auto dst = out.bits();
  for (std::size_t s = 0; s < dst.size(); ++s) dst[s] = reached[s] ? 0 : 1;
  return out;
}

}  // namespace bigreg
