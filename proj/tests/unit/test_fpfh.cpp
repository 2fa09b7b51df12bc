#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bigreg/error.hpp"
#include "bigreg/fpfh.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bigreg;

namespace {

// Brute-force FPFH: neighbor sets by full scan, no cap.
std::vector<double> fpfh_oracle(const PointCloud& c, double radius) {
  const std::size_t n = c.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (c.points[j] - c.points[i]).norm();
      if (j != i && d > 0.0 && d <= radius) nb[i].push_back(j);
    }
  std::vector<std::array<double, kFpfhDim>> spfh(n);
  for (std::size_t i = 0; i < n; ++i) {
    spfh[i].fill(0.0);
    int pairs = 0;
    for (std::size_t j : nb[i]) {
      const auto f = pair_features(c.points[i], c.normals[i], c.points[j], c.normals[j]);
      if (!f) continue;
      ++pairs;
      spfh[i][feature_bin(f->alpha, -1, 1)] += 1;
      spfh[i][kFpfhBins + feature_bin(f->phi, -1, 1)] += 1;
      spfh[i][2 * kFpfhBins + feature_bin(f->theta, -std::numbers::pi, std::numbers::pi)] += 1;
    }
    if (pairs)
      for (auto& x : spfh[i]) x *= 100.0 / pairs;
  }
  std::vector<double> out(n * kFpfhDim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (nb[i].empty()) continue;
    std::array<double, kFpfhDim> acc = spfh[i];
    for (std::size_t j : nb[i]) {
      const double w = 1.0 / (c.points[j] - c.points[i]).norm() / static_cast<double>(nb[i].size());
      for (int b = 0; b < kFpfhDim; ++b) acc[b] += w * spfh[j][b];
    }
    for (int h = 0; h < 3; ++h) {
      const double s = std::accumulate(acc.begin() + h * kFpfhBins, acc.begin() + (h + 1) * kFpfhBins, 0.0);
      if (s > 0)
        for (int b = 0; b < kFpfhBins; ++b) out[i * kFpfhDim + h * kFpfhBins + b] = acc[h * kFpfhBins + b] * 100.0 / s;
    }
  }
  return out;
}

// theta wraps at +-pi.
bool angle_close(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi)) < 1e-9; }

PointCloud random_oriented_cloud(StreamRng& rng, std::size_t n, double extent) {
  PointCloud c;
  c.points = oracle::random_points(rng, n, extent);
  for (std::size_t i = 0; i < n; ++i) c.normals.push_back(oracle::random_unit(rng));
  return c;
}

}  // namespace

TEST_SUITE("fpfh") {

TEST_CASE("pair features on a hand-built pair") {
  const Eigen::Vector3d nt = Eigen::Vector3d(0.0, 0.6, 0.8);
  const auto f = pair_features({0, 0, 0}, {0, 0, 1}, {2, 0, 0}, nt);
  REQUIRE(f);
  // Both normals are perpendicular to the line, so p1 is the source:
  // u = (0,0,1), v = (0,-1,0), w = (1,0,0).
  CHECK(f->distance == doctest::Approx(2.0));
  CHECK(f->phi == doctest::Approx(0.0));
  CHECK(f->alpha == doctest::Approx(-0.6));
  CHECK(f->theta == doctest::Approx(0.0));

  // A tilted target normal is closer to the line, so the frame moves to p2:
  // u = m, d = (-1,0,0), v = (0, m.z, -m.y) / s with s = |(m.y, m.z)|.
  const Eigen::Vector3d m = Eigen::Vector3d(0.3, 0.4, 0.5).normalized();
  const double s = std::hypot(m.y(), m.z());
  const auto h = pair_features({0, 0, 0}, {0, 0, 1}, {2, 0, 0}, m);
  REQUIRE(h);
  CHECK(h->phi == doctest::Approx(-m.x()));
  CHECK(h->alpha == doctest::Approx(-m.y() / s));
  CHECK(h->theta == doctest::Approx(std::atan2(m.x() * m.z() / s, m.z())));

  // p2's normal is along the line, so the frame is built at p2.
  const auto g = pair_features({0, 0, 0}, Eigen::Vector3d(0, 1, 1).normalized(), {0, 0, 3}, {0, 0, 1});
  REQUIRE(g);
  CHECK(g->phi == doctest::Approx(-1.0));
  CHECK(g->alpha == 0.0);
  CHECK(g->theta == 0.0);

  CHECK_FALSE(pair_features({1, 1, 1}, {0, 0, 1}, {1, 1, 1}, {0, 1, 0}));
}

TEST_CASE("tied source angles give a frame-independent answer") {
  // Equal normals make both points equally good sources; the two frames
  // disagree in the sign of phi, so rounding must not decide.
  const Eigen::Vector3d n = Eigen::Vector3d(-0.4, -0.8, -0.4).normalized();
  const Point3 p1(0.5, 1.5, -2.5), p2(2.5, 0.5, -1.5);
  const auto f = pair_features(p1, n, p2, n);
  const auto g = pair_features(p2, n, p1, n);
  REQUIRE(f);
  REQUIRE(g);
  CHECK(f->phi >= 0.0);
  CHECK(f->phi == doctest::Approx(g->phi));
  StreamRng rng(62, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const RigidTransform t = oracle::random_transform(rng);
    const auto h = pair_features(t.apply(p1), t.rotation() * n, t.apply(p2), t.rotation() * n);
    REQUIRE(h);
    CHECK(h->phi == doctest::Approx(f->phi).epsilon(1e-12));
    CHECK(h->alpha == doctest::Approx(f->alpha).epsilon(1e-12));
  }
}

TEST_CASE("pair features are symmetric and rigid invariant") {
  StreamRng rng(60, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = random_oriented_cloud(rng, 2, 5.0);
    const auto f = pair_features(c.points[0], c.normals[0], c.points[1], c.normals[1]);
    const auto g = pair_features(c.points[1], c.normals[1], c.points[0], c.normals[0]);
    REQUIRE(f);
    REQUIRE(g);
    CHECK(f->alpha == doctest::Approx(g->alpha).epsilon(1e-9));
    CHECK(f->phi == doctest::Approx(g->phi).epsilon(1e-9));
    CHECK(angle_close(f->theta, g->theta));

    const RigidTransform t = oracle::random_transform(rng);
    const auto m = transform_cloud(c, t);
    const auto h = pair_features(m.points[0], m.normals[0], m.points[1], m.normals[1]);
    CHECK(f->alpha == doctest::Approx(h->alpha).epsilon(1e-9));
    CHECK(f->phi == doctest::Approx(h->phi).epsilon(1e-9));
    CHECK(angle_close(f->theta, h->theta));
    CHECK(std::abs(f->alpha) <= 1.0);
    CHECK(std::abs(f->phi) <= 1.0);
  }
}

TEST_CASE("feature bins cover the closed range") {
  CHECK(feature_bin(-1.0, -1.0, 1.0) == 0);
  CHECK(feature_bin(1.0, -1.0, 1.0) == 10);
  CHECK(feature_bin(0.0, -1.0, 1.0) == 5);
  CHECK(feature_bin(-1.0 + 2.0 / 11.0 - 1e-12, -1.0, 1.0) == 0);
  CHECK(feature_bin(-1.0 + 2.0 / 11.0 + 1e-12, -1.0, 1.0) == 1);
  CHECK(feature_bin(std::numbers::pi, -std::numbers::pi, std::numbers::pi) == 10);
}

TEST_CASE("descriptors match the brute-force construction") {
  StreamRng rng(61, 0);
  const auto c = random_oriented_cloud(rng, 300, 8.0);
  const FeatureCloud fc = compute_fpfh(c, 4.0, 1000);
  const auto want = fpfh_oracle(c, 4.0);
  REQUIRE(fc.descriptors.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(fc.descriptors[i] - want[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("each sub-histogram sums to 100 or is empty") {
  StreamRng rng(62, 0);
  auto c = random_oriented_cloud(rng, 200, 10.0);
  c.points.emplace_back(500, 500, 500);  // isolated
  c.normals.emplace_back(0, 0, 1);
  const FeatureCloud fc = compute_fpfh(c, 3.0, 50);
  for (std::size_t i = 0; i < fc.size(); ++i) {
    const auto d = fc.descriptor(i);
    for (int h = 0; h < 3; ++h) {
      const double s = std::accumulate(d.begin() + h * kFpfhBins, d.begin() + (h + 1) * kFpfhBins, 0.0);
      CHECK((std::abs(s - 100.0) < 1e-9 || s == 0.0));
    }
  }
  const auto last = fc.descriptor(fc.size() - 1);
  CHECK(std::all_of(last.begin(), last.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("descriptors do not depend on point order") {
  StreamRng rng(63, 0);
  const auto c = random_oriented_cloud(rng, 400, 10.0);
  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  PointCloud p;
  for (std::size_t i : perm) {
    p.points.push_back(c.points[i]);
    p.normals.push_back(c.normals[i]);
  }
  const FeatureCloud a = compute_fpfh(c, 3.5, 10000);
  const FeatureCloud b = compute_fpfh(p, 3.5, 10000);
  for (std::size_t k = 0; k < perm.size(); ++k)
    for (int j = 0; j < kFpfhDim; ++j) CHECK(b.descriptor(k)[j] == doctest::Approx(a.descriptor(perm[k])[j]).epsilon(1e-9));
}

TEST_CASE("bad arguments") {
  PointCloud c;
  c.points = {{0, 0, 0}};
  CHECK_THROWS_AS(compute_fpfh(c, 1.0, 10), InvalidArgument);
  c.normals = {{0, 0, 1}};
  CHECK_THROWS_AS(compute_fpfh(c, 0.0, 10), InvalidArgument);
  CHECK_THROWS_AS(compute_fpfh(c, 1.0, 0), InvalidArgument);
}

}
