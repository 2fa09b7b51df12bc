#include <cmath>

#include "bigreg/error.hpp"
#include "bigreg/mncc.hpp"
#include "bigreg/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bigreg;

namespace {

struct Pair {
  Volume v1, v2;
  BinaryMask m1, m2;
};

Pair random_pair(StreamRng& rng, Dims d) {
  return {oracle::random_volume(rng, d), oracle::random_volume(rng, d), oracle::blob_mask(rng, d),
          oracle::blob_mask(rng, d)};
}

Shift3 random_shift(StreamRng& rng, Dims d) {
  return {static_cast<int>(rng.below(2 * d.x - 1)) - (d.x - 1), static_cast<int>(rng.below(2 * d.y - 1)) - (d.y - 1),
          static_cast<int>(rng.below(2 * d.z - 1)) - (d.z - 1)};
}

}  // namespace

TEST_SUITE("mncc") {

TEST_CASE("spatial score matches the literal formula") {
  StreamRng rng(90, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{7 + static_cast<int>(rng.below(6)), 7 + static_cast<int>(rng.below(6)), 5 + static_cast<int>(rng.below(6))};
    const Pair p = random_pair(rng, d);
    for (int s = 0; s < 40; ++s) {
      const Shift3 u = random_shift(rng, d);
      const auto got = mncc_spatial(p.v1, p.m1, p.v2, p.m2, u);
      const auto want = oracle::mncc_literal(p.v1, p.m1, p.v2, p.m2, u);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK(*got == doctest::Approx(*want).epsilon(1e-9));
    }
  }
}

TEST_CASE("FFT scores match the spatial route at every shift") {
  StreamRng rng(91, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const Dims d{6 + static_cast<int>(rng.below(6)), 6 + static_cast<int>(rng.below(6)), 4 + static_cast<int>(rng.below(6))};
    const Pair p = random_pair(rng, d);
    MnccOptions opts;
    if (trial % 2) opts.half_window = Eigen::Vector3i(2, 3, 1);
    const CorrelationVolume c = mncc_fft(p.v1, p.m1, p.v2, p.m2, opts);
    const Eigen::Vector3i w = opts.half_window.value_or(Eigen::Vector3i(d.x - 1, d.y - 1, d.z - 1));
    CHECK(c.dims == Dims{2 * w.x() + 1, 2 * w.y() + 1, 2 * w.z() + 1});
    CHECK(c.zero_shift_index == w);
    for (int k = 0; k < c.dims.z; ++k)
      for (int j = 0; j < c.dims.y; ++j)
        for (int i = 0; i < c.dims.x; ++i) {
          const Shift3 u = c.shift_of(i, j, k);
          const std::size_t idx = c.dims.index(i, j, k);
          const auto want = mncc_spatial(p.v1, p.m1, p.v2, p.m2, u, opts);
          REQUIRE(static_cast<bool>(c.valid[idx]) == want.has_value());
          if (want) CHECK(std::abs(c.scores[idx] - *want) < 1e-6);
        }
  }
}

TEST_CASE("recovers integer translations") {
  StreamRng rng(92, 0);
  const Dims d{16, 14, 12};
  for (int trial = 0; trial < 10; ++trial) {
    const Volume v1 = oracle::random_volume(rng, d);
    const BinaryMask m1(d, true);
    const Shift3 s{static_cast<int>(rng.below(9)) - 4, static_cast<int>(rng.below(7)) - 3, static_cast<int>(rng.below(7)) - 3};
    const Volume v2 = oracle::shift_volume(v1, s);
    const BinaryMask m2 = oracle::shift_mask(m1, s);
    const Peak pk = find_peak(mncc_fft(v1, m1, v2, m2));
    CHECK(pk.shift == s);
    CHECK(pk.score == doctest::Approx(1.0));
  }
}

TEST_CASE("swapping the inputs mirrors the shift") {
  StreamRng rng(93, 0);
  const Pair p = random_pair(rng, Dims{9, 8, 7});
  for (int s = 0; s < 50; ++s) {
    const Shift3 u = random_shift(rng, Dims{9, 8, 7});
    const auto a = mncc_spatial(p.v1, p.m1, p.v2, p.m2, u);
    const auto b = mncc_spatial(p.v2, p.m2, p.v1, p.m1, Shift3{-u.dx, -u.dy, -u.dz});
    REQUIRE(a.has_value() == b.has_value());
    if (a) CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
  }
}

TEST_CASE("scores ignore gain and offset, and flip sign under inversion") {
  StreamRng rng(94, 0);
  const Pair p = random_pair(rng, Dims{8, 8, 8});
  Volume scaled = p.v2, negated = p.v2;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled.data()[i] = 3.0f * p.v2.data()[i] + 17.0f;
    negated.data()[i] = 255.0f - p.v2.data()[i];
  }
  const CorrelationVolume a = mncc_fft(p.v1, p.m1, p.v2, p.m2);
  const CorrelationVolume b = mncc_fft(p.v1, p.m1, scaled, p.m2);
  const CorrelationVolume c = mncc_fft(p.v1, p.m1, negated, p.m2);
  for (std::size_t i = 0; i < a.scores.size(); ++i) {
    CHECK(a.valid[i] == b.valid[i]);
    if (!a.valid[i]) continue;
    CHECK(std::abs(a.scores[i] - b.scores[i]) < 1e-6);
    CHECK(std::abs(a.scores[i] + c.scores[i]) < 1e-6);
  }
}

TEST_CASE("overlap floor and constant regions invalidate cells") {
  const Dims d{6, 6, 6};
  StreamRng rng(95, 0);
  const Volume v = oracle::random_volume(rng, d);
  const BinaryMask all(d, true);
  // Largest shifts overlap in 1 voxel, far below 0.3 * 216.
  CHECK_FALSE(mncc_spatial(v, all, v, all, Shift3{5, 5, 5}));
  CHECK(mncc_spatial(v, all, v, all, Shift3{1, 0, 0}).has_value());
  const Volume flat(d, Eigen::Vector3d::Ones(), 9.0f);
  CHECK_FALSE(mncc_spatial(v, all, flat, all, Shift3{0, 0, 0}));
  CHECK_THROWS_AS(find_peak(mncc_fft(flat, all, flat, all)), AllInvalid);
  CHECK_THROWS_AS(mncc_fft(v, all, Volume(Dims{6, 6, 5}, Eigen::Vector3d::Ones()), BinaryMask(Dims{6, 6, 5})),
                  DimsMismatch);
}

TEST_CASE("peak ties go to the lexicographically smallest shift") {
  CorrelationVolume c;
  c.dims = Dims{3, 3, 3};
  c.zero_shift_index = Eigen::Vector3i(1, 1, 1);
  c.scores.assign(27, 0.1);
  c.valid.assign(27, 1);
  c.overlap.assign(27, 100);
  for (const Shift3& s : {Shift3{1, -1, 0}, Shift3{0, 1, -1}, Shift3{0, 1, 1}, Shift3{1, 1, 1}})
    c.scores[c.index_of(s)] = 0.9;
  CHECK(find_peak(c).shift == Shift3{0, 1, -1});
  c.valid[c.index_of(Shift3{0, 1, -1})] = 0;
  CHECK(find_peak(c).shift == Shift3{0, 1, 1});
}

TEST_CASE("stage 2 follows a shift of the moving volume") {
  PhantomSpec spec = oracle::small_spec(4);
  spec.gt = RigidTransform::identity();
  Stage2Config cfg;
  cfg.half_window = Eigen::Vector3i(6, 6, 6);
  for (double tissue : {0.0, 2.0}) {
    spec.lsfm_tissue_thickness = tissue;
    const PhantomPair pair = generate_phantom(spec);
    // The cross-modal optimum need not sit at zero; a shift of the moving
    // volume must move it by exactly that shift.
    const Stage2Result base = stage2_refine(pair.moving, pair.fixed, cfg);
    CHECK(std::abs(base.shift.dx) + std::abs(base.shift.dy) + std::abs(base.shift.dz) <= 1);
    const Shift3 s{3, -2, 1};
    const Stage2Result r = stage2_refine(oracle::shift_volume(pair.moving, s), pair.fixed, cfg);
    const Shift3 want{base.shift.dx + s.dx, base.shift.dy + s.dy, base.shift.dz + s.dz};
    CHECK(r.shift == want);
    CHECK(r.score == doctest::Approx(base.score).epsilon(1e-9));
    CHECK(r.t2.translation() == Eigen::Vector3d(-want.dx, -want.dy, -want.dz));
    CHECK(r.t2.rotation() == Eigen::Matrix3d::Identity());
  }
}

}
