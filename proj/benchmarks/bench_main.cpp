#include <benchmark/benchmark.h>

#include <numbers>

#include "bigreg/fpfh.hpp"
#include "bigreg/icp.hpp"
#include "bigreg/kdtree.hpp"
#include "bigreg/mncc.hpp"
#include "bigreg/rng.hpp"
#include "bigreg/surface.hpp"
#include "bigreg/synthetic.hpp"

using namespace bigreg;

namespace {

Volume noise_volume(Dims d, std::uint64_t seed) {
  Volume v(d, Eigen::Vector3d::Ones());
  StreamRng rng(seed, 0);
  for (float& x : v.data()) x = static_cast<float>(rng.uniform(0.0, 255.0));
  return v;
}

// Surface of the default phantom, centered, with normals. Built once.
const PointCloud& phantom_surface() {
  static const PointCloud cloud = [] {
    PhantomSpec spec = PhantomSpec::for_dims(Dims{256, 256, 128});
    spec.gt = RigidTransform::identity();
    const PhantomPair p = generate_phantom(spec);
    PointCloud c = extract_surface(threshold(p.moving, 5.0, true));
    c = translate_cloud(c, -p.moving.dims().center());
    return estimate_normals(c, 30).cloud;
  }();
  return cloud;
}

void BM_MnccFft(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dims d{n, n, n};
  const Volume a = noise_volume(d, 1), b = noise_volume(d, 2);
  const BinaryMask m(d, true);
  MnccOptions opts;
  opts.half_window = Eigen::Vector3i::Constant(n / 4);
  for (auto _ : state) benchmark::DoNotOptimize(mncc_fft(a, m, b, m, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.count()));
}
BENCHMARK(BM_MnccFft)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_KdTreeKnn(benchmark::State& state) {
  const PointCloud& c = phantom_surface();
  const KdTree tree = KdTree::from_points(c.points);
  const auto k = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn(c.points[i], k));
    i = (i + 7919) % c.size();
  }
}
BENCHMARK(BM_KdTreeKnn)->Arg(1)->Arg(30);

void BM_Fpfh(benchmark::State& state) {
  const PointCloud c = voxel_downsample(phantom_surface(), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(compute_fpfh(c, static_cast<double>(state.range(0)), 100));
  state.counters["points"] = static_cast<double>(c.size());
}
BENCHMARK(BM_Fpfh)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Icp(benchmark::State& state) {
  const PointCloud& fixed = phantom_surface();
  const RigidTransform truth =
      RigidTransform::translation(2, -1, 1) * RigidTransform::axis_angle(Eigen::Vector3d(1, 2, 3).normalized(), 3.0 * std::numbers::pi / 180);
  const PointCloud moving = transform_cloud(fixed, invert(truth));
  IcpParams params;
  params.max_correspondence_distance = 16.0;
  params.max_iterations = 50;
  for (auto _ : state) benchmark::DoNotOptimize(point_to_plane_icp(moving, fixed, RigidTransform::identity(), params));
  state.counters["points"] = static_cast<double>(fixed.size());
}
BENCHMARK(BM_Icp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
