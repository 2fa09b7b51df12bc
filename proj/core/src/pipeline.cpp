#include "bigreg/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bigreg/error.hpp"
#include "bigreg/fpfh.hpp"
#include "bigreg/rng.hpp"
#include "bigreg/surface.hpp"

namespace bigreg {

StageToggles StageToggles::parse(const std::string& text) {
  StageToggles t{false, false, false};
  std::stringstream ss(text);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    if (item == "s11") t.s11 = true;
    else if (item == "s12") t.s12 = true;
    else if (item == "s2") t.s2 = true;
    else throw InvalidArgument("unknown stage '" + item + "' (expected s11, s12, s2)");
    any = true;
  }
  if (!any) throw InvalidArgument("stage list is empty");
  return t;
}

std::string StageToggles::str() const {
  std::string out;
  for (const auto& [on, name] : {std::pair{s11, "s11"}, std::pair{s12, "s12"}, std::pair{s2, "s2"}})
    if (on) out += (out.empty() ? "" : ",") + std::string(name);
  return out;
}

PipelineConfig PipelineConfig::bone() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::phantom() {
  PipelineConfig c;
  c.stage1_downsample = 2.0;
  c.fpfh_radius = 10.0;
  c.fpfh_max_neighbors = 100;
  c.ransac.iterations = 1000000;
  c.ransac.inlier_distance = 3.0;
  c.icp.max_correspondence_distance = 2.0;
  c.icp.max_iterations = 200;
  return c;
}

void PipelineConfig::validate() const {
  if (closing_radius < 0) throw InvalidArgument("closing radius must be >= 0");
  if (normal_neighbors < 3) throw InvalidArgument("normal neighbors must be >= 3");
  if (stage1_downsample < 0.0) throw InvalidArgument("stage-1 downsample cell must be >= 0");
  if (!(fpfh_radius > 0.0)) throw InvalidArgument("FPFH radius must be positive");
  if (fpfh_max_neighbors < 1) throw InvalidArgument("FPFH neighbor cap must be >= 1");
  if (ransac.iterations < 1) throw InvalidArgument("RANSAC iterations must be >= 1");
  if (!(ransac.inlier_distance > 0.0)) throw InvalidArgument("RANSAC inlier distance must be positive");
  if (!(ransac.confidence > 0.0 && ransac.confidence <= 1.0))
    throw InvalidArgument("RANSAC confidence must lie in (0, 1]");
  if (!(icp.max_correspondence_distance > 0.0))
    throw InvalidArgument("ICP correspondence distance must be positive");
  if (icp.max_iterations < 1) throw InvalidArgument("ICP iterations must be >= 1");
  if (!(stage2.unsharp_sigma > 0.0)) throw InvalidArgument("unsharp sigma must be positive");
  if (!stages.s11 && !stages.s12 && !stages.s2) throw InvalidArgument("no stage enabled");
  if (!stages.s11 && !allow_partial_stages)
    throw InvalidArgument("stage s11 is required unless partial stage sets are allowed");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
auto run_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

PointCloud surface_cloud(const Volume& v, double tau, int closing_radius, int k) {
  PointCloud c = extract_surface(threshold(v, tau, true), closing_radius);
  c = translate_cloud(c, -v.dims().center());
  return estimate_normals(c, k).cloud;
}

}  // namespace

RegistrationResult register_volumes(const Volume& moving, const Volume& fixed,
                                    const PipelineConfig& cfg, bool emit_moved) {
  cfg.validate();
  if (!(moving.dims() == fixed.dims()))
    throw StageError("preprocess", "moving " + moving.dims().str() + " and fixed " +
                                       fixed.dims().str() + " dims differ");

  RegistrationResult res;
  const StageToggles& st = cfg.stages;

  if (st.s11 || st.s12) {
    auto t0 = Clock::now();
    const auto clouds = run_stage("surface", [&] {
      return std::pair{surface_cloud(moving, cfg.moving_threshold, cfg.closing_radius, cfg.normal_neighbors),
                       surface_cloud(fixed, cfg.fixed_threshold, cfg.closing_radius, cfg.normal_neighbors)};
    });
    const PointCloud& mcloud = clouds.first;
    const PointCloud& fcloud = clouds.second;
    res.moving_points = mcloud.size();
    res.fixed_points = fcloud.size();
    const RigidTransform center = center_align(mcloud, fcloud);
    res.timings.surface_s = seconds_since(t0);

    if (st.s11) {
      t0 = Clock::now();
      res.ransac = run_stage("s11", [&] {
        PointCloud m = transform_cloud(mcloud, center), f = fcloud;
        if (cfg.stage1_downsample > 0.0) {
          m = voxel_downsample(m, cfg.stage1_downsample);
          f = voxel_downsample(f, cfg.stage1_downsample);
        }
        const FeatureCloud mf = compute_fpfh(m, cfg.fpfh_radius, cfg.fpfh_max_neighbors);
        const FeatureCloud ff = compute_fpfh(f, cfg.fpfh_radius, cfg.fpfh_max_neighbors);
        return ransac_register(mf, ff, cfg.ransac, center);
      });
      res.t_11 = res.ransac->transform;
      res.timings.s11_s = seconds_since(t0);
    }
    if (st.s12) {
      t0 = Clock::now();
      const RigidTransform init = st.s11 ? res.t_11 : center;
      res.icp = run_stage("s12", [&] { return point_to_plane_icp(mcloud, fcloud, init, cfg.icp); });
      res.t_12 = res.icp->transform;
      res.timings.s12_s = seconds_since(t0);
    }
    res.t_1 = st.s12 ? res.t_12 : res.t_11;
  }

  if (st.s2) {
    const auto t0 = Clock::now();
    const Stage2Result s2 = run_stage("s2", [&] {
      const Volume aligned = resample_rigid(moving, res.t_1, cfg.intermediate_interpolation);
      return stage2_refine(aligned, fixed, cfg.stage2);
    });
    res.t_2 = s2.t2;
    res.stage2_peak = Peak{s2.shift, s2.score};
    res.timings.s2_s = seconds_since(t0);
  }

  res.t_overall = compose(res.t_2, res.t_1);
  if (emit_moved) {
    const auto t0 = Clock::now();
    res.moved = run_stage("resample", [&] {
      return resample_rigid(moving, res.t_overall, cfg.final_interpolation);
    });
    res.timings.resample_s = seconds_since(t0);
  }
  return res;
}

VolumePair preprocess_pair(const Volume& moving_raw, const Volume& fixed_raw, const PreprocessConfig& cfg) {
  return run_stage("preprocess", [&] {
    Volume m = moving_raw;
    Volume f = fixed_raw.voxel_size() == moving_raw.voxel_size()
                   ? fixed_raw
                   : resample_to(fixed_raw, moving_raw.voxel_size());
    const auto zcrop = [](const Volume& v, const std::optional<std::pair<int, int>>& r) {
      if (!r) return v;
      const Dims& d = v.dims();
      if (r->first < 0 || r->second > d.z || r->first >= r->second)
        throw InvalidArgument("slice range outside [0, " + std::to_string(d.z) + ")");
      return crop(v, Eigen::Vector3i(0, 0, r->first), Dims{d.x, d.y, r->second - r->first});
    };
    m = zcrop(m, cfg.moving_z_range);
    f = zcrop(f, cfg.fixed_z_range);
    const Dims target{std::max(m.dims().x, f.dims().x), std::max(m.dims().y, f.dims().y),
                      std::max(m.dims().z, f.dims().z)};
    if (!(m.dims() == target)) m = pad_to(m, target);
    if (!(f.dims() == target)) f = pad_to(f, target);
    return VolumePair{normalize_0_255(m), normalize_0_255(f)};
  });
}

RigidTransform random_pretransform(std::uint64_t seed, double max_translation) {
  StreamRng rng(seed, 0);
  const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double mag = rng.uniform(0.0, max_translation);
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return RigidTransform::translation(mag * std::cos(dir), mag * std::sin(dir), 0.0) *
         RigidTransform::rotation_z(angle);
}

}  // namespace bigreg
