#include "bigreg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "bigreg/error.hpp"
#include "bigreg/pipeline.hpp"
#include "bigreg/rng.hpp"

namespace bigreg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCrestAngle = kPi / 3.0;
constexpr double kCrestWidth = 0.3;  // radians

double coverage(double signed_distance) { return std::clamp(0.5 - signed_distance, 0.0, 1.0); }

// Approximate signed distance (voxels) to the boundary of an ellipse with
// semi-axes (a, b) scaled radially by `scale(theta)`, first-order in the
// implicit function.
double ellipse_sd(double u, double v, double a, double b, double scale) {
  const double rho = std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
  if (rho < 1e-12) return -scale * std::min(a, b);
  const double grad = std::sqrt((u / (a * a)) * (u / (a * a)) + (v / (b * b)) * (v / (b * b))) / rho;
  return (rho - scale) / grad;
}

struct Tube {
  const PhantomSpec& spec;
  double zh;  // half-length

  struct Local {
    double u, v, s, zsd;
    double cap_out, cap_in;  // end-dome radial multipliers
  };

  static double dome(double z, double half_length, double cap) {
    const double t = (std::abs(z) - (half_length - cap)) / cap;
    if (t <= 0.0) return 1.0;
    return t >= 1.0 ? 0.0 : std::sqrt(1.0 - t * t);
  }

  double inner_half_length() const {
    return zh - std::min(spec.outer_a - spec.inner_a, spec.outer_b - spec.inner_b);
  }

  Local local(const Point3& q) const {
    const double s = std::clamp(q.z() / zh, -1.0, 1.0);
    const double cx = spec.bend * s * s;
    const double cy = 0.3 * spec.bend * s * s * s;
    const double psi = 0.5 * spec.twist * s;
    const double dx = q.x() - cx, dy = q.y() - cy;
    const double zi = inner_half_length();
    return {std::cos(psi) * dx + std::sin(psi) * dy,
            -std::sin(psi) * dx + std::cos(psi) * dy,
            s,
            std::abs(q.z()) - zh,
            dome(q.z(), zh, spec.end_cap),
            dome(q.z(), zi, std::max(spec.end_cap - (zh - zi), 2.0))};
  }

  // Radial scale of the outer boundary at parametric angle theta: crest
  // ridge plus a three-lobed modulation.
  double outer_scale(double theta, double a) const {
    const double d = std::remainder(theta - kCrestAngle, 2.0 * kPi);
    return 1.0 + (spec.crest / a) * std::exp(-d * d / (2.0 * kCrestWidth * kCrestWidth)) +
           spec.lobe * std::cos(3.0 * theta + 0.4);
  }

  double outer_sd(const Local& l) const {
    const double a = spec.outer_a + spec.flare * l.s, b = spec.outer_b + spec.flare * l.s;
    const double scale = l.cap_out * outer_scale(std::atan2(l.v / b, l.u / a), a);
    return std::max(ellipse_sd(l.u, l.v, a, b, scale), l.zsd);
  }

  double inner_sd(const Local& l) const {
    const double a = spec.inner_a + spec.flare * l.s, b = spec.inner_b + spec.flare * l.s;
    return std::max(ellipse_sd(l.u, l.v, a, b, l.cap_in), std::abs(l.s * zh) - inner_half_length());
  }

  /// Points on the outer surface, sampled densely in z and angle.
  std::vector<Point3> surface_samples() const {
    std::vector<Point3> pts;
    pts.reserve(65 * 360);
    for (int iz = 0; iz <= 64; ++iz) {
      const double z = zh * (2.0 * iz / 64.0 - 1.0);
      const double s = z / zh;
      const double a = spec.outer_a + spec.flare * s, b = spec.outer_b + spec.flare * s;
      const double psi = 0.5 * spec.twist * s;
      const double m = dome(z, zh, spec.end_cap);
      for (int it = 0; it < 360; ++it) {
        const double th = 2.0 * kPi * it / 360.0;
        const double sc = m * outer_scale(th, a);
        const double u = sc * a * std::cos(th), v = sc * b * std::sin(th);
        pts.emplace_back(std::cos(psi) * u - std::sin(psi) * v + spec.bend * s * s,
                         std::sin(psi) * u + std::cos(psi) * v + 0.3 * spec.bend * s * s * s, z);
      }
    }
    return pts;
  }

  /// Largest distance of the outer surface from the z-axis, including the
  /// half voxel of partial coverage.
  double radial_extent() const {
    double r = 0.0;
    for (const Point3& p : surface_samples()) r = std::max(r, std::hypot(p.x(), p.y()));
    return r + 0.5;
  }
};

// Axis-aligned (along z) feature: lacuna when half_length == 0 uses the
// ellipsoid radii; canal is a capsule of radius `radius`.
struct Feature {
  Point3 center;
  bool canal = false;
  double half_length = 0.0;

  double reach(const PhantomSpec& s) const {
    return canal ? half_length + s.canal_radius : s.lacuna_radii.maxCoeff();
  }
  double radial(const PhantomSpec& s) const {
    return canal ? s.canal_radius : std::max(s.lacuna_radii.x(), s.lacuna_radii.y());
  }
  double sd(const Point3& q, const PhantomSpec& s) const {
    const Eigen::Vector3d d = q - center;
    if (canal) {
      const double dz = std::max(0.0, std::abs(d.z()) - half_length);
      return std::sqrt(d.x() * d.x() + d.y() * d.y() + dz * dz) - s.canal_radius;
    }
    const Eigen::Vector3d r = s.lacuna_radii;
    const Eigen::Vector3d n = d.cwiseQuotient(r);
    const double rho = n.norm();
    if (rho < 1e-12) return -r.minCoeff();
    const double grad = d.cwiseQuotient(r.cwiseProduct(r)).norm() / rho;
    return (rho - 1.0) / grad;
  }
};

double core_distance(const Feature& a, const Feature& b) {
  const Eigen::Vector3d d = a.center - b.center;
  const double gap = std::max(0.0, std::abs(d.z()) - a.half_length - b.half_length);
  return std::sqrt(d.x() * d.x() + d.y() * d.y() + gap * gap);
}

void validate(const PhantomSpec& s) {
  if (!s.dims.positive()) throw SpecInfeasible("dims must be positive");
  if (!(s.voxel_size_um > 0.0)) throw SpecInfeasible("voxel size must be positive");
  if (!(s.inner_a > 0.0 && s.inner_b > 0.0)) throw SpecInfeasible("inner radii must be positive");
  if (!(s.inner_a < s.outer_a && s.inner_b < s.outer_b))
    throw SpecInfeasible("inner radius must be smaller than outer radius");
  if (s.inner_a - std::abs(s.flare) <= 0.0 || s.inner_b - std::abs(s.flare) <= 0.0)
    throw SpecInfeasible("flare collapses the marrow cavity");
  if (s.lacuna_radii.minCoeff() < 1.0 || s.canal_radius < 1.0)
    throw SpecInfeasible("feature sizes must be at least 2 voxels across");
  if (s.lacuna_count < 0 || s.canal_count < 0 || s.landmark_count < 0)
    throw SpecInfeasible("feature counts must be non-negative");
  if (s.noise_sigma < 0.0 || s.haze_amplitude < 0.0 || s.haze_blobs < 0)
    throw SpecInfeasible("noise and haze settings must be non-negative");
  if (!(s.lsfm_crop_fraction >= 0.0 && s.lsfm_crop_fraction < 1.0))
    throw SpecInfeasible("lsfm crop fraction must lie in [0, 1)");
  if (s.max_translation < 0.0) throw SpecInfeasible("max translation must be non-negative");
  const double needed = 2.0 * (std::max(s.lacuna_radii.x(), s.lacuna_radii.y()) + 1.0);
  if (std::min(s.outer_a - s.inner_a, s.outer_b - s.inner_b) < needed)
    throw SpecInfeasible("shell thickness too small for the features");
  if (!(s.lobe >= 0.0 && s.lobe < 0.3)) throw SpecInfeasible("lobe modulation must lie in [0, 0.3)");
  if (0.5 * (s.dims.z - 1) - s.end_margin < 2.0 * s.canal_length + s.end_cap)
    throw SpecInfeasible("volume too short along z for the shaft");
  if (!(s.end_cap >= 1.0)) throw SpecInfeasible("end cap length must be at least 1 voxel");
  if (s.lsfm_tissue_thickness < 0.0) throw SpecInfeasible("lsfm tissue thickness must be non-negative");
}

}  // namespace

PhantomSpec PhantomSpec::for_dims(Dims d) {
  PhantomSpec s;
  s.dims = d;
  const Tube tube{s, 0.5 * (d.z - 1) - s.end_margin};
  const double room = 0.5 * (std::min(d.x, d.y) - 1) - tube.radial_extent() - 1.0;
  s.max_translation = std::clamp(room, 0.0, 100.0);
  const double zf = std::max(0.0, static_cast<double>(d.z) / 128.0);
  s.lacuna_count = static_cast<int>(std::lround(s.lacuna_count * zf));
  s.canal_count = static_cast<int>(std::lround(s.canal_count * zf));
  return s;
}

PhantomPair generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Dims& dims = spec.dims;
  const Tube tube{spec, 0.5 * (dims.z - 1) - spec.end_margin};
  const Eigen::Vector3d half = dims.center();

  PhantomPair out;
  out.gt = spec.gt ? *spec.gt : random_pretransform(mix64(spec.seed, 0x67), spec.max_translation);
  const RigidTransform gt_inv = invert(out.gt);

  // The object, wherever gt puts it in the moving grid, must stay inside
  // with a voxel to spare.
  const double ext = tube.radial_extent();
  const Eigen::Vector3d limit = half - Eigen::Vector3d::Constant(1.0);
  for (const Point3& p : tube.surface_samples())
    if (((gt_inv.apply(p).cwiseAbs().array() + 0.5) > limit.array()).any())
      throw SpecInfeasible("object displaced by gt leaves the moving volume (dims " + dims.str() + ")");
  if (ext + spec.lsfm_tissue_thickness > std::min(limit.x(), limit.y()) || tube.zh + 0.5 > limit.z())
    throw SpecInfeasible("object does not fit the fixed volume (dims " + dims.str() + ")");

  // Feature placement by rejection sampling inside the shell.
  StreamRng place(mix64(spec.seed, 0x70), 0);
  std::vector<Feature> features;
  const auto place_kind = [&](int count, bool canal, const char* what) {
    const std::int64_t max_attempts = 4000 + 4000LL * count;
    int placed = 0;
    for (std::int64_t attempt = 0; placed < count; ++attempt) {
      if (attempt >= max_attempts)
        throw SpecInfeasible(std::string("cannot place ") + std::to_string(count) + " " + what +
                             " inside the shell with spacing " + std::to_string(spec.min_spacing));
      Feature f;
      f.canal = canal;
      f.half_length = canal ? 0.5 * spec.canal_length : 0.0;
      const double r = ext;
      const double zr = tube.zh - f.reach(spec) - 2.0;
      f.center = Point3(place.uniform(-r, r), place.uniform(-r, r), place.uniform(-zr, zr));
      const double margin = f.radial(spec) + 1.0;
      bool ok = true;
      for (double dz : {-f.half_length, 0.0, f.half_length}) {
        const Point3 q = f.center + Eigen::Vector3d(0, 0, dz);
        const auto l = tube.local(q);
        if (tube.outer_sd(l) > -margin || tube.inner_sd(l) < margin) ok = false;
      }
      for (const auto& g : features)
        if (ok && core_distance(f, g) < spec.min_spacing) ok = false;
      if (!ok) continue;
      features.push_back(f);
      ++placed;
    }
  };
  place_kind(spec.lacuna_count, false, "lacunae");
  place_kind(spec.canal_count, true, "canals");

  // Crop plane for the LSFM-like volume (fixed frame): drop y < y_cut.
  const double b_lo = spec.outer_b - std::abs(spec.flare);
  const double y_cut = -b_lo + 2.0 * b_lo * spec.lsfm_crop_fraction;
  const bool cropping = spec.lsfm_crop_fraction > 0.0;

  // Haze blobs sit inside the object.
  StreamRng haze_rng(mix64(spec.seed, 0x68), 0);
  std::vector<std::pair<Point3, double>> blobs;
  for (int i = 0; i < spec.haze_blobs; ++i) {
    const double a = haze_rng.uniform(0.0, 2.0 * kPi);
    const Point3 c(0.6 * spec.outer_a * std::cos(a), 0.6 * spec.outer_b * std::sin(a),
                   haze_rng.uniform(-tube.zh, tube.zh));
    blobs.emplace_back(c, spec.haze_amplitude * haze_rng.uniform(0.5, 1.0));
  }

  struct Contrast {
    double bone, marrow, feature;
  };

  // `to_canonical` maps centered voxel coordinates of the grid being drawn to
  // the phantom frame.
  const auto render = [&](const RigidTransform& to_canonical, const Contrast& c, bool lsfm,
                          std::uint64_t noise_stream) {
    Volume v(dims, Eigen::Vector3d::Constant(spec.voxel_size_um), 0.0f);
    std::vector<double> value(dims.count(), 0.0);
    std::vector<std::uint8_t> support(dims.count(), 0);

#pragma omp parallel for schedule(static)
    for (int k = 0; k < dims.z; ++k)
      for (int j = 0; j < dims.y; ++j)
        for (int i = 0; i < dims.x; ++i) {
          const Point3 q = to_canonical.apply(Point3(i, j, k) - half);
          if (std::abs(q.z()) > tube.zh + 1.0) continue;
          if (std::hypot(q.x(), q.y()) > ext + spec.lsfm_tissue_thickness + 1.0) continue;
          const auto l = tube.local(q);
          const double sd_out = tube.outer_sd(l);
          const double c_out = coverage(sd_out);
          double c_tissue = 0.0;
          if (lsfm && spec.lsfm_tissue_thickness > 0.0) {
            const Point3 back = q - Eigen::Vector3d(0.0, spec.lsfm_tissue_thickness, 0.0);
            c_tissue = std::max(0.0, coverage(tube.outer_sd(tube.local(back))) - c_out);
          }
          if (c_out <= 0.0 && c_tissue <= 0.0) continue;
          const double c_in = std::min(coverage(tube.inner_sd(l)), c_out);
          double val = c.bone * (c_out - c_in) + c.marrow * c_in + spec.lsfm_tissue * c_tissue;
          if (lsfm && cropping) {
            const double keep = std::clamp(0.5 + (q.y() - y_cut), 0.0, 1.0);
            if (keep <= 0.0) continue;
            val *= keep;
          }
          const std::size_t idx = dims.index(i, j, k);
          value[idx] = val;
          support[idx] = 1;
        }

    // Features: only voxels within each feature's bounding sphere.
    const RigidTransform from_canonical = invert(to_canonical);
    for (const auto& f : features) {
      const Point3 pc = from_canonical.apply(f.center) + half;
      const double r = f.reach(spec) + 1.5;
      const Eigen::Vector3i lo = (pc.array() - r).floor().cast<int>().max(0);
      const Eigen::Vector3i hi =
          (pc.array() + r).ceil().cast<int>().min(Eigen::Array3i(dims.x - 1, dims.y - 1, dims.z - 1));
      for (int k = lo.z(); k <= hi.z(); ++k)
        for (int j = lo.y(); j <= hi.y(); ++j)
          for (int i = lo.x(); i <= hi.x(); ++i) {
            const std::size_t idx = dims.index(i, j, k);
            if (!support[idx]) continue;
            const Point3 q = to_canonical.apply(Point3(i, j, k) - half);
            const double cf = coverage(f.sd(q, spec));
            if (cf <= 0.0) continue;
            double keep = 1.0;
            if (lsfm && cropping) keep = std::clamp(0.5 + (q.y() - y_cut), 0.0, 1.0);
            value[idx] += keep * cf * (c.feature - c.bone);
          }
    }

    auto data = v.data();
#pragma omp parallel for schedule(static)
    for (int k = 0; k < dims.z; ++k)
      for (int j = 0; j < dims.y; ++j)
        for (int i = 0; i < dims.x; ++i) {
          const std::size_t idx = dims.index(i, j, k);
          if (!support[idx]) continue;
          double val = value[idx];
          if (lsfm && !blobs.empty()) {
            const Point3 q = to_canonical.apply(Point3(i, j, k) - half);
            for (const auto& [bc, amp] : blobs)
              val += amp * std::exp(-(q - bc).squaredNorm() / (2.0 * spec.haze_sigma * spec.haze_sigma));
          }
          if (spec.noise_sigma > 0.0) {
            StreamRng rng(mix64(spec.seed, noise_stream), idx);
            val += spec.noise_sigma * rng.normal();
          }
          data[idx] = static_cast<float>(std::clamp(val, 0.0, 255.0));
        }
    return v;
  };

  out.moving = render(out.gt, {spec.xrm_bone, spec.xrm_marrow, spec.xrm_feature}, false, 0x6e6d);
  out.fixed = render(RigidTransform::identity(), {spec.lsfm_bone, spec.lsfm_marrow, spec.lsfm_feature},
                     true, 0x6e66);

  // Landmarks: features fully present in both volumes.
  out.landmarks.voxel_size_um = spec.voxel_size_um;
  for (const auto& f : features) {
    if (static_cast<int>(out.landmarks.size()) >= spec.landmark_count) break;
    if (cropping && f.center.y() - f.radial(spec) - 1.0 < y_cut) continue;
    out.landmarks.fixed.push_back(f.center);
    out.landmarks.moving.push_back(gt_inv.apply(f.center));
  }
  return out;
}

}  // namespace bigreg
