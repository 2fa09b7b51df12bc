#include "bigreg/evaluation.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bigreg/error.hpp"
#include "bigreg/rng.hpp"

namespace bigreg {

double min_spacing_um(const std::vector<Point3>& points, double voxel_size_um) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, (points[i] - points[j]).norm());
  return best * voxel_size_um;
}

void check_landmark_spacing(const LandmarkSet& l, double min_um) {
  if (min_spacing_um(l.moving, l.voxel_size_um) <= min_um ||
      min_spacing_um(l.fixed, l.voxel_size_um) <= min_um)
    throw InvalidArgument("landmarks closer than " + std::to_string(min_um) + " um to a neighbor");
}

std::vector<double> landmark_residuals_um(const LandmarkSet& l, const RigidTransform& t) {
  if (l.moving.size() != l.fixed.size()) throw InvalidArgument("landmarks: unpaired points");
  std::vector<double> r(l.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    r[i] = (t.apply(l.moving[i]) - l.fixed[i]).norm() * l.voxel_size_um;
  return r;
}

double landmark_distance(const LandmarkSet& l, const RigidTransform& t) {
  if (l.empty()) throw InvalidArgument("landmark_distance: empty landmark set");
  const auto r = landmark_residuals_um(l, t);
  double s = 0.0;
  for (double v : r) s += v;
  return s / static_cast<double>(r.size());
}

double landmark_fitness(const LandmarkSet& l, const RigidTransform& t, double tau_um) {
  if (l.empty()) throw InvalidArgument("landmark_fitness: empty landmark set");
  const auto r = landmark_residuals_um(l, t);
  const auto in = std::count_if(r.begin(), r.end(), [tau_um](double v) { return v <= tau_um; });
  return static_cast<double>(in) / static_cast<double>(r.size());
}

LandmarkGt landmark_ransac_gt(const LandmarkSet& l, std::int64_t iterations, double inlier_tau_um,
                              std::uint64_t seed) {
  if (l.moving.size() != l.fixed.size()) throw InvalidArgument("landmarks: unpaired points");
  if (l.size() < 3) throw DegenerateConfiguration("landmark_ransac_gt: need at least three pairs");
  if (iterations < 1) throw InvalidArgument("landmark_ransac_gt: iterations must be >= 1");
  const std::size_t n = l.size();

  std::vector<std::int64_t> counts(static_cast<std::size_t>(iterations), -1);
#pragma omp parallel for schedule(static)
  for (std::int64_t it = 0; it < iterations; ++it) {
    StreamRng rng(seed, static_cast<std::uint64_t>(it));
    std::array<std::size_t, 3> s;
    s[0] = rng.below(n);
    do s[1] = rng.below(n); while (s[1] == s[0]);
    do s[2] = rng.below(n); while (s[2] == s[0] || s[2] == s[1]);
    const std::array<Point3, 3> src{l.moving[s[0]], l.moving[s[1]], l.moving[s[2]]};
    const std::array<Point3, 3> dst{l.fixed[s[0]], l.fixed[s[1]], l.fixed[s[2]]};
    RigidTransform t;
    try {
      t = umeyama_fit(src, dst);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    std::int64_t c = 0;
    for (std::size_t i = 0; i < n; ++i)
      if ((t.apply(l.moving[i]) - l.fixed[i]).norm() * l.voxel_size_um <= inlier_tau_um) ++c;
    counts[it] = c;
  }
  const auto best = std::max_element(counts.begin(), counts.end());  // first maximum
  if (*best < 0) throw DegenerateConfiguration("landmark_ransac_gt: every sample was degenerate");

  // Replay the winning sample, then re-fit on its inliers.
  StreamRng rng(seed, static_cast<std::uint64_t>(best - counts.begin()));
  std::array<std::size_t, 3> s;
  s[0] = rng.below(n);
  do s[1] = rng.below(n); while (s[1] == s[0]);
  do s[2] = rng.below(n); while (s[2] == s[0] || s[2] == s[1]);
  const std::array<Point3, 3> src{l.moving[s[0]], l.moving[s[1]], l.moving[s[2]]};
  const std::array<Point3, 3> dst{l.fixed[s[0]], l.fixed[s[1]], l.fixed[s[2]]};
  LandmarkGt out;
  out.transform = umeyama_fit(src, dst);
  std::vector<Point3> in_m, in_f;
  for (std::size_t i = 0; i < n; ++i)
    if ((out.transform.apply(l.moving[i]) - l.fixed[i]).norm() * l.voxel_size_um <= inlier_tau_um) {
      out.inliers.push_back(i);
      in_m.push_back(l.moving[i]);
      in_f.push_back(l.fixed[i]);
    }
  if (in_m.size() >= 3) {
    try {
      out.transform = umeyama_fit(in_m, in_f);
    } catch (const DegenerateConfiguration&) {
      // collinear inlier set: keep the sample fit
    }
  }
  return out;
}

Metrics evaluate_metrics(const LandmarkSet& l, const RigidTransform& t, const RigidTransform& gt,
                         double tau_um) {
  Metrics m;
  m.lmd_um = landmark_distance(l, t);
  m.lm_fitness = landmark_fitness(l, t, tau_um);
  m.rot_err_deg = rotation_error_deg(t, gt);
  m.trans_err_um = translation_error_um(t, gt, Eigen::Vector3d::Constant(l.voxel_size_um));
  return m;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
    throw FormatError("landmarks line " + std::to_string(line) + ": bad number '" + f + "'");
  return v;
}

}  // namespace

LandmarkSet load_landmarks(const std::filesystem::path& path, double voxel_size_um) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  LandmarkSet l;
  l.voxel_size_um = voxel_size_um;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (!header) {
      if (fields != std::vector<std::string>{"mx", "my", "mz", "fx", "fy", "fz"})
        throw FormatError("landmarks: expected header mx,my,mz,fx,fy,fz");
      header = true;
      continue;
    }
    if (fields.size() != 6)
      throw FormatError("landmarks line " + std::to_string(lineno) + ": expected 6 columns");
    std::array<double, 6> v;
    for (int i = 0; i < 6; ++i) v[i] = parse_number(fields[i], lineno);
    l.moving.emplace_back(v[0], v[1], v[2]);
    l.fixed.emplace_back(v[3], v[4], v[5]);
  }
  if (!header) throw FormatError("landmarks: missing header");
  return l;
}

void save_landmarks(const LandmarkSet& l, const std::filesystem::path& path) {
  if (l.moving.size() != l.fixed.size()) throw InvalidArgument("landmarks: unpaired points");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "mx,my,mz,fx,fy,fz\n" << std::setprecision(17);
  for (std::size_t i = 0; i < l.size(); ++i) {
    const auto& m = l.moving[i];
    const auto& f = l.fixed[i];
    out << m.x() << ',' << m.y() << ',' << m.z() << ',' << f.x() << ',' << f.y() << ',' << f.z() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bigreg
