#include "bigreg/transform.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "bigreg/error.hpp"

namespace bigreg {

namespace {

constexpr double kDriftTolerance = 1e-9;

double orthonormality_defect(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
}

}  // namespace

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation,
                               const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite())
    throw InvalidArgument("rigid transform has non-finite entries");
  if (orthonormality_defect(rotation) > 1e-6 || rotation.determinant() < 0.0)
    throw InvalidArgument("rotation block is not a proper rotation");
  if (orthonormality_defect(rotation) > kDriftTolerance)
    rotation_ = orthonormalize(rotation);
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw InvalidArgument("homogeneous bottom row must be [0 0 0 1]");
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

RigidTransform RigidTransform::translation(double x, double y, double z) {
  return translation(Eigen::Vector3d(x, y, z));
}

RigidTransform RigidTransform::translation(const Eigen::Vector3d& t) {
  RigidTransform out;
  out.translation_ = t;
  return out;
}

RigidTransform RigidTransform::axis_angle(const Eigen::Vector3d& axis, double radians) {
  RigidTransform out;
  out.rotation_ = Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
  return out;
}

RigidTransform RigidTransform::rotation_z(double radians) {
  // Built from cos/sin directly so quarter turns stay as exact as possible.
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  RigidTransform out;
  out.rotation_ << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  if (orthonormality_defect(out.rotation_) > kDriftTolerance)
    out.rotation_ = orthonormalize(out.rotation_);
  return out;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

RigidTransform invert(const RigidTransform& t) {
  const Eigen::Matrix3d rt = t.rotation().transpose();
  return {rt, -(rt * t.translation())};
}

Point3 apply_point(const RigidTransform& t, const Point3& p) { return t.apply(p); }

RigidTransform umeyama_fit(std::span<const Point3> src, std::span<const Point3> dst) {
  if (src.size() != dst.size())
    throw InvalidArgument("umeyama_fit: source and destination sizes differ");
  if (src.size() < 3)
    throw DegenerateConfiguration("umeyama_fit: need at least three point pairs");

  const double n = static_cast<double>(src.size());
  Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_dst = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mean_src += src[i];
    mean_dst += dst[i];
  }
  mean_src /= n;
  mean_dst /= n;

  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d a = src[i] - mean_src;
    const Eigen::Vector3d b = dst[i] - mean_dst;
    cross += b * a.transpose();
    src_scatter += a * a.transpose();
  }

  // Collinear (or coincident) sources leave a rotation about their line free.
  Eigen::JacobiSVD<Eigen::Matrix3d> scatter_svd(src_scatter);
  const Eigen::Vector3d sv = scatter_svd.singularValues();
  if (sv(0) <= 0.0 || sv(1) <= 1e-12 * sv(0))
    throw DegenerateConfiguration("umeyama_fit: source points are collinear");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  if ((u * v.transpose()).determinant() < 0.0) s(2, 2) = -1.0;
  const Eigen::Matrix3d r = u * s * v.transpose();
  return {r, mean_dst - r * mean_src};
}

namespace {

double rotation_angle_rad(const Eigen::Matrix3d& r) {
  // atan2 form of arccos((tr - 1) / 2); accurate near 0 and 180 degrees.
  const double c = 0.5 * (r.trace() - 1.0);
  const Eigen::Vector3d w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double s = 0.5 * w.norm();
  return std::atan2(s, c);
}

}  // namespace

double rotation_error_deg(const RigidTransform& est, const RigidTransform& gt) {
  const Eigen::Matrix3d delta = est.rotation() * gt.rotation().transpose();
  const double deg = rotation_angle_rad(delta) * 180.0 / std::numbers::pi;
  return std::clamp(deg, 0.0, 180.0);
}

double rotation_angle_deg(const RigidTransform& t) {
  return std::clamp(rotation_angle_rad(t.rotation()) * 180.0 / std::numbers::pi, 0.0, 180.0);
}

double translation_error_um(const RigidTransform& est, const RigidTransform& gt,
                            const Eigen::Vector3d& voxel_size_um) {
  const Eigen::Vector3d d = (est.translation() - gt.translation()).cwiseProduct(voxel_size_um);
  return d.norm();
}

std::string format_transform(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  std::ostringstream out;
  out << std::setprecision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c) out << ' ';
      out << m(r, c);
    }
    out << '\n';
  }
  return out.str();
}

RigidTransform parse_transform(const std::string& text) {
  std::istringstream in(text);
  Eigen::Matrix4d m;
  std::string line;
  int row = 0;
  while (row < 4 && std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    for (int c = 0; c < 4; ++c) {
      if (!(ls >> m(row, c)))
        throw FormatError("transform text: row " + std::to_string(row) + " needs 4 numbers");
    }
    std::string extra;
    if (ls >> extra)
      throw FormatError("transform text: row " + std::to_string(row) + " has extra tokens");
    ++row;
  }
  if (row != 4) throw FormatError("transform text: expected 4 rows");
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw FormatError("transform text: trailing content after 4 rows");
  }
  try {
    return RigidTransform::from_matrix(m);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("transform text: ") + e.what());
  }
}

void save_transform(const RigidTransform& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_transform(t);
  if (!out) throw IoError("failed writing " + path.string());
}

RigidTransform load_transform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_transform(buf.str());
}

}  // namespace bigreg
