#include "boxlift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"

namespace boxlift {

namespace {
constexpr double kOrthonormalTol = 1e-9;
}

void CameraIntrinsics::validate() const {
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy) ||
      !std::isfinite(skew)) {
    throw std::invalid_argument("camera intrinsics must be finite");
  }
  if (fx <= 0.0 || fy <= 0.0) throw std::invalid_argument("focal lengths must be positive");
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw std::invalid_argument("rotation has non-finite entries");
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthonormalTol || std::abs(m.determinant() - 1.0) > kOrthonormalTol) {
    throw std::invalid_argument("matrix is not a proper rotation");
  }
}

Rotation Rotation::transposed() const { return Rotation(m_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& other) const { return Rotation(m_ * other.m_, Unchecked{}); }

void Dimensions::validate() const {
  if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0) || !std::isfinite(dx) || !std::isfinite(dy) ||
      !std::isfinite(dz)) {
    throw std::invalid_argument("box dimensions must be finite and strictly positive");
  }
}

Rotation Box3D::rotation() const { return rotation_from_angles(yaw, pitch, roll); }

Rotation rotation_from_angles(double yaw, double pitch, double roll) {
  if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(roll)) {
    throw std::invalid_argument("rotation angles must be finite");
  }
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  Mat3 r_yaw, r_pitch, r_roll;
  r_yaw << cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy;
  r_pitch << cp, -sp, 0.0, sp, cp, 0.0, 0.0, 0.0, 1.0;
  r_roll << 1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr;
  return Rotation(r_yaw * r_pitch * r_roll, Rotation::Unchecked{});
}

double yaw_from_rotation(const Rotation& r) {
  const Mat3& m = r.matrix();
  return wrap_angle(std::atan2(m(0, 2), m(0, 0)));
}

std::array<int, 3> corner_signs(int index) {
  if (index < 0 || index > 7) throw std::out_of_range("corner index must be in [0, 8)");
  return {(index & 1) ? -1 : 1, (index & 2) ? -1 : 1, (index & 4) ? -1 : 1};
}

int corner_index(int sx, int sy, int sz) { return (sx < 0 ? 1 : 0) | (sy < 0 ? 2 : 0) | (sz < 0 ? 4 : 0); }

std::array<Vec3, 8> box_vertices(const Dimensions& dims) {
  std::array<Vec3, 8> out;
  const Vec3 half = 0.5 * dims.as_vector();
  for (int i = 0; i < 8; ++i) {
    const auto s = corner_signs(i);
    out[i] = Vec3(s[0] * half.x(), s[1] * half.y(), s[2] * half.z());
  }
  return out;
}

Vec2 project(const CameraIntrinsics& k, const Rotation& r, const Vec3& t, const Vec3& object_point) {
  const Vec3 p = r * object_point + t;
  if (!(p.z() > 0.0)) throw NonPositiveDepth(p.z());
  const double u = (k.fx * p.x() + k.skew * p.y()) / p.z() + k.cx;
  const double v = k.fy * p.y() / p.z() + k.cy;
  return {u, v};
}

Box2D project_box(const CameraIntrinsics& k, const Rotation& r, const Vec3& t, const Dimensions& dims) {
  Box2D out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& x : box_vertices(dims)) {
    const Vec2 px = project(k, r, t, x);
    out.x_min = std::min(out.x_min, px.x());
    out.x_max = std::max(out.x_max, px.x());
    out.y_min = std::min(out.y_min, px.y());
    out.y_max = std::max(out.y_max, px.y());
  }
  return out;
}

Box2D project_box(const CameraIntrinsics& k, const Box3D& box) {
  return project_box(k, box.rotation(), box.center, box.dims);
}

std::array<Vec3, 8> box_corners(const Box3D& box) {
  const Rotation r = box.rotation();
  auto corners = box_vertices(box.dims);
  for (Vec3& c : corners) c = r * c + box.center;
  return corners;
}

}  // namespace boxlift
