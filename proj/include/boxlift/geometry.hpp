#pragma once

#include <array>

#include <Eigen/Core>

namespace boxlift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole intrinsics. Pixel coordinates: u to the right, v down.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  // Throws std::invalid_argument unless fx, fy > 0 and every field is finite.
  void validate() const;
  Mat3 matrix() const;
};

// Proper rotation matrix (R^T R = I and det R = 1, both within 1e-9).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  // Throws std::invalid_argument when `m` is not a proper rotation.
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }

  const Mat3& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation transposed() const;
  Rotation operator*(const Rotation& other) const;

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  friend Rotation rotation_from_angles(double, double, double);

  Mat3 m_;
};

// Object-frame extents in meters: dx along the length axis, dy along the
// height axis (pointing down), dz along the width axis.
struct Dimensions {
  double dx = 1.0;
  double dy = 1.0;
  double dz = 1.0;

  void validate() const;  // std::invalid_argument unless all strictly positive
  Vec3 as_vector() const { return {dx, dy, dz}; }
  static Dimensions from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
  double volume() const { return dx * dy * dz; }
};

// Center, dimensions and orientation of a 3D box in the camera frame
// (x right, y down, z forward). Angles are kept in (-pi, pi].
struct Box3D {
  Vec3 center = Vec3::Zero();
  Dimensions dims;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Rotation rotation() const;
  bool upright() const { return pitch == 0.0 && roll == 0.0; }
};

// Axis-aligned image rectangle in pixels.
struct Box2D {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return valid() ? width() * height() : 0.0; }
  double center_u() const { return 0.5 * (x_min + x_max); }
  double center_v() const { return 0.5 * (y_min + y_max); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
};

// R = R_yaw(yaw) * R_pitch(pitch) * R_roll(roll).
//   yaw:   about the height (y) axis, same sign as KITTI rotation_y;
//          R_yaw = [c 0 s; 0 1 0; -s 0 c]
//   pitch: about the width (z) axis
//   roll:  about the length (x) axis
Rotation rotation_from_angles(double yaw, double pitch, double roll);

// Yaw of a rotation that has no pitch or roll component.
double yaw_from_rotation(const Rotation& r);

// Sign of each object-frame coordinate of corner `index`: bit 0 flips x,
// bit 1 flips y, bit 2 flips z. Index 0 is (+,+,+), 1 is (-,+,+), ...,
// 7 is (-,-,-).
std::array<int, 3> corner_signs(int index);
int corner_index(int sx, int sy, int sz);

std::array<Vec3, 8> box_vertices(const Dimensions& dims);

// x = K [R T] X_o followed by perspective division.
// Throws NonPositiveDepth when the camera-frame depth is <= 0.
Vec2 project(const CameraIntrinsics& k, const Rotation& r, const Vec3& t, const Vec3& object_point);

// Tight rectangle around the eight projected vertices.
Box2D project_box(const CameraIntrinsics& k, const Rotation& r, const Vec3& t, const Dimensions& dims);
Box2D project_box(const CameraIntrinsics& k, const Box3D& box);

// Camera-frame corners of a posed box, in box_vertices order.
std::array<Vec3, 8> box_corners(const Box3D& box);

}  // namespace boxlift
