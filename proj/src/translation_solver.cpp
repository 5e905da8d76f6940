#include "boxlift/translation_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#include "boxlift/errors.hpp"

namespace boxlift {

namespace {

constexpr double kRankTolerance = 1e-10;

using SideMatrix = Eigen::Matrix<double, 4, 3>;
using SideVector = Eigen::Matrix<double, 4, 1>;

// Rows (row_s(K) - coord_s * row_3(K)) for left, right, top, bottom.
SideMatrix side_matrix(const CameraIntrinsics& k, const Box2D& box) {
  SideMatrix a;
  a << k.fx, k.skew, k.cx - box.x_min,  //
      k.fx, k.skew, k.cx - box.x_max,   //
      0.0, k.fy, k.cy - box.y_min,      //
      0.0, k.fy, k.cy - box.y_max;
  return a;
}

bool degenerate(const Box2D& box) {
  return !std::isfinite(box.x_min) || !std::isfinite(box.x_max) || !std::isfinite(box.y_min) ||
         !std::isfinite(box.y_max) || !(box.width() > 0.0) || !(box.height() > 0.0);
}

class SideSystem {
 public:
  SideSystem(const CameraIntrinsics& k, const Box2D& box)
      : a_(side_matrix(k, box)), svd_(a_, Eigen::ComputeFullU | Eigen::ComputeFullV) {}

  bool rank_deficient() const { return svd_.singularValues().minCoeff() < kRankTolerance; }

  // T and |A T - b|^2 for the corners assigned by `config`.
  TranslationSolution solve(const std::array<Vec3, 8>& rotated, const Configuration& config) const {
    SideVector b;
    for (int s = 0; s < 4; ++s) b(s) = -a_.row(s).dot(rotated[config.corners[s]]);
    TranslationSolution out;
    out.translation = svd_.solve(b);
    out.residual = (a_ * out.translation - b).squaredNorm();
    return out;
  }

 private:
  SideMatrix a_;
  Eigen::JacobiSVD<SideMatrix> svd_;
};

std::array<Vec3, 8> rotated_vertices(const Rotation& r, const Dimensions& dims) {
  auto v = box_vertices(dims);
  for (Vec3& x : v) x = r * x;
  return v;
}

bool all_in_front(const std::array<Vec3, 8>& rotated, const Vec3& t) {
  return std::all_of(rotated.begin(), rotated.end(), [&](const Vec3& x) { return x.z() + t.z() > 0.0; });
}

double reprojection_error(const CameraIntrinsics& k, const std::array<Vec3, 8>& rotated, const Vec3& t,
                          const Box2D& box) {
  double x_min = std::numeric_limits<double>::infinity(), y_min = x_min;
  double x_max = -x_min, y_max = -x_min;
  for (const Vec3& x : rotated) {
    const Vec3 p = x + t;
    const double u = (k.fx * p.x() + k.skew * p.y()) / p.z() + k.cx;
    const double v = k.fy * p.y() / p.z() + k.cy;
    x_min = std::min(x_min, u);
    x_max = std::max(x_max, u);
    y_min = std::min(y_min, v);
    y_max = std::max(y_max, v);
  }
  const double dl = x_min - box.x_min, dr = x_max - box.x_max;
  const double dt = y_min - box.y_min, db = y_max - box.y_max;
  return dl * dl + dr * dr + dt * dt + db * db;
}

std::vector<int> all_corners() { return {0, 1, 2, 3, 4, 5, 6, 7}; }

std::vector<int> face_corners(int sy) {
  std::vector<int> out;
  for (int i = 0; i < 8; ++i)
    if (corner_signs(i)[1] == sy) out.push_back(i);
  return out;
}

// Vertical edges (±dx, ±dz), represented by their bottom corner.
std::vector<int> vertical_edges() {
  std::vector<int> out;
  for (int sz : {1, -1})
    for (int sx : {1, -1}) out.push_back(corner_index(sx, 1, sz));
  return out;
}

// Corners (·, sy, ±dz) with the length sign resolved from the rotation.
std::vector<int> horizontal_corners(const std::vector<int>& height_signs, const Rotation& r) {
  const Mat3& m = r.matrix();
  // Depth offset of corner (sx, sy, sz) is m(2,0) sx dx/2 + m(2,1) sy dy/2 + m(2,2) sz dz/2;
  // the nearest/farthest diagonal of a horizontal face pairs sx = sz * sign(m20 m22).
  const int diagonal = (m(2, 0) * m(2, 2) < 0.0) ? -1 : 1;
  std::vector<int> out;
  for (int sy : height_signs)
    for (int sz : {1, -1}) out.push_back(corner_index(sz * diagonal, sy, sz));
  return out;
}

}  // namespace

std::string_view to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::General: return "general";
    case ConstraintMode::Upright: return "upright";
    case ConstraintMode::UprightZeroRoll: return "zeroroll";
    case ConstraintMode::KittiZeroPitchRoll: return "kitti";
  }
  return "unknown";
}

ConstraintMode parse_constraint_mode(std::string_view name) {
  if (name == "general") return ConstraintMode::General;
  if (name == "upright") return ConstraintMode::Upright;
  if (name == "zeroroll") return ConstraintMode::UprightZeroRoll;
  if (name == "kitti") return ConstraintMode::KittiZeroPitchRoll;
  throw std::invalid_argument("unknown constraint mode '" + std::string(name) + "'");
}

std::size_t configuration_count(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::General: return 4096;
    case ConstraintMode::Upright: return 1024;
    case ConstraintMode::UprightZeroRoll: return 256;
    case ConstraintMode::KittiZeroPitchRoll: return 64;
  }
  return 0;
}

std::vector<Configuration> enumerate_configurations(ConstraintMode mode, const Rotation& r) {
  std::array<std::vector<int>, 4> admissible;
  switch (mode) {
    case ConstraintMode::General:
      admissible = {all_corners(), all_corners(), all_corners(), all_corners()};
      break;
    case ConstraintMode::Upright:
      // y points down: the top face is y = -dy/2.
      admissible = {all_corners(), all_corners(), face_corners(-1), face_corners(1)};
      break;
    case ConstraintMode::UprightZeroRoll:
      admissible = {vertical_edges(), vertical_edges(), horizontal_corners({1, -1}, r),
                    horizontal_corners({1, -1}, r)};
      break;
    case ConstraintMode::KittiZeroPitchRoll:
      admissible = {vertical_edges(), vertical_edges(), horizontal_corners({-1}, r),
                    horizontal_corners({1}, r)};
      break;
  }
  std::vector<Configuration> out;
  out.reserve(admissible[0].size() * admissible[1].size() * admissible[2].size() * admissible[3].size());
  for (int left : admissible[kLeft])
    for (int right : admissible[kRight])
      for (int top : admissible[kTop])
        for (int bottom : admissible[kBottom]) out.push_back(Configuration{{left, right, top, bottom}});
  return out;
}

std::vector<Configuration> enumerate_configurations(ConstraintMode mode) {
  return enumerate_configurations(mode, Rotation::identity());
}

TranslationSolution solve_translation(const CameraIntrinsics& k, const Rotation& r, const Dimensions& dims,
                                      const Box2D& box2d, const Configuration& config) {
  k.validate();
  dims.validate();
  for (int c : config.corners) {
    if (c < 0 || c > 7) throw std::invalid_argument("configuration corner index out of range");
  }
  if (degenerate(box2d)) {
    throw Infeasible(Infeasible::Reason::RankDeficient, "detection window has no area");
  }
  const SideSystem system(k, box2d);
  if (system.rank_deficient()) {
    throw Infeasible(Infeasible::Reason::RankDeficient, "side constraints are rank deficient");
  }
  const auto rotated = rotated_vertices(r, dims);
  TranslationSolution sol = system.solve(rotated, config);
  if (!all_in_front(rotated, sol.translation)) {
    throw Infeasible(Infeasible::Reason::BehindCamera, "a box corner lies behind the camera");
  }
  return sol;
}

LiftResult lift(const CameraIntrinsics& k, const Rotation& r, const Dimensions& dims, const Box2D& box2d,
                ConstraintMode mode) {
  k.validate();
  dims.validate();
  if (degenerate(box2d)) throw NoFeasibleConfiguration();
  const SideSystem system(k, box2d);
  if (system.rank_deficient()) throw NoFeasibleConfiguration();

  const auto rotated = rotated_vertices(r, dims);
  const auto configs = enumerate_configurations(mode, r);

  bool found = false;
  LiftResult best;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const TranslationSolution sol = system.solve(rotated, configs[i]);
    if (!sol.translation.allFinite() || !all_in_front(rotated, sol.translation)) continue;
    const double err = reprojection_error(k, rotated, sol.translation, box2d);
    if (!std::isfinite(err)) continue;
    // Strict comparison keeps the lowest index among exact ties.
    if (!found || std::tie(err, sol.residual) < std::tie(best.reprojection_error, best.residual)) {
      best = LiftResult{sol.translation, configs[i], i, sol.residual, err};
      found = true;
    }
  }
  if (!found) throw NoFeasibleConfiguration();
  return best;
}

}  // namespace boxlift
