#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "boxlift/geometry.hpp"

namespace boxlift {

// Which box corners each side of the detection window may touch.
//   General            any corner on any side                      8^4 = 4096
//   Upright            top side from the top face, bottom side
//                      from the bottom face                         8*8*4*4 = 1024
//   UprightZeroRoll    vertical sides from vertical edges (±dx, ±dz),
//                      horizontal sides from (±dy, ±dz)            4^4 = 256
//   KittiZeroPitchRoll as above, top side only y = -dy/2, bottom
//                      side only y = +dy/2                         4*4*2*2 = 64
enum class ConstraintMode { General, Upright, UprightZeroRoll, KittiZeroPitchRoll };

std::string_view to_string(ConstraintMode mode);
// Accepts general | upright | zeroroll | kitti. Throws std::invalid_argument.
ConstraintMode parse_constraint_mode(std::string_view name);
std::size_t configuration_count(ConstraintMode mode);

enum Side : int { kLeft = 0, kRight = 1, kTop = 2, kBottom = 3 };

// Corner index (see corner_signs) assigned to each side, ordered
// left, right, top, bottom.
struct Configuration {
  std::array<int, 4> corners{};
  bool operator==(const Configuration&) const = default;
};

// Admissible configurations of `mode` in a fixed order.
//
// In the zero-roll modes one axis of each side's corner is left open: the
// height axis for vertical sides and the length axis for horizontal sides.
// A vertical 3D edge projects to a vertical image line when pitch, roll and
// skew vanish, so the height sign does not change the x constraint and the
// bottom corner is used. For horizontal sides the length sign is resolved
// from `r` so the chosen corner lies on the face diagonal that holds the
// nearest and farthest corners in depth; those are the only corners of a
// horizontal face that can attain the extreme image row. The order of the
// returned sequence does not depend on `r`.
std::vector<Configuration> enumerate_configurations(ConstraintMode mode, const Rotation& r);
std::vector<Configuration> enumerate_configurations(ConstraintMode mode);

struct TranslationSolution {
  Vec3 translation = Vec3::Zero();
  // Least-squares objective |A T - b|^2 of the linearised side constraints.
  double residual = 0.0;
};

// Solves the four side constraints
//   (row_s(K) - coord_s * row_3(K)) . (R X_j + T) = 0
// for T in the least-squares sense (SVD). Throws Infeasible when the
// detection window is degenerate, the system's smallest singular value is
// below 1e-10, or any of the eight corners ends up at non-positive depth.
TranslationSolution solve_translation(const CameraIntrinsics& k, const Rotation& r, const Dimensions& dims,
                                      const Box2D& box2d, const Configuration& config);

struct LiftResult {
  Vec3 translation = Vec3::Zero();
  Configuration configuration;
  std::size_t configuration_index = 0;  // position in enumerate_configurations(mode)
  double residual = 0.0;
  // Sum of squared differences between the sides of the reprojected box and
  // the detection window, px^2.
  double reprojection_error = 0.0;
};

// Solves every admissible configuration, drops infeasible ones and keeps the
// candidate whose tight reprojection best matches `box2d`. Ties go to the
// smaller residual, then the lower configuration index. Throws
// NoFeasibleConfiguration when nothing survives.
LiftResult lift(const CameraIntrinsics& k, const Rotation& r, const Dimensions& dims, const Box2D& box2d,
                ConstraintMode mode);

}  // namespace boxlift
