#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "boxlift/geometry.hpp"

namespace boxlift {

// (1 + cos(delta)) / 2
double orientation_similarity(double delta);
// acos(2 * os - 1). Throws std::domain_error unless os is in [0, 1].
double os_to_angle(double os);
// aos / ap. Throws std::domain_error when ap <= 0 or aos > ap.
double orientation_score(double aos, double ap);

double iou2d(const Box2D& a, const Box2D& b);

struct EvalGroundTruth {
  Box2D box;
  double yaw = 0.0;
  // Ignored objects do not count as positives; detections matched to them
  // are dropped from the ranking.
  bool ignore = false;
};

struct EvalDetection {
  Box2D box;
  double yaw = 0.0;
  double score = 0.0;
};

struct EvalFrame {
  std::vector<EvalGroundTruth> ground_truth;
  std::vector<EvalDetection> detections;
};

struct PRSample {
  double recall = 0.0;
  double precision = 0.0;
  double similarity = 0.0;
};

struct AosResult {
  double ap = 0.0;
  double aos = 0.0;
  std::vector<PRSample> curve;  // one sample per ranked detection
  std::size_t positives = 0;
  std::size_t true_positives = 0;
};

// Detections of all frames are ranked by score (ties: frame, then input
// order) and greedily matched to the unmatched ground truth of their frame
// with the highest 2D IoU >= iou_threshold. AP and AOS use 11-point
// interpolation at recall 0, 0.1, ..., 1.
AosResult aos(std::span<const EvalFrame> frames, double iou_threshold);
AosResult aos(const std::vector<EvalGroundTruth>& ground_truth, const std::vector<EvalDetection>& detections,
              double iou_threshold);

double center_distance(const Box3D& gt, const Box3D& pred);
// Distance from the camera origin to the nearest of the eight corners.
double closest_corner_distance(const Box3D& box);
// Distance from the camera origin to the nearest point of the solid box
// (zero if the camera is inside).
double closest_point_distance(const Box3D& box);
double closest_point_distance_error(const Box3D& gt, const Box3D& pred);

// Oriented 3D IoU of upright boxes: bird's-eye-view polygon intersection
// times vertical overlap. Throws NonUprightBox for nonzero pitch or roll.
double iou3d(const Box3D& a, const Box3D& b);

// Bird's-eye-view footprint (x, z), counter-clockwise.
std::vector<Vec2> bev_footprint(const Box3D& box);
// Sutherland-Hodgman: `subject` clipped by the convex counter-clockwise `clip`.
std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);
double polygon_area(const std::vector<Vec2>& polygon);  // signed, CCW positive

// Angle of R1^T R2 in [0, pi].
double geodesic_distance(const Rotation& r1, const Rotation& r2);

struct ViewpointStats {
  double median_error = 0.0;  // radians
  double accuracy_pi_6 = 0.0;
};

// Throws std::invalid_argument on empty input.
ViewpointStats viewpoint_stats(std::span<const double> geodesic_errors);
ViewpointStats viewpoint_stats(std::span<const std::pair<Rotation, Rotation>> pairs);

struct MatchedPair {
  Box3D gt;
  Box2D gt_box2d;
  Box3D pred;
  Box2D pred_box2d;
  double score = 0.0;
  double iou2d = 0.0;
};

struct DistanceBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_center_error = 0.0;
  double mean_closest_point_error = 0.0;
  double mean_iou3d = 0.0;
};

// Buckets pairs by the Euclidean distance of the ground-truth center in
// bins of `bin_width` meters; empty bins are kept up to the last non-empty one.
std::vector<DistanceBin> bin_by_distance(std::span<const MatchedPair> pairs, double bin_width = 10.0);

}  // namespace boxlift
