#include "boxlift/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"

namespace boxlift {

double orientation_similarity(double delta) { return 0.5 * (1.0 + std::cos(delta)); }

double os_to_angle(double os) {
  if (!(os >= 0.0 && os <= 1.0)) throw std::domain_error("orientation score must lie in [0, 1]");
  return std::acos(2.0 * os - 1.0);
}

double orientation_score(double aos_value, double ap) {
  if (!(ap > 0.0)) throw std::domain_error("AP must be positive");
  if (aos_value < 0.0 || aos_value > ap) throw std::domain_error("AOS must lie in [0, AP]");
  return aos_value / ap;
}

double iou2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

AosResult aos(std::span<const EvalFrame> frames, double iou_threshold) {
  struct Ref {
    std::size_t frame;
    std::size_t det;
    double score;
  };
  std::vector<Ref> ranking;
  std::size_t positives = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t d = 0; d < frames[f].detections.size(); ++d)
      ranking.push_back({f, d, frames[f].detections[d].score});
    for (const auto& gt : frames[f].ground_truth) positives += gt.ignore ? 0 : 1;
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const Ref& a, const Ref& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> taken(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) taken[f].assign(frames[f].ground_truth.size(), false);

  AosResult out;
  out.positives = positives;
  std::vector<std::size_t> tp_counts;
  std::size_t tp = 0, ranked = 0;
  double similarity_sum = 0.0;
  for (const Ref& ref : ranking) {
    const EvalFrame& frame = frames[ref.frame];
    const EvalDetection& det = frame.detections[ref.det];
    double best_iou = -1.0;
    std::size_t best = frame.ground_truth.size();
    for (std::size_t g = 0; g < frame.ground_truth.size(); ++g) {
      if (taken[ref.frame][g]) continue;
      const double o = iou2d(det.box, frame.ground_truth[g].box);
      if (o >= iou_threshold && o > best_iou) {
        best_iou = o;
        best = g;
      }
    }
    if (best < frame.ground_truth.size()) {
      taken[ref.frame][best] = true;
      if (frame.ground_truth[best].ignore) continue;
      ++tp;
      similarity_sum += orientation_similarity(det.yaw - frame.ground_truth[best].yaw);
    }
    ++ranked;
    const double k = static_cast<double>(ranked);
    out.curve.push_back({positives ? static_cast<double>(tp) / positives : 0.0, tp / k, similarity_sum / k});
    tp_counts.push_back(tp);
  }
  out.true_positives = tp;

  if (positives == 0) return out;
  for (std::size_t step = 0; step <= 10; ++step) {
    double best_p = 0.0, best_s = 0.0;
    for (std::size_t i = 0; i < out.curve.size(); ++i) {
      // recall >= step / 10, compared exactly in integers
      if (10 * tp_counts[i] >= step * positives) {
        best_p = std::max(best_p, out.curve[i].precision);
        best_s = std::max(best_s, out.curve[i].similarity);
      }
    }
    out.ap += best_p;
    out.aos += best_s;
  }
  out.ap /= 11.0;
  out.aos /= 11.0;
  return out;
}

AosResult aos(const std::vector<EvalGroundTruth>& ground_truth, const std::vector<EvalDetection>& detections,
              double iou_threshold) {
  const EvalFrame frame{ground_truth, detections};
  return aos(std::span<const EvalFrame>(&frame, 1), iou_threshold);
}

double center_distance(const Box3D& gt, const Box3D& pred) { return (gt.center - pred.center).norm(); }

double closest_corner_distance(const Box3D& box) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& c : box_corners(box)) best = std::min(best, c.norm());
  return best;
}

double closest_point_distance(const Box3D& box) {
  // Camera origin in the box frame, clamped onto the box.
  const Vec3 local = box.rotation().transposed() * (-box.center);
  const Vec3 half = 0.5 * box.dims.as_vector();
  const Vec3 nearest = local.cwiseMax(-half).cwiseMin(half);
  return (local - nearest).norm();
}

double closest_point_distance_error(const Box3D& gt, const Box3D& pred) {
  return std::abs(closest_point_distance(gt) - closest_point_distance(pred));
}

std::vector<Vec2> bev_footprint(const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double hx = 0.5 * box.dims.dx, hz = 0.5 * box.dims.dz;
  std::vector<Vec2> out;
  const std::array<std::pair<double, double>, 4> local{{{hx, hz}, {-hx, hz}, {-hx, -hz}, {hx, -hz}}};
  for (const auto& [ox, oz] : local) {
    out.emplace_back(box.center.x() + c * ox + s * oz, box.center.z() - s * ox + c * oz);
  }
  return out;
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> output = subject;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    const std::vector<Vec2> input = std::move(output);
    output.clear();
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& p = input[i];
      const Vec2& q = input[(i + 1) % input.size()];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      if (sp >= 0.0) output.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) output.push_back(p + (q - p) * (sp / (sp - sq)));
    }
  }
  return output;
}

double polygon_area(const std::vector<Vec2>& polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  return 0.5 * twice;
}

double iou3d(const Box3D& a, const Box3D& b) {
  if (!a.upright() || !b.upright()) throw NonUprightBox();
  a.dims.validate();
  b.dims.validate();
  const double y_overlap = std::min(a.center.y() + 0.5 * a.dims.dy, b.center.y() + 0.5 * b.dims.dy) -
                           std::max(a.center.y() - 0.5 * a.dims.dy, b.center.y() - 0.5 * b.dims.dy);
  if (y_overlap <= 0.0) return 0.0;
  const double area = std::max(0.0, polygon_area(clip_convex_polygon(bev_footprint(a), bev_footprint(b))));
  const double inter = area * y_overlap;
  const double uni = a.dims.volume() + b.dims.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double geodesic_distance(const Rotation& r1, const Rotation& r2) {
  const double trace = (r1.matrix().transpose() * r2.matrix()).trace();
  return std::acos(std::clamp(0.5 * (trace - 1.0), -1.0, 1.0));
}

ViewpointStats viewpoint_stats(std::span<const double> geodesic_errors) {
  if (geodesic_errors.empty()) throw std::invalid_argument("viewpoint statistics need at least one pair");
  std::vector<double> sorted(geodesic_errors.begin(), geodesic_errors.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  ViewpointStats out;
  out.median_error = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const auto within = std::count_if(sorted.begin(), sorted.end(), [](double e) { return e < kPi / 6.0; });
  out.accuracy_pi_6 = static_cast<double>(within) / static_cast<double>(n);
  return out;
}

ViewpointStats viewpoint_stats(std::span<const std::pair<Rotation, Rotation>> pairs) {
  std::vector<double> errors;
  errors.reserve(pairs.size());
  for (const auto& [r1, r2] : pairs) errors.push_back(geodesic_distance(r1, r2));
  return viewpoint_stats(errors);
}

std::vector<DistanceBin> bin_by_distance(std::span<const MatchedPair> pairs, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  std::vector<DistanceBin> bins;
  for (const MatchedPair& p : pairs) {
    const auto idx = static_cast<std::size_t>(std::floor(p.gt.center.norm() / bin_width));
    while (bins.size() <= idx) {
      const double lo = bin_width * static_cast<double>(bins.size());
      bins.push_back({lo, lo + bin_width});
    }
    DistanceBin& bin = bins[idx];
    ++bin.count;
    bin.mean_center_error += center_distance(p.gt, p.pred);
    bin.mean_closest_point_error += closest_point_distance_error(p.gt, p.pred);
    bin.mean_iou3d += iou3d(p.gt, p.pred);
  }
  for (DistanceBin& bin : bins) {
    if (bin.count == 0) continue;
    const double n = static_cast<double>(bin.count);
    bin.mean_center_error /= n;
    bin.mean_closest_point_error /= n;
    bin.mean_iou3d /= n;
  }
  return bins;
}

}  // namespace boxlift
