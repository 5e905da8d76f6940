#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "boxlift/geometry.hpp"

namespace boxlift {

// n overlapping angular bins with centers 2*pi*i/n - pi. A bin covers every
// angle within `coverage_half_width` of its center.
struct BinLayout {
  int n_bins = 2;
  double coverage_half_width = 0.0;

  // Half-width = overlap * pi / n. overlap = 1 tiles the circle exactly.
  static BinLayout uniform(int n_bins, double overlap = 1.1);

  double center(int bin) const;
  // Requires n >= 1, half-width >= pi/n and, for n >= 2, half-width < 2*pi/n.
  void validate() const;
};

// Per-bin confidence and residual rotation (cos, sin) relative to the bin
// center. Whether `confidence` holds logits or probabilities is up to the
// producer; decode only uses the argmax.
struct MultiBinEncoding {
  std::vector<double> confidence;
  std::vector<double> cos_delta;
  std::vector<double> sin_delta;

  std::size_t size() const { return confidence.size(); }
};

// Training target for one ground-truth angle.
struct MultiBinTarget {
  int target_bin = 0;         // one-hot confidence label: nearest center
  std::vector<int> covering;  // bins supervised by the localization loss
  MultiBinEncoding encoding;  // one-hot confidence, residual in every bin
};

std::vector<int> bins_covering(const BinLayout& layout, double theta);
MultiBinTarget encode(const BinLayout& layout, double theta);
// Center of the most confident bin (lowest index on ties) plus its residual.
double decode(const BinLayout& layout, const MultiBinEncoding& enc);

struct LossAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

// Softmax cross-entropy against a one-hot label; gradient w.r.t. the logits.
LossAndGradient loss_conf(std::span<const double> logits, int target_bin);

// Localization loss over the bins covering theta:
//   -1/n_cov * sum_i cos(theta - center_i - dtheta_i)
// `raw_pairs` is n x 2 interleaved (cos_0, sin_0, cos_1, sin_1, ...) before
// L2 normalization; the gradient is w.r.t. these raw values. Throws
// ZeroVector for a pair with norm < 1e-12.
LossAndGradient loss_loc(const BinLayout& layout, std::span<const double> raw_pairs, double theta);

// conf + w * loc. Throws std::invalid_argument unless w > 0.
double loss_total_orientation(double conf, double loc, double w);

struct DimensionLoss {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();  // w.r.t. the residual
};

// Mean squared error of the residual `delta` against truth - mean.
DimensionLoss loss_dims(const Dimensions& truth, const Dimensions& mean, const Vec3& delta);

// Global yaw from the local yaw and the yaw of the viewing ray.
double local_to_global(double local, double ray);
double global_to_local(double global, double ray);

// Yaw of the ray through pixel column u: atan2(u - cx, fx).
double ray_angle(const CameraIntrinsics& k, double u);

}  // namespace boxlift
