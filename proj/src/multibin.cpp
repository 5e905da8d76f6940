#include "boxlift/multibin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"

namespace boxlift {

namespace {

void require_finite(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("angle must be finite");
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace

BinLayout BinLayout::uniform(int n_bins, double overlap) {
  BinLayout layout{n_bins, overlap * kPi / n_bins};
  layout.validate();
  return layout;
}

double BinLayout::center(int bin) const { return kTwoPi * bin / n_bins - kPi; }

void BinLayout::validate() const {
  if (n_bins < 1) throw std::invalid_argument("bin count must be at least 1");
  if (!(coverage_half_width >= kPi / n_bins)) {
    throw std::invalid_argument("bins do not cover the full circle");
  }
  if (n_bins >= 2 && !(coverage_half_width < kTwoPi / n_bins)) {
    throw std::invalid_argument("bin coverage is too wide");
  }
}

std::vector<int> bins_covering(const BinLayout& layout, double theta) {
  layout.validate();
  require_finite(theta);
  std::vector<int> out;
  for (int i = 0; i < layout.n_bins; ++i) {
    if (angular_distance(theta, layout.center(i)) <= layout.coverage_half_width) out.push_back(i);
  }
  return out;
}

MultiBinTarget encode(const BinLayout& layout, double theta) {
  MultiBinTarget target;
  target.covering = bins_covering(layout, theta);
  const auto n = static_cast<std::size_t>(layout.n_bins);
  target.encoding.confidence.assign(n, 0.0);
  target.encoding.cos_delta.resize(n);
  target.encoding.sin_delta.resize(n);
  double nearest = kTwoPi;
  for (int i = 0; i < layout.n_bins; ++i) {
    const double delta = wrap_angle(theta - layout.center(i));
    target.encoding.cos_delta[i] = std::cos(delta);
    target.encoding.sin_delta[i] = std::sin(delta);
    if (std::abs(delta) < nearest) {
      nearest = std::abs(delta);
      target.target_bin = i;
    }
  }
  target.encoding.confidence[target.target_bin] = 1.0;
  return target;
}

double decode(const BinLayout& layout, const MultiBinEncoding& enc) {
  layout.validate();
  const auto n = static_cast<std::size_t>(layout.n_bins);
  if (enc.confidence.size() != n || enc.cos_delta.size() != n || enc.sin_delta.size() != n) {
    throw std::invalid_argument("encoding size does not match the bin layout");
  }
  const std::size_t bin = argmax(enc.confidence);
  const double delta = std::atan2(enc.sin_delta[bin], enc.cos_delta[bin]);
  return wrap_angle(layout.center(static_cast<int>(bin)) + delta);
}

LossAndGradient loss_conf(std::span<const double> logits, int target_bin) {
  if (logits.empty()) throw std::invalid_argument("no logits");
  if (target_bin < 0 || static_cast<std::size_t>(target_bin) >= logits.size()) {
    throw std::invalid_argument("target bin out of range");
  }
  for (double l : logits) require_finite(l);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double log_sum = top + std::log(sum);

  LossAndGradient out;
  out.value = log_sum - logits[target_bin];
  out.gradient.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.gradient[i] = std::exp(logits[i] - log_sum);
  out.gradient[target_bin] -= 1.0;
  return out;
}

LossAndGradient loss_loc(const BinLayout& layout, std::span<const double> raw_pairs, double theta) {
  const auto n = static_cast<std::size_t>(layout.n_bins);
  if (raw_pairs.size() != 2 * n) throw std::invalid_argument("expected two values per bin");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::hypot(raw_pairs[2 * i], raw_pairs[2 * i + 1]) < 1e-12) throw ZeroVector(i);
  }
  const std::vector<int> covering = bins_covering(layout, theta);
  const double scale = 1.0 / static_cast<double>(covering.size());

  LossAndGradient out;
  out.gradient.assign(2 * n, 0.0);
  for (int i : covering) {
    const double a = raw_pairs[2 * i], b = raw_pairs[2 * i + 1];
    const double norm = std::hypot(a, b);
    const double c = a / norm, s = b / norm;
    // cos(theta - center - d) = cos(theta - center) cos d + sin(theta - center) sin d
    const double offset = theta - layout.center(i);
    const double gc = -scale * std::cos(offset);
    const double gs = -scale * std::sin(offset);
    out.value += gc * c + gs * s;
    // Back through u = v / |v|: dL/dv = (I - u u^T) dL/du / |v|.
    const double radial = gc * c + gs * s;
    out.gradient[2 * i] = (gc - radial * c) / norm;
    out.gradient[2 * i + 1] = (gs - radial * s) / norm;
  }
  return out;
}

double loss_total_orientation(double conf, double loc, double w) {
  if (!(w > 0.0)) throw std::invalid_argument("orientation loss weight must be positive");
  return conf + w * loc;
}

DimensionLoss loss_dims(const Dimensions& truth, const Dimensions& mean, const Vec3& delta) {
  truth.validate();
  mean.validate();
  const Vec3 r = truth.as_vector() - mean.as_vector() - delta;
  return {r.squaredNorm() / 3.0, -(2.0 / 3.0) * r};
}

double local_to_global(double local, double ray) { return wrap_angle(ray + local); }

double global_to_local(double global, double ray) { return wrap_angle(global - ray); }

double ray_angle(const CameraIntrinsics& k, double u) {
  k.validate();
  return std::atan2(u - k.cx, k.fx);
}

}  // namespace boxlift
