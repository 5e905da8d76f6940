#include "boxlift/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"
#include "boxlift/metrics.hpp"

namespace boxlift {

std::vector<SyntheticSample> make_synthetic_dataset(std::size_t count, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<SyntheticSample> out(count);
  for (SyntheticSample& s : out) {
    s.theta = kPi - kTwoPi * unit(rng);  // (-pi, pi]
    const double e1 = sigma * noise(rng);
    const double e2 = sigma * noise(rng);
    s.features = {std::cos(s.theta) + e1, std::sin(s.theta) + e2};
  }
  return out;
}

std::string ModelKind::name() const {
  return head == Head::L2Scalar ? "l2_scalar" : "multibin(" + std::to_string(bins) + ")";
}

ToyModel::ToyModel(ModelKind kind, int hidden, double overlap, std::uint64_t seed)
    : kind_(kind),
      layout_(BinLayout::uniform(kind.head == ModelKind::Head::MultiBin ? kind.bins : 1, overlap)),
      hidden_(hidden) {
  if (hidden < 1) throw std::invalid_argument("hidden width must be at least 1");
  const auto h = static_cast<std::size_t>(hidden);
  const auto o = static_cast<std::size_t>(kind_.output_size());
  params_.resize(3 * h + o * h + o);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.1, 0.1);
  for (double& p : params_) p = init(rng);
}

std::array<std::size_t, 5> ToyModel::tensor_offsets() const {
  const auto h = static_cast<std::size_t>(hidden_);
  const auto o = static_cast<std::size_t>(kind_.output_size());
  return {0, 2 * h, 3 * h, 3 * h + o * h, 3 * h + o * h + o};
}

std::vector<double> ToyModel::forward(const std::array<double, 2>& x) const {
  const auto off = tensor_offsets();
  const auto h = static_cast<std::size_t>(hidden_);
  const auto o = static_cast<std::size_t>(kind_.output_size());
  std::vector<double> hid(h);
  for (std::size_t j = 0; j < h; ++j) {
    hid[j] = std::tanh(params_[off[0] + 2 * j] * x[0] + params_[off[0] + 2 * j + 1] * x[1] + params_[off[1] + j]);
  }
  std::vector<double> out(o);
  for (std::size_t k = 0; k < o; ++k) {
    double acc = params_[off[3] + k];
    for (std::size_t j = 0; j < h; ++j) acc += params_[off[2] + k * h + j] * hid[j];
    out[k] = acc;
  }
  return out;
}

double ToyModel::predict(const std::array<double, 2>& x) const {
  const std::vector<double> out = forward(x);
  if (kind_.head == ModelKind::Head::L2Scalar) return wrap_angle(out[0]);
  const auto n = static_cast<std::size_t>(layout_.n_bins);
  MultiBinEncoding enc;
  enc.confidence.assign(out.begin(), out.begin() + n);
  for (std::size_t i = 0; i < n; ++i) {
    enc.cos_delta.push_back(out[n + 2 * i]);
    enc.sin_delta.push_back(out[n + 2 * i + 1]);
  }
  return decode(layout_, enc);
}

double ToyModel::loss(std::span<const SyntheticSample> batch, double loc_weight, std::vector<double>* gradient) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto off = tensor_offsets();
  const auto h = static_cast<std::size_t>(hidden_);
  const auto o = static_cast<std::size_t>(kind_.output_size());
  const auto n = static_cast<std::size_t>(layout_.n_bins);
  if (gradient) gradient->assign(params_.size(), 0.0);

  std::vector<double> hid(h), out(o), d_out(o), d_pre(h);
  double total = 0.0;
  for (const SyntheticSample& s : batch) {
    const auto& x = s.features;
    for (std::size_t j = 0; j < h; ++j) {
      hid[j] = std::tanh(params_[off[0] + 2 * j] * x[0] + params_[off[0] + 2 * j + 1] * x[1] + params_[off[1] + j]);
    }
    for (std::size_t k = 0; k < o; ++k) {
      double acc = params_[off[3] + k];
      for (std::size_t j = 0; j < h; ++j) acc += params_[off[2] + k * h + j] * hid[j];
      out[k] = acc;
    }

    if (kind_.head == ModelKind::Head::L2Scalar) {
      const double r = out[0] - s.theta;
      total += r * r;
      d_out[0] = 2.0 * r;
    } else {
      const std::span<const double> outputs(out);
      const LossAndGradient conf = loss_conf(outputs.first(n), encode(layout_, s.theta).target_bin);
      const LossAndGradient loc = loss_loc(layout_, outputs.subspan(n, 2 * n), s.theta);
      total += conf.value + loc_weight * loc.value;
      for (std::size_t k = 0; k < n; ++k) d_out[k] = conf.gradient[k];
      for (std::size_t k = 0; k < 2 * n; ++k) d_out[n + k] = loc_weight * loc.gradient[k];
    }
    if (!gradient) continue;

    std::vector<double>& g = *gradient;
    std::fill(d_pre.begin(), d_pre.end(), 0.0);
    for (std::size_t k = 0; k < o; ++k) {
      g[off[3] + k] += d_out[k];
      for (std::size_t j = 0; j < h; ++j) {
        g[off[2] + k * h + j] += d_out[k] * hid[j];
        d_pre[j] += d_out[k] * params_[off[2] + k * h + j];
      }
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double dp = d_pre[j] * (1.0 - hid[j] * hid[j]);
      g[off[0] + 2 * j] += dp * x[0];
      g[off[0] + 2 * j + 1] += dp * x[1];
      g[off[1] + j] += dp;
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (gradient) {
    for (double& v : *gradient) v *= scale;
  }
  return total * scale;
}

double GradientCheckReport::worst() const {
  return *std::max_element(max_relative_error.begin(), max_relative_error.end());
}

GradientCheckReport check_gradients(const ToyModel& model, std::span<const SyntheticSample> batch, double loc_weight,
                                    double step) {
  std::vector<double> analytic;
  model.loss(batch, loc_weight, &analytic);
  ToyModel probe = model;
  const auto off = model.tensor_offsets();
  GradientCheckReport report;
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = off[t]; i < off[t + 1]; ++i) {
      const double saved = probe.parameters()[i];
      probe.parameters()[i] = saved + step;
      const double up = probe.loss(batch, loc_weight);
      probe.parameters()[i] = saved - step;
      const double down = probe.loss(batch, loc_weight);
      probe.parameters()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
      report.max_relative_error[t] = std::max(report.max_relative_error[t], std::abs(analytic[i] - numeric) / denom);
    }
  }
  return report;
}

TrainResult train(ModelKind kind, std::span<const SyntheticSample> dataset, const ToyConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  if (kind.head == ModelKind::Head::MultiBin && kind.bins < 1) throw std::invalid_argument("bin count must be >= 1");
  if (config.batch_size == 0 || config.epochs < 0 || !(config.learning_rate >= 0.0)) {
    throw std::invalid_argument("invalid training configuration");
  }
  TrainResult result{ToyModel(kind, config.hidden, config.overlap, config.seed), {}};
  ToyModel& model = result.model;

  if (config.verify_gradients) {
    const auto probe = dataset.first(std::min<std::size_t>(dataset.size(), 8));
    const GradientCheckReport report = check_gradients(model, probe, config.loc_weight);
    if (report.worst() > 1e-4) throw std::logic_error("gradient check failed at initialization");
  }

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<SyntheticSample> batch;
  std::vector<double> gradient;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      double value = 0.0;
      try {
        value = model.loss(batch, config.loc_weight, &gradient);
      } catch (const ZeroVector&) {
        throw DivergedLoss(epoch, std::numeric_limits<double>::quiet_NaN());
      }
      if (!std::isfinite(value)) throw DivergedLoss(epoch, value);
      epoch_loss += value * static_cast<double>(end - start);
      auto params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * gradient[i];
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergedLoss(epoch, epoch_loss);
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

ToyEvaluation evaluate_predictions(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw std::invalid_argument("need equally sized, non-empty truth and prediction sets");
  }
  std::vector<double> errors(truth.size());
  double similarity = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    errors[i] = angular_distance(truth[i], predicted[i]);
    similarity += orientation_similarity(errors[i]);
  }
  ToyEvaluation out;
  out.median_error = viewpoint_stats(errors).median_error;
  out.mean_similarity = similarity / static_cast<double>(truth.size());
  return out;
}

ToyEvaluation evaluate(const std::function<double(const SyntheticSample&)>& predictor,
                       std::span<const SyntheticSample> test_set) {
  std::vector<double> truth, predicted;
  truth.reserve(test_set.size());
  predicted.reserve(test_set.size());
  for (const SyntheticSample& s : test_set) {
    truth.push_back(s.theta);
    predicted.push_back(predictor(s));
  }
  return evaluate_predictions(truth, predicted);
}

ToyEvaluation evaluate(const ToyModel& model, std::span<const SyntheticSample> test_set) {
  return evaluate([&](const SyntheticSample& s) { return model.predict(s.features); }, test_set);
}

}  // namespace boxlift
