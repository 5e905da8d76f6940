#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "boxlift/multibin.hpp"

namespace boxlift {

// Noisy unit-circle features standing in for image crops.
struct SyntheticSample {
  double theta = 0.0;
  std::array<double, 2> features{};  // (cos theta + e1, sin theta + e2)
};

std::vector<SyntheticSample> make_synthetic_dataset(std::size_t count, double sigma, std::uint64_t seed);

struct ModelKind {
  enum class Head { MultiBin, L2Scalar };
  Head head = Head::MultiBin;
  int bins = 2;

  static ModelKind multibin(int bins) { return {Head::MultiBin, bins}; }
  // Regresses the wrapped angle itself with a squared loss.
  static ModelKind l2_scalar() { return {Head::L2Scalar, 1}; }

  int output_size() const { return head == Head::MultiBin ? 3 * bins : 1; }
  std::string name() const;
};

struct ToyConfig {
  int hidden = 32;
  int epochs = 200;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  double loc_weight = 1.0;  // w in L_conf + w * L_loc
  double overlap = 1.1;
  std::uint64_t seed = 7;
  bool verify_gradients = true;
};

// 2 -> hidden (tanh) -> head. MultiBin head output layout:
// [n logits][cos_0, sin_0, ..., cos_{n-1}, sin_{n-1}].
class ToyModel {
 public:
  ToyModel(ModelKind kind, int hidden, double overlap, std::uint64_t seed);

  const ModelKind& kind() const { return kind_; }
  const BinLayout& layout() const { return layout_; }
  int hidden() const { return hidden_; }

  // Flat parameters: W1 (hidden x 2, row-major), b1, W2 (out x hidden,
  // row-major), b2.
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  // [begin, end) offsets of the four parameter tensors.
  std::array<std::size_t, 5> tensor_offsets() const;

  std::vector<double> forward(const std::array<double, 2>& x) const;
  double predict(const std::array<double, 2>& x) const;

  // Mean loss over `batch`; when `gradient` is given it receives d(loss)/d(params).
  double loss(std::span<const SyntheticSample> batch, double loc_weight, std::vector<double>* gradient = nullptr) const;

 private:
  ModelKind kind_;
  BinLayout layout_;
  int hidden_;
  std::vector<double> params_;
};

struct GradientCheckReport {
  std::array<double, 4> max_relative_error{};  // per tensor: W1, b1, W2, b2
  double worst() const;
};

// Central differences with step `step`; relative error uses the denominator
// max(|analytic|, |numeric|, 1e-3).
GradientCheckReport check_gradients(const ToyModel& model, std::span<const SyntheticSample> batch, double loc_weight,
                                    double step = 1e-6);

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

// Mini-batch gradient descent. Throws DivergedLoss when the loss turns
// non-finite and std::logic_error when the initial gradient check fails.
TrainResult train(ModelKind kind, std::span<const SyntheticSample> dataset, const ToyConfig& config);

struct ToyEvaluation {
  double median_error = 0.0;     // radians
  double mean_similarity = 0.0;  // orientation score
};

ToyEvaluation evaluate_predictions(std::span<const double> truth, std::span<const double> predicted);
ToyEvaluation evaluate(const std::function<double(const SyntheticSample&)>& predictor,
                       std::span<const SyntheticSample> test_set);
ToyEvaluation evaluate(const ToyModel& model, std::span<const SyntheticSample> test_set);

}  // namespace boxlift
