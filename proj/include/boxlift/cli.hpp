#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boxlift/metrics.hpp"
#include "boxlift/multibin.hpp"
#include "boxlift/translation_solver.hpp"

namespace boxlift {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  ConstraintMode mode = ConstraintMode::KittiZeroPitchRoll;
  int bins = 2;
  double overlap = 1.1;
  double w = 1.0;      // L_theta = L_conf + w * L_loc
  double alpha = 1.0;  // L = alpha * L_dims + L_theta
  double iou_threshold = 0.7;
  std::uint64_t seed = 7;
  std::string out;
  std::string category = "Car";

  std::vector<int> toy_bins{1, 2, 4, 8};
  std::size_t toy_train_samples = 5000;
  std::size_t toy_test_samples = 2000;
  double toy_sigma = 0.05;
  int toy_epochs = 200;
  double toy_learning_rate = 0.05;
  int toy_hidden = 32;
  std::size_t toy_batch_size = 32;

  BinLayout layout() const { return BinLayout::uniform(bins, overlap); }
  // Throws std::invalid_argument naming the offending key.
  void validate() const;
};

// JSON object with the keys: mode, bins, overlap, w, alpha, iou_thresh,
// seed, out, category and a nested "toy" object (bins, train_samples,
// test_samples, sigma, epochs, lr, hidden, batch_size). Unknown keys are
// rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text, RunConfig base = {});

struct LiftSummary {
  int exit_code = kExitOk;
  std::size_t total = 0;
  std::size_t lifted = 0;
  std::size_t failed = 0;
};

// Lifts every labelled object of labels_dir/*.txt using the calibration file
// of the same name in calib_dir and writes JSON-lines results to out_path.
// `residuals` optionally holds JSON lines {"frame", "index", "delta": [dx, dy, dz]};
// when present the dimensions become category mean + delta.
LiftSummary cmd_lift(const std::filesystem::path& labels_dir, const std::filesystem::path& calib_dir,
                     const std::filesystem::path& out_path, const RunConfig& config,
                     const std::optional<std::filesystem::path>& residuals = std::nullopt,
                     const std::optional<std::filesystem::path>& kitti_out_dir = std::nullopt);

struct DifficultyMetrics {
  std::string difficulty;
  AosResult result;
  double orientation_score = 0.0;  // NaN when AP is zero
  double angle_error_deg = 0.0;
};

struct EvalSummary {
  int exit_code = kExitOk;
  std::vector<DifficultyMetrics> difficulties;
  std::vector<MatchedPair> pairs;
  std::vector<DistanceBin> distance_bins;
  std::optional<ViewpointStats> viewpoint;
  double mean_center_error = 0.0;
  double mean_closest_point_error = 0.0;
  double mean_iou3d = 0.0;
  std::vector<std::string> missing_ground_truth;
};

// Greedy per-frame matching by score at 2D IoU >= threshold.
std::vector<MatchedPair> match_pairs(const std::vector<Box3D>& gt_boxes, const std::vector<Box2D>& gt_boxes2d,
                                     const std::vector<Box3D>& pred_boxes, const std::vector<Box2D>& pred_boxes2d,
                                     const std::vector<double>& scores, double iou_threshold);

// Writes <out>.csv (per difficulty), <out>_distance.csv and <out>.json when
// config.out is set; the JSON summary also goes to `summary_stream`.
EvalSummary cmd_eval(const std::filesystem::path& gt_dir, const std::filesystem::path& results_path,
                     const RunConfig& config, std::ostream* summary_stream = nullptr);

// Bin sweep over config.toy_bins (1 means the scalar L2 baseline). Writes
// CSV rows "bins,model,median_error_rad,os,final_loss" to `csv`.
int cmd_toy(const RunConfig& config, std::ostream& csv, std::ostream* history_csv = nullptr);

int cmd_encode(double theta, const BinLayout& layout, std::ostream& out);
// `values` holds c, cos, sin per bin as printed by cmd_encode.
int cmd_decode(std::span<const double> values, const BinLayout& layout, std::ostream& out);

}  // namespace boxlift
