#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "boxlift/geometry.hpp"
#include "boxlift/translation_solver.hpp"

namespace boxlift {

// One line of a KITTI label or result file.
struct DetectionRecord {
  std::string category;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;  // local yaw
  Box2D box2d;
  double height = 0.0;
  double width = 0.0;
  double length = 0.0;
  Vec3 location = Vec3::Zero();  // bottom center, camera frame
  double rotation_y = 0.0;       // global yaw
  std::optional<double> score;

  bool dont_care() const { return category == "DontCare"; }
  bool has_dims() const { return height > 0.0 && width > 0.0 && length > 0.0; }
};

// 15 or 16 whitespace-separated columns per line; blank lines are skipped.
// Throws MalformedLine with the 1-based line number.
std::vector<DetectionRecord> parse_label_file(std::string_view text);

// Writes KITTI columns with `decimals` digits for real-valued fields (the
// devkit convention is 2). The score column, when present, is appended last
// with at least 4 digits.
std::string write_results(std::span<const DetectionRecord> records, int decimals = 2);

struct CalibRecord {
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();

  CameraIntrinsics intrinsics() const;
  // K^-1 times the fourth column of P2: a camera-frame translation applied
  // to points before projecting with K.
  Vec3 offset() const;
};

// "KEY: v0 ... v11" lines; only P2 is required. Throws MissingKey("P2"),
// MalformedLine for a P2 line that does not hold 12 numbers and
// std::invalid_argument when P2 is not a pinhole projection.
CalibRecord parse_calib_file(std::string_view text);

// KITTI stores the bottom center and (h, w, l); boxes use the geometric
// center and (l, h, w). Throws std::invalid_argument without dimensions.
Box3D location_to_center(const DetectionRecord& record);
Vec3 center_to_location(const Box3D& box);
// Overwrites dims, location and rotation_y of `record` from `box`.
void assign_box(DetectionRecord& record, const Box3D& box);

struct DimensionStats {
  Dimensions mean;
  Vec3 stddev = Vec3::Zero();
  std::size_t count = 0;
};

// Per-axis statistics over records of `category` (DontCare excluded).
// Throws NoSamples when there are none.
DimensionStats compute_dimension_stats(std::span<const DetectionRecord> records, std::string_view category);
Dimensions compute_mean_dims(std::span<const DetectionRecord> records, std::string_view category);

enum class Difficulty { Easy, Moderate, Hard };
std::string_view to_string(Difficulty d);
// KITTI buckets: minimum box height 40/25/25 px, maximum occlusion 0/1/2,
// maximum truncation 0.15/0.30/0.50.
bool meets_difficulty(const DetectionRecord& record, Difficulty d);

// A lifted detection as stored in the JSON-lines results file.
struct LiftedRecord {
  std::string frame;       // label file stem
  std::size_t index = 0;   // line index within the label file
  DetectionRecord record;  // predicted fields filled in
  Configuration configuration;
  std::size_t configuration_index = 0;
  double residual = 0.0;
  double reprojection_error = 0.0;
};

std::string to_json_line(const LiftedRecord& r);
LiftedRecord lifted_record_from_json(std::string_view line);
// Blank lines skipped. Throws MalformedLine on bad JSON.
std::vector<LiftedRecord> parse_results_jsonl(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
// Regular files with `extension` directly in `dir`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension = ".txt");

}  // namespace boxlift
