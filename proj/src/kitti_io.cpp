#include "boxlift/kitti_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include "json.hpp"

#include "boxlift/errors.hpp"

namespace boxlift {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line_no) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw MalformedLine(line_no, std::string(token), "expected a number");
  return value;
}

// Iterates lines with 1-based numbering.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, ++line_no);
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::vector<DetectionRecord> parse_label_file(std::string_view text) {
  std::vector<DetectionRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto tok = split_ws(line);
    if (tok.empty()) return;
    if (tok.size() != 15 && tok.size() != 16) {
      throw MalformedLine(line_no, std::string(tok.back()),
                          "expected 15 or 16 columns, found " + std::to_string(tok.size()));
    }
    DetectionRecord r;
    r.category = std::string(tok[0]);
    r.truncated = parse_number<double>(tok[1], line_no);
    r.occluded = parse_number<int>(tok[2], line_no);
    r.alpha = parse_number<double>(tok[3], line_no);
    r.box2d = {parse_number<double>(tok[4], line_no), parse_number<double>(tok[5], line_no),
               parse_number<double>(tok[6], line_no), parse_number<double>(tok[7], line_no)};
    r.height = parse_number<double>(tok[8], line_no);
    r.width = parse_number<double>(tok[9], line_no);
    r.length = parse_number<double>(tok[10], line_no);
    r.location = Vec3(parse_number<double>(tok[11], line_no), parse_number<double>(tok[12], line_no),
                      parse_number<double>(tok[13], line_no));
    r.rotation_y = parse_number<double>(tok[14], line_no);
    if (tok.size() == 16) r.score = parse_number<double>(tok[15], line_no);
    out.push_back(std::move(r));
  });
  return out;
}

std::string write_results(std::span<const DetectionRecord> records, int decimals) {
  std::string out;
  for (const DetectionRecord& r : records) {
    out += r.category;
    out += ' ' + fixed(r.truncated, decimals);
    out += ' ' + std::to_string(r.occluded);
    for (double v : {r.alpha, r.box2d.x_min, r.box2d.y_min, r.box2d.x_max, r.box2d.y_max, r.height, r.width,
                     r.length, r.location.x(), r.location.y(), r.location.z(), r.rotation_y}) {
      out += ' ' + fixed(v, decimals);
    }
    if (r.score) out += ' ' + fixed(*r.score, std::max(decimals, 4));
    out += '\n';
  }
  return out;
}

CameraIntrinsics CalibRecord::intrinsics() const {
  CameraIntrinsics k{p2(0, 0), p2(1, 1), p2(0, 2), p2(1, 2), p2(0, 1)};
  k.validate();
  return k;
}

Vec3 CalibRecord::offset() const { return intrinsics().matrix().inverse() * p2.col(3); }

CalibRecord parse_calib_file(std::string_view text) {
  std::optional<CalibRecord> calib;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] != "P2:") return;
    if (tok.size() != 13) throw MalformedLine(line_no, std::string(tok.back()), "P2 needs 12 values");
    CalibRecord c;
    for (int i = 0; i < 12; ++i) c.p2(i / 4, i % 4) = parse_number<double>(tok[1 + i], line_no);
    calib = c;
  });
  if (!calib) throw MissingKey("P2");
  const auto& p = calib->p2;
  if (std::abs(p(2, 2) - 1.0) > 1e-6 || p(1, 0) != 0.0 || p(2, 0) != 0.0 || p(2, 1) != 0.0) {
    throw std::invalid_argument("P2 is not of the form K [I | t]");
  }
  calib->intrinsics();  // validates focal lengths
  return *calib;
}

Box3D location_to_center(const DetectionRecord& record) {
  if (!record.has_dims()) throw std::invalid_argument("record has no dimensions");
  Box3D box;
  box.dims = {record.length, record.height, record.width};
  box.center = record.location - Vec3(0.0, 0.5 * record.height, 0.0);
  box.yaw = record.rotation_y;
  return box;
}

Vec3 center_to_location(const Box3D& box) { return box.center + Vec3(0.0, 0.5 * box.dims.dy, 0.0); }

void assign_box(DetectionRecord& record, const Box3D& box) {
  record.length = box.dims.dx;
  record.height = box.dims.dy;
  record.width = box.dims.dz;
  record.location = center_to_location(box);
  record.rotation_y = box.yaw;
}

DimensionStats compute_dimension_stats(std::span<const DetectionRecord> records, std::string_view category) {
  DimensionStats stats;
  Vec3 sum = Vec3::Zero(), sum_sq = Vec3::Zero();
  for (const DetectionRecord& r : records) {
    if (r.dont_care() || r.category != category || !r.has_dims()) continue;
    const Vec3 d(r.length, r.height, r.width);
    sum += d;
    sum_sq += d.cwiseProduct(d);
    ++stats.count;
  }
  if (stats.count == 0) throw NoSamples(std::string(category));
  const double n = static_cast<double>(stats.count);
  const Vec3 mean = sum / n;
  stats.mean = Dimensions::from_vector(mean);
  stats.stddev = (sum_sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  return stats;
}

Dimensions compute_mean_dims(std::span<const DetectionRecord> records, std::string_view category) {
  return compute_dimension_stats(records, category).mean;
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Moderate: return "moderate";
    case Difficulty::Hard: return "hard";
  }
  return "unknown";
}

bool meets_difficulty(const DetectionRecord& record, Difficulty d) {
  static constexpr double kMinHeight[] = {40.0, 25.0, 25.0};
  static constexpr int kMaxOcclusion[] = {0, 1, 2};
  static constexpr double kMaxTruncation[] = {0.15, 0.30, 0.50};
  const auto i = static_cast<int>(d);
  return record.box2d.height() >= kMinHeight[i] && record.occluded <= kMaxOcclusion[i] &&
         record.truncated <= kMaxTruncation[i];
}

std::string to_json_line(const LiftedRecord& lr) {
  const DetectionRecord& r = lr.record;
  json j;
  j["frame"] = lr.frame;
  j["index"] = lr.index;
  j["category"] = r.category;
  j["truncated"] = r.truncated;
  j["occluded"] = r.occluded;
  j["alpha"] = r.alpha;
  j["bbox"] = {r.box2d.x_min, r.box2d.y_min, r.box2d.x_max, r.box2d.y_max};
  j["dimensions"] = {r.height, r.width, r.length};
  j["location"] = {r.location.x(), r.location.y(), r.location.z()};
  j["rotation_y"] = r.rotation_y;
  if (r.score) j["score"] = *r.score;
  j["configuration"] = lr.configuration.corners;
  j["configuration_index"] = lr.configuration_index;
  j["residual"] = lr.residual;
  j["reprojection_error"] = lr.reprojection_error;
  return j.dump();
}

LiftedRecord lifted_record_from_json(std::string_view line) {
  const json j = json::parse(line);
  LiftedRecord lr;
  DetectionRecord& r = lr.record;
  lr.frame = j.at("frame").get<std::string>();
  lr.index = j.at("index").get<std::size_t>();
  r.category = j.at("category").get<std::string>();
  r.truncated = j.value("truncated", 0.0);
  r.occluded = j.value("occluded", 0);
  r.alpha = j.at("alpha").get<double>();
  const auto bbox = j.at("bbox").get<std::array<double, 4>>();
  r.box2d = {bbox[0], bbox[1], bbox[2], bbox[3]};
  const auto dims = j.at("dimensions").get<std::array<double, 3>>();
  r.height = dims[0];
  r.width = dims[1];
  r.length = dims[2];
  const auto loc = j.at("location").get<std::array<double, 3>>();
  r.location = Vec3(loc[0], loc[1], loc[2]);
  r.rotation_y = j.at("rotation_y").get<double>();
  if (j.contains("score")) r.score = j.at("score").get<double>();
  lr.configuration.corners = j.value("configuration", std::array<int, 4>{});
  lr.configuration_index = j.value("configuration_index", std::size_t{0});
  lr.residual = j.value("residual", 0.0);
  lr.reprojection_error = j.value("reprojection_error", 0.0);
  return lr;
}

std::vector<LiftedRecord> parse_results_jsonl(std::string_view text) {
  std::vector<LiftedRecord> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (split_ws(line).empty()) return;
    try {
      out.push_back(lifted_record_from_json(line));
    } catch (const json::exception& e) {
      throw MalformedLine(line_no, std::string(line.substr(0, 40)), e.what());
    }
  });
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace boxlift
