#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "boxlift/angle.hpp"
#include "boxlift/cli.hpp"
#include "boxlift/kitti_io.hpp"
#include "test_support.hpp"

using namespace boxlift;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(BOXLIFT_TEST_DATA) / "kitti";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("boxlift_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const char* kCalibP2 =
    "P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 0.000000000000e+00 "
    "7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 0.000000000000e+00 0.000000000000e+00 "
    "1.000000000000e+00 2.745884000000e-03\n";

// Synthetic frames whose 2D boxes are exact projections of the 3D labels.
std::vector<std::vector<Box3D>> write_synthetic_dataset(const fs::path& root, int frames, int per_frame) {
  fs::create_directories(root / "label_2");
  fs::create_directories(root / "calib");
  const CalibRecord calib = parse_calib_file(kCalibP2);
  const CameraIntrinsics k = calib.intrinsics();
  std::mt19937_64 rng(41);
  std::vector<std::vector<Box3D>> truth(frames);
  for (int f = 0; f < frames; ++f) {
    std::vector<DetectionRecord> recs;
    for (int i = 0; i < per_frame; ++i) {
      const Box3D b = boxlift::testing::random_upright_box(rng);
      Box3D in_cam2 = b;
      in_cam2.center += calib.offset();
      DetectionRecord r;
      r.category = "Car";
      r.box2d = project_box(k, in_cam2);
      assign_box(r, b);
      r.alpha = wrap_angle(b.yaw - ray_angle(k, r.box2d.center_u()));
      recs.push_back(r);
      truth[f].push_back(b);
    }
    char name[16];
    std::snprintf(name, sizeof name, "%06d.txt", f);
    write_text_file(root / "label_2" / name, write_results(recs, 10));
    write_text_file(root / "calib" / name, kCalibP2);
  }
  return truth;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(BOXLIFT_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string lifted_as_labels(const fs::path& jsonl, const std::string& frame, double yaw_shift = 0.0) {
  std::vector<DetectionRecord> recs;
  for (const LiftedRecord& r : parse_results_jsonl(read_text_file(jsonl))) {
    if (r.frame != frame) continue;
    recs.push_back(r.record);
    recs.back().rotation_y = wrap_angle(recs.back().rotation_y + yaw_shift);
  }
  return write_results(recs, 10);
}

}  // namespace

TEST_CASE("config loading") {
  const RunConfig c = config_from_json_text(
      R"({"mode": "general", "bins": 4, "overlap": 1.2, "seed": 3, "toy": {"bins": [1, 2], "epochs": 5}})");
  CHECK(c.mode == ConstraintMode::General);
  CHECK(c.bins == 4);
  CHECK(c.layout().coverage_half_width == doctest::Approx(1.2 * kPi / 4));
  CHECK(c.seed == 3);
  CHECK(c.toy_bins == std::vector<int>{1, 2});
  CHECK(c.toy_epochs == 5);
  CHECK(c.toy_hidden == 32);
  CHECK_THROWS(config_from_json_text(R"({"bins": 2, "colour": 1})"));
  CHECK_THROWS(config_from_json_text(R"({"mode": "sideways"})"));
  CHECK_THROWS(config_from_json_text("{"));
  RunConfig bad;
  bad.iou_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RunConfig{};
  bad.w = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("lift recovers synthetic boxes") {
  TempDir tmp("lift");
  const auto truth = write_synthetic_dataset(tmp.path, 5, 20);
  const fs::path out = tmp.path / "results.jsonl";
  const LiftSummary s = cmd_lift(tmp.path / "label_2", tmp.path / "calib", out, RunConfig{}, std::nullopt,
                                 tmp.path / "kitti_out");
  CHECK(s.exit_code == kExitOk);
  CHECK(s.total == 100);
  CHECK(s.lifted == 100);
  CHECK(s.failed == 0);
  const auto results = parse_results_jsonl(read_text_file(out));
  REQUIRE(results.size() == 100);
  double worst = 0.0;
  for (const LiftedRecord& r : results) {
    const Box3D& t = truth[std::stoi(r.frame)][r.index];
    worst = std::max(worst, (location_to_center(r.record).center - t.center).norm());
    CHECK(r.reprojection_error < 1e-6);
  }
  CHECK(worst < 1e-4);
  CHECK(list_files(tmp.path / "kitti_out").size() == 5);

  // Output order follows (file, line).
  for (std::size_t i = 1; i < results.size(); ++i) {
    const bool ordered = results[i - 1].frame < results[i].frame ||
                         (results[i - 1].frame == results[i].frame && results[i - 1].index < results[i].index);
    CHECK(ordered);
  }
  // Same inputs, same bytes.
  const fs::path again = tmp.path / "again.jsonl";
  cmd_lift(tmp.path / "label_2", tmp.path / "calib", again, RunConfig{});
  CHECK(read_text_file(out) == read_text_file(again));
}

TEST_CASE("lift with dimension residuals") {
  TempDir tmp("residuals");
  const auto truth = write_synthetic_dataset(tmp.path, 2, 5);
  std::vector<DetectionRecord> corpus;
  for (const auto& p : list_files(tmp.path / "label_2")) {
    const auto recs = parse_label_file(read_text_file(p));
    corpus.insert(corpus.end(), recs.begin(), recs.end());
  }
  const Dimensions mean = compute_mean_dims(corpus, "Car");
  std::string lines;
  for (std::size_t f = 0; f < truth.size(); ++f) {
    for (std::size_t i = 0; i < truth[f].size(); ++i) {
      const Vec3 d = truth[f][i].dims.as_vector() - mean.as_vector();
      char buf[200];
      std::snprintf(buf, sizeof buf, "{\"frame\": \"%06zu\", \"index\": %zu, \"delta\": [%.17g, %.17g, %.17g]}\n", f,
                    i, d.x(), d.y(), d.z());
      lines += buf;
    }
  }
  write_text_file(tmp.path / "residuals.jsonl", lines);
  const fs::path out = tmp.path / "results.jsonl";
  const LiftSummary s =
      cmd_lift(tmp.path / "label_2", tmp.path / "calib", out, RunConfig{}, tmp.path / "residuals.jsonl");
  CHECK(s.lifted == 10);
  for (const LiftedRecord& r : parse_results_jsonl(read_text_file(out)))
    CHECK((location_to_center(r.record).center - truth[std::stoi(r.frame)][r.index].center).norm() < 1e-4);
}

TEST_CASE("lift edge cases") {
  TempDir tmp("empty");
  fs::create_directories(tmp.path / "labels");
  fs::create_directories(tmp.path / "calib");
  const LiftSummary s = cmd_lift(tmp.path / "labels", tmp.path / "calib", tmp.path / "out.jsonl", RunConfig{});
  CHECK(s.exit_code == kExitOk);
  CHECK(s.total == 0);
  CHECK(read_text_file(tmp.path / "out.jsonl").empty());

  // Labels without calibration all fail, so the batch fails.
  write_text_file(tmp.path / "labels" / "000000.txt",
                  "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n");
  const LiftSummary bad = cmd_lift(tmp.path / "labels", tmp.path / "calib", tmp.path / "out.jsonl", RunConfig{});
  CHECK(bad.failed == 1);
  CHECK(bad.exit_code == kExitFailure);
}

TEST_CASE("lift on the real label subset") {
  TempDir tmp("real");
  const fs::path out = tmp.path / "results.jsonl";
  const LiftSummary s = cmd_lift(kData / "label_2", kData / "calib", out, RunConfig{});
  CHECK(s.total == 8);
  CHECK(s.exit_code == kExitOk);
  double err = 0.0, dist = 0.0;
  std::size_t n = 0;
  for (const LiftedRecord& r : parse_results_jsonl(read_text_file(out))) {
    const auto gt = parse_label_file(read_text_file(kData / "label_2" / (r.frame + ".txt")))[r.index];
    err += (r.record.location - gt.location).norm();
    dist += gt.location.norm();
    ++n;
  }
  REQUIRE(n > 0);
  MESSAGE("real subset: mean center error " << err / n << " m over mean distance " << dist / n << " m");
  CHECK(err / n < 0.1 * dist / n);
}

TEST_CASE("eval of ground truth against itself and with flipped yaw") {
  TempDir tmp("eval");
  write_synthetic_dataset(tmp.path, 3, 6);
  const fs::path results = tmp.path / "results.jsonl";
  cmd_lift(tmp.path / "label_2", tmp.path / "calib", results, RunConfig{});

  RunConfig cfg;
  cfg.out = (tmp.path / "metrics").string();
  std::ostringstream json;
  const EvalSummary self = cmd_eval(tmp.path / "label_2", results, cfg, &json);
  CHECK(self.exit_code == kExitOk);
  REQUIRE(self.difficulties.size() == 3);
  for (const auto& d : self.difficulties) {
    if (d.result.positives == 0) continue;
    CHECK(d.result.ap == doctest::Approx(1.0));
    CHECK(d.orientation_score == doctest::Approx(1.0));
  }
  CHECK(self.pairs.size() == 18);
  CHECK(self.mean_iou3d == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(self.mean_center_error < 1e-4);
  CHECK(self.mean_closest_point_error < 1e-4);
  REQUIRE(self.viewpoint.has_value());
  CHECK(self.viewpoint->median_error < 1e-9);
  CHECK(self.viewpoint->accuracy_pi_6 == 1.0);
  CHECK(fs::exists(cfg.out + ".csv"));
  CHECK(fs::exists(cfg.out + "_distance.csv"));
  CHECK(fs::exists(cfg.out + ".json"));
  CHECK(json.str().find("\"orientation\"") != std::string::npos);

  // Flip every predicted yaw by pi.
  std::string flipped;
  for (LiftedRecord r : parse_results_jsonl(read_text_file(results))) {
    r.record.rotation_y = wrap_angle(r.record.rotation_y + kPi);
    flipped += to_json_line(r) + '\n';
  }
  write_text_file(tmp.path / "flipped.jsonl", flipped);
  const EvalSummary flip = cmd_eval(tmp.path / "label_2", tmp.path / "flipped.jsonl", RunConfig{});
  for (std::size_t i = 0; i < 3; ++i) {
    if (self.difficulties[i].result.positives == 0) continue;
    CHECK(flip.difficulties[i].result.ap == doctest::Approx(self.difficulties[i].result.ap));
    CHECK(flip.difficulties[i].orientation_score == doctest::Approx(0.0).epsilon(1e-9));
  }
  CHECK(flip.viewpoint->median_error == doctest::Approx(kPi));
}

TEST_CASE("eval of a hand-built three object scene") {
  TempDir tmp("scene");
  fs::create_directories(tmp.path / "gt");
  // Three unoccluded cars; the second is hit with yaw off by pi/2, the third missed,
  // plus one false positive.
  write_text_file(tmp.path / "gt" / "000000.txt",
                  "Car 0.00 0 0.00 100.00 100.00 200.00 200.00 1.50 1.60 4.00 -5.00 1.50 20.00 0.00\n"
                  "Car 0.00 0 0.00 300.00 100.00 400.00 200.00 1.50 1.60 4.00 0.00 1.50 20.00 1.00\n"
                  "Car 0.00 0 0.00 500.00 100.00 600.00 200.00 1.50 1.60 4.00 5.00 1.50 20.00 -1.00\n");
  auto gt = parse_label_file(read_text_file(tmp.path / "gt" / "000000.txt"));
  std::vector<LiftedRecord> det(3);
  det[0].record = gt[0];
  det[0].record.score = 0.9;
  det[1].record = gt[0];
  det[1].record.box2d = {700, 100, 800, 200};
  det[1].record.score = 0.8;
  det[2].record = gt[1];
  det[2].record.rotation_y = 1.0 + kPi / 2;
  det[2].record.score = 0.7;
  std::string lines;
  for (std::size_t i = 0; i < det.size(); ++i) {
    det[i].frame = "000000";
    det[i].index = i;
    lines += to_json_line(det[i]) + '\n';
  }
  write_text_file(tmp.path / "det.jsonl", lines);
  const EvalSummary s = cmd_eval(tmp.path / "gt", tmp.path / "det.jsonl", RunConfig{});
  const AosResult& easy = s.difficulties[0].result;
  CHECK(easy.ap == doctest::Approx(6.0 / 11.0));
  CHECK(easy.aos == doctest::Approx(5.5 / 11.0));
  CHECK(s.difficulties[0].orientation_score == doctest::Approx(5.5 / 6.0));
  CHECK(s.pairs.size() == 2);
  CHECK(s.mean_center_error == doctest::Approx(0.0));
  // Second pair: same box rotated by pi/2 about its center.
  CHECK(s.viewpoint->median_error == doctest::Approx(kPi / 4));
}

TEST_CASE("eval lists results without ground truth") {
  TempDir tmp("missing");
  fs::create_directories(tmp.path / "gt");
  LiftedRecord r;
  r.frame = "000042";
  r.record = parse_label_file("Car 0.00 0 0.00 100.00 100.00 200.00 200.00 1.50 1.60 4.00 -5.00 1.50 20.00 0.00")[0];
  write_text_file(tmp.path / "det.jsonl", to_json_line(r) + '\n');
  const EvalSummary s = cmd_eval(tmp.path / "gt", tmp.path / "det.jsonl", RunConfig{});
  CHECK(s.missing_ground_truth == std::vector<std::string>{"000042"});
  CHECK(s.exit_code == kExitOk);
}

TEST_CASE("toy sweep") {
  RunConfig cfg;
  cfg.toy_train_samples = 400;
  cfg.toy_test_samples = 200;
  cfg.toy_epochs = 4;
  cfg.toy_bins = {1};
  std::ostringstream one;
  CHECK(cmd_toy(cfg, one) == kExitOk);
  std::istringstream lines(one.str());
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "bins,model,median_error_rad,os,final_loss");
  CHECK(row.rfind("1,", 0) == 0);
  CHECK_FALSE(std::getline(lines, extra));

  cfg.toy_bins = {1, 2, 4};
  std::ostringstream a, b, hist;
  CHECK(cmd_toy(cfg, a, &hist) == kExitOk);
  CHECK(cmd_toy(cfg, b) == kExitOk);
  CHECK(a.str() == b.str());
  const std::string history = hist.str();
  CHECK(std::count(history.begin(), history.end(), '\n') == 1 + 3 * 4);

  cfg.toy_learning_rate = 1e6;
  cfg.toy_bins = {1};
  std::ostringstream diverged;
  CHECK(cmd_toy(cfg, diverged) == kExitFailure);
}

TEST_CASE("encode and decode") {
  const BinLayout layout = BinLayout::uniform(2);
  std::ostringstream enc;
  REQUIRE(cmd_encode(0.0, layout, enc) == kExitOk);
  CHECK(enc.str().find("target_bin 1\n") != std::string::npos);
  CHECK(enc.str().find("bin 1 center 0 conf 1 delta 0\n") != std::string::npos);

  for (double theta : {0.0, 1.234, -3.0, kPi}) {
    std::ostringstream e;
    cmd_encode(theta, layout, e);
    const std::string text = e.str();
    std::istringstream tail(text.substr(text.rfind("encoding") + 8));
    std::vector<double> values;
    for (double v; tail >> v;) values.push_back(v);
    std::ostringstream d;
    REQUIRE(cmd_decode(values, layout, d) == kExitOk);
    CHECK(std::stod(d.str()) == doctest::Approx(wrap_angle(theta)).epsilon(1e-14));
  }
  std::ostringstream sink;
  CHECK(cmd_encode(NAN, layout, sink) == kExitUsage);
  const std::vector<double> short_values{1.0, 0.0};
  CHECK(cmd_decode(short_values, layout, sink) == kExitUsage);
}

TEST_CASE("binary exit codes") {
  CHECK(run_binary("encode 0.5") == 0);
  CHECK(run_binary("encode not-a-number") == 2);
  CHECK(run_binary("decode 1 1 0") == 2);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("encode 0.5 --mode sideways") == 2);
  CHECK(run_binary("eval --gt /nonexistent/dir --results /nonexistent/file.jsonl") == 1);
}
