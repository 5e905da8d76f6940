#include "boxlift/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "boxlift/angle.hpp"
#include "boxlift/errors.hpp"
#include "boxlift/kitti_io.hpp"
#include "boxlift/log.hpp"
#include "boxlift/toy_trainer.hpp"

namespace boxlift {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config '" + key + "': " + why);
  };
  try {
    layout();
  } catch (const std::invalid_argument& e) {
    fail("bins/overlap", e.what());
  }
  if (!(w > 0.0)) fail("w", "must be positive");
  if (!(alpha > 0.0)) fail("alpha", "must be positive");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) fail("iou_thresh", "must lie in (0, 1]");
  if (category.empty()) fail("category", "must not be empty");
  if (toy_bins.empty()) fail("toy.bins", "must not be empty");
  for (int b : toy_bins) {
    if (b < 1) fail("toy.bins", "bin counts must be >= 1");
    try {
      if (b > 1) BinLayout::uniform(b, overlap);
    } catch (const std::invalid_argument& e) {
      fail("toy.bins", e.what());
    }
  }
  if (toy_train_samples == 0 || toy_test_samples == 0) fail("toy.train_samples", "must be positive");
  if (!(toy_sigma >= 0.0)) fail("toy.sigma", "must be non-negative");
  if (toy_epochs < 0) fail("toy.epochs", "must be non-negative");
  if (!(toy_learning_rate >= 0.0)) fail("toy.lr", "must be non-negative");
  if (toy_hidden < 1) fail("toy.hidden", "must be positive");
  if (toy_batch_size == 0) fail("toy.batch_size", "must be positive");
}

RunConfig config_from_json_text(const std::string& text, RunConfig cfg) {
  const json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "mode") cfg.mode = parse_constraint_mode(value.get<std::string>());
    else if (key == "bins") cfg.bins = value.get<int>();
    else if (key == "overlap") cfg.overlap = value.get<double>();
    else if (key == "w") cfg.w = value.get<double>();
    else if (key == "alpha") cfg.alpha = value.get<double>();
    else if (key == "iou_thresh") cfg.iou_threshold = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "out") cfg.out = value.get<std::string>();
    else if (key == "category") cfg.category = value.get<std::string>();
    else if (key == "toy") {
      for (const auto& [tk, tv] : value.items()) {
        if (tk == "bins") cfg.toy_bins = tv.get<std::vector<int>>();
        else if (tk == "train_samples") cfg.toy_train_samples = tv.get<std::size_t>();
        else if (tk == "test_samples") cfg.toy_test_samples = tv.get<std::size_t>();
        else if (tk == "sigma") cfg.toy_sigma = tv.get<double>();
        else if (tk == "epochs") cfg.toy_epochs = tv.get<int>();
        else if (tk == "lr") cfg.toy_learning_rate = tv.get<double>();
        else if (tk == "hidden") cfg.toy_hidden = tv.get<int>();
        else if (tk == "batch_size") cfg.toy_batch_size = tv.get<std::size_t>();
        else throw std::invalid_argument("unknown config key 'toy." + tk + "'");
      }
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) { return config_from_json_text(read_text_file(path)); }

// ---------------------------------------------------------------------------
// lift

namespace {

struct ResidualKey {
  std::string frame;
  std::size_t index;
  auto operator<=>(const ResidualKey&) const = default;
};

std::map<ResidualKey, Vec3> load_residuals(const fs::path& path) {
  std::map<ResidualKey, Vec3> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    const auto d = j.at("delta").get<std::array<double, 3>>();
    out[{j.at("frame").get<std::string>(), j.at("index").get<std::size_t>()}] = Vec3(d[0], d[1], d[2]);
  }
  return out;
}

}  // namespace

LiftSummary cmd_lift(const fs::path& labels_dir, const fs::path& calib_dir, const fs::path& out_path,
                     const RunConfig& config, const std::optional<fs::path>& residuals,
                     const std::optional<fs::path>& kitti_out_dir) {
  config.validate();
  LiftSummary summary;

  struct Frame {
    std::string name;
    fs::path label_path;
    std::vector<DetectionRecord> records;
  };
  std::vector<Frame> frames;
  std::vector<DetectionRecord> corpus;
  for (const fs::path& p : list_files(labels_dir)) {
    Frame f{p.stem().string(), p, parse_label_file(read_text_file(p))};
    corpus.insert(corpus.end(), f.records.begin(), f.records.end());
    frames.push_back(std::move(f));
  }

  std::map<ResidualKey, Vec3> deltas;
  if (residuals) deltas = load_residuals(*residuals);
  std::map<std::string, Dimensions> mean_dims;

  std::string jsonl;
  for (const Frame& frame : frames) {
    std::optional<CalibRecord> calib;
    std::string calib_error;
    try {
      calib = parse_calib_file(read_text_file(calib_dir / (frame.name + ".txt")));
    } catch (const std::exception& e) {
      calib_error = e.what();
    }
    std::vector<DetectionRecord> kitti_rows;
    for (std::size_t i = 0; i < frame.records.size(); ++i) {
      const DetectionRecord& in = frame.records[i];
      if (in.dont_care()) continue;
      ++summary.total;
      const std::string where = frame.name + ":" + std::to_string(i + 1);
      if (!calib) {
        ++summary.failed;
        log(LogLevel::Warn, where + ": no calibration (" + calib_error + ")");
        continue;
      }
      try {
        const CameraIntrinsics k = calib->intrinsics();
        const Vec3 offset = calib->offset();
        Dimensions dims{in.length, in.height, in.width};
        if (residuals) {
          const auto it = deltas.find({frame.name, i});
          if (it == deltas.end()) throw std::invalid_argument("no dimension residual for record");
          auto mean = mean_dims.find(in.category);
          if (mean == mean_dims.end()) mean = mean_dims.emplace(in.category, compute_mean_dims(corpus, in.category)).first;
          dims = Dimensions::from_vector(mean->second.as_vector() + it->second);
        }
        dims.validate();
        const double yaw = local_to_global(in.alpha, ray_angle(k, in.box2d.center_u()));
        const Rotation r = rotation_from_angles(yaw, 0.0, 0.0);
        const LiftResult res = lift(k, r, dims, in.box2d, config.mode);

        Box3D box;
        box.center = res.translation - offset;
        box.dims = dims;
        box.yaw = yaw;
        LiftedRecord out{frame.name, i, in, res.configuration, res.configuration_index, res.residual,
                         res.reprojection_error};
        assign_box(out.record, box);
        if (!out.record.score) out.record.score = 1.0;
        jsonl += to_json_line(out) + '\n';
        kitti_rows.push_back(out.record);
        ++summary.lifted;
        log(LogLevel::Debug, where + ": reprojection error " + std::to_string(res.reprojection_error));
      } catch (const std::exception& e) {
        ++summary.failed;
        log(LogLevel::Warn, where + ": " + e.what());
      }
    }
    if (kitti_out_dir) write_text_file(*kitti_out_dir / (frame.name + ".txt"), write_results(kitti_rows));
  }
  write_text_file(out_path, jsonl);
  log(LogLevel::Info, "lifted " + std::to_string(summary.lifted) + " of " + std::to_string(summary.total));
  if (2 * summary.failed > summary.total) summary.exit_code = kExitFailure;
  return summary;
}

// ---------------------------------------------------------------------------
// eval

std::vector<MatchedPair> match_pairs(const std::vector<Box3D>& gt_boxes, const std::vector<Box2D>& gt_boxes2d,
                                     const std::vector<Box3D>& pred_boxes, const std::vector<Box2D>& pred_boxes2d,
                                     const std::vector<double>& scores, double iou_threshold) {
  std::vector<std::size_t> order(pred_boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> taken(gt_boxes.size(), false);
  std::vector<MatchedPair> out;
  for (std::size_t d : order) {
    double best_iou = -1.0;
    std::size_t best = gt_boxes.size();
    for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
      if (taken[g]) continue;
      const double o = iou2d(pred_boxes2d[d], gt_boxes2d[g]);
      if (o >= iou_threshold && o > best_iou) {
        best_iou = o;
        best = g;
      }
    }
    if (best == gt_boxes.size()) continue;
    taken[best] = true;
    out.push_back({gt_boxes[best], gt_boxes2d[best], pred_boxes[d], pred_boxes2d[d], scores[d], best_iou});
  }
  return out;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

EvalSummary cmd_eval(const fs::path& gt_dir, const fs::path& results_path, const RunConfig& config,
                     std::ostream* summary_stream) {
  config.validate();
  EvalSummary summary;
  std::map<std::string, std::vector<LiftedRecord>> by_frame;
  for (LiftedRecord& r : parse_results_jsonl(read_text_file(results_path))) {
    if (r.record.category == config.category) by_frame[r.frame].push_back(std::move(r));
  }

  std::map<std::string, std::vector<DetectionRecord>> gt_by_frame;
  for (const fs::path& p : list_files(gt_dir)) gt_by_frame[p.stem().string()] = parse_label_file(read_text_file(p));
  for (const auto& [frame, _] : by_frame) {
    if (!gt_by_frame.contains(frame)) {
      summary.missing_ground_truth.push_back(frame);
      log(LogLevel::Warn, "no ground truth for frame " + frame + "; skipped");
    }
  }

  for (Difficulty d : {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard}) {
    std::vector<EvalFrame> frames;
    for (const auto& [frame, gts] : gt_by_frame) {
      EvalFrame ef;
      for (const DetectionRecord& g : gts) {
        if (g.dont_care() || g.category != config.category) continue;
        ef.ground_truth.push_back({g.box2d, g.rotation_y, !meets_difficulty(g, d)});
      }
      if (const auto it = by_frame.find(frame); it != by_frame.end()) {
        for (const LiftedRecord& r : it->second)
          ef.detections.push_back({r.record.box2d, r.record.rotation_y, r.record.score.value_or(1.0)});
      }
      frames.push_back(std::move(ef));
    }
    DifficultyMetrics m;
    m.difficulty = std::string(to_string(d));
    m.result = aos(frames, config.iou_threshold);
    if (m.result.ap > 0.0) {
      m.orientation_score = std::min(1.0, orientation_score(std::min(m.result.aos, m.result.ap), m.result.ap));
      m.angle_error_deg = rad_to_deg(os_to_angle(m.orientation_score));
    } else {
      m.orientation_score = m.angle_error_deg = std::numeric_limits<double>::quiet_NaN();
    }
    summary.difficulties.push_back(std::move(m));
  }

  for (const auto& [frame, gts] : gt_by_frame) {
    const auto it = by_frame.find(frame);
    if (it == by_frame.end()) continue;
    std::vector<Box3D> gt3, pr3;
    std::vector<Box2D> gt2, pr2;
    std::vector<double> scores;
    for (const DetectionRecord& g : gts) {
      if (g.dont_care() || g.category != config.category || !g.has_dims()) continue;
      gt3.push_back(location_to_center(g));
      gt2.push_back(g.box2d);
    }
    for (const LiftedRecord& r : it->second) {
      if (!r.record.has_dims()) continue;
      pr3.push_back(location_to_center(r.record));
      pr2.push_back(r.record.box2d);
      scores.push_back(r.record.score.value_or(1.0));
    }
    auto pairs = match_pairs(gt3, gt2, pr3, pr2, scores, config.iou_threshold);
    summary.pairs.insert(summary.pairs.end(), pairs.begin(), pairs.end());
  }

  summary.distance_bins = bin_by_distance(summary.pairs);
  std::vector<double> geodesic;
  for (const MatchedPair& p : summary.pairs) {
    summary.mean_center_error += center_distance(p.gt, p.pred);
    summary.mean_closest_point_error += closest_point_distance_error(p.gt, p.pred);
    summary.mean_iou3d += iou3d(p.gt, p.pred);
    geodesic.push_back(geodesic_distance(p.gt.rotation(), p.pred.rotation()));
  }
  if (!summary.pairs.empty()) {
    const double n = static_cast<double>(summary.pairs.size());
    summary.mean_center_error /= n;
    summary.mean_closest_point_error /= n;
    summary.mean_iou3d /= n;
    summary.viewpoint = viewpoint_stats(geodesic);
  }

  json j;
  j["category"] = config.category;
  j["iou_threshold"] = config.iou_threshold;
  for (const DifficultyMetrics& m : summary.difficulties) {
    j["orientation"][m.difficulty] = {{"ap", m.result.ap},
                                      {"aos", m.result.aos},
                                      {"os", number_or_null(m.orientation_score)},
                                      {"angle_error_deg", number_or_null(m.angle_error_deg)},
                                      {"positives", m.result.positives},
                                      {"true_positives", m.result.true_positives}};
  }
  j["matched_pairs"] = summary.pairs.size();
  j["mean_center_error_m"] = summary.mean_center_error;
  j["mean_closest_point_error_m"] = summary.mean_closest_point_error;
  j["mean_iou3d"] = summary.mean_iou3d;
  if (summary.viewpoint) {
    j["viewpoint"] = {{"median_error_deg", rad_to_deg(summary.viewpoint->median_error)},
                      {"acc_pi_6", summary.viewpoint->accuracy_pi_6}};
  }
  j["missing_ground_truth"] = summary.missing_ground_truth;

  if (!config.out.empty()) {
    std::ostringstream csv;
    csv << std::setprecision(10) << "difficulty,positives,true_positives,ap,aos,os,angle_error_deg\n";
    for (const DifficultyMetrics& m : summary.difficulties) {
      csv << m.difficulty << ',' << m.result.positives << ',' << m.result.true_positives << ',' << m.result.ap << ','
          << m.result.aos << ',' << m.orientation_score << ',' << m.angle_error_deg << '\n';
    }
    write_text_file(config.out + ".csv", csv.str());

    std::ostringstream dist;
    dist << std::setprecision(10) << "bin_lower_m,bin_upper_m,count,center_error_m,closest_point_error_m,iou3d\n";
    for (const DistanceBin& b : summary.distance_bins) {
      dist << b.lower << ',' << b.upper << ',' << b.count << ',' << b.mean_center_error << ','
           << b.mean_closest_point_error << ',' << b.mean_iou3d << '\n';
    }
    write_text_file(config.out + "_distance.csv", dist.str());
    write_text_file(config.out + ".json", j.dump(2) + '\n');
  }
  if (summary_stream) *summary_stream << j.dump(2) << '\n';
  return summary;
}

// ---------------------------------------------------------------------------
// toy

int cmd_toy(const RunConfig& config, std::ostream& csv, std::ostream* history_csv) {
  config.validate();
  const auto train_set = make_synthetic_dataset(config.toy_train_samples, config.toy_sigma, config.seed);
  const auto test_set = make_synthetic_dataset(config.toy_test_samples, config.toy_sigma, config.seed + 1);
  ToyConfig tc;
  tc.hidden = config.toy_hidden;
  tc.epochs = config.toy_epochs;
  tc.learning_rate = config.toy_learning_rate;
  tc.batch_size = config.toy_batch_size;
  tc.loc_weight = config.w;
  tc.overlap = config.overlap;
  tc.seed = config.seed;

  csv << std::setprecision(10) << "bins,model,median_error_rad,os,final_loss\n";
  if (history_csv) *history_csv << std::setprecision(10) << "bins,model,epoch,loss\n";
  for (int bins : config.toy_bins) {
    const ModelKind kind = bins == 1 ? ModelKind::l2_scalar() : ModelKind::multibin(bins);
    try {
      const TrainResult trained = train(kind, train_set, tc);
      const ToyEvaluation ev = evaluate(trained.model, test_set);
      const double final_loss = trained.loss_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                              : trained.loss_history.back();
      csv << bins << ',' << kind.name() << ',' << ev.median_error << ',' << ev.mean_similarity << ',' << final_loss
          << '\n';
      if (history_csv) {
        for (std::size_t e = 0; e < trained.loss_history.size(); ++e)
          *history_csv << bins << ',' << kind.name() << ',' << e << ',' << trained.loss_history[e] << '\n';
      }
    } catch (const DivergedLoss& e) {
      log(LogLevel::Error, kind.name() + ": " + e.what());
      return kExitFailure;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// encode / decode

int cmd_encode(double theta, const BinLayout& layout, std::ostream& out) {
  if (!std::isfinite(theta)) return kExitUsage;
  const MultiBinTarget t = encode(layout, wrap_angle(theta));
  out << std::setprecision(17);
  out << "theta " << wrap_angle(theta) << "\ntarget_bin " << t.target_bin << "\ncovering";
  for (int c : t.covering) out << ' ' << c;
  out << '\n';
  for (int i = 0; i < layout.n_bins; ++i) {
    out << "bin " << i << " center " << layout.center(i) << " conf " << t.encoding.confidence[i] << " delta "
        << std::atan2(t.encoding.sin_delta[i], t.encoding.cos_delta[i]) << '\n';
  }
  out << "encoding";
  for (int i = 0; i < layout.n_bins; ++i)
    out << ' ' << t.encoding.confidence[i] << ' ' << t.encoding.cos_delta[i] << ' ' << t.encoding.sin_delta[i];
  out << '\n';
  return kExitOk;
}

int cmd_decode(std::span<const double> values, const BinLayout& layout, std::ostream& out) {
  const auto n = static_cast<std::size_t>(layout.n_bins);
  if (values.size() != 3 * n) return kExitUsage;
  MultiBinEncoding enc;
  for (std::size_t i = 0; i < n; ++i) {
    enc.confidence.push_back(values[3 * i]);
    enc.cos_delta.push_back(values[3 * i + 1]);
    enc.sin_delta.push_back(values[3 * i + 2]);
  }
  out << std::setprecision(17) << decode(layout, enc) << '\n';
  return kExitOk;
}

}  // namespace boxlift
