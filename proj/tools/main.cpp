// boxlift command-line entry point.
//
//   boxlift lift   --labels DIR --calib DIR --out FILE [--residuals FILE] [--kitti-out DIR]
//   boxlift eval   --gt DIR --results FILE [--out PREFIX]
//   boxlift toy    [--sweep 1,2,4,8] [--out FILE] [--history FILE]
//   boxlift encode THETA
//   boxlift decode C0 COS0 SIN0 C1 COS1 SIN1 ...
//
// Shared flags: --mode --bins --overlap --w --alpha --iou-thresh --seed
// --config. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "boxlift/cli.hpp"
#include "boxlift/kitti_io.hpp"

namespace {

struct Overrides {
  std::optional<std::string> mode;
  std::optional<int> bins;
  std::optional<double> overlap;
  std::optional<double> w;
  std::optional<double> alpha;
  std::optional<double> iou;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> category;
};

void add_shared(CLI::App* sub, Overrides& o) {
  sub->add_option("--mode", o.mode, "Constraint mode")->check(CLI::IsMember({"general", "upright", "zeroroll", "kitti"}));
  sub->add_option("--bins", o.bins, "MultiBin bin count");
  sub->add_option("--overlap", o.overlap, "Bin half-width as a multiple of pi/bins");
  sub->add_option("--w", o.w, "Localization loss weight");
  sub->add_option("--alpha", o.alpha, "Dimension loss weight");
  sub->add_option("--iou-thresh", o.iou, "2D IoU matching threshold");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--config", o.config, "JSON config file");
  sub->add_option("--out", o.out, "Output path");
  sub->add_option("--category", o.category, "Object category to evaluate");
}

boxlift::RunConfig resolve(const Overrides& o) {
  boxlift::RunConfig cfg = o.config ? boxlift::load_config(*o.config) : boxlift::RunConfig{};
  if (o.mode) cfg.mode = boxlift::parse_constraint_mode(*o.mode);
  if (o.bins) cfg.bins = *o.bins;
  if (o.overlap) cfg.overlap = *o.overlap;
  if (o.w) cfg.w = *o.w;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.iou) cfg.iou_threshold = *o.iou;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.category) cfg.category = *o.category;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lift 2D detections to 3D boxes, MultiBin utilities and 3D box metrics"};
  app.require_subcommand(1);
  Overrides o;

  auto* lift = app.add_subcommand("lift", "Recover 3D boxes from KITTI labels and calibration");
  std::string labels_dir, calib_dir;
  std::optional<std::string> residuals, kitti_out;
  lift->add_option("--labels", labels_dir, "Directory of KITTI label files")->required();
  lift->add_option("--calib", calib_dir, "Directory of KITTI calibration files")->required();
  lift->add_option("--residuals", residuals, "JSON lines of dimension residuals");
  lift->add_option("--kitti-out", kitti_out, "Also write KITTI-format results to this directory");
  add_shared(lift, o);

  auto* eval = app.add_subcommand("eval", "Evaluate lifted results against ground-truth labels");
  std::string gt_dir, results_path;
  eval->add_option("--gt", gt_dir, "Directory of ground-truth label files")->required();
  eval->add_option("--results", results_path, "JSON-lines results file")->required();
  add_shared(eval, o);

  auto* toy = app.add_subcommand("toy", "MultiBin bin-count sweep on synthetic angles");
  std::optional<std::vector<int>> sweep;
  std::optional<std::string> history;
  toy->add_option("--sweep", sweep, "Bin counts to train (1 = scalar L2 baseline)")->delimiter(',');
  toy->add_option("--history", history, "Write per-epoch loss history CSV here");
  add_shared(toy, o);

  auto* enc = app.add_subcommand("encode", "Print the MultiBin target of an angle");
  double theta = 0.0;
  enc->add_option("theta", theta, "Angle in radians")->required();
  add_shared(enc, o);

  auto* dec = app.add_subcommand("decode", "Decode (c, cos, sin) triplets into an angle");
  std::vector<double> values;
  dec->add_option("values", values, "c cos sin per bin")->required();
  add_shared(dec, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return boxlift::kExitUsage;
  }

  boxlift::RunConfig cfg;
  try {
    cfg = resolve(o);
    if (sweep) {
      cfg.toy_bins = *sweep;
      cfg.validate();
    }
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return boxlift::kExitUsage;
  }

  try {
    if (*lift) {
      if (cfg.out.empty()) {
        std::cerr << "usage error: lift needs --out\n";
        return boxlift::kExitUsage;
      }
      const auto s = boxlift::cmd_lift(labels_dir, calib_dir, cfg.out, cfg, residuals, kitti_out);
      std::cerr << "lifted " << s.lifted << " / " << s.total << " records (" << s.failed << " failed)\n";
      return s.exit_code;
    }
    if (*eval) return boxlift::cmd_eval(gt_dir, results_path, cfg, &std::cout).exit_code;
    if (*toy) {
      std::optional<std::ofstream> hist;
      if (history) hist.emplace(*history);
      if (cfg.out.empty()) return boxlift::cmd_toy(cfg, std::cout, hist ? &*hist : nullptr);
      std::ofstream out(cfg.out);
      return boxlift::cmd_toy(cfg, out, hist ? &*hist : nullptr);
    }
    if (*enc) return boxlift::cmd_encode(theta, cfg.layout(), std::cout);
    if (*dec) {
      const int rc = boxlift::cmd_decode(values, cfg.layout(), std::cout);
      if (rc == boxlift::kExitUsage) std::cerr << "usage error: expected 3 values per bin\n";
      return rc;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return boxlift::kExitFailure;
  }
  return boxlift::kExitUsage;
}
