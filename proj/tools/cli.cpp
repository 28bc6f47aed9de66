#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "patchnet/box_geom.hpp"
#include "patchnet/dump_format.hpp"
#include "patchnet/equivalence.hpp"
#include "patchnet/error.hpp"
#include "patchnet/kitti_eval.hpp"
#include "patchnet/kitti_io.hpp"
#include "patchnet/patch_repr.hpp"
#include "patchnet/report.hpp"

namespace patchnet::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string depth_dir;
  std::string label_dir;
  std::string calib_dir;
  std::string pred_dir;
  std::string calib_key = "P2";
  std::string channels = "xyz";
  std::size_t patch_size = kDefaultPatchSide;
  double mask_offset = kDefaultMaskOffset;
  double lambda = kDefaultCornerWeight;
  std::vector<double> dist_thresholds = {30.0, 50.0};
  std::vector<double> iou_thresholds = {0.7};
  std::vector<std::string> classes = {"Car"};
  std::string metric = "both";
  std::uint64_t seed = 0;
  std::string out;
  bool rectified = false;
  bool drop_invalid = false;

  // equiv-check
  std::size_t trials = 100;
  bool inject_fault = false;
  std::size_t max_real = 20;

  // iou
  std::vector<double> box_a;
  std::vector<double> box_b;

  // report
  std::vector<std::string> inputs;
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Format:
    case ErrorKind::MalformedCalibration:
      return kExitParse;
    case ErrorKind::Alignment:
      return kExitAlignment;
    case ErrorKind::Io:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

ProjectionModel projection_model(const RunConfig& cfg) {
  return cfg.rectified ? ProjectionModel::Rectified : ProjectionModel::Pinhole;
}

DistanceThresholds distance_thresholds(const RunConfig& cfg) {
  if (cfg.dist_thresholds.size() != 2 ||
      !(cfg.dist_thresholds[0] < cfg.dist_thresholds[1])) {
    throw Error(ErrorKind::Parse, "--dist-thresholds needs two increasing values");
  }
  return {cfg.dist_thresholds[0], cfg.dist_thresholds[1]};
}

void require_dir(const std::string& path, const char* flag) {
  if (path.empty()) {
    throw Error(ErrorKind::Io, fmt::format("{} is required", flag));
  }
  if (!fs::is_directory(path)) {
    throw Error(ErrorKind::Io, fmt::format("{} '{}' is not a directory", flag, path));
  }
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorKind::Io, "--out is required");
  fs::create_directories(cfg.out);
  return cfg.out;
}

// Frame ids (file stems) of `ext` files in `dir`, sorted.
std::vector<std::string> list_frames(const fs::path& dir, const std::string& ext) {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, std::vector<GtObject>> load_ground_truth(const fs::path& dir) {
  std::map<std::string, std::vector<GtObject>> out;
  for (const auto& id : list_frames(dir, ".txt")) {
    std::vector<GtObject> gts;
    try {
      for (const auto& r : parse_label_file(read_text_file(dir / (id + ".txt")))) {
        gts.push_back(to_gt_object(r));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{}: {}", (dir / (id + ".txt")).string(), e.what()));
    }
    out.emplace(id, std::move(gts));
  }
  return out;
}

std::map<std::string, std::vector<Detection>> load_detections(const fs::path& dir) {
  std::map<std::string, std::vector<Detection>> out;
  for (const auto& id : list_frames(dir, ".txt")) {
    std::vector<Detection> dets;
    try {
      for (const auto& r : parse_label_file(read_text_file(dir / (id + ".txt")))) {
        dets.push_back(to_detection(r));
      }
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{}: {}", (dir / (id + ".txt")).string(), e.what()));
    }
    out.emplace(id, std::move(dets));
  }
  return out;
}

// One cropped and resampled RoI per non-DontCare label row.
struct RoiSample {
  std::string frame;
  std::size_t index = 0;
  LabelRecord record;
  DepthPatch crop;
  DepthPatch patch;  // resampled to n x n
  CameraIntrinsics intrinsics;
};

struct RoiScan {
  std::vector<RoiSample> samples;
  std::vector<std::string> frame_errors;
  std::vector<std::string> warnings;
  std::size_t frames = 0;
};

RoiScan scan_rois(const RunConfig& cfg, std::size_t limit = 0) {
  require_dir(cfg.label_dir, "--label-dir");
  require_dir(cfg.depth_dir, "--depth-dir");
  require_dir(cfg.calib_dir, "--calib-dir");
  if (cfg.patch_size == 0) throw Error(ErrorKind::Parse, "--patch-size must be >= 1");
  RoiScan scan;
  const fs::path labels = cfg.label_dir;
  for (const auto& id : list_frames(labels, ".txt")) {
    if (limit && scan.samples.size() >= limit) break;
    ++scan.frames;
    try {
      const auto records = parse_label_file(read_text_file(labels / (id + ".txt")));
      const fs::path calib_path = fs::path(cfg.calib_dir) / (id + ".txt");
      if (!fs::exists(calib_path)) {
        throw Error(ErrorKind::Io, fmt::format("missing calibration '{}'",
                                                calib_path.string()));
      }
      const CalibFile calib = parse_calib_file(read_text_file(calib_path));
      for (const auto& w : calib.warnings) {
        scan.warnings.push_back(fmt::format("{}: {}", calib_path.string(), w));
      }
      const CameraIntrinsics k = calib.intrinsics(cfg.calib_key);
      const DepthMap depth = read_depth_map(fs::path(cfg.depth_dir) / (id + ".png"));
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].type == "DontCare") continue;
        if (limit && scan.samples.size() >= limit) break;
        try {
          RoiSample s{id, i, records[i], crop_roi(depth, records[i].bbox), {}, k};
          s.patch = resample_patch(s.crop, cfg.patch_size);
          scan.samples.push_back(std::move(s));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::EmptyRoi) throw;
          scan.warnings.push_back(fmt::format("frame {} roi {}: {}", id, i, e.what()));
        }
      }
    } catch (const Error& e) {
      scan.frame_errors.push_back(fmt::format("frame {}: {}", id, e.what()));
    }
  }
  return scan;
}

int finish_scan(const RoiScan& scan, std::size_t written, const char* what,
                std::ostream& out, std::ostream& err) {
  for (const auto& w : scan.warnings) err << "warning: " << w << '\n';
  for (const auto& e : scan.frame_errors) err << "error: " << e << '\n';
  out << fmt::format("{} frames, {} {} written, {} frame errors\n", scan.frames,
                     written, what, scan.frame_errors.size());
  return scan.frame_errors.empty() ? kExitOk : kExitFrameErrors;
}

int cmd_convert(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ChannelConfig channels = parse_channel_config(cfg.channels);
  const DistanceThresholds dist = distance_thresholds(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  const RoiScan scan = scan_rois(cfg);
  Table manifest;
  manifest.headers = {"frame", "roi", "class", "left", "top", "right", "bottom",
                      "origin_u", "origin_v", "crop_width", "crop_height", "head",
                      "config", "patch_file", "points_file"};
  for (const RoiSample& s : scan.samples) {
    const PatchTensor t =
        build_patch_tensor(s.patch, s.intrinsics, channels, projection_model(cfg));
    const std::string stem = fmt::format("{}_{:03d}", s.frame, s.index);
    write_text_file(dir / (stem + ".patch"), write_patch_dump(t));
    write_text_file(dir / (stem + ".points"),
                    write_pointset_dump(patch_to_pointset(t, cfg.drop_invalid), channels));
    const int head = route_by_distance(to_box(s.record), dist);
    manifest.rows.push_back(
        {s.frame, std::to_string(s.index), s.record.type,
         fmt::format("{:.2f}", s.record.bbox.left), fmt::format("{:.2f}", s.record.bbox.top),
         fmt::format("{:.2f}", s.record.bbox.right),
         fmt::format("{:.2f}", s.record.bbox.bottom), std::to_string(s.crop.origin_u),
         std::to_string(s.crop.origin_v), std::to_string(s.crop.width),
         std::to_string(s.crop.height), std::to_string(head),
         std::string(to_string(channels)), stem + ".patch", stem + ".points"});
  }
  write_text_file(dir / "manifest.csv", manifest.to_csv());
  return finish_scan(scan, scan.samples.size(), "patches", out, err);
}

int cmd_mask(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path dir = prepare_out_dir(cfg);
  RoiScan scan = scan_rois(cfg);
  Table manifest;
  manifest.headers = {"frame", "roi", "class", "threshold_offset", "foreground",
                      "pixels", "mask_file"};
  std::size_t written = 0;
  for (const RoiSample& s : scan.samples) {
    BinaryMask m;
    try {
      m = make_foreground_mask(s.patch, cfg.mask_offset);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyInput) throw;
      scan.warnings.push_back(
          fmt::format("frame {} roi {}: no valid depth, mask skipped", s.frame, s.index));
      continue;
    }
    const std::string stem = fmt::format("{}_{:03d}", s.frame, s.index);
    write_text_file(dir / (stem + ".mask"), write_mask_dump(m));
    manifest.rows.push_back({s.frame, std::to_string(s.index), s.record.type,
                             fmt::format("{}", cfg.mask_offset), std::to_string(m.count()),
                             std::to_string(m.values.size()), stem + ".mask"});
    ++written;
  }
  write_text_file(dir / "manifest.csv", manifest.to_csv());
  return finish_scan(scan, written, "masks", out, err);
}

int cmd_equiv_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  EquivalenceOptions opts;
  opts.trials = cfg.trials;
  opts.seed = cfg.seed;
  opts.max_side = cfg.patch_size;
  opts.inject_fault = cfg.inject_fault;
  if (!cfg.label_dir.empty() || !cfg.depth_dir.empty()) {
    const ChannelConfig channels = parse_channel_config(cfg.channels);
    const RoiScan scan = scan_rois(cfg, cfg.max_real);
    for (const auto& e : scan.frame_errors) err << "warning: " << e << '\n';
    for (const RoiSample& s : scan.samples) {
      opts.extra_patches.push_back(
          build_patch_tensor(s.patch, s.intrinsics, channels, projection_model(cfg)));
    }
  }
  const EquivalenceReport report = run_equivalence_check(opts);

  Table t;
  t.headers = {"trial", "n", "config", "h_widths", "gamma_widths", "max_abs_dev"};
  for (std::size_t i = 0; i < report.trials.size(); ++i) {
    const auto& tr = report.trials[i];
    auto join = [](const std::vector<std::size_t>& w) {
      std::string s;
      for (std::size_t k = 0; k < w.size(); ++k) s += (k ? "-" : "") + std::to_string(w[k]);
      return s;
    };
    t.rows.push_back({std::to_string(i), std::to_string(tr.n),
                      std::string(to_string(tr.config)), join(tr.h_widths),
                      join(tr.gamma_widths), fmt::format("{:.3e}", tr.deviation)});
  }
  if (!cfg.out.empty()) {
    const fs::path dir = prepare_out_dir(cfg);
    write_text_file(dir / "equivalence.csv", t.to_csv());
  }
  const bool ok = report.passed();
  out << fmt::format(
      "equivalence: {} trials ({} from real patches), max |set - grid| = {:.3e}, "
      "tolerance {:.0e}: {}\n",
      report.trials.size(), opts.extra_patches.size(), report.max_deviation,
      kEquivalenceTolerance, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitEquivalence;
}

Box3D box_from_values(const std::vector<double>& v) {
  Box3D b{v.at(0), v.at(1), v.at(2), v.at(3), v.at(4), v.at(5), v.at(6)};
  validate(b);
  return b;
}

int cmd_iou(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Box3D a = box_from_values(cfg.box_a);
  const Box3D b = box_from_values(cfg.box_b);
  const LossBreakdown loss = detection_loss(a, b, cfg.lambda);
  Table t;
  t.headers = {"quantity", "value"};
  t.rows = {{"iou_bev", fmt::format("{:.6f}", iou_bev(a, b))},
            {"iou_3d", fmt::format("{:.6f}", iou_3d(a, b))},
            {"loss_center", fmt::format("{:.6f}", loss.center)},
            {"loss_size", fmt::format("{:.6f}", loss.size)},
            {"loss_heading", fmt::format("{:.6f}", loss.heading)},
            {"loss_corner", fmt::format("{:.6f}", loss.corner)},
            {"loss_total", fmt::format("{:.6f}", loss.total)}};
  out << t.to_text();
  return kExitOk;
}

struct EvalJob {
  std::string label;
  IouKind kind;
  double threshold;
};

// Jobs run concurrently; results are merged in job order.
std::vector<ApResult> run_eval_jobs(const std::vector<FrameData>& frames,
                                    const std::vector<EvalJob>& jobs,
                                    std::vector<std::size_t>* job_of_result) {
  std::vector<std::future<std::vector<ApResult>>> futures;
  futures.reserve(jobs.size());
  for (const EvalJob& j : jobs) {
    futures.push_back(std::async(std::launch::async, [&frames, j] {
      return evaluate(frames, j.label, j.kind, j.threshold);
    }));
  }
  std::vector<ApResult> all;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    for (ApResult& r : futures[i].get()) {
      all.push_back(r);
      if (job_of_result) job_of_result->push_back(i);
    }
  }
  return all;
}

std::vector<EvalJob> eval_jobs(const RunConfig& cfg) {
  std::vector<EvalJob> jobs;
  for (const auto& label : cfg.classes) {
    for (IouKind kind : {IouKind::Box3d, IouKind::Bev}) {
      for (double thr : cfg.iou_thresholds) jobs.push_back({label, kind, thr});
    }
  }
  return jobs;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require_dir(cfg.label_dir, "--label-dir");
  require_dir(cfg.pred_dir, "--pred-dir");
  const MetricSelection metrics = parse_metric_selection(cfg.metric);
  const auto frames =
      align_frames(load_ground_truth(cfg.label_dir), load_detections(cfg.pred_dir));
  const auto jobs = eval_jobs(cfg);
  std::vector<std::size_t> job_of;
  const auto results = run_eval_jobs(frames, jobs, &job_of);

  Table table;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Table part = ap_results_table(jobs[job_of[i]].label, {results[i]}, metrics);
    if (table.headers.empty()) table.headers = part.headers;
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
  }
  if (table.headers.empty()) table = ap_results_table("", {}, metrics);
  if (!cfg.out.empty()) {
    const fs::path dir = prepare_out_dir(cfg);
    write_text_file(dir / "eval.csv", table.to_csv());
    write_text_file(dir / "eval.txt", table.to_text());
  }
  out << fmt::format("{} frames evaluated\n", frames.size());
  out << table.to_text();
  return kExitOk;
}

int cmd_ablate_channels(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_dir(cfg.label_dir, "--label-dir");
  require_dir(cfg.pred_dir, "--pred-dir");
  const MetricSelection metrics = parse_metric_selection(cfg.metric);
  const auto gts = load_ground_truth(cfg.label_dir);
  const auto jobs = eval_jobs(cfg);

  Table table;
  table.headers = {"config"};
  std::vector<std::string> metric_names;
  if (metrics != MetricSelection::R40) metric_names.push_back("AP_R11");
  if (metrics != MetricSelection::R11) metric_names.push_back("AP_R40");
  for (const EvalJob& j : jobs) {
    for (Difficulty d : kEvalDifficulties) {
      for (const auto& m : metric_names) {
        table.headers.push_back(fmt::format("{}/{}@{:.2f}/{}/{}", j.label,
                                            to_string(j.kind), j.threshold,
                                            to_string(d), m));
      }
    }
  }
  for (ChannelConfig c : {ChannelConfig::Z, ChannelConfig::XZ, ChannelConfig::XYZ,
                          ChannelConfig::UVZ}) {
    std::vector<std::string> row{std::string(to_string(c))};
    const fs::path dir = fs::path(cfg.pred_dir) / std::string(to_string(c));
    if (!fs::is_directory(dir)) {
      err << fmt::format("warning: no prediction set for config '{}' ({})\n",
                         to_string(c), dir.string());
      row.resize(table.headers.size(), "n/a");
      table.rows.push_back(std::move(row));
      continue;
    }
    const auto frames = align_frames(gts, load_detections(dir));
    for (const ApResult& r : run_eval_jobs(frames, jobs, nullptr)) {
      const auto ap = [&](double v) {
        return format_ap(r.num_gt == 0 ? std::nullopt : std::optional<double>(v));
      };
      if (metrics != MetricSelection::R40) row.push_back(ap(r.ap11));
      if (metrics != MetricSelection::R11) row.push_back(ap(r.ap40));
    }
    table.rows.push_back(std::move(row));
  }
  if (!cfg.out.empty()) {
    const fs::path dir = prepare_out_dir(cfg);
    write_text_file(dir / "ablate_channels.csv", table.to_csv());
    write_text_file(dir / "ablate_channels.txt", table.to_text());
  }
  out << table.to_text();
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.inputs.empty()) throw Error(ErrorKind::Io, "report needs at least one --in CSV");
  std::string text;
  for (const auto& path : cfg.inputs) {
    const Table t = parse_csv_table(read_text_file(path));
    text += fmt::format("== {} ==\n", fs::path(path).filename().string());
    text += t.to_text();
  }
  if (!cfg.out.empty()) {
    const fs::path dir = prepare_out_dir(cfg);
    write_text_file(dir / "report.txt", text);
  }
  out << text;
  return kExitOk;
}

void add_data_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--depth-dir", cfg.depth_dir, "Directory of <frame>.png 16-bit depth maps");
  sub->add_option("--label-dir", cfg.label_dir, "Directory of <frame>.txt label files");
  sub->add_option("--calib-dir", cfg.calib_dir, "Directory of <frame>.txt calibration files");
  sub->add_option("--calib-key", cfg.calib_key, "Projection matrix key")->capture_default_str();
  sub->add_option("--channels", cfg.channels, "Channel config")
      ->check(CLI::IsMember({"z", "xz", "xyz", "uvz"}))
      ->capture_default_str();
  sub->add_option("--patch-size", cfg.patch_size, "Patch side after resampling")
      ->capture_default_str();
  sub->add_flag("--rectified", cfg.rectified,
                "Apply the projection matrix translation terms when back-projecting");
}

void add_eval_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--label-dir", cfg.label_dir, "Ground-truth label directory")->required();
  sub->add_option("--pred-dir", cfg.pred_dir, "Prediction directory")->required();
  sub->add_option("--class", cfg.classes, "Class names to evaluate")->capture_default_str();
  sub->add_option("--iou-threshold", cfg.iou_thresholds, "IoU thresholds")
      ->capture_default_str();
  sub->add_option("--metric", cfg.metric, "Interpolated AP variant")
      ->check(CLI::IsMember({"r11", "r40", "both"}))
      ->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"patchnet: depth patch geometry, network equivalence and KITTI-style evaluation"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags win)");
  app.require_subcommand(1);
  app.add_option("--seed", cfg.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", cfg.out, "Output directory");

  auto* convert = app.add_subcommand("convert", "Crop RoIs and dump patch tensors and point sets");
  add_data_options(convert, cfg);
  convert->add_option("--dist-thresholds", cfg.dist_thresholds, "Near/far routing distances")
      ->expected(2)
      ->capture_default_str();
  convert->add_flag("--drop-invalid", cfg.drop_invalid, "Omit zero-depth points from point dumps");
  convert->add_option("--out", cfg.out, "Output directory");

  auto* mask = app.add_subcommand("mask", "Foreground masks from mean depth plus offset");
  add_data_options(mask, cfg);
  mask->add_option("--mask-offset", cfg.mask_offset, "Offset in metres added to the mean depth")
      ->capture_default_str();
  mask->add_option("--out", cfg.out, "Output directory");

  auto* equiv = app.add_subcommand("equiv-check", "Point-set vs 1x1-conv grid equivalence harness");
  add_data_options(equiv, cfg);
  equiv->add_option("--trials", cfg.trials, "Random trials")->capture_default_str();
  equiv->add_option("--max-real", cfg.max_real, "Cap on real patches")->capture_default_str();
  equiv->add_flag("--inject-fault", cfg.inject_fault, "Negative control: perturb the grid path");
  equiv->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
  equiv->add_option("--out", cfg.out, "Output directory");

  auto* iou = app.add_subcommand("iou", "IoU and loss terms between two boxes");
  iou->add_option("--box-a", cfg.box_a, "x,y,z,h,w,l,theta")->delimiter(',')->expected(7)->required();
  iou->add_option("--box-b", cfg.box_b, "x,y,z,h,w,l,theta")->delimiter(',')->expected(7)->required();
  iou->add_option("--lambda", cfg.lambda, "Corner loss weight")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "AP|R11 and AP|R40 for 3D and BEV per difficulty");
  add_eval_options(eval, cfg);
  eval->add_option("--out", cfg.out, "Output directory");

  auto* ablate = app.add_subcommand("ablate-channels",
                                    "Channel-configuration table from <pred-dir>/{z,xz,xyz,uvz}");
  add_eval_options(ablate, cfg);
  ablate->add_option("--out", cfg.out, "Output directory");

  auto* report = app.add_subcommand("report", "Render result CSV files as aligned tables");
  report->add_option("--in", cfg.inputs, "CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", cfg.out, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*convert) return cmd_convert(cfg, out, err);
    if (*mask) return cmd_mask(cfg, out, err);
    if (*equiv) return cmd_equiv_check(cfg, out, err);
    if (*iou) return cmd_iou(cfg, out, err);
    if (*eval) return cmd_eval(cfg, out, err);
    if (*ablate) return cmd_ablate_channels(cfg, out, err);
    if (*report) return cmd_report(cfg, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace patchnet::cli
