// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.hpp"
#include "patchnet/box_geom.hpp"
#include "patchnet/camera.hpp"
#include "patchnet/equivalence.hpp"
#include "patchnet/kitti_eval.hpp"
#include "patchnet/kitti_io.hpp"
#include "patchnet/netfunc.hpp"
#include "patchnet/patch_repr.hpp"
#include "patchnet/random.hpp"

namespace {

using namespace patchnet;

// Tolerances and budgets.
constexpr double kEquivTol = 1e-6;
constexpr double kEquivBudgetSec = 10.0;
constexpr std::size_t kEquivTrials = 100;
constexpr double kRoundTripTol = 1e-9;
constexpr std::size_t kRoundTripPoints = 1000;
constexpr double kMonteCarloTol = 0.01;
constexpr std::size_t kMonteCarloPairs = 100;
constexpr std::size_t kMonteCarloSamples = 1'000'000;
constexpr double kIouBudgetSec = 60.0;
constexpr double kAnalyticTol = 1e-12;
constexpr double kLossTol = 1e-12;
constexpr std::size_t kScoreFixtures = 20;
constexpr std::size_t kRoutingDepths = 1000;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const CameraIntrinsics kKitti{721.5377, 721.5377, 609.5593, 172.854, 0.0, 0.0};

Outcome equivalence() {
  Outcome o;
  EquivalenceOptions opts;
  opts.trials = kEquivTrials;
  opts.seed = 20231014;
  opts.max_side = 32;
  const auto t0 = std::chrono::steady_clock::now();
  const EquivalenceReport r = run_equivalence_check(opts);
  const double elapsed = seconds_since(t0);

  std::size_t widest = 0;
  for (const auto& t : r.trials) {
    if (!t.h_widths.empty() && t.h_widths.back() == 1024 && t.n == 32) ++widest;
  }
  o.require(r.trials.size() >= kEquivTrials, "too few trials");
  o.require(widest > 0, "no full-width trial");
  o.require(r.max_deviation < kEquivTol, fmt::format("deviation {:.3e}", r.max_deviation));
  o.require(elapsed < kEquivBudgetSec, fmt::format("took {:.2f}s", elapsed));

  opts.trials = 3;
  opts.inject_fault = true;
  o.require(!run_equivalence_check(opts).passed(), "injected fault went unnoticed");
  if (o.pass) {
    o.detail = fmt::format("{} trials ({} full width), max dev {:.2e}, {:.2f}s",
                           r.trials.size(), widest, r.max_deviation, elapsed);
  }
  return o;
}

Outcome backprojection() {
  Outcome o;
  const Point3 pp = backproject({kKitti.cx, kKitti.cy, 10.0}, kKitti);
  o.require(pp.x == 0.0 && pp.y == 0.0 && pp.z == 10.0, "principal-point ray");
  const CameraIntrinsics k{700.0, 700.0, 600.0, 180.0, 0.0, 0.0};
  const Point3 fo = backproject({k.cx + k.fu, k.cy, 5.0}, k);
  o.require(fo.x == 5.0 && fo.y == 0.0 && fo.z == 5.0, "focal-offset pixel");

  Rng rng(11);
  double worst = 0.0;
  for (std::size_t i = 0; i < kRoundTripPoints; ++i) {
    const Point3 pt{rng.uniform(-30, 30), rng.uniform(-3, 5), rng.uniform(1, 80)};
    for (auto model : {ProjectionModel::Pinhole, ProjectionModel::Rectified}) {
      CameraIntrinsics kk = kKitti;
      if (model == ProjectionModel::Rectified) kk.tx = 44.857;
      const Point3 back = backproject(project(pt, kk, model), kk, model);
      worst = std::max({worst, std::abs(back.x - pt.x), std::abs(back.y - pt.y),
                        std::abs(back.z - pt.z)});
    }
  }
  o.require(worst < kRoundTripTol, fmt::format("round-trip error {:.3e}", worst));
  if (o.pass) {
    o.detail = fmt::format("fixtures exact, {} points round-trip error {:.2e}",
                           kRoundTripPoints, worst);
  }
  return o;
}

Outcome rotated_iou() {
  Outcome o;
  const Box3D unit{0, 1, 10, 1, 1, 1, 0};
  Box3D shifted = unit;
  shifted.x += 0.5;
  Box3D far = unit;
  far.x += 5.0;
  o.require(std::abs(iou_bev(unit, shifted) - 1.0 / 3.0) <= kAnalyticTol, "bev 1/3 offset");
  o.require(std::abs(iou_3d(unit, shifted) - 1.0 / 3.0) <= kAnalyticTol, "3d 1/3 offset");
  o.require(iou_bev(unit, unit) == 1.0 && iou_3d(unit, unit) == 1.0, "identical boxes");
  o.require(iou_bev(unit, far) == 0.0 && iou_3d(unit, far) == 0.0, "disjoint boxes");

  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(5);
  double worst = 0.0;
  for (std::size_t i = 0; i < kMonteCarloPairs; ++i) {
    const auto [a, b] = oracle::random_box_pair(rng);
    const double mc = oracle::monte_carlo_iou_bev(a, b, kMonteCarloSamples, 1000 + i);
    worst = std::max(worst, std::abs(iou_bev(a, b) - mc));
  }
  const double elapsed = seconds_since(t0);
  o.require(worst <= kMonteCarloTol, fmt::format("MC gap {:.4f}", worst));
  o.require(elapsed < kIouBudgetSec, fmt::format("took {:.1f}s", elapsed));
  if (o.pass) {
    o.detail = fmt::format("fixtures exact, {} pairs max MC gap {:.4f}, {:.1f}s",
                           kMonteCarloPairs, worst, elapsed);
  }
  return o;
}

GtObject easy_car(double x, double z) {
  return {"Car", {x, 1.6, z, 1.5, 1.6, 3.9, 0.0}, {100, 100, 200, 180}, 0.0, 0, false};
}

Outcome ap_metrics() {
  Outcome o;
  const PrCurve half = precision_recall({{0.9, true}}, 2);
  o.require(ap_11(half) == 6.0 / 11.0, fmt::format("AP|R11 {}", ap_11(half)));
  o.require(ap_40(half) == 0.5, fmt::format("AP|R40 {}", ap_40(half)));

  // Pipeline-level perfect and empty detectors.
  std::vector<FrameData> perfect, empty;
  for (int f = 0; f < 4; ++f) {
    FrameData fr{fmt::format("{:06d}", f), {easy_car(-4, 15 + f), easy_car(5, 30)}, {}};
    empty.push_back(fr);
    for (const auto& g : fr.gts) fr.dets.push_back({"Car", g.box3d, 0.8});
    perfect.push_back(fr);
  }
  for (auto kind : {IouKind::Box3d, IouKind::Bev}) {
    for (const auto& r : evaluate(perfect, "Car", kind, 0.7)) {
      o.require(r.ap11 == 1.0 && r.ap40 == 1.0, "perfect detector below 1");
    }
    for (const auto& r : evaluate(empty, "Car", kind, 0.7)) {
      o.require(r.ap11 == 0.0 && r.ap40 == 0.0, "empty detector above 0");
    }
  }

  // Strictly increasing score transforms leave AP unchanged.
  Rng rng(23);
  std::size_t checked = 0;
  for (std::size_t trial = 0; trial < kScoreFixtures; ++trial) {
    std::vector<FrameData> frames;
    for (int f = 0; f < 5; ++f) {
      FrameData fr{fmt::format("{:06d}", f), {}, {}};
      const auto n = rng.integer(1, 4);
      for (std::int64_t k = 0; k < n; ++k) {
        GtObject g = easy_car(rng.uniform(-10, 10), rng.uniform(10, 50));
        g.occlusion = static_cast<int>(rng.integer(0, 2));
        g.bbox2d.bottom = g.bbox2d.top + rng.uniform(20, 60);
        fr.gts.push_back(g);
        Detection d{"Car", g.box3d, rng.uniform01()};
        d.box3d.x += rng.uniform(-0.6, 0.6);
        fr.dets.push_back(d);
      }
      fr.dets.push_back(
          {"Car", easy_car(rng.uniform(-10, 10), rng.uniform(10, 50)).box3d, rng.uniform01()});
      frames.push_back(std::move(fr));
    }
    auto transformed = frames;
    for (auto& fr : transformed) {
      for (auto& d : fr.dets) d.score = std::exp(3.0 * d.score) - 7.0;
    }
    for (auto kind : {IouKind::Box3d, IouKind::Bev}) {
      const auto a = evaluate(frames, "Car", kind, 0.5);
      const auto b = evaluate(transformed, "Car", kind, 0.5);
      for (std::size_t i = 0; i < a.size(); ++i) {
        o.require(a[i].ap11 == b[i].ap11 && a[i].ap40 == b[i].ap40,
                  fmt::format("fixture {} changed under score transform", trial));
        ++checked;
      }
    }
  }
  if (o.pass) {
    o.detail = fmt::format("6/11 and 0.5 exact, perfect 1 / empty 0, {} invariance checks",
                           checked);
  }
  return o;
}

Outcome channel_configs() {
  Outcome o;
  Rng rng(8);
  const std::size_t n = 9;
  std::vector<double> depth(n * n);
  for (auto& d : depth) d = rng.uniform01() < 0.15 ? 0.0 : rng.uniform(2.0, 70.0);
  const DepthPatch patch = DepthPatch::from_values(n, n, 400, 150, depth);
  const std::pair<ChannelConfig, std::size_t> expected[] = {
      {ChannelConfig::Z, 1}, {ChannelConfig::XZ, 2}, {ChannelConfig::XYZ, 3},
      {ChannelConfig::UVZ, 3}};
  for (const auto& [cfg, channels] : expected) {
    const PatchTensor t = build_patch_tensor(patch, kKitti, cfg);
    o.require(t.channels() == channels && t.values.size() == n * n * channels,
              fmt::format("{} channel count", to_string(cfg)));
    bool depth_exact = true;
    for (std::size_t i = 0; i < n * n; ++i) {
      depth_exact = depth_exact && t.pixel(i)[channels - 1] == depth[i];
    }
    o.require(depth_exact, fmt::format("{} depth channel differs", to_string(cfg)));
  }
  if (o.pass) o.detail = "z/xz/xyz/uvz have 1/2/3/3 channels, depth channel bit-identical";
  return o;
}

Outcome mask_pipeline() {
  Outcome o;
  std::vector<double> v(64, 5.0);
  std::fill(v.begin() + 32, v.end(), 20.0);
  const BinaryMask m = make_foreground_mask(DepthPatch::from_values(8, 8, 0, 0, v), 0.0);
  bool near_half = m.count() == 32;
  for (std::size_t i = 0; i < 64; ++i) near_half = near_half && m.values[i] == (i < 32);
  o.require(near_half, "5 m / 20 m fixture");

  const PatchTensor t = random_patch_tensor(17, 16, ChannelConfig::XYZ);
  const MlpParams h = MlpParams::random({3, 64, 128}, 1);
  const FeatureMap f = conv1x1(t, h);
  BinaryMask ones{16, 16, std::vector<std::uint8_t>(256, 1)};
  for (auto mode : {PoolMode::Max, PoolMode::Avg}) {
    const Eigen::VectorXd a = mask_global_pool(f, ones, mode);
    const Eigen::VectorXd b = global_pool(f, mode);
    bool same = a.size() == b.size();
    for (Eigen::Index i = 0; same && i < a.size(); ++i) same = a[i] == b[i];
    o.require(same, mode == PoolMode::Max ? "all-ones max pool" : "all-ones avg pool");
  }
  if (o.pass) o.detail = "near half selected exactly, all-ones mask pooling bit-identical";
  return o;
}

Outcome loss() {
  Outcome o;
  const Box3D gt{1.2, 1.6, 25.0, 1.5, 1.7, 4.1, 0.4};
  o.require(detection_loss(gt, gt, 10.0).total == 0.0, "loss at pred = gt");
  Box3D flipped = gt;
  flipped.theta += kPi;
  o.require(corner_loss(flipped, gt) == 0.0, "heading flip");
  Box3D shifted = gt;
  const double delta = 0.01;
  shifted.x += delta;
  const double got = corner_loss(shifted, gt);
  o.require(std::abs(got - 8.0 * smooth_l1(delta)) <= kLossTol,
            fmt::format("shift loss {:.6e}", got));
  if (o.pass) o.detail = fmt::format("zero, flip zero, shift {:.1e} = 8 smoothL1", got);
  return o;
}

Outcome routing() {
  Outcome o;
  const DistanceThresholds t{30.0, 50.0};
  auto at = [](double z) { return Box3D{0, 1, z, 1.5, 1.6, 3.9, 0}; };
  o.require(route_by_distance(at(10), t) == 0 && route_by_distance(at(40), t) == 1 &&
                route_by_distance(at(60), t) == 2,
            "10/40/60 fixture");
  Rng rng(4);
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < kRoutingDepths; ++i) {
    const double z = rng.uniform(0.5, 90.0);
    const int head = route_by_distance(at(z), t);
    const int expect = z <= t.near ? 0 : (z <= t.far ? 1 : 2);
    o.require(head == expect, fmt::format("z={} routed to {}", z, head));
    if (head >= 0 && head < 3) ++counts[head];
  }
  o.require(counts[0] + counts[1] + counts[2] == kRoutingDepths, "not a partition");
  if (o.pass) {
    o.detail = fmt::format("fixture ok, {} depths split {}/{}/{}", kRoutingDepths, counts[0],
                           counts[1], counts[2]);
  }
  return o;
}

Outcome io_round_trips() {
  Outcome o;
  Rng rng(31);
  std::vector<LabelRecord> recs;
  for (int i = 0; i < 50; ++i) {
    LabelRecord r;
    r.type = i % 3 ? "Car" : "Pedestrian";
    r.truncated = std::round(rng.uniform(0, 1) * 100) / 100;
    r.occluded = static_cast<int>(rng.integer(0, 3));
    r.alpha = std::round(rng.uniform(-3, 3) * 100) / 100;
    r.bbox = {std::round(rng.uniform(0, 600) * 100) / 100,
              std::round(rng.uniform(0, 200) * 100) / 100,
              std::round(rng.uniform(600, 1200) * 100) / 100,
              std::round(rng.uniform(200, 370) * 100) / 100};
    r.h = std::round(rng.uniform(1, 2) * 100) / 100;
    r.w = std::round(rng.uniform(1, 2) * 100) / 100;
    r.l = std::round(rng.uniform(2, 5) * 100) / 100;
    r.x = std::round(rng.uniform(-20, 20) * 100) / 100;
    r.y = std::round(rng.uniform(0, 2) * 100) / 100;
    r.z = std::round(rng.uniform(5, 70) * 100) / 100;
    r.rotation_y = std::round(rng.uniform(-3, 3) * 100) / 100;
    r.score = std::round(rng.uniform01() * 10000) / 10000;
    recs.push_back(r);
  }
  const std::string text = write_predictions(recs);
  const auto back = parse_label_file(text);
  bool same = back.size() == recs.size();
  for (std::size_t i = 0; same && i < recs.size(); ++i) {
    const auto& a = recs[i];
    const auto& b = back[i];
    same = a.type == b.type && a.truncated == b.truncated && a.occluded == b.occluded &&
           a.alpha == b.alpha && a.bbox.left == b.bbox.left && a.bbox.top == b.bbox.top &&
           a.bbox.right == b.bbox.right && a.bbox.bottom == b.bbox.bottom && a.h == b.h &&
           a.w == b.w && a.l == b.l && a.x == b.x && a.y == b.y && a.z == b.z &&
           a.rotation_y == b.rotation_y && a.score == b.score;
  }
  o.require(same, "label write/parse");
  o.require(write_predictions(back) == text, "label rewrite differs");

  const DepthMap decoded = decode_depth({1, 1, {25600}});
  o.require(decoded.values.at(0) == 100.0, "25600 does not decode to 100 m");

  const std::string calib =
      "P0: 7.215377e+02 0 6.095593e+02 0 0 7.215377e+02 1.728540e+02 0 0 0 1 0\n"
      "P2: 7.215377e+02 0 6.095593e+02 4.485728e+01 0 7.215377e+02 1.728540e+02 "
      "2.163791e-01 0 0 1 2.745884e-03\n"
      "R0_rect: 1 0 0 0 1 0 0 0 1\n";
  const CameraIntrinsics k1 = parse_calib_file(calib).intrinsics("P2");
  const CameraIntrinsics k2 = parse_calib_file(calib).intrinsics("P2");
  o.require(k1.fu == k2.fu && k1.fv == k2.fv && k1.cx == k2.cx && k1.cy == k2.cy &&
                k1.tx == k2.tx && k1.ty == k2.ty,
            "calibration extraction not deterministic");
  o.require(k1.fu == 721.5377 && k1.cx == 609.5593 && k1.cy == 172.854 &&
                k1.tx == 44.85728,
            "calibration values");
  if (o.pass) o.detail = "labels identical, 25600 -> 100 m, calibration deterministic";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"equivalence: set function vs 1x1 conv + global max pool", equivalence},
      {"back-projection fixtures and round trip", backprojection},
      {"rotated IoU vs Monte-Carlo oracle and analytic fixtures", rotated_iou},
      {"AP|R11 / AP|R40 fixtures and score-transform invariance", ap_metrics},
      {"channel configurations", channel_configs},
      {"mask pipeline", mask_pipeline},
      {"detection loss fixtures", loss},
      {"distance routing", routing},
      {"I/O round trips", io_round_trips},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    failures += o.pass ? 0 : 1;
    fmt::print("{} {} :: {} [{:.2f}s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail,
               seconds_since(t0));
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
