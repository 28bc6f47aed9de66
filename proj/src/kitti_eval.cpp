#include "patchnet/kitti_eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Moderate: return "moderate";
    case Difficulty::Hard: return "hard";
    case Difficulty::Ignored: return "ignored";
  }
  return "?";
}

std::string_view to_string(IouKind k) noexcept {
  return k == IouKind::Box3d ? "3d" : "bev";
}

namespace {

struct DifficultyRow {
  Difficulty level;
  double min_height;
  int max_occlusion;
  double max_truncation;
};

constexpr std::array<DifficultyRow, 3> kDifficultyTable = {{
    {Difficulty::Easy, 40.0, 0, 0.15},
    {Difficulty::Moderate, 25.0, 1, 0.30},
    {Difficulty::Hard, 25.0, 2, 0.50},
}};

bool usable_box(const Box3D& b) { return b.h > 0.0 && b.w > 0.0 && b.l > 0.0; }

}  // namespace

Difficulty assign_difficulty(const GtObject& g) {
  if (g.dont_care) return Difficulty::Ignored;
  for (const DifficultyRow& row : kDifficultyTable) {
    if (g.bbox2d.height() >= row.min_height && g.occlusion <= row.max_occlusion &&
        g.truncation <= row.max_truncation) {
      return row.level;
    }
  }
  return Difficulty::Ignored;
}

bool in_bucket(Difficulty object, Difficulty bucket) noexcept {
  if (object == Difficulty::Ignored || bucket == Difficulty::Ignored) {
    return false;
  }
  return static_cast<int>(object) <= static_cast<int>(bucket);
}

double box_iou(const Box3D& a, const Box3D& b, IouKind kind) {
  return kind == IouKind::Box3d ? iou_3d(a, b) : iou_bev(a, b);
}

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GtObject>& gts,
                             const std::vector<bool>& ignored,
                             double iou_threshold, IouKind kind) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorKind::Shape,
                fmt::format("IoU threshold must be in (0, 1], got {}",
                            iou_threshold));
  }
  if (!ignored.empty() && ignored.size() != gts.size()) {
    throw Error(ErrorKind::Shape, "ignored flags must cover every ground truth");
  }
  auto is_ignored = [&](std::size_t j) { return !ignored.empty() && ignored[j]; };

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  MatchResult out;
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!is_ignored(j)) ++out.num_gt;
  }
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : order) {
    const Detection& det = dets[i];
    std::ptrdiff_t best_pos = -1;
    double best_pos_iou = -1.0;
    std::ptrdiff_t best_ign = -1;
    double best_ign_iou = -1.0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[j] || !usable_box(gts[j].box3d)) continue;
      const double iou = box_iou(det.box3d, gts[j].box3d, kind);
      if (iou < iou_threshold) continue;
      if (is_ignored(j)) {
        if (iou > best_ign_iou) {
          best_ign_iou = iou;
          best_ign = static_cast<std::ptrdiff_t>(j);
        }
      } else if (iou > best_pos_iou) {
        best_pos_iou = iou;
        best_pos = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (best_pos >= 0) {
      taken[static_cast<std::size_t>(best_pos)] = true;
      out.flags.push_back({det.score, true});
    } else if (best_ign >= 0) {
      taken[static_cast<std::size_t>(best_ign)] = true;
      ++out.absorbed;
    } else {
      out.flags.push_back({det.score, false});
    }
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!is_ignored(j) && !taken[j]) ++out.unmatched_gt;
  }
  return out;
}

PrCurve precision_recall(const std::vector<RankedFlag>& flags,
                         std::size_t num_gt) {
  PrCurve c;
  if (flags.empty()) return c;
  if (num_gt == 0) {
    c.degenerate = true;
    return c;
  }
  c.points.reserve(flags.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i].true_positive) ++tp;
    c.points.push_back({static_cast<double>(tp) / static_cast<double>(num_gt),
                        static_cast<double>(tp) / static_cast<double>(i + 1)});
  }
  return c;
}

namespace {

// Mean over recall levels first/denom ... last/denom of the best precision
// attained at recall >= level.
double interpolated_ap(const PrCurve& c, int first, int last, int denom) {
  if (c.points.empty()) return 0.0;
  // Suffix maximum of precision, so each level is a binary search.
  std::vector<double> best(c.points.size());
  double running = 0.0;
  for (std::size_t i = c.points.size(); i-- > 0;) {
    running = std::max(running, c.points[i].precision);
    best[i] = running;
  }
  double sum = 0.0;
  for (int k = first; k <= last; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(denom);
    // Recall is non-decreasing along the ranking.
    const auto it = std::lower_bound(
        c.points.begin(), c.points.end(), level,
        [](const PrPoint& p, double r) { return p.recall < r; });
    if (it != c.points.end()) {
      sum += best[static_cast<std::size_t>(it - c.points.begin())];
    }
  }
  return sum / static_cast<double>(last - first + 1);
}

}  // namespace

double ap_11(const PrCurve& c) { return interpolated_ap(c, 0, 10, 10); }

double ap_40(const PrCurve& c) { return interpolated_ap(c, 1, 40, 40); }

int route_by_distance(const Box3D& b, const DistanceThresholds& t) {
  if (!(t.near < t.far)) {
    throw Error(ErrorKind::Shape,
                fmt::format("distance thresholds must satisfy near < far "
                            "({} vs {})",
                            t.near, t.far));
  }
  if (b.z <= t.near) return 0;
  if (b.z <= t.far) return 1;
  return 2;
}

std::vector<ApResult> evaluate(const std::vector<FrameData>& frames,
                               const std::string& label, IouKind kind,
                               double iou_threshold) {
  std::set<std::string> seen;
  for (const FrameData& f : frames) {
    if (!seen.insert(f.frame_id).second) {
      throw Error(ErrorKind::Alignment,
                  fmt::format("frame '{}' appears twice", f.frame_id));
    }
  }

  std::vector<ApResult> results;
  for (Difficulty bucket : kEvalDifficulties) {
    std::vector<RankedFlag> pooled;
    ApResult r;
    r.difficulty = bucket;
    r.kind = kind;
    r.iou_threshold = iou_threshold;
    for (const FrameData& f : frames) {
      std::vector<GtObject> gts;
      std::vector<bool> ignored;
      for (const GtObject& g : f.gts) {
        if (g.dont_care) {
          gts.push_back(g);
          ignored.push_back(true);
        } else if (g.label == label) {
          gts.push_back(g);
          ignored.push_back(!in_bucket(assign_difficulty(g), bucket));
        }
      }
      std::vector<Detection> dets;
      for (const Detection& d : f.dets) {
        if (d.label == label) dets.push_back(d);
      }
      MatchResult m = match_detections(dets, gts, ignored, iou_threshold, kind);
      r.num_gt += m.num_gt;
      pooled.insert(pooled.end(), m.flags.begin(), m.flags.end());
    }
    // Pool across frames; stable sort keeps frame order for equal scores.
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const RankedFlag& a, const RankedFlag& b) {
                       return a.score > b.score;
                     });
    r.num_det = pooled.size();
    const PrCurve curve = precision_recall(pooled, r.num_gt);
    r.ap11 = ap_11(curve);
    r.ap40 = ap_40(curve);
    results.push_back(r);
  }
  return results;
}

std::vector<FrameData> align_frames(
    const std::map<std::string, std::vector<GtObject>>& gts,
    const std::map<std::string, std::vector<Detection>>& dets) {
  std::vector<std::string> only_gt;
  std::vector<std::string> only_det;
  for (const auto& [id, _] : gts) {
    if (!dets.count(id)) only_gt.push_back(id);
  }
  for (const auto& [id, _] : dets) {
    if (!gts.count(id)) only_det.push_back(id);
  }
  if (!only_gt.empty() || !only_det.empty()) {
    std::string msg = "frame sets differ;";
    if (!only_gt.empty()) {
      msg += " missing predictions for:";
      for (const auto& id : only_gt) msg += " " + id;
      msg += ";";
    }
    if (!only_det.empty()) {
      msg += " predictions without ground truth:";
      for (const auto& id : only_det) msg += " " + id;
    }
    throw Error(ErrorKind::Alignment, msg);
  }
  std::vector<FrameData> frames;
  frames.reserve(gts.size());
  for (const auto& [id, g] : gts) {
    frames.push_back({id, g, dets.at(id)});
  }
  return frames;
}

}  // namespace patchnet
