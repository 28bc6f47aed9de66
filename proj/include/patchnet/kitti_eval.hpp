#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchnet/box_geom.hpp"

namespace patchnet {

struct BBox2D {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double height() const noexcept { return bottom - top; }
};

struct GtObject {
  std::string label;
  Box3D box3d;
  BBox2D bbox2d;
  double truncation = 0.0;
  int occlusion = 0;
  // DontCare regions and other rows that must never count as positives.
  bool dont_care = false;
};

struct Detection {
  std::string label;
  Box3D box3d;
  double score = 0.0;
};

enum class Difficulty { Easy = 0, Moderate = 1, Hard = 2, Ignored = 3 };
inline constexpr std::array<Difficulty, 3> kEvalDifficulties = {
    Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard};

std::string_view to_string(Difficulty d) noexcept;

/// Strictest bucket the object satisfies (height px / occlusion / truncation):
/// Easy 40/0/0.15, Moderate 25/1/0.30, Hard 25/2/0.50, otherwise Ignored.
Difficulty assign_difficulty(const GtObject& g);

/// Buckets are cumulative: an Easy object is also in Moderate and Hard.
bool in_bucket(Difficulty object, Difficulty bucket) noexcept;

enum class IouKind { Box3d, Bev };
std::string_view to_string(IouKind k) noexcept;
double box_iou(const Box3D& a, const Box3D& b, IouKind kind);

struct RankedFlag {
  double score = 0.0;
  bool true_positive = false;
};

struct MatchResult {
  std::vector<RankedFlag> flags;  // descending score; absorbed detections removed
  std::size_t num_gt = 0;         // positives (non-ignored GTs)
  std::size_t unmatched_gt = 0;
  std::size_t absorbed = 0;  // detections matched to ignored GTs
};

/// Greedy matching in descending-score order (stable for ties). Each
/// detection takes the unmatched positive GT of highest IoU >= threshold;
/// failing that, an unmatched ignored GT above threshold absorbs it without
/// counting as TP or FP. Every GT is matched at most once.
///
/// `ignored[i]` marks gts[i] as ignored; empty means none are ignored.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GtObject>& gts,
                             const std::vector<bool>& ignored,
                             double iou_threshold, IouKind kind);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  // Set when there are detections but no ground truth, so recall is undefined.
  bool degenerate = false;
};

/// Cumulative precision/recall at every rank.
PrCurve precision_recall(const std::vector<RankedFlag>& flags,
                         std::size_t num_gt);

/// Interpolated AP over recall levels {0, 0.1, ..., 1}.
double ap_11(const PrCurve& c);
/// Interpolated AP over recall levels {1/40, ..., 40/40}.
double ap_40(const PrCurve& c);

struct DistanceThresholds {
  double near = 30.0;
  double far = 50.0;
};

/// 0 if z <= near, 1 if near < z <= far, else 2.
int route_by_distance(const Box3D& b, const DistanceThresholds& t = {});

struct FrameData {
  std::string frame_id;
  std::vector<GtObject> gts;
  std::vector<Detection> dets;
};

struct ApResult {
  Difficulty difficulty = Difficulty::Easy;
  IouKind kind = IouKind::Box3d;
  double iou_threshold = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  double ap11 = 0.0;
  double ap40 = 0.0;
};

/// Frames are matched independently and pooled per difficulty bucket. GTs of
/// the class outside the bucket and DontCare rows are ignored (they absorb
/// detections); other classes are skipped. Throws Error(Alignment) on
/// duplicate frame ids.
std::vector<ApResult> evaluate(const std::vector<FrameData>& frames,
                               const std::string& label, IouKind kind,
                               double iou_threshold);

/// Pairs ground truth and detections by frame id. Throws Error(Alignment)
/// listing the frames present on only one side.
std::vector<FrameData> align_frames(
    const std::map<std::string, std::vector<GtObject>>& gts,
    const std::map<std::string, std::vector<Detection>>& dets);

}  // namespace patchnet
