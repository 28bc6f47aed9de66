#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patchnet/camera.hpp"
#include "patchnet/kitti_eval.hpp"
#include "patchnet/patch_repr.hpp"

namespace patchnet {

/// One row of a KITTI-style object label file.
struct LabelRecord {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  BBox2D bbox;
  double h = 0.0, w = 0.0, l = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double rotation_y = 0.0;
  std::optional<double> score;  // present on 16-field prediction rows
};

/// Whitespace-separated 15 (ground truth) or 16 (prediction) field rows.
/// Blank lines are skipped. Throws Error(Parse) naming the 1-based line.
std::vector<LabelRecord> parse_label_file(std::string_view text);

/// 16-field rows, two decimals for geometry and four for the score. Records
/// without a score are written with score 1.
std::string write_predictions(const std::vector<LabelRecord>& records);

GtObject to_gt_object(const LabelRecord& r);
Detection to_detection(const LabelRecord& r);
Box3D to_box(const LabelRecord& r);

struct CalibFile {
  std::map<std::string, ProjectionMatrix> matrices;
  std::vector<std::string> warnings;

  /// Throws Error(MalformedCalibration) when the key is absent.
  CameraIntrinsics intrinsics(const std::string& key) const;
};

/// "KEY: v0 ... v11" lines. 3x3 rectification rows (R0_rect, R_rect) with
/// nine values are accepted and skipped. Duplicate keys keep the last row and
/// record a warning.
CalibFile parse_calib_file(std::string_view text);

inline constexpr double kDepthScale = 256.0;

/// Decoded depth map; raw 0 decodes to 0 (invalid).
struct DepthMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major metres

  double at(std::size_t row, std::size_t col) const {
    return values[row * width + col];
  }
};

struct RawDepthImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> raw;
};

DepthMap decode_depth(const RawDepthImage& img);
/// metres * 256 rounded to nearest, clamped to the 16-bit range.
RawDepthImage encode_depth(const DepthMap& map);

/// Single-channel 16-bit PNG. Throws Error(Format) for other layouts and
/// Error(Io) when the file cannot be read.
RawDepthImage read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const RawDepthImage& img);
DepthMap read_depth_map(const std::filesystem::path& path);

/// Crops the pixels covered by `bbox`, flooring left/top and ceiling
/// right/bottom (half-open), clipped to the image. Throws Error(EmptyRoi)
/// when nothing remains.
DepthPatch crop_roi(const DepthMap& map, const BBox2D& bbox);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace patchnet
