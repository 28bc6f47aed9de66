#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchnet/camera.hpp"

namespace patchnet {

/// A rectangular crop of a depth map.
///
/// `u_coords` / `v_coords` hold the absolute image coordinate of every column
/// and row. A fresh crop has u_coords[i] = origin_u + i; nearest-neighbour
/// resampling carries the coordinate of the selected source pixel along, so
/// back-projection stays exact after resizing.
struct DepthPatch {
  std::size_t width = 0;
  std::size_t height = 0;
  int origin_u = 0;
  int origin_v = 0;
  std::vector<double> values;  // row-major, metres, 0 = invalid
  std::vector<double> u_coords;
  std::vector<double> v_coords;

  static DepthPatch from_values(std::size_t width, std::size_t height,
                                int origin_u, int origin_v,
                                std::vector<double> values);

  double at(std::size_t row, std::size_t col) const {
    return values[row * width + col];
  }
};

enum class ChannelConfig { Z, XZ, XYZ, UVZ };

std::size_t channel_count(ChannelConfig cfg) noexcept;
std::string_view to_string(ChannelConfig cfg) noexcept;
/// Accepts "z", "xz", "xyz", "uvz" (case-sensitive). Throws Error(Parse).
ChannelConfig parse_channel_config(std::string_view tag);

inline constexpr std::size_t kDefaultPatchSide = 32;
inline constexpr double kDefaultMaskOffset = 0.0;

/// Image-organized representation: n x n pixels, channel-last storage.
struct PatchTensor {
  std::size_t n = 0;
  ChannelConfig config = ChannelConfig::XYZ;
  std::vector<double> values;  // (row * n + col) * channels + c

  std::size_t channels() const noexcept { return channel_count(config); }
  std::size_t pixels() const noexcept { return n * n; }
  std::span<const double> pixel(std::size_t index) const {
    return {values.data() + index * channels(), channels()};
  }
};

/// Unordered point set stored as a flat array of `dim`-vectors.
struct PointSet {
  std::size_t dim = 0;
  std::vector<double> values;

  std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  bool empty() const noexcept { return size() == 0; }
  std::span<const double> point(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> values;  // row-major, 0 or 1

  std::size_t count() const noexcept;
};

/// Nearest-neighbour resize to n x n. Throws Error(EmptyInput) on an empty
/// patch and Error(Shape) when n == 0.
DepthPatch resample_patch(const DepthPatch& p, std::size_t n);

/// Per-pixel channels for `cfg`. Requires a square patch. Invalid pixels
/// (depth 0) yield all-zero channel vectors.
PatchTensor build_patch_tensor(const DepthPatch& p, const CameraIntrinsics& k,
                               ChannelConfig cfg,
                               ProjectionModel model = ProjectionModel::Pinhole);

/// One point per pixel in row-major order; `drop_invalid` removes pixels
/// whose depth channel is 0.
PointSet patch_to_pointset(const PatchTensor& t, bool drop_invalid = false);

/// Inverse of patch_to_pointset(t, false) given the tensor geometry.
PatchTensor pointset_to_patch(const PointSet& s, std::size_t n,
                              ChannelConfig cfg);

/// 1 where 0 < d < mean(valid depths) + offset. Throws Error(EmptyInput) when
/// the patch has no valid pixel.
BinaryMask make_foreground_mask(const DepthPatch& p, double offset);

}  // namespace patchnet
