#include "patchnet/patch_repr.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

DepthPatch DepthPatch::from_values(std::size_t width, std::size_t height,
                                   int origin_u, int origin_v,
                                   std::vector<double> values) {
  if (values.size() != width * height) {
    throw Error(ErrorKind::Shape,
                fmt::format("patch of {}x{} needs {} values, got {}", width,
                            height, width * height, values.size()));
  }
  DepthPatch p;
  p.width = width;
  p.height = height;
  p.origin_u = origin_u;
  p.origin_v = origin_v;
  p.values = std::move(values);
  p.u_coords.resize(width);
  p.v_coords.resize(height);
  for (std::size_t i = 0; i < width; ++i) {
    p.u_coords[i] = static_cast<double>(origin_u) + static_cast<double>(i);
  }
  for (std::size_t i = 0; i < height; ++i) {
    p.v_coords[i] = static_cast<double>(origin_v) + static_cast<double>(i);
  }
  return p;
}

std::size_t channel_count(ChannelConfig cfg) noexcept {
  switch (cfg) {
    case ChannelConfig::Z: return 1;
    case ChannelConfig::XZ: return 2;
    case ChannelConfig::XYZ: return 3;
    case ChannelConfig::UVZ: return 3;
  }
  return 0;
}

std::string_view to_string(ChannelConfig cfg) noexcept {
  switch (cfg) {
    case ChannelConfig::Z: return "z";
    case ChannelConfig::XZ: return "xz";
    case ChannelConfig::XYZ: return "xyz";
    case ChannelConfig::UVZ: return "uvz";
  }
  return "?";
}

ChannelConfig parse_channel_config(std::string_view tag) {
  if (tag == "z") return ChannelConfig::Z;
  if (tag == "xz") return ChannelConfig::XZ;
  if (tag == "xyz") return ChannelConfig::XYZ;
  if (tag == "uvz") return ChannelConfig::UVZ;
  throw Error(ErrorKind::Parse,
              fmt::format("unknown channel config '{}' (expected z|xz|xyz|uvz)",
                          tag));
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(
      std::count(values.begin(), values.end(), std::uint8_t{1}));
}

namespace {

// Source index for output cell i when resizing `in` cells to `out` cells,
// sampling at cell centres.
std::size_t nearest_source(std::size_t i, std::size_t in, std::size_t out) {
  const std::size_t src = ((2 * i + 1) * in) / (2 * out);
  return std::min(src, in - 1);
}

void check_patch(const DepthPatch& p) {
  if (p.width == 0 || p.height == 0 || p.values.empty()) {
    throw Error(ErrorKind::EmptyInput, "depth patch is empty");
  }
  if (p.values.size() != p.width * p.height || p.u_coords.size() != p.width ||
      p.v_coords.size() != p.height) {
    throw Error(ErrorKind::Shape, "depth patch buffers disagree with its size");
  }
}

}  // namespace

DepthPatch resample_patch(const DepthPatch& p, std::size_t n) {
  check_patch(p);
  if (n == 0) {
    throw Error(ErrorKind::Shape, "resample side must be at least 1");
  }
  DepthPatch out;
  out.width = n;
  out.height = n;
  out.origin_u = p.origin_u;
  out.origin_v = p.origin_v;
  out.values.resize(n * n);
  out.u_coords.resize(n);
  out.v_coords.resize(n);
  std::vector<std::size_t> cols(n);
  for (std::size_t c = 0; c < n; ++c) {
    cols[c] = nearest_source(c, p.width, n);
    out.u_coords[c] = p.u_coords[cols[c]];
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src_row = nearest_source(r, p.height, n);
    out.v_coords[r] = p.v_coords[src_row];
    for (std::size_t c = 0; c < n; ++c) {
      out.values[r * n + c] = p.at(src_row, cols[c]);
    }
  }
  return out;
}

PatchTensor build_patch_tensor(const DepthPatch& p, const CameraIntrinsics& k,
                               ChannelConfig cfg, ProjectionModel model) {
  check_patch(p);
  if (p.width != p.height) {
    throw Error(ErrorKind::Shape,
                fmt::format("patch must be square before tensor construction "
                            "(got {}x{}); resample first",
                            p.width, p.height));
  }
  validate(k);
  PatchTensor t;
  t.n = p.width;
  t.config = cfg;
  const std::size_t ch = t.channels();
  t.values.assign(t.n * t.n * ch, 0.0);

  for (std::size_t r = 0; r < t.n; ++r) {
    for (std::size_t c = 0; c < t.n; ++c) {
      const double d = p.at(r, c);
      if (d < 0.0) {
        throw Error(ErrorKind::InvalidDepth,
                    fmt::format("negative depth {} at ({}, {})", d, r, c));
      }
      if (d == 0.0) continue;
      double* out = t.values.data() + (r * t.n + c) * ch;
      const double u = p.u_coords[c];
      const double v = p.v_coords[r];
      switch (cfg) {
        case ChannelConfig::Z:
          out[0] = d;
          break;
        case ChannelConfig::XZ: {
          const Point3 pt = backproject({u, v, d}, k, model);
          out[0] = pt.x;
          out[1] = d;
          break;
        }
        case ChannelConfig::XYZ: {
          const Point3 pt = backproject({u, v, d}, k, model);
          out[0] = pt.x;
          out[1] = pt.y;
          out[2] = d;
          break;
        }
        case ChannelConfig::UVZ:
          out[0] = u;
          out[1] = v;
          out[2] = d;
          break;
      }
    }
  }
  return t;
}

PointSet patch_to_pointset(const PatchTensor& t, bool drop_invalid) {
  PointSet s;
  s.dim = t.channels();
  s.values.reserve(t.values.size());
  const std::size_t depth_channel = s.dim - 1;
  for (std::size_t i = 0; i < t.pixels(); ++i) {
    const auto px = t.pixel(i);
    if (drop_invalid && px[depth_channel] == 0.0) continue;
    s.values.insert(s.values.end(), px.begin(), px.end());
  }
  return s;
}

PatchTensor pointset_to_patch(const PointSet& s, std::size_t n,
                              ChannelConfig cfg) {
  if (s.dim != channel_count(cfg) || s.size() != n * n) {
    throw Error(ErrorKind::Shape,
                fmt::format("point set of {} x {} cannot fill a {}x{}x{} patch",
                            s.size(), s.dim, n, n, channel_count(cfg)));
  }
  return PatchTensor{n, cfg, s.values};
}

BinaryMask make_foreground_mask(const DepthPatch& p, double offset) {
  check_patch(p);
  double sum = 0.0;
  std::size_t valid = 0;
  for (double d : p.values) {
    if (d > 0.0) {
      sum += d;
      ++valid;
    }
  }
  if (valid == 0) {
    throw Error(ErrorKind::EmptyInput, "patch has no valid depth pixel");
  }
  const double threshold = sum / static_cast<double>(valid) + offset;
  BinaryMask m;
  m.width = p.width;
  m.height = p.height;
  m.values.resize(p.values.size());
  std::transform(p.values.begin(), p.values.end(), m.values.begin(),
                 [threshold](double d) -> std::uint8_t {
                   return (d > 0.0 && d < threshold) ? 1 : 0;
                 });
  return m;
}

}  // namespace patchnet
