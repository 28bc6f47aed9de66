#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "patchnet/netfunc.hpp"
#include "patchnet/patch_repr.hpp"

namespace patchnet {

inline constexpr double kEquivalenceTolerance = 1e-6;

struct EquivalenceOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t max_side = 32;
  // Perturb the grid path's first layer (row order reversed) as a negative
  // control; the check must then fail.
  bool inject_fault = false;
  // Every tenth trial (and the first) uses the widest networks: h = C-64-128-1024,
  // gamma = 1024-512-256-K, on a max_side patch.
  bool include_full_width = true;
  // Extra patches (e.g. cropped from real depth maps) checked after the
  // random trials, each with freshly drawn networks.
  std::vector<PatchTensor> extra_patches;
};

struct EquivalenceTrial {
  std::size_t n = 0;
  ChannelConfig config = ChannelConfig::XYZ;
  std::vector<std::size_t> h_widths;
  std::vector<std::size_t> gamma_widths;
  double deviation = 0.0;
};

struct EquivalenceReport {
  std::vector<EquivalenceTrial> trials;
  double max_deviation = 0.0;

  bool passed(double tolerance = kEquivalenceTolerance) const {
    return max_deviation < tolerance;
  }
};

/// Runs set_function on the flattened point set against grid_function on the
/// patch tensor with shared random networks, and records the largest
/// absolute output difference.
EquivalenceReport run_equivalence_check(const EquivalenceOptions& opts);

/// Random square patch with KITTI-like intrinsics; about 10% invalid pixels.
PatchTensor random_patch_tensor(std::uint64_t seed, std::size_t n,
                                ChannelConfig cfg);

}  // namespace patchnet
