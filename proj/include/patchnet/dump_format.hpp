#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "patchnet/netfunc.hpp"
#include "patchnet/patch_repr.hpp"

namespace patchnet {

// Text dump formats. Every file starts with a one-line header; values are
// written in shortest round-trip decimal form, so reading back is bit-exact.
//
//   PATCH 1 <n> <channels> <config>     then n*n lines of <channels> values
//   POINTS 1 <count> <dim> <config>     then <count> lines of <dim> values
//   MASK 1 <width> <height>             then <height> lines of 0/1 tokens
//   MLP 1 <seed> <layers>               then per layer:
//     LAYER <out> <in> <relu|identity>
//     <out> lines of <in> weights, then one line of <out> biases

std::string write_patch_dump(const PatchTensor& t);
PatchTensor read_patch_dump(std::string_view text);

std::string write_pointset_dump(const PointSet& s, ChannelConfig cfg);
PointSet read_pointset_dump(std::string_view text, ChannelConfig* cfg = nullptr);

std::string write_mask_dump(const BinaryMask& m);
BinaryMask read_mask_dump(std::string_view text);

std::string write_mlp_fixture(const MlpParams& p, std::uint64_t seed);
MlpParams read_mlp_fixture(std::string_view text, std::uint64_t* seed = nullptr);

}  // namespace patchnet
