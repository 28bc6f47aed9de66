#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "patchnet/patch_repr.hpp"

namespace patchnet {

enum class Activation { Identity, Relu };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Identity;
};

/// Plain feed-forward MLP. No normalization or dropout layers.
struct MlpParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  /// Throws Error(Shape) when layer dimensions do not chain and
  /// Error(NonFinite) on NaN/inf parameters.
  void validate() const;

  static MlpParams identity(std::size_t dim);
  /// Widths {in, w1, ..., wk}. Weights and biases are drawn uniformly from
  /// [-1/sqrt(in), 1/sqrt(in)] per layer. Hidden layers use relu; the last
  /// layer uses `last`.
  static MlpParams random(const std::vector<std::size_t>& widths,
                          std::uint64_t seed,
                          Activation last = Activation::Relu);
};

/// F features per pixel over an n x n grid; column p is pixel p (row-major).
struct FeatureMap {
  std::size_t n = 0;
  Eigen::MatrixXd features;  // F x n^2
};

enum class PoolMode { Max, Avg };

Eigen::VectorXd apply_mlp(const Eigen::VectorXd& v, const MlpParams& params);

/// gamma(elementwise max_i h(x_i)). Throws Error(EmptyInput) on an empty set
/// and Error(NonFinite) if any intermediate value is NaN.
Eigen::VectorXd set_function(const PointSet& s, const MlpParams& h,
                             const MlpParams& gamma);

/// The per-pixel network h applied as a 1x1 convolution over the tensor.
FeatureMap conv1x1(const PatchTensor& t, const MlpParams& h);

/// Pool over pixels whose mask bit is set. Throws Error(EmptyForeground) for
/// an all-zero mask and Error(Shape) on size mismatch.
Eigen::VectorXd mask_global_pool(const FeatureMap& f, const BinaryMask& mask,
                                 PoolMode mode);
Eigen::VectorXd global_pool(const FeatureMap& f, PoolMode mode);

/// conv1x1, then (masked) global pooling, then gamma.
Eigen::VectorXd grid_function(const PatchTensor& t, const MlpParams& h,
                              const MlpParams& gamma,
                              const std::optional<BinaryMask>& mask = {},
                              PoolMode mode = PoolMode::Max);

}  // namespace patchnet
