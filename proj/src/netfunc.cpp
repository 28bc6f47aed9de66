#include "patchnet/netfunc.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "patchnet/error.hpp"
#include "patchnet/random.hpp"

namespace patchnet {

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

void MlpParams::validate() const {
  if (layers.empty()) {
    throw Error(ErrorKind::Shape, "MLP has no layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.weight.rows() != l.bias.size() || l.weight.rows() == 0 ||
        l.weight.cols() == 0) {
      throw Error(ErrorKind::Shape,
                  fmt::format("layer {}: weight {}x{} with bias of {}", i,
                              l.weight.rows(), l.weight.cols(), l.bias.size()));
    }
    if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows()) {
      throw Error(ErrorKind::Shape,
                  fmt::format("layer {} expects {} inputs but layer {} "
                              "produces {}",
                              i, l.weight.cols(), i - 1,
                              layers[i - 1].weight.rows()));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw Error(ErrorKind::NonFinite,
                  fmt::format("layer {} has non-finite parameters", i));
    }
  }
}

MlpParams MlpParams::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {{DenseLayer{Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d),
                      Activation::Identity}}};
}

MlpParams MlpParams::random(const std::vector<std::size_t>& widths,
                            std::uint64_t seed, Activation last) {
  if (widths.size() < 2) {
    throw Error(ErrorKind::Shape, "random MLP needs at least two widths");
  }
  Rng rng(seed);
  MlpParams p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(widths[i]);
    const auto out = static_cast<Eigen::Index>(widths[i + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    // Row-major draw order so fixtures can be regenerated elsewhere.
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
    for (Eigen::Index r = 0; r < out; ++r) {
      layer.bias(r) = rng.uniform(-bound, bound);
    }
    layer.activation = (i + 2 == widths.size()) ? last : Activation::Relu;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& x, Activation a) {
  if (a == Activation::Relu) {
    x = x.cwiseMax(0.0);
  }
}

template <typename Derived>
void require_no_nan(const Eigen::MatrixBase<Derived>& x, const char* where) {
  if (x.hasNaN()) {
    throw Error(ErrorKind::NonFinite, fmt::format("NaN encountered in {}", where));
  }
}

void check_input(const MlpParams& params, Eigen::Index dim) {
  params.validate();
  if (static_cast<Eigen::Index>(params.input_dim()) != dim) {
    throw Error(ErrorKind::Shape,
                fmt::format("MLP expects {} inputs, got {}", params.input_dim(),
                            dim));
  }
}

Eigen::VectorXd run_mlp(Eigen::VectorXd x, const MlpParams& params) {
  for (const DenseLayer& l : params.layers) {
    Eigen::VectorXd y = l.weight * x + l.bias;
    activate(y, l.activation);
    x = std::move(y);
  }
  return x;
}

}  // namespace

Eigen::VectorXd apply_mlp(const Eigen::VectorXd& v, const MlpParams& params) {
  check_input(params, v.size());
  require_no_nan(v, "MLP input");
  Eigen::VectorXd out = run_mlp(v, params);
  require_no_nan(out, "MLP output");
  return out;
}

Eigen::VectorXd set_function(const PointSet& s, const MlpParams& h,
                             const MlpParams& gamma) {
  if (s.empty()) {
    throw Error(ErrorKind::EmptyInput, "set function over an empty point set");
  }
  check_input(h, static_cast<Eigen::Index>(s.dim));
  check_input(gamma, static_cast<Eigen::Index>(h.output_dim()));

  Eigen::VectorXd pooled = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(h.output_dim()),
      -std::numeric_limits<double>::infinity());
  const auto dim = static_cast<Eigen::Index>(s.dim);
  for (std::size_t i = 0; i < s.size(); ++i) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.point(i).data(), dim);
    require_no_nan(x, "point set");
    Eigen::VectorXd feat = run_mlp(std::move(x), h);
    require_no_nan(feat, "per-point features");
    pooled = pooled.cwiseMax(feat);
  }
  Eigen::VectorXd out = run_mlp(std::move(pooled), gamma);
  require_no_nan(out, "set function output");
  return out;
}

FeatureMap conv1x1(const PatchTensor& t, const MlpParams& h) {
  const auto ch = static_cast<Eigen::Index>(t.channels());
  const auto px = static_cast<Eigen::Index>(t.pixels());
  if (t.values.size() != static_cast<std::size_t>(ch * px)) {
    throw Error(ErrorKind::Shape, "patch tensor buffer disagrees with its size");
  }
  check_input(h, ch);
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(t.values.data(), ch, px);
  require_no_nan(x, "patch tensor");
  for (const DenseLayer& l : h.layers) {
    Eigen::MatrixXd y = l.weight * x;
    y.colwise() += l.bias;
    activate(y, l.activation);
    x = std::move(y);
  }
  require_no_nan(x, "feature map");
  return {t.n, std::move(x)};
}

namespace {

// Column-order accumulation shared by masked and unmasked pooling, so an
// all-ones mask reproduces global pooling bit-for-bit. Avg mode accumulates
// offsets from the first selected column, so uniform features come back
// exactly.
template <typename Select>
Eigen::VectorXd pool_columns(const FeatureMap& f, PoolMode mode, Select select) {
  require_no_nan(f.features, "feature map");
  const Eigen::Index dim = f.features.rows();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd ref;
  std::size_t selected = 0;
  for (Eigen::Index p = 0; p < f.features.cols(); ++p) {
    if (!select(p)) continue;
    if (selected++ == 0) {
      ref = f.features.col(p);
      if (mode == PoolMode::Max) acc = ref;
      continue;
    }
    if (mode == PoolMode::Max) {
      acc = acc.cwiseMax(f.features.col(p));
    } else {
      acc += f.features.col(p) - ref;
    }
  }
  if (selected == 0) {
    throw Error(ErrorKind::EmptyForeground, "no pixel selected for pooling");
  }
  if (mode == PoolMode::Avg) {
    return ref + acc / static_cast<double>(selected);
  }
  return acc;
}

}  // namespace

Eigen::VectorXd global_pool(const FeatureMap& f, PoolMode mode) {
  if (f.features.cols() == 0) {
    throw Error(ErrorKind::EmptyInput, "pooling over an empty feature map");
  }
  return pool_columns(f, mode, [](Eigen::Index) { return true; });
}

Eigen::VectorXd mask_global_pool(const FeatureMap& f, const BinaryMask& mask,
                                 PoolMode mode) {
  if (mask.width != f.n || mask.height != f.n ||
      mask.values.size() != static_cast<std::size_t>(f.features.cols())) {
    throw Error(ErrorKind::Shape,
                fmt::format("mask {}x{} does not match feature map {}x{}",
                            mask.width, mask.height, f.n, f.n));
  }
  return pool_columns(f, mode, [&mask](Eigen::Index p) {
    return mask.values[static_cast<std::size_t>(p)] != 0;
  });
}

Eigen::VectorXd grid_function(const PatchTensor& t, const MlpParams& h,
                              const MlpParams& gamma,
                              const std::optional<BinaryMask>& mask,
                              PoolMode mode) {
  check_input(gamma, static_cast<Eigen::Index>(h.output_dim()));
  if (mask && (mask->width != t.n || mask->height != t.n)) {
    throw Error(ErrorKind::Shape,
                fmt::format("mask {}x{} does not match patch {}x{}", mask->width,
                            mask->height, t.n, t.n));
  }
  const FeatureMap f = conv1x1(t, h);
  Eigen::VectorXd pooled =
      mask ? mask_global_pool(f, *mask, mode) : global_pool(f, mode);
  Eigen::VectorXd out = run_mlp(std::move(pooled), gamma);
  require_no_nan(out, "grid function output");
  return out;
}

}  // namespace patchnet
