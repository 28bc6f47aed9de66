#include "patchnet/equivalence.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "patchnet/camera.hpp"
#include "patchnet/random.hpp"

namespace patchnet {

namespace {

constexpr std::array<ChannelConfig, 4> kConfigs = {
    ChannelConfig::Z, ChannelConfig::XZ, ChannelConfig::XYZ, ChannelConfig::UVZ};
constexpr std::array<std::size_t, 5> kHiddenWidths = {8, 16, 32, 64, 128};

double run_trial(const PatchTensor& t, const MlpParams& h, const MlpParams& gamma,
                 bool inject_fault) {
  const Eigen::VectorXd set_out = set_function(patch_to_pointset(t), h, gamma);
  Eigen::VectorXd grid_out;
  if (inject_fault) {
    MlpParams broken = h;
    broken.layers.front().weight = broken.layers.front().weight.colwise().reverse().eval();
    grid_out = grid_function(t, broken, gamma);
  } else {
    grid_out = grid_function(t, h, gamma);
  }
  return (set_out - grid_out).cwiseAbs().maxCoeff();
}

std::vector<std::size_t> random_widths(Rng& rng, std::size_t in, std::size_t layers,
                                       std::size_t out) {
  std::vector<std::size_t> w{in};
  for (std::size_t i = 0; i < layers; ++i) {
    w.push_back(kHiddenWidths[static_cast<std::size_t>(
        rng.integer(0, kHiddenWidths.size() - 1))]);
  }
  w.push_back(out);
  return w;
}

}  // namespace

PatchTensor random_patch_tensor(std::uint64_t seed, std::size_t n,
                                ChannelConfig cfg) {
  Rng rng(seed);
  const double focal = rng.uniform(600.0, 800.0);
  const CameraIntrinsics cam{focal, focal, rng.uniform(550.0, 650.0),
                             rng.uniform(150.0, 200.0), 0.0, 0.0};
  std::vector<double> depth(n * n);
  for (double& d : depth) {
    d = rng.uniform01() < 0.1 ? 0.0 : rng.uniform(1.0, 80.0);
  }
  const auto ou = static_cast<int>(rng.integer(0, 1200));
  const auto ov = static_cast<int>(rng.integer(0, 350));
  return build_patch_tensor(DepthPatch::from_values(n, n, ou, ov, std::move(depth)),
                            cam, cfg);
}

EquivalenceReport run_equivalence_check(const EquivalenceOptions& opts) {
  Rng rng(opts.seed);
  EquivalenceReport report;
  auto record = [&](EquivalenceTrial trial, const PatchTensor& t) {
    const MlpParams h = MlpParams::random(trial.h_widths, rng.next(), Activation::Relu);
    const MlpParams gamma =
        MlpParams::random(trial.gamma_widths, rng.next(), Activation::Identity);
    trial.deviation = run_trial(t, h, gamma, opts.inject_fault);
    report.max_deviation = std::max(report.max_deviation, trial.deviation);
    report.trials.push_back(std::move(trial));
  };

  const std::size_t max_side = std::max<std::size_t>(1, opts.max_side);
  for (std::size_t i = 0; i < opts.trials; ++i) {
    EquivalenceTrial trial;
    trial.config = kConfigs[static_cast<std::size_t>(rng.integer(0, 3))];
    const std::size_t ch = channel_count(trial.config);
    const bool full = opts.include_full_width && i % 10 == 0;
    const auto k_out = static_cast<std::size_t>(rng.integer(1, 16));
    if (full) {
      trial.n = max_side;
      trial.h_widths = {ch, 64, 128, 1024};
      trial.gamma_widths = {1024, 512, 256, k_out};
    } else {
      trial.n = static_cast<std::size_t>(rng.integer(1, static_cast<std::int64_t>(max_side)));
      trial.h_widths = random_widths(rng, ch, static_cast<std::size_t>(rng.integer(0, 2)),
                                     kHiddenWidths[static_cast<std::size_t>(rng.integer(0, 4))]);
      trial.gamma_widths = random_widths(
          rng, trial.h_widths.back(), static_cast<std::size_t>(rng.integer(0, 2)), k_out);
    }
    const PatchTensor t = random_patch_tensor(rng.next(), trial.n, trial.config);
    record(std::move(trial), t);
  }

  for (const PatchTensor& t : opts.extra_patches) {
    EquivalenceTrial trial;
    trial.n = t.n;
    trial.config = t.config;
    trial.h_widths = random_widths(rng, t.channels(), 2, 64);
    trial.gamma_widths = random_widths(rng, 64, 1, 8);
    record(std::move(trial), t);
  }
  return report;
}

}  // namespace patchnet
