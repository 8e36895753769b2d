#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "gmvae/flowgen.hpp"
#include "gmvae/model.hpp"
#include "gmvae/params.hpp"

namespace gmvae {

/// Re -> latent regressor: 1 -> hidden -> hidden -> D with tanh, applied to
/// the standardized Reynolds number (re - re_mean) / re_std.
struct CondMlp {
  ParamSet net;  // w0, b0, w1, b1, w2, b2
  double re_mean = 0.0;
  double re_std = 1.0;
  double re_min = 0.0;  // training range, for out-of-range warnings
  double re_max = 0.0;

  std::size_t latent_dim() const;
  /// Latent predictions for each Re; rows follow the input order.
  Tensor predict(std::span<const double> re) const;
};

struct CondConfig {
  int steps = 4000;
  double lr = 3e-3;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;
};

struct CondTrainReport {
  double final_mse = 0.0;
  int steps = 0;
};

/// Fit the MLP to the posterior means of every sample with full-batch Adam on
/// the latent MSE. The GMVAE model is only read.
CondMlp train_cond(const GmvaeModel& model, const FlowDataset& ds, const CondConfig& cfg,
                   CondTrainReport* report = nullptr);

/// Same, with explicit (re, latent target) pairs.
CondMlp train_cond_targets(std::span<const double> re, const Tensor& targets,
                           const CondConfig& cfg, CondTrainReport* report = nullptr);

/// Decoder mean at the MLP's latent for `re`, in physical units, 3 x H x W.
Tensor generate_for_re(const CondMlp& mlp, const GmvaeModel& model, double re);

}  // namespace gmvae
