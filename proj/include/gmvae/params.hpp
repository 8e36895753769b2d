#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gmvae/autodiff.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
};

/// Named trainable tensors plus their Adam state.
///
/// Values are kept exactly representable as 32-bit floats: they are rounded
/// on insertion and after every optimizer step, so the f32 model file holds
/// the in-memory weights bit for bit.
class ParamSet {
 public:
  Param& add(std::string name, Tensor value);
  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::vector<Param>& params() noexcept { return params_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }
  std::int64_t step() const noexcept { return step_; }

  /// Put a parameter on the tape; backward adds into its grad.
  ad::Var bind(ad::Tape& tape, std::string_view name);
  void zero_grad();

 private:
  friend void adam_step(ParamSet&, double, double, double, double);
  std::vector<Param> params_;
  std::int64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update, then gradients are zeroed. Throws
/// DivergedError (leaving values and moments untouched) if any gradient is
/// NaN or infinite.
void adam_step(ParamSet& params, double lr, double beta1, double beta2, double eps);
inline void adam_step(ParamSet& params, const AdamConfig& cfg) {
  adam_step(params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
}

}  // namespace gmvae
