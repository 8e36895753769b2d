#include "gmvae/params.hpp"

#include <cmath>

#include "gmvae/error.hpp"

namespace gmvae {

Param& ParamSet::add(std::string name, Tensor value) {
  require(!contains(name), "ParamSet: duplicate parameter '" + name + "'");
  round_to_f32(value);
  Param p;
  p.name = std::move(name);
  p.grad = Tensor(value.shape(), 0.0);
  p.m = Tensor(value.shape(), 0.0);
  p.v = Tensor(value.shape(), 0.0);
  p.value = std::move(value);
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamSet::at(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ContractError("ParamSet: no parameter named '" + std::string(name) + "'");
}

const Param& ParamSet::at(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw ContractError("ParamSet: no parameter named '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

ad::Var ParamSet::bind(ad::Tape& tape, std::string_view name) {
  Param& p = at(name);
  return tape.parameter(&p.value, &p.grad);
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad = Tensor(p.value.shape(), 0.0);
}

void adam_step(ParamSet& params, double lr, double beta1, double beta2, double eps) {
  for (const auto& p : params.params_) {
    if (!p.grad.all_finite())
      throw DivergedError("adam_step: non-finite gradient in '" + p.name + "'");
  }
  const std::int64_t t = params.step_ + 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (auto& p : params.params_) {
    if (p.grad.empty()) p.grad = Tensor(p.value.shape(), 0.0);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      p.m[i] = beta1 * p.m[i] + (1.0 - beta1) * g;
      p.v[i] = beta2 * p.v[i] + (1.0 - beta2) * g * g;
      const double mhat = p.m[i] / bc1;
      const double vhat = p.v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    round_to_f32(p.value);
  }
  params.step_ = t;
  params.zero_grad();
}

}  // namespace gmvae
