#include "gmvae/condgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gmvae/error.hpp"
#include "gmvae/trainer.hpp"

namespace gmvae {
namespace {

constexpr std::size_t kLayers = 3;

Tensor standardized_column(const CondMlp& mlp, std::span<const double> re) {
  Tensor x({re.size(), 1});
  for (std::size_t i = 0; i < re.size(); ++i) x(i, 0) = (re[i] - mlp.re_mean) / mlp.re_std;
  return x;
}

template <class Bind>
ad::Var forward(ad::Var x, Bind bind) {
  ad::Var h = x;
  for (std::size_t i = 0; i < kLayers; ++i) {
    h = ad::matmul(h, bind("w" + std::to_string(i))) + bind("b" + std::to_string(i));
    if (i + 1 < kLayers) h = ad::tanh(h);
  }
  return h;
}

}  // namespace

std::size_t CondMlp::latent_dim() const { return net.at("w2").value.cols(); }

Tensor CondMlp::predict(std::span<const double> re) const {
  ad::Tape tape;
  auto out = forward(tape.constant(standardized_column(*this, re)),
                     [&](const std::string& n) { return tape.reference(&net.at(n).value); });
  return out.value();
}

CondMlp train_cond_targets(std::span<const double> re, const Tensor& targets,
                           const CondConfig& cfg, CondTrainReport* report) {
  const std::size_t n = re.size();
  require(n >= 1 && targets.rows() == n, "train_cond: need one latent target per sample");
  require(cfg.steps >= 1 && cfg.lr > 0.0 && cfg.hidden >= 1, "train_cond: bad config");
  const std::size_t d = targets.cols();

  CondMlp mlp;
  const double mean = std::accumulate(re.begin(), re.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : re) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  mlp.re_mean = static_cast<float>(mean);
  mlp.re_std = var > 0.0 ? static_cast<float>(std::sqrt(var)) : 1.0;
  // f32 bounds rounded outward so every training Re stays in range after a save
  const double lo = *std::min_element(re.begin(), re.end());
  const double hi = *std::max_element(re.begin(), re.end());
  float flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
  if (flo > lo) flo = std::nextafter(flo, -INFINITY);
  if (fhi < hi) fhi = std::nextafter(fhi, INFINITY);
  mlp.re_min = flo;
  mlp.re_max = fhi;

  Rng rng = Rng(cfg.seed).child(1);
  const std::size_t widths[] = {1, cfg.hidden, cfg.hidden, d};
  for (std::size_t i = 0; i < kLayers; ++i) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[i] + widths[i + 1]));
    Tensor w({widths[i], widths[i + 1]});
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    mlp.net.add("w" + std::to_string(i), std::move(w));
    mlp.net.add("b" + std::to_string(i), Tensor({1, widths[i + 1]}, 0.0));
  }

  const Tensor x = standardized_column(mlp, re);
  const AdamConfig adam{cfg.lr};
  double mse = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    ad::Tape tape;
    auto pred = forward(tape.constant(x), [&](const std::string& nm) { return mlp.net.bind(tape, nm); });
    auto loss = ad::mean(ad::square(pred - tape.constant(targets)));
    mse = loss.value()[0];
    if (!std::isfinite(mse))
      throw DivergedError("train_cond: loss diverged at step " + std::to_string(step));
    tape.backward(loss);
    adam_step(mlp.net, adam);
  }
  if (report) {
    const Tensor pred = mlp.predict(re);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - targets[i]) * (pred[i] - targets[i]);
    report->final_mse = s / static_cast<double>(pred.size());
    report->steps = cfg.steps;
  }
  return mlp;
}

CondMlp train_cond(const GmvaeModel& model, const FlowDataset& ds, const CondConfig& cfg,
                   CondTrainReport* report) {
  require(ds.sample_size() == model.shape.input_dim,
          "train_cond: dataset field size does not match the model");
  const EncoderDist enc = encode_all(model, model.standardize(ds.matrix()));
  return train_cond_targets(ds.re, enc.mean, cfg, report);
}

Tensor generate_for_re(const CondMlp& mlp, const GmvaeModel& model, double re) {
  require(mlp.latent_dim() == model.latent_dim(), "generate_for_re: latent width mismatch");
  const double r[] = {re};
  const Tensor z = mlp.predict(r);
  Tensor field = model.destandardize(decode(model, z).mean);
  if (model.layout.empty()) return field;
  return field.reshaped({model.layout.channels, model.layout.height, model.layout.width});
}

}  // namespace gmvae
