#include "gmvae/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gmvae/error.hpp"

namespace gmvae {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::string wname(std::size_t i) { return "w" + std::to_string(i); }
std::string bname(std::size_t i) { return "b" + std::to_string(i); }

std::size_t layer_count(const ParamSet& net) {
  std::size_t n = 0;
  while (net.contains(wname(n))) ++n;
  return n;
}

void add_dense(ParamSet& net, std::size_t idx, std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor w({in, out});
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  net.add(wname(idx), std::move(w));
  net.add(bname(idx), Tensor({1, out}, 0.0));
}

template <class Bind>
ad::Var mlp_forward(ad::Var x, std::size_t layers, Bind bind) {
  ad::Var h = x;
  for (std::size_t i = 0; i < layers; ++i) {
    h = ad::matmul(h, bind(wname(i))) + bind(bname(i));
    if (i + 1 < layers) h = ad::tanh(h);
  }
  return h;
}

EncoderVars split_encoder(ad::Var out, std::size_t d) {
  require(out.cols() == 2 * d, "encoder: output width must be 2D");
  return {ad::slice_cols(out, 0, d), ad::slice_cols(out, d, 2 * d)};
}

void check_width(const Tensor& x, std::size_t width, const char* what) {
  if (x.rank() != 2 || x.cols() != width)
    throw ContractError(std::string(what) + ": expected width " + std::to_string(width) +
                        ", got " + x.shape_string());
}

}  // namespace

std::vector<double> GmmParams::weights() const {
  const std::size_t k = pi_logits.size();
  std::vector<double> w(k);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, pi_logits[c]);
  double s = 0.0;
  for (std::size_t c = 0; c < k; ++c) s += (w[c] = std::exp(pi_logits[c] - mx));
  for (double& v : w) v /= s;
  return w;
}

GmmParams GmmParams::standard(std::size_t dim) {
  return {Tensor({1, 1}, 0.0), Tensor({1, dim}, 0.0), Tensor({1, 1}, 1.0)};
}

Tensor component_log_density(const GmmParams& gmm, const Tensor& z) {
  const std::size_t b = z.rows(), d = z.cols(), k = gmm.k();
  require(d == gmm.dim(), "component_log_density: latent width mismatch");
  Tensor out({b, k});
  for (std::size_t c = 0; c < k; ++c) {
    const double s2 = gmm.sigma2[c];
    const double norm = -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(s2));
    for (std::size_t i = 0; i < b; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = z(i, j) - gmm.mu(c, j);
        q += diff * diff;
      }
      out(i, c) = norm - 0.5 * q / s2;
    }
  }
  return out;
}

double gmm_log_likelihood(const GmmParams& gmm, const Tensor& z) {
  const Tensor logn = component_log_density(gmm, z);
  const auto w = gmm.weights();
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < gmm.k(); ++c) mx = std::max(mx, logn(i, c) + std::log(w[c]));
    double s = 0.0;
    for (std::size_t c = 0; c < gmm.k(); ++c) s += std::exp(logn(i, c) + std::log(w[c]) - mx);
    total += mx + std::log(s);
  }
  return total;
}

double to_f32_at_least(double x, double floor) {
  float f = static_cast<float>(std::max(x, floor));
  while (static_cast<double>(f) < floor) f = std::nextafter(f, std::numeric_limits<float>::max());
  return f;
}

GmvaeModel GmvaeModel::create(const NetShape& shape, std::size_t clusters, Rng& rng) {
  require(shape.input_dim >= 1 && shape.latent_dim >= 1, "GmvaeModel: empty input or latent");
  require(clusters >= 1, "GmvaeModel: need at least one cluster");
  GmvaeModel m;
  m.shape = shape;
  std::vector<std::size_t> enc{shape.input_dim};
  enc.insert(enc.end(), shape.hidden.begin(), shape.hidden.end());
  enc.push_back(2 * shape.latent_dim);
  for (std::size_t i = 0; i + 1 < enc.size(); ++i) add_dense(m.encoder, i, enc[i], enc[i + 1], rng);

  std::vector<std::size_t> dec{shape.latent_dim};
  dec.insert(dec.end(), shape.hidden.rbegin(), shape.hidden.rend());
  dec.push_back(shape.input_dim);
  for (std::size_t i = 0; i + 1 < dec.size(); ++i) add_dense(m.decoder, i, dec[i], dec[i + 1], rng);
  m.decoder.add("log_var", Tensor({1, 1}, 0.0));

  m.prior.add("pi_logits", Tensor({1, clusters}, 0.0));
  m.mu = Tensor({clusters, shape.latent_dim}, 0.0);
  m.sigma2 = Tensor({1, clusters}, 1.0);
  return m;
}

GmmParams GmvaeModel::gmm() const { return {prior.at("pi_logits").value, mu, sigma2}; }

void GmvaeModel::set_gmm(const GmmParams& g) {
  require(g.dim() == shape.latent_dim, "set_gmm: latent width mismatch");
  require(g.pi_logits.size() == g.k() && g.sigma2.size() == g.k(), "set_gmm: inconsistent K");
  Param& logits = prior.at("pi_logits");
  if (logits.value.size() != g.k()) {
    prior = ParamSet();
    prior.add("pi_logits", g.pi_logits.reshaped({1, g.k()}));
  } else {
    logits.value = g.pi_logits.reshaped({1, g.k()});
    round_to_f32(logits.value);
  }
  mu = g.mu;
  round_to_f32(mu);
  sigma2 = g.sigma2.reshaped({1, g.k()});
  for (double& s : sigma2.values()) s = to_f32_at_least(s, kVarianceFloor);
}

Tensor GmvaeModel::standardize(const Tensor& raw) const {
  if (layout.empty()) return raw;
  check_width(raw, shape.input_dim, "standardize");
  Tensor out = raw;
  const std::size_t px = layout.pixels();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t ch = 0; ch < layout.channels; ++ch)
      for (std::size_t p = 0; p < px; ++p) {
        double& v = out(i, ch * px + p);
        v = (v - layout.mean[ch]) / layout.std[ch];
      }
  return out;
}

Tensor GmvaeModel::destandardize(const Tensor& net) const {
  if (layout.empty()) return net;
  check_width(net, shape.input_dim, "destandardize");
  Tensor out = net;
  const std::size_t px = layout.pixels();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t ch = 0; ch < layout.channels; ++ch)
      for (std::size_t p = 0; p < px; ++p) {
        double& v = out(i, ch * px + p);
        v = v * layout.std[ch] + layout.mean[ch];
      }
  return out;
}

EncoderVars encode(ad::Tape& tape, GmvaeModel& model, ad::Var x) {
  check_width(x.value(), model.shape.input_dim, "encode");
  auto out = mlp_forward(x, layer_count(model.encoder),
                         [&](const std::string& n) { return model.encoder.bind(tape, n); });
  return split_encoder(out, model.shape.latent_dim);
}

EncoderVars encode_frozen(ad::Tape& tape, const GmvaeModel& model, ad::Var x) {
  check_width(x.value(), model.shape.input_dim, "encode");
  auto out = mlp_forward(x, layer_count(model.encoder), [&](const std::string& n) {
    return tape.reference(&model.encoder.at(n).value);
  });
  return split_encoder(out, model.shape.latent_dim);
}

ad::Var decode_mean(ad::Tape& tape, GmvaeModel& model, ad::Var z) {
  check_width(z.value(), model.shape.latent_dim, "decode");
  return mlp_forward(z, layer_count(model.decoder),
                     [&](const std::string& n) { return model.decoder.bind(tape, n); });
}

ad::Var decode_mean_frozen(ad::Tape& tape, const GmvaeModel& model, ad::Var z) {
  check_width(z.value(), model.shape.latent_dim, "decode");
  return mlp_forward(z, layer_count(model.decoder), [&](const std::string& n) {
    return tape.reference(&model.decoder.at(n).value);
  });
}

ad::Var decoder_log_var(ad::Tape& tape, GmvaeModel& model) {
  return ad::clamp_min(model.decoder.bind(tape, "log_var"), std::log(kDecoderVarianceFloor));
}

EncoderDist encode(const GmvaeModel& model, const Tensor& x) {
  ad::Tape tape;
  auto enc = encode_frozen(tape, model, tape.constant(x));
  return {enc.mean.value(), enc.log_var.value()};
}

DecoderDist decode(const GmvaeModel& model, const Tensor& z) {
  ad::Tape tape;
  auto mean = decode_mean_frozen(tape, model, tape.constant(z));
  const double lv =
      std::max(model.decoder.at("log_var").value[0], std::log(kDecoderVarianceFloor));
  return {mean.value(), lv};
}

Tensor draw_standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor eps({rows, cols});
  for (double& v : eps.values()) v = rng.normal();
  return eps;
}

Tensor reparameterize(const EncoderDist& dist, Rng& rng) {
  require(dist.mean.same_shape(dist.log_var), "reparameterize: mean/log_var shape mismatch");
  const Tensor eps = draw_standard_normal(dist.mean.rows(), dist.mean.cols(), rng);
  Tensor z(dist.mean.shape());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = dist.mean[i] + std::exp(0.5 * dist.log_var[i]) * eps[i];
  return z;
}

Tensor responsibilities(const GmmParams& gmm, const Tensor& z) {
  Tensor lj = component_log_density(gmm, z);
  const auto w = gmm.weights();
  for (std::size_t i = 0; i < lj.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < gmm.k(); ++c) {
      lj(i, c) += std::log(w[c]);
      mx = std::max(mx, lj(i, c));
    }
    double s = 0.0;
    for (std::size_t c = 0; c < gmm.k(); ++c) s += std::exp(lj(i, c) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < gmm.k(); ++c) lj(i, c) = std::exp(lj(i, c) - lse);
  }
  return lj;
}

Tensor sample_prior(const GmmParams& gmm, Rng& rng, std::size_t n,
                    std::optional<std::size_t> cluster) {
  const std::size_t k = gmm.k(), d = gmm.dim();
  if (cluster) require(*cluster < k, "sample_prior: cluster index out of range");
  const auto w = gmm.weights();
  Tensor z({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    if (cluster) {
      c = *cluster;
    } else {
      const double u = rng.uniform();
      double acc = 0.0;
      c = k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        acc += w[j];
        if (u < acc) {
          c = j;
          break;
        }
      }
      while (w[c] == 0.0 && c > 0) --c;  // guard against rounding past the last mass
    }
    const double sd = std::sqrt(gmm.sigma2[c]);
    for (std::size_t j = 0; j < d; ++j) z(i, j) = gmm.mu(c, j) + sd * rng.normal();
  }
  return z;
}

ElboTerms elbo(ad::Tape& tape, GmvaeModel& model, const Tensor& x, Rng& rng,
               const ElboOptions& opts) {
  const Tensor eps = draw_standard_normal(x.rows(), model.shape.latent_dim, rng);
  return elbo_with_noise(tape, model, x, eps, opts);
}

ElboTerms elbo_with_noise(ad::Tape& tape, GmvaeModel& model, const Tensor& x, const Tensor& eps,
                          const ElboOptions& opts) {
  const std::size_t d = model.shape.latent_dim;
  const auto p = static_cast<double>(model.shape.input_dim);
  require(eps.rows() == x.rows() && eps.cols() == d, "elbo: noise must be B x D");

  ad::Var xv = tape.constant(x);
  EncoderVars enc = encode(tape, model, xv);
  ad::Var z = enc.mean + ad::exp(0.5 * enc.log_var) * tape.constant(eps);

  // term1: sum_d log N(x_d; xhat_d, s2)
  ad::Var xhat = decode_mean(tape, model, z);
  ad::Var dlv = decoder_log_var(tape, model);
  ad::Var sq = ad::sum_rows(ad::square(xv - xhat));
  ad::Var term1 = ad::add_scalar(-0.5 * p * dlv, -0.5 * p * kLog2Pi) -
                  0.5 * (sq * ad::exp(-dlv));

  // mixture prior pieces
  const GmmParams gmm = opts.standard_prior ? GmmParams::standard(d) : model.gmm();
  const std::size_t k = gmm.k();
  Tensor mu_t = gmm.mu.transposed();
  Tensor mu_sq({1, k}), norm({1, k}), inv2s({1, k});
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += gmm.mu(c, j) * gmm.mu(c, j);
    mu_sq[c] = s;
    norm[c] = -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(gmm.sigma2[c]));
    inv2s[c] = 0.5 / gmm.sigma2[c];
  }
  ad::Var dist2 = ad::sum_rows(ad::square(z)) - 2.0 * ad::matmul(z, tape.constant(mu_t)) +
                  tape.constant(mu_sq);
  ad::Var logn = tape.constant(norm) - dist2 * tape.constant(inv2s);

  ad::Var logits = opts.standard_prior ? tape.constant(gmm.pi_logits)
                                       : model.prior.bind(tape, "pi_logits");
  ad::Var log_pi = ad::log_softmax(logits);
  ad::Var log_gamma = ad::log_softmax(ad::stop_gradient(logn) + log_pi);
  ad::Var gamma = ad::exp(log_gamma);

  ad::Var term2 = ad::sum_rows(gamma * logn);
  ad::Var term3 = ad::sum_rows(gamma * log_pi);
  ad::Var term4 = ad::add_scalar(0.5 * ad::sum_rows(enc.log_var),
                                 0.5 * static_cast<double>(d) * (1.0 + kLog2Pi));
  ad::Var term5 = -ad::sum_rows(gamma * log_gamma);

  ElboTerms out;
  const std::pair<const char*, ad::Var> terms[] = {{"reconstruction", term1},
                                                   {"prior_fit", term2},
                                                   {"cluster_prior", term3},
                                                   {"gaussian_entropy", term4},
                                                   {"categorical_entropy", term5}};
  double* slots[] = {&out.parts.reconstruction, &out.parts.prior_fit, &out.parts.cluster_prior,
                     &out.parts.gaussian_entropy, &out.parts.categorical_entropy};
  const double b = static_cast<double>(x.rows());
  for (std::size_t t = 0; t < 5; ++t) {
    double s = 0.0;
    for (double v : terms[t].second.value().values()) s += v;
    if (!std::isfinite(s))
      throw DivergedError(std::string("elbo: non-finite ") + terms[t].first + " term");
    *slots[t] = s / b;
  }
  out.elbo_mean = ad::mean(term1 + term2 + term3 + term4 + term5);
  out.encoder = enc;
  out.z = z;
  return out;
}

}  // namespace gmvae
