#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gmvae/autodiff.hpp"
#include "gmvae/params.hpp"
#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

inline constexpr double kVarianceFloor = 1e-4;         // cluster variances
inline constexpr double kDecoderVarianceFloor = 1e-6;  // shared output variance

/// Latent mixture prior: pi = softmax(pi_logits), z | c ~ N(mu_c, sigma2_c I).
struct GmmParams {
  Tensor pi_logits;  // 1 x K
  Tensor mu;         // K x D
  Tensor sigma2;     // 1 x K

  std::size_t k() const { return mu.rows(); }
  std::size_t dim() const { return mu.cols(); }
  std::vector<double> weights() const;
  /// K = 1, N(0, I): the plain VAE prior.
  static GmmParams standard(std::size_t dim);
};

/// log N(z; mu_c, sigma2_c I) for every row of z (B x D) and cluster; B x K.
Tensor component_log_density(const GmmParams& gmm, const Tensor& z);

/// Sum over rows of log sum_c pi_c N(z_i; mu_c, sigma2_c I).
double gmm_log_likelihood(const GmmParams& gmm, const Tensor& z);

/// Diagonal Gaussian q(z|x), one row per input.
struct EncoderDist {
  Tensor mean;     // B x D
  Tensor log_var;  // B x D
};

/// Isotropic Gaussian p(x|z) with a single shared variance.
struct DecoderDist {
  Tensor mean;  // B x P
  double log_var = 0.0;
};

struct NetShape {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> hidden{512, 128};
};

/// Channel layout of flattened C x H x W inputs and the per-channel
/// standardization the networks see. Empty for plain vector data.
struct FieldLayout {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> mean;  // per channel
  std::vector<double> std;   // per channel

  bool empty() const { return channels == 0; }
  std::size_t pixels() const { return height * width; }
};

/// Encoder P -> hidden... -> 2D (mean | log-var), decoder D -> reversed
/// hidden... -> P plus a scalar output log-variance, tanh in between, and the
/// mixture prior. Encoder and decoder parameters are named w0, b0, w1, ...;
/// the decoder also holds "log_var"; the prior ParamSet holds "pi_logits".
struct GmvaeModel {
  NetShape shape;
  ParamSet encoder;
  ParamSet decoder;
  ParamSet prior;
  Tensor mu;      // K x D, owned by the EM block
  Tensor sigma2;  // 1 x K, owned by the EM block
  FieldLayout layout;

  static GmvaeModel create(const NetShape& shape, std::size_t clusters, Rng& rng);

  std::size_t latent_dim() const { return shape.latent_dim; }
  std::size_t clusters() const { return mu.rows(); }
  GmmParams gmm() const;
  /// Replace the prior; mu/sigma2 are rounded to f32 and sigma2 kept >= floor.
  void set_gmm(const GmmParams& g);

  /// Scale raw fields (N x P) into network space and back.
  Tensor standardize(const Tensor& raw) const;
  Tensor destandardize(const Tensor& net) const;
};

/// Round to f32 without dropping below `floor`.
double to_f32_at_least(double x, double floor);

// --- tape-level building blocks --------------------------------------------

struct EncoderVars {
  ad::Var mean;
  ad::Var log_var;
};

/// Networks bound either as trainable (gradients reach the ParamSets) or as
/// frozen references.
EncoderVars encode(ad::Tape& tape, GmvaeModel& model, ad::Var x);
ad::Var decode_mean(ad::Tape& tape, GmvaeModel& model, ad::Var z);
ad::Var decoder_log_var(ad::Tape& tape, GmvaeModel& model);
EncoderVars encode_frozen(ad::Tape& tape, const GmvaeModel& model, ad::Var x);
ad::Var decode_mean_frozen(ad::Tape& tape, const GmvaeModel& model, ad::Var z);

// --- value-level operations --------------------------------------------------

EncoderDist encode(const GmvaeModel& model, const Tensor& x);
DecoderDist decode(const GmvaeModel& model, const Tensor& z);
/// z = mean + exp(log_var / 2) * eps, eps ~ N(0, I) drawn row-major from rng.
Tensor reparameterize(const EncoderDist& dist, Rng& rng);
Tensor draw_standard_normal(std::size_t rows, std::size_t cols, Rng& rng);
/// p(c | z) for each row, computed in log space; B x K.
Tensor responsibilities(const GmmParams& gmm, const Tensor& z);
/// Draw n latent points: from cluster `cluster` if given, otherwise ancestrally.
Tensor sample_prior(const GmmParams& gmm, Rng& rng, std::size_t n,
                    std::optional<std::size_t> cluster = std::nullopt);

// --- ELBO --------------------------------------------------------------------

/// Batch means of the five ELBO terms; their sum is the ELBO.
struct ElboParts {
  double reconstruction = 0.0;       // E[log p(x|z)]
  double prior_fit = 0.0;            // E[log p(z|c)]
  double cluster_prior = 0.0;        // E[log p(c)]
  double gaussian_entropy = 0.0;     // -E[log q(z|x)]
  double categorical_entropy = 0.0;  // -E[log q(c|x)]
  double total() const {
    return reconstruction + prior_fit + cluster_prior + gaussian_entropy + categorical_entropy;
  }
};

struct ElboOptions {
  /// Evaluate against N(0, I) with K = 1 regardless of the model's mixture
  /// (warmup / plain VAE); pi_logits then receive no gradient.
  bool standard_prior = false;
};

struct ElboTerms {
  ad::Var elbo_mean;  // 1x1, batch mean
  ElboParts parts;
  EncoderVars encoder;
  ad::Var z;
};

/// One-sample Monte Carlo ELBO of a batch x (B x P, network space). The
/// responsibilities gamma = p(c|z) take gradients into pi_logits only; mu and
/// sigma2 enter as constants. Throws DivergedError naming the first
/// non-finite term.
ElboTerms elbo(ad::Tape& tape, GmvaeModel& model, const Tensor& x, Rng& rng,
               const ElboOptions& opts = {});
/// Same, with the reparameterization noise supplied explicitly (B x D).
ElboTerms elbo_with_noise(ad::Tape& tape, GmvaeModel& model, const Tensor& x, const Tensor& eps,
                          const ElboOptions& opts = {});

}  // namespace gmvae
