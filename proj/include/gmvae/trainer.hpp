#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "gmvae/error.hpp"
#include "gmvae/flowgen.hpp"
#include "gmvae/model.hpp"
#include "gmvae/rng.hpp"

namespace gmvae {

struct TrainConfig {
  int epochs = 100;
  int warmup_epochs = 10;  // plain-VAE epochs before the mixture is initialized
  std::size_t batch_size = 32;
  double lr = 1e-3;
  int em_every = 1;  // epochs between full-dataset EM updates
  std::size_t clusters = 4;
  std::size_t latent_dim = 2;
  std::uint64_t seed = 0;
  double variance_floor = kVarianceFloor;
  std::vector<std::size_t> hidden{512, 128};
  int kmeans_iters = 100;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double elbo = 0.0;
  ElboParts parts;
  double gmm_ll = 0.0;  // mean per-sample mixture log-likelihood of posterior means
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;

  /// CSV with header epoch,elbo,term1..term5,gmm_ll,seconds. With
  /// timing=false the seconds column is written as 0 so that reruns are
  /// byte-identical.
  void write_csv(std::ostream& os, bool timing = true) const;
};

struct TrainResult {
  GmvaeModel model;
  TrainLog log;
};

/// Training hit a non-finite ELBO or gradient. Carries the model as it was at
/// the end of the last completed epoch (0 = initial weights).
class TrainingDiverged : public DivergedError {
 public:
  TrainingDiverged(const std::string& what, int last_good_epoch,
                   std::shared_ptr<const GmvaeModel> last_good)
      : DivergedError(what), last_good_epoch_(last_good_epoch), last_good_(std::move(last_good)) {}
  int last_good_epoch() const noexcept { return last_good_epoch_; }
  const std::shared_ptr<const GmvaeModel>& last_good() const noexcept { return last_good_; }

 private:
  int last_good_epoch_;
  std::shared_ptr<const GmvaeModel> last_good_;
};

/// One EM step on the mixture's means and variances, using the posterior
/// means as points and adding the mean encoder variance to the spread.
/// Mixture weights are left alone (they are trained by gradient).
GmmParams em_update(const GmmParams& gmm, const EncoderDist& enc,
                    double variance_floor = kVarianceFloor);

/// k-means on posterior means -> mu; floored within-cluster variance -> sigma2;
/// log cluster proportions -> pi_logits.
GmmParams init_gmm_from_kmeans(const Tensor& means, std::size_t clusters, double variance_floor,
                               Rng& rng, int max_iter = 100);

/// Per-channel mean/std of a field dataset.
FieldLayout fit_layout(const FlowDataset& ds);

/// Posterior of every row of x (network space), evaluated in fixed-size chunks.
EncoderDist encode_all(const GmvaeModel& model, const Tensor& x);

/// Alternating optimization: warmup as a plain VAE, k-means initialization
/// of the mixture, then Adam on networks + pi_logits every minibatch and a
/// full-dataset EM update every em_every epochs.
TrainResult train(const FlowDataset& ds, const TrainConfig& cfg);
/// Same schedule on already-prepared data (rows are samples).
TrainResult train_matrix(const Tensor& x, const TrainConfig& cfg, FieldLayout layout = {});

}  // namespace gmvae
