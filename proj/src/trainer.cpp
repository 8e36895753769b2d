#include "gmvae/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gmvae/linalg.hpp"

namespace gmvae {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kKMeansStream = 2;
constexpr std::uint64_t kShuffleStream = 1ULL << 32;
constexpr std::uint64_t kNoiseStream = 2ULL << 32;

std::vector<std::size_t> shuffled_order(std::size_t n, Rng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx) {
  Tensor out({idx.size(), x.cols()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = x.row_span(idx[r]);
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, "TrainConfig: epochs must be >= 1");
  require(warmup_epochs >= 0 && warmup_epochs <= epochs,
          "TrainConfig: warmup_epochs must be in [0, epochs]");
  require(em_every >= 1, "TrainConfig: em_every must be >= 1");
  require(clusters >= 1, "TrainConfig: clusters must be >= 1");
  require(latent_dim >= 1, "TrainConfig: latent_dim must be >= 1");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(lr > 0.0, "TrainConfig: lr must be positive");
  require(variance_floor > 0.0, "TrainConfig: variance_floor must be positive");
}

void TrainLog::write_csv(std::ostream& os, bool timing) const {
  os << "epoch,elbo,term1,term2,term3,term4,term5,gmm_ll,seconds\n";
  const auto old = os.precision(17);
  for (const auto& r : records) {
    os << r.epoch << ',' << r.elbo << ',' << r.parts.reconstruction << ',' << r.parts.prior_fit
       << ',' << r.parts.cluster_prior << ',' << r.parts.gaussian_entropy << ','
       << r.parts.categorical_entropy << ',' << r.gmm_ll << ',' << (timing ? r.seconds : 0.0)
       << '\n';
  }
  os.precision(old);
}

GmmParams em_update(const GmmParams& gmm, const EncoderDist& enc, double variance_floor) {
  const Tensor& m = enc.mean;
  const std::size_t n = m.rows(), d = m.cols(), k = gmm.k();
  require(n >= 1 && d == gmm.dim(), "em_update: embeddings do not match the mixture");
  require(enc.log_var.same_shape(m), "em_update: mean/log_var shape mismatch");
  require(m.all_finite(), "em_update: non-finite embeddings");

  const Tensor gamma = responsibilities(gmm, m);
  std::vector<double> enc_var(n, 0.0);  // sum_d s^2_id
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) enc_var[i] += std::exp(enc.log_var(i, j));

  GmmParams out = gmm;
  std::vector<bool> used(n, false);
  for (std::size_t c = 0; c < k; ++c) {
    double nc = 0.0;
    for (std::size_t i = 0; i < n; ++i) nc += gamma(i, c);

    if (nc < 1e-8) {
      // re-seed on the least-claimed embedding, spread = global variance
      std::size_t pick = n;
      double lowest = 2.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        double mx = 0.0;
        for (std::size_t q = 0; q < k; ++q) mx = std::max(mx, gamma(i, q));
        if (mx < lowest) {
          lowest = mx;
          pick = i;
        }
      }
      if (pick == n) pick = 0;
      used[pick] = true;
      std::vector<double> gmean(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gmean[j] += m(i, j) / static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) var += (m(i, j) - gmean[j]) * (m(i, j) - gmean[j]);
      var /= static_cast<double>(n * d);
      for (std::size_t j = 0; j < d; ++j) out.mu(c, j) = m(pick, j);
      out.sigma2[c] = std::max(var, variance_floor);
      continue;
    }

    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += gamma(i, c) * m(i, j);
      out.mu(c, j) = s / nc;
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = m(i, j) - out.mu(c, j);
        q += diff * diff;
      }
      spread += gamma(i, c) * (q + enc_var[i]);
    }
    out.sigma2[c] = std::max(spread / (nc * static_cast<double>(d)), variance_floor);
  }
  return out;
}

GmmParams init_gmm_from_kmeans(const Tensor& means, std::size_t clusters, double variance_floor,
                               Rng& rng, int max_iter) {
  const std::size_t n = means.rows(), d = means.cols();
  const auto km = kmeans(means, clusters, rng, max_iter);
  GmmParams g{Tensor({1, clusters}), km.centroids, Tensor({1, clusters})};
  std::vector<double> spread(clusters, 0.0);
  std::vector<std::size_t> counts(clusters, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = km.labels[i];
    ++counts[c];
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = means(i, j) - km.centroids(c, j);
      spread[c] += diff * diff;
    }
  }
  for (std::size_t c = 0; c < clusters; ++c) {
    const double cnt = static_cast<double>(std::max<std::size_t>(counts[c], 1));
    g.sigma2[c] = std::max(spread[c] / (cnt * static_cast<double>(d)), variance_floor);
    g.pi_logits[c] = std::log(cnt / static_cast<double>(n));
  }
  return g;
}

FieldLayout fit_layout(const FlowDataset& ds) {
  require(ds.size() >= 1, "fit_layout: empty dataset");
  FieldLayout layout;
  layout.channels = kFlowChannels;
  layout.height = ds.height;
  layout.width = ds.width;
  const std::size_t px = ds.height * ds.width;
  for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto sample = ds.sample(i);
      for (std::size_t q = 0; q < px; ++q) {
        const double v = sample[ch * px + q];
        s += v;
        s2 += v * v;
      }
    }
    const double cnt = static_cast<double>(ds.size() * px);
    const double mean = s / cnt;
    const double sd = std::sqrt(std::max(s2 / cnt - mean * mean, 0.0));
    layout.mean.push_back(static_cast<float>(mean));
    layout.std.push_back(to_f32_at_least(sd > 0.0 ? sd : 1.0, 1e-12));
  }
  return layout;
}

EncoderDist encode_all(const GmvaeModel& model, const Tensor& x) {
  constexpr std::size_t kChunk = 256;
  const std::size_t n = x.rows(), d = model.latent_dim();
  EncoderDist out{Tensor({n, d}), Tensor({n, d})};
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t stop = std::min(n, start + kChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto part = encode(model, gather_rows(x, idx));
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) {
        out.mean(start + r, j) = part.mean(r, j);
        out.log_var(start + r, j) = part.log_var(r, j);
      }
  }
  return out;
}

TrainResult train(const FlowDataset& ds, const TrainConfig& cfg) {
  require(ds.size() >= 1, "train: empty dataset");
  FieldLayout layout = fit_layout(ds);
  GmvaeModel probe;
  probe.shape.input_dim = ds.sample_size();
  probe.layout = layout;
  return train_matrix(probe.standardize(ds.matrix()), cfg, std::move(layout));
}

TrainResult train_matrix(const Tensor& x, const TrainConfig& cfg, FieldLayout layout) {
  cfg.validate();
  require(x.rank() == 2 && x.rows() >= 1, "train: dataset is empty");
  require(x.all_finite(), "train: dataset contains non-finite values");
  const std::size_t n = x.rows();
  require(n >= cfg.clusters, "train: fewer samples than clusters");

  const Rng root(cfg.seed);
  Rng init_rng = root.child(kInitStream);
  NetShape shape{x.cols(), cfg.latent_dim, cfg.hidden};
  TrainResult res{GmvaeModel::create(shape, cfg.clusters, init_rng), {}};
  GmvaeModel& model = res.model;
  model.layout = std::move(layout);

  const AdamConfig adam{cfg.lr};
  auto init_mixture = [&](const EncoderDist& enc) {
    Rng km_rng = root.child(kKMeansStream);
    model.set_gmm(init_gmm_from_kmeans(enc.mean, cfg.clusters, cfg.variance_floor, km_rng,
                                       cfg.kmeans_iters));
  };
  if (cfg.warmup_epochs == 0) init_mixture(encode_all(model, x));

  auto last_good = std::make_shared<const GmvaeModel>(model);
  int last_good_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool warmup = epoch <= cfg.warmup_epochs;
    const ElboOptions opts{warmup};
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      const auto order = shuffled_order(n, root.child(kShuffleStream + static_cast<std::uint64_t>(epoch)));
      Rng noise = root.child(kNoiseStream + static_cast<std::uint64_t>(epoch));
      for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t stop = std::min(n, start + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + start, stop - start);
        const Tensor batch = gather_rows(x, idx);
        ad::Tape tape;
        auto terms = elbo(tape, model, batch, noise, opts);
        tape.backward(-terms.elbo_mean);
        adam_step(model.encoder, adam);
        adam_step(model.decoder, adam);
        if (warmup)
          model.prior.zero_grad();
        else
          adam_step(model.prior, adam);

        const double w = static_cast<double>(idx.size()) / static_cast<double>(n);
        rec.parts.reconstruction += w * terms.parts.reconstruction;
        rec.parts.prior_fit += w * terms.parts.prior_fit;
        rec.parts.cluster_prior += w * terms.parts.cluster_prior;
        rec.parts.gaussian_entropy += w * terms.parts.gaussian_entropy;
        rec.parts.categorical_entropy += w * terms.parts.categorical_entropy;
      }

      EncoderDist enc = encode_all(model, x);
      if (!warmup && (epoch - cfg.warmup_epochs) % cfg.em_every == 0)
        model.set_gmm(em_update(model.gmm(), enc, cfg.variance_floor));
      if (epoch == cfg.warmup_epochs) init_mixture(enc);
      const bool mixture_live = epoch >= cfg.warmup_epochs;
      rec.gmm_ll = gmm_log_likelihood(mixture_live ? model.gmm()
                                                   : GmmParams::standard(cfg.latent_dim),
                                      enc.mean) /
                   static_cast<double>(n);
      rec.elbo = rec.parts.total();
      if (!std::isfinite(rec.elbo) || !std::isfinite(rec.gmm_ll))
        throw DivergedError("train: non-finite epoch statistics");
    } catch (const DivergedError& e) {
      throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                                 "; last good epoch " + std::to_string(last_good_epoch),
                             last_good_epoch, last_good);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.records.push_back(rec);
    last_good = std::make_shared<const GmvaeModel>(model);
    last_good_epoch = epoch;
  }
  return res;
}

}  // namespace gmvae
