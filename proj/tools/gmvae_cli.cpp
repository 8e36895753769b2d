// gmvae: command-line front end for data generation, training, embedding,
// scoring, sampling, conditional generation and plotting.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gmvae/condgen.hpp"
#include "gmvae/embedding.hpp"
#include "gmvae/error.hpp"
#include "gmvae/flowgen.hpp"
#include "gmvae/model_io.hpp"
#include "gmvae/plot.hpp"
#include "gmvae/spectral.hpp"
#include "gmvae/trainer.hpp"

namespace {

using namespace gmvae;

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return is;
}

FlowDataset fields_to_dataset(const GmvaeModel& model, const Tensor& net_fields,
                              const std::vector<double>& re) {
  require(!model.layout.empty(), "model has no field layout; cannot emit GMVF fields");
  FlowDataset ds;
  ds.height = model.layout.height;
  ds.width = model.layout.width;
  ds.re = re;
  ds.noise_sigma.fill(0.0);
  if (re.empty()) return ds;
  const Tensor raw = model.destandardize(net_fields);
  ds.data.reserve(raw.size());
  for (double v : raw.values()) ds.data.push_back(static_cast<float>(v));
  return ds;
}

struct GenDataArgs {
  std::size_t n = 256;
  double re_min = 98.0, re_max = 2000.0;
  std::size_t grid = 32;
  double noise = 0.15;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  FlowGenConfig cfg;
  cfg.n = a.n;
  cfg.re_min = a.re_min;
  cfg.re_max = a.re_max;
  cfg.height = cfg.width = a.grid;
  cfg.noise_frac = a.noise;
  cfg.seed = a.seed;
  const FlowDataset ds = generate(cfg);
  save_dataset(a.out, ds);
  std::cout.precision(9);
  std::cout << "noise_sigma u=" << ds.noise_sigma[0] << " v=" << ds.noise_sigma[1]
            << " p=" << ds.noise_sigma[2] << '\n';
  return 0;
}

struct TrainArgs {
  std::string data, out, log;
  TrainConfig cfg;
  bool no_timing = false;
};

int run_train(const TrainArgs& a) {
  const FlowDataset ds = load_dataset(a.data);
  const TrainResult res = train(ds, a.cfg);
  save_model(a.out, res.model);
  if (!a.log.empty()) {
    auto os = open_out(a.log);
    res.log.write_csv(os, !a.no_timing);
  }
  const auto& last = res.log.records.back();
  std::cout.precision(9);
  std::cout << "epochs=" << res.log.records.size() << " first_elbo=" << res.log.records.front().elbo
            << " final_elbo=" << last.elbo << '\n';
  return 0;
}

int run_embed(const std::string& model_path, const std::string& data_path, const std::string& out) {
  const auto loaded = load_model(model_path);
  const FlowDataset ds = load_dataset(data_path);
  const EmbeddingTable t = embed(loaded.model, ds);
  auto os = open_out(out);
  write_embeddings_csv(os, t);
  return 0;
}

struct ScoreArgs {
  std::string embeddings, quantity = "re", out;
  std::size_t k = 10;
  double alpha = 0.05;
  std::size_t null_shuffles = 0;
  std::uint64_t seed = 0;
};

int run_score(const ScoreArgs& a) {
  auto is = open_in(a.embeddings);
  const CsvTable csv = read_csv(is);
  const std::vector<double> f = csv.values(a.quantity);
  const std::size_t n = f.size();
  require(a.k >= 1 && a.k < n, "score: k must satisfy 1 <= k < n (n = " + std::to_string(n) + ")");
  require(a.alpha > 0.0 && a.alpha <= 1.0, "score: alpha must be in (0, 1]");
  Tensor pts({n, 2});
  const auto pc1 = csv.values("pc1"), pc2 = csv.values("pc2");
  for (std::size_t i = 0; i < n; ++i) {
    pts(i, 0) = pc1[i];
    pts(i, 1) = pc2[i];
  }
  const SpectralBasis basis = spectral_basis(pts, a.k);
  const SpectralReport rep = score_signal(basis, f, a.alpha);
  const std::string out = a.out.empty() ? a.embeddings + ".spectral.csv" : a.out;
  {
    auto os = open_out(out);
    write_report_csv(os, rep);
  }
  std::cout.precision(12);
  write_report_summary(std::cout, rep);
  if (a.null_shuffles > 0) {
    auto null = permutation_null(basis, f, a.alpha, a.null_shuffles, a.seed);
    std::size_t below = 0;
    for (double s : null)
      if (s < rep.score) ++below;
    std::sort(null.begin(), null.end());
    const std::size_t q95 = std::min(null.size() - 1, static_cast<std::size_t>(
                                                          std::ceil(0.95 * null.size())) - 1);
    std::cout << "null_shuffles=" << null.size() << " null_p95=" << null[q95]
              << " fraction_below=" << static_cast<double>(below) / null.size() << '\n';
  }
  return 0;
}

int run_sample(const std::string& model_path, std::optional<std::size_t> cluster, std::size_t n,
               std::uint64_t seed, const std::string& out) {
  const auto loaded = load_model(model_path);
  const GmvaeModel& m = loaded.model;
  if (cluster)
    require(*cluster < m.clusters(), "sample: cluster " + std::to_string(*cluster) +
                                         " out of range (K = " + std::to_string(m.clusters()) + ")");
  Rng rng(seed);
  Tensor fields({0, m.shape.input_dim});
  if (n > 0) fields = decode(m, sample_prior(m.gmm(), rng, n, cluster)).mean;
  const std::vector<double> re(n, std::numeric_limits<double>::quiet_NaN());
  save_dataset(out, fields_to_dataset(m, fields, re));
  return 0;
}

int run_condgen(const std::string& model_path, const std::vector<double>& res,
                const std::string& out) {
  const auto loaded = load_model(model_path);
  require(loaded.cond.has_value(), "condgen: model file has no conditional MLP (run condgen-train)");
  const GmvaeModel& m = loaded.model;
  const CondMlp& mlp = *loaded.cond;
  for (double r : res)
    if (r < mlp.re_min || r > mlp.re_max)
      std::cerr << "warning: Re=" << r << " is outside the training range [" << mlp.re_min << ", "
                << mlp.re_max << "]\n";
  Tensor fields({res.size(), m.shape.input_dim});
  const Tensor z = mlp.predict(res);
  if (!res.empty()) fields = decode(m, z).mean;
  save_dataset(out, fields_to_dataset(m, fields, res));
  return 0;
}

int run_condgen_train(const std::string& model_path, const std::string& data_path,
                      const CondConfig& cfg, const std::string& out) {
  const auto loaded = load_model(model_path);
  const FlowDataset ds = load_dataset(data_path);
  CondTrainReport rep;
  const CondMlp mlp = train_cond(loaded.model, ds, cfg, &rep);
  save_model(out, loaded.model, &mlp);
  std::cout.precision(9);
  std::cout << "steps=" << rep.steps << " latent_mse=" << rep.final_mse << '\n';
  return 0;
}

int run_plot(const std::string& embeddings, const std::string& color_by, const std::string& out) {
  auto is = open_in(embeddings);
  const EmbeddingTable t = embeddings_from_csv(read_csv(is));
  auto os = open_out(out);
  os << render_scatter_svg(t, color_by == "cluster" ? ColorBy::Cluster : ColorBy::Re);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GMVAE dimension reduction, clustering and conditional generation of flow fields"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a noisy Kovasznay flow dataset (GMVF)");
  gen_cmd->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  gen_cmd->add_option("--re-min", gen.re_min, "Lowest Reynolds number")->capture_default_str();
  gen_cmd->add_option("--re-max", gen.re_max, "Highest Reynolds number")->capture_default_str();
  gen_cmd->add_option("--grid", gen.grid, "Grid size (H = W)")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Noise std as a fraction of channel RMS")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output GMVF file")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a GMVAE on a GMVF dataset");
  train_cmd->add_option("--data", tr.data, "Input GMVF dataset")->required();
  train_cmd->add_option("--latent-dim", tr.cfg.latent_dim)->capture_default_str();
  train_cmd->add_option("--clusters", tr.cfg.clusters)->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--warmup", tr.cfg.warmup_epochs)->capture_default_str();
  train_cmd->add_option("--em-every", tr.cfg.em_every)->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.lr)->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed)->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Output GMVM model")->required();
  train_cmd->add_option("--log", tr.log, "Training log CSV");
  train_cmd->add_flag("--no-timing", tr.no_timing, "Write 0 in the seconds column of the log");

  std::string emb_model, emb_data, emb_out;
  auto* embed_cmd = app.add_subcommand("embed", "Write the embedding table CSV");
  embed_cmd->add_option("--model", emb_model)->required();
  embed_cmd->add_option("--data", emb_data)->required();
  embed_cmd->add_option("--out", emb_out)->required();

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Graph-spectral smoothness score of a quantity");
  score_cmd->add_option("--embeddings", sc.embeddings)->required();
  score_cmd->add_option("--quantity", sc.quantity, "'re' or any numeric column")
      ->capture_default_str();
  score_cmd->add_option("--k", sc.k, "Neighbours per node")->capture_default_str();
  score_cmd->add_option("--alpha", sc.alpha, "Fraction of smoothest modes")->capture_default_str();
  score_cmd->add_option("--out", sc.out, "Report CSV (default: <embeddings>.spectral.csv)");
  score_cmd->add_option("--null", sc.null_shuffles, "Also score this many shuffled copies");
  score_cmd->add_option("--seed", sc.seed, "Seed for --null shuffles")->capture_default_str();

  std::string smp_model, smp_out;
  std::optional<std::size_t> smp_cluster;
  std::size_t smp_n = 1;
  std::uint64_t smp_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Decode draws from the mixture prior (GMVF)");
  sample_cmd->add_option("--model", smp_model)->required();
  sample_cmd->add_option("--cluster", smp_cluster, "Draw from this cluster only");
  sample_cmd->add_option("--n", smp_n)->capture_default_str();
  sample_cmd->add_option("--seed", smp_seed)->capture_default_str();
  sample_cmd->add_option("--out", smp_out)->required();

  std::string cg_model, cg_out;
  std::vector<double> cg_re;
  auto* condgen_cmd = app.add_subcommand("condgen", "Generate fields for given Reynolds numbers");
  condgen_cmd->add_option("--model", cg_model)->required();
  condgen_cmd->add_option("--re", cg_re, "Reynolds number(s)")->required();
  condgen_cmd->add_option("--out", cg_out)->required();

  std::string ct_model, ct_data, ct_out;
  CondConfig ct_cfg;
  auto* ct_cmd = app.add_subcommand("condgen-train", "Fit the Re -> latent MLP on a frozen model");
  ct_cmd->add_option("--model", ct_model)->required();
  ct_cmd->add_option("--data", ct_data)->required();
  ct_cmd->add_option("--seed", ct_cfg.seed)->capture_default_str();
  ct_cmd->add_option("--steps", ct_cfg.steps)->capture_default_str();
  ct_cmd->add_option("--lr", ct_cfg.lr)->capture_default_str();
  ct_cmd->add_option("--out", ct_out)->required();

  std::string pl_emb, pl_color = "re", pl_out;
  auto* plot_cmd = app.add_subcommand("plot", "SVG scatter of the PCA embedding");
  plot_cmd->add_option("--embeddings", pl_emb)->required();
  plot_cmd->add_option("--color-by", pl_color)
      ->check(CLI::IsMember({"re", "cluster"}))
      ->capture_default_str();
  plot_cmd->add_option("--out", pl_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return 2;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*embed_cmd) return run_embed(emb_model, emb_data, emb_out);
    if (*score_cmd) return run_score(sc);
    if (*sample_cmd) return run_sample(smp_model, smp_cluster, smp_n, smp_seed, smp_out);
    if (*condgen_cmd) return run_condgen(cg_model, cg_re, cg_out);
    if (*ct_cmd) return run_condgen_train(ct_model, ct_data, ct_cfg, ct_out);
    if (*plot_cmd) return run_plot(pl_emb, pl_color, pl_out);
  } catch (const ContractError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
