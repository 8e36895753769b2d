#include <doctest.h>

#include <regex>
#include <sstream>

#include "gmvae/embedding.hpp"
#include "gmvae/error.hpp"
#include "gmvae/linalg.hpp"
#include "gmvae/plot.hpp"
#include "gmvae/trainer.hpp"
#include "helpers.hpp"

using namespace gmvae;

namespace {

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
  return n;
}

EmbeddingTable trained_table(std::size_t clusters) {
  FlowGenConfig g;
  g.n = 30;
  g.height = g.width = 4;
  g.seed = 5;
  const FlowDataset ds = generate(g);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.warmup_epochs = 1;
  cfg.batch_size = 10;
  cfg.clusters = clusters;
  cfg.hidden = {10, 5};
  cfg.seed = 1;
  return embed(train(ds, cfg).model, ds);
}

}  // namespace

TEST_CASE("embedding table rows, labels and PCA coordinates") {
  const auto t = trained_table(3);
  CHECK(t.size() == 30);
  CHECK(t.latent.rows() == 30);
  for (std::size_t c : t.cluster) CHECK(c < 3);
  const auto p = pca(t.latent, 2).projected;
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(t.pcs(i, 0) == p(i, 0));
    CHECK(t.pcs(i, 1) == p(i, 1));
  }
}

TEST_CASE("embedding CSV round trip and recomputed PCA") {
  const auto t = trained_table(2);
  std::stringstream ss;
  write_embeddings_csv(ss, t);
  std::string header;
  std::getline(std::istringstream(ss.str()), header);
  CHECK(header == "id,re,z1,z2,pc1,pc2,cluster");
  const CsvTable csv = read_csv(ss);
  CHECK(csv.rows.size() == 30);
  const auto ids = csv.values("id");
  for (std::size_t i = 0; i < 30; ++i) CHECK(ids[i] == static_cast<double>(i));
  const auto back = embeddings_from_csv(csv);
  CHECK(back.latent == t.latent);
  CHECK(back.pcs == t.pcs);
  CHECK(back.cluster == t.cluster);
  CHECK(back.re == t.re);
  const auto again = pca_coordinates(back.latent);
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(std::abs(again[i] - back.pcs[i]) < 1e-12);
  CHECK_THROWS_AS(csv.values("nope"), ContractError);
}

TEST_CASE("read_csv rejects malformed input") {
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), ContractError);
  std::istringstream text("a\nxyz\n");
  CHECK_THROWS_AS(read_csv(text), ContractError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), ContractError);
}

TEST_CASE("pca coordinates pad small inputs") {
  CHECK(pca_coordinates(Tensor({1, 3}, 2.0)) == Tensor({1, 2}, 0.0));
  Tensor one_d = Tensor::matrix(3, 1, {1.0, 2.0, 4.0});
  auto pc = pca_coordinates(one_d);
  CHECK(pc(0, 1) == 0.0);
  CHECK(std::abs(pc(0, 0)) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("scatter SVG") {
  const auto t = trained_table(3);
  const std::string a = render_scatter_svg(t, ColorBy::Cluster);
  CHECK(a == render_scatter_svg(t, ColorBy::Cluster));
  CHECK(count_of(a, "<circle") == 30);
  CHECK(a.rfind("<?xml", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  for (std::size_t i = 0; i < 30; ++i) CHECK(a.find(kClusterPalette[t.cluster[i]]) != std::string::npos);

  const std::string b = render_scatter_svg(t, ColorBy::Re);
  CHECK(count_of(b, "<circle") == 30);

  EmbeddingTable empty;
  empty.latent = Tensor({0, 2});
  empty.pcs = Tensor({0, 2});
  const std::string e = render_scatter_svg(empty, ColorBy::Re);
  CHECK(count_of(e, "<circle") == 0);
  CHECK(count_of(e, "<line") >= 2);
  CHECK(e.find("</svg>") != std::string::npos);
}

TEST_CASE("colour ramp endpoints") {
  CHECK(ramp_color(0.0) == std::array<std::uint8_t, 3>{0x44, 0x01, 0x54});
  CHECK(ramp_color(0.5) == std::array<std::uint8_t, 3>{0x21, 0x91, 0x8c});
  CHECK(ramp_color(1.0) == std::array<std::uint8_t, 3>{0xfd, 0xe7, 0x25});
  CHECK(ramp_color(-3.0) == ramp_color(0.0));
  CHECK(ramp_color(7.0) == ramp_color(1.0));
}
