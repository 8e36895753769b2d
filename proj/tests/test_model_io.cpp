#include <doctest.h>

#include <filesystem>

#include "gmvae/condgen.hpp"
#include "gmvae/error.hpp"
#include "gmvae/model_io.hpp"
#include "helpers.hpp"

using namespace gmvae;

namespace {

GmvaeModel random_model(Rng& rng, bool with_layout) {
  const std::size_t d = 1 + rng.below(3), k = 1 + rng.below(4);
  const std::size_t h = 2 + rng.below(3), w = 2 + rng.below(3);
  GmvaeModel m = GmvaeModel::create(NetShape{3 * h * w, d, {4 + rng.below(5), 2 + rng.below(3)}}, k, rng);
  m.decoder.at("log_var").value[0] = static_cast<float>(rng.uniform(-2.0, 1.0));
  m.set_gmm(GmmParams{testutil::random_matrix(1, k, rng), testutil::random_matrix(k, d, rng),
                      testutil::random_matrix(1, k, rng, 0.1, 2.0)});
  if (with_layout) {
    m.layout.channels = 3;
    m.layout.height = h;
    m.layout.width = w;
    for (int c = 0; c < 3; ++c) {
      m.layout.mean.push_back(static_cast<float>(rng.uniform(-1.0, 1.0)));
      m.layout.std.push_back(static_cast<float>(rng.uniform(0.1, 2.0)));
    }
  }
  return m;
}

FormatErrorKind kind_of(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("expected a FormatError");
  return FormatErrorKind::Malformed;
}

}  // namespace

TEST_CASE("GMVM round trip is bit exact") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const GmvaeModel m = random_model(rng, trial % 2 == 0);
    const auto bytes = serialize_model(m);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GMVM");
    const auto back = deserialize_model(bytes);
    CHECK_FALSE(back.cond.has_value());
    CHECK(serialize_model(back.model) == bytes);
    CHECK(back.model.encoder.at("w0").value == m.encoder.at("w0").value);
    CHECK(back.model.decoder.at("log_var").value == m.decoder.at("log_var").value);
    CHECK(back.model.mu == m.mu);
    CHECK(back.model.sigma2 == m.sigma2);
    CHECK(back.model.shape.input_dim == m.shape.input_dim);
    CHECK(back.model.shape.hidden == m.shape.hidden);
    CHECK(back.model.layout.mean == m.layout.mean);
  }
}

TEST_CASE("GMVM carries the conditional MLP") {
  Rng rng(2);
  const GmvaeModel m = random_model(rng, true);
  std::vector<double> re{100.0, 900.0, 1500.0};
  Tensor z = testutil::random_matrix(3, m.latent_dim(), rng);
  CondConfig cfg;
  cfg.steps = 20;
  cfg.hidden = 8;
  const CondMlp mlp = train_cond_targets(re, z, cfg);
  const auto bytes = serialize_model(m, &mlp);
  const auto back = deserialize_model(bytes);
  REQUIRE(back.cond.has_value());
  CHECK(back.cond->re_mean == mlp.re_mean);
  CHECK(back.cond->re_min == mlp.re_min);
  CHECK(back.cond->predict(re) == mlp.predict(re));
  CHECK(serialize_model(back.model, &*back.cond) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "gmvae_test_model.gmvm";
  save_model(path, m, &mlp);
  CHECK(serialize_model(load_model(path).model, &mlp) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("GMVM parse errors") {
  Rng rng(3);
  const auto good = serialize_model(random_model(rng, true));
  auto magic = good;
  magic[3] = 'X';
  CHECK(kind_of(magic) == FormatErrorKind::BadMagic);
  auto version = good;
  version[4] = 9;
  CHECK(kind_of(version) == FormatErrorKind::VersionMismatch);
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{40}, good.size() / 2, good.size() - 1}) {
    std::vector<std::uint8_t> t(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK(kind_of(t) == (cut < 4 ? FormatErrorKind::BadMagic : FormatErrorKind::Truncated));
  }
  auto trailing = good;
  trailing.push_back(1);
  CHECK(kind_of(trailing) == FormatErrorKind::Malformed);

  // drop one section by lowering the count: the last one (data.std) goes missing
  auto fewer = good;
  fewer[8] -= 1;
  CHECK((kind_of(fewer) == FormatErrorKind::Malformed));
}
