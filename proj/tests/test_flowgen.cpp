#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <filesystem>

#include "gmvae/error.hpp"
#include "gmvae/flowgen.hpp"

using namespace gmvae;

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;

long double lambda_ld(long double re) { return re / 2 - std::sqrt(re * re / 4 + 4 * kPiL * kPiL); }

FormatErrorKind parse_error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    deserialize_dataset(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("expected a FormatError");
  return FormatErrorKind::Malformed;
}

double max_interior_divergence(double re, std::size_t n) {
  const Tensor f = kovasznay_field(re, n, n);
  const double hx = 1.5 / static_cast<double>(n), hy = 2.0 / static_cast<double>(n);
  const std::size_t px = n * n;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double du = (f[i * n + j + 1] - f[i * n + j - 1]) / (2 * hx);
      const double dv = (f[px + (i + 1) * n + j] - f[px + (i - 1) * n + j]) / (2 * hy);
      worst = std::max(worst, std::abs(du + dv));
    }
  return worst;
}

}  // namespace

TEST_CASE("lambda closed form") {
  CHECK(kovasznay_lambda(0.0) == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-15));
  CHECK(kovasznay_lambda(1e-12) == doctest::Approx(-2.0 * std::numbers::pi).epsilon(1e-12));
  const long double ref = lambda_ld(100.0L);
  CHECK(std::abs(kovasznay_lambda(100.0) - static_cast<double>(ref)) <= 1e-13 * std::abs(static_cast<double>(ref)));
}

TEST_CASE("field values match an extended-precision evaluation on every cell") {
  for (double re : {98.0, 100.0, 700.0, 2000.0}) {
    const std::size_t h = 9, w = 7;
    const Tensor f = kovasznay_field(re, h, w);
    CHECK(f.shape() == std::vector<std::size_t>{3, h, w});
    const long double lam = lambda_ld(re);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const long double x = -0.5L + (j + 0.5L) * 1.5L / w;
        const long double y = -0.5L + (i + 0.5L) * 2.0L / h;
        const long double e = std::exp(lam * x);
        const long double u = 1 - e * std::cos(2 * kPiL * y);
        const long double v = lam / (2 * kPiL) * e * std::sin(2 * kPiL * y);
        const long double p = 0.5L * (1 - std::exp(2 * lam * x));
        CHECK(std::abs(f[i * w + j] - static_cast<double>(u)) <= 1e-12);
        CHECK(std::abs(f[h * w + i * w + j] - static_cast<double>(v)) <= 1e-12);
        CHECK(std::abs(f[2 * h * w + i * w + j] - static_cast<double>(p)) <= 1e-12);
      }
  }
  // u at (x, y) = (0.5, 0.25) for Re = 100: cos(pi/2) = 0, so u = 1
  const long double e = std::exp(lambda_ld(100.0L) * 0.5L);
  CHECK(static_cast<double>(1 - e * std::cos(2 * kPiL * 0.25L)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pressure depends on x only and changes sign at x = 0") {
  const std::size_t h = 6, w = 12;
  const Tensor f = kovasznay_field(300.0, h, w);
  const std::size_t px = h * w;
  for (std::size_t j = 0; j < w; ++j) {
    const double x = -0.5 + (j + 0.5) * 1.5 / w;
    for (std::size_t i = 1; i < h; ++i) CHECK(f[2 * px + i * w + j] == f[2 * px + j]);
    if (x < 0) CHECK(f[2 * px + j] < 0.0);
    if (x > 0) CHECK(f[2 * px + j] > 0.0);
  }
}

TEST_CASE("discrete divergence converges at second order") {
  for (double re : {100.0, 1000.0}) {
    const double e32 = max_interior_divergence(re, 32);
    const double e64 = max_interior_divergence(re, 64);
    const double e128 = max_interior_divergence(re, 128);
    CHECK(e64 / e32 == doctest::Approx(0.25).epsilon(0.15));
    CHECK(e128 / e64 == doctest::Approx(0.25).epsilon(0.1));
  }
}

TEST_CASE("fields vary continuously in Re") {
  double lip = 0.0;
  for (double re = 98.0; re <= 2000.0; re += 190.2) {
    const Tensor a = kovasznay_field(re, 16, 16), b = kovasznay_field(re + 1e-3, 16, 16);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    lip = std::max(lip, std::sqrt(d) / 1e-3);
  }
  CHECK(std::isfinite(lip));
  for (double re = 98.0; re <= 2000.0; re += 190.2) {
    const Tensor a = kovasznay_field(re, 16, 16), b = kovasznay_field(re + 1e-5, 16, 16);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::sqrt(d) <= 1.1 * lip * 1e-5 + 1e-12);
  }
}

TEST_CASE("noise-free generation equals the closed form") {
  FlowGenConfig cfg;
  cfg.n = 5;
  cfg.height = 8;
  cfg.width = 10;
  cfg.noise_frac = 0.0;
  cfg.seed = 3;
  const auto ds = generate(cfg);
  const auto clean = clean_fields(ds);
  for (std::size_t i = 0; i < ds.data.size(); ++i) CHECK(ds.data[i] == static_cast<float>(clean[i]));
  for (double s : ds.noise_sigma) CHECK(s == 0.0);
  for (double r : ds.re) {
    CHECK(r >= cfg.re_min);
    CHECK(r <= cfg.re_max);
  }
}

TEST_CASE("generation is deterministic and independent of thread count") {
  FlowGenConfig cfg;
  cfg.n = 12;
  cfg.height = cfg.width = 8;
  cfg.seed = 9;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = generate(cfg);
  omp_set_num_threads(3);
  const auto b = generate(cfg);
  omp_set_num_threads(saved);
  CHECK(a == b);
  CHECK(a.noise_sigma == b.noise_sigma);
  cfg.seed = 10;
  CHECK_FALSE(generate(cfg) == a);
}

TEST_CASE("noise level matches the recorded sigma") {
  FlowGenConfig cfg;
  cfg.n = 10000;
  cfg.height = cfg.width = 8;
  cfg.seed = 4;
  const auto ds = generate(cfg);
  const auto clean = clean_fields(ds);
  const std::size_t px = 64, p = 192;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double s = 0.0, s2 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < cfg.n; ++i)
      for (std::size_t q = 0; q < px; ++q) {
        const std::size_t at = i * p + ch * px + q;
        const double d = static_cast<double>(ds.data[at]) - clean[at];
        s += d;
        s2 += d * d;
        c2 += clean[at] * clean[at];
      }
    const double cnt = static_cast<double>(cfg.n * px);
    const double sd = std::sqrt(s2 / cnt - (s / cnt) * (s / cnt));
    CHECK(std::abs(sd - ds.noise_sigma[ch]) <= 0.02 * ds.noise_sigma[ch]);
    CHECK(ds.noise_sigma[ch] == doctest::Approx(0.15 * std::sqrt(c2 / cnt)).epsilon(1e-9));
  }
}

TEST_CASE("GMVF round trip and size") {
  FlowGenConfig cfg;
  cfg.n = 3;
  cfg.height = 5;
  cfg.width = 4;
  cfg.seed = 1;
  const auto ds = generate(cfg);
  const auto bytes = serialize_dataset(ds);
  CHECK(bytes.size() == 24 + 8 * 3 + 4 * 3 * 3 * 5 * 4);
  const auto back = deserialize_dataset(bytes);
  CHECK(back == ds);
  CHECK(serialize_dataset(back) == bytes);
  CHECK(std::isnan(back.noise_sigma[0]));

  const auto path = std::filesystem::temp_directory_path() / "gmvae_test_roundtrip.gmvf";
  save_dataset(path, ds);
  CHECK(std::filesystem::file_size(path) == bytes.size());
  CHECK(load_dataset(path) == ds);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(path), IoError);
}

TEST_CASE("GMVF parse errors") {
  FlowGenConfig cfg;
  cfg.n = 2;
  cfg.height = cfg.width = 3;
  const auto good = serialize_dataset(generate(cfg));

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(parse_error_kind(bad_magic) == FormatErrorKind::BadMagic);
  CHECK(parse_error_kind({}) == FormatErrorKind::BadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(parse_error_kind(bad_version) == FormatErrorKind::VersionMismatch);

  for (std::size_t cut : {6u, 20u, 30u, 100u}) {
    std::vector<std::uint8_t> trunc(good.begin(), good.begin() + cut);
    CHECK(parse_error_kind(trunc) == FormatErrorKind::Truncated);
  }
  std::vector<std::uint8_t> one_short(good.begin(), good.end() - 1);
  CHECK(parse_error_kind(one_short) == FormatErrorKind::Truncated);

  auto channels = good;
  channels[12] = 4;
  CHECK(parse_error_kind(channels) == FormatErrorKind::Malformed);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(parse_error_kind(trailing) == FormatErrorKind::Malformed);
}

TEST_CASE("empty dataset serializes to a bare header") {
  FlowDataset ds;
  ds.height = 4;
  ds.width = 4;
  const auto bytes = serialize_dataset(ds);
  CHECK(bytes.size() == 24);
  CHECK(deserialize_dataset(bytes) == ds);
}
