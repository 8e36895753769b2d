#include "gmvae/flowgen.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numbers>

#include "gmvae/binio.hpp"
#include "gmvae/error.hpp"
#include "gmvae/rng.hpp"

namespace gmvae {
namespace {

constexpr double kPi = std::numbers::pi;

// Writes u, v, p for one Reynolds number into out[3 * H * W].
void fill_kovasznay(double re, std::size_t h, std::size_t w, double* out) {
  const double lambda = kovasznay_lambda(re);
  const std::size_t px = h * w;
  for (std::size_t i = 0; i < h; ++i) {
    const double y = -0.5 + (static_cast<double>(i) + 0.5) * 2.0 / static_cast<double>(h);
    const double cy = std::cos(2.0 * kPi * y), sy = std::sin(2.0 * kPi * y);
    for (std::size_t j = 0; j < w; ++j) {
      const double x = -0.5 + (static_cast<double>(j) + 0.5) * 1.5 / static_cast<double>(w);
      const double e = std::exp(lambda * x);
      const std::size_t at = i * w + j;
      out[at] = 1.0 - e * cy;
      out[px + at] = lambda / (2.0 * kPi) * e * sy;
      out[2 * px + at] = 0.5 * (1.0 - std::exp(2.0 * lambda * x));
    }
  }
}

}  // namespace

double kovasznay_lambda(double re) {
  return re / 2.0 - std::sqrt(re * re / 4.0 + 4.0 * kPi * kPi);
}

Tensor kovasznay_field(double re, std::size_t height, std::size_t width) {
  require(re > 0.0, "kovasznay_field: Re must be positive");
  require(height >= 2 && width >= 2, "kovasznay_field: grid must be at least 2 x 2");
  Tensor out({kFlowChannels, height, width});
  fill_kovasznay(re, height, width, out.data());
  return out;
}

bool operator==(const FlowDataset& a, const FlowDataset& b) {
  return a.height == b.height && a.width == b.width && a.re.size() == b.re.size() &&
         a.data.size() == b.data.size() &&
         std::memcmp(a.re.data(), b.re.data(), a.re.size() * sizeof(double)) == 0 &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

Tensor FlowDataset::matrix(std::span<const std::size_t> indices) const {
  const std::size_t p = sample_size();
  Tensor out({indices.size(), p});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    require(indices[r] < size(), "FlowDataset::matrix: index out of range");
    const auto s = sample(indices[r]);
    for (std::size_t j = 0; j < p; ++j) out(r, j) = s[j];
  }
  return out;
}

Tensor FlowDataset::matrix() const {
  std::vector<std::size_t> all(size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return matrix(all);
}

FlowDataset generate(const FlowGenConfig& cfg) {
  require(cfg.n >= 1, "generate: n must be >= 1");
  require(cfg.re_min < cfg.re_max && cfg.re_min > 0.0, "generate: need 0 < re_min < re_max");
  require(cfg.noise_frac >= 0.0, "generate: noise_frac must be non-negative");
  require(cfg.height >= 2 && cfg.width >= 2, "generate: grid must be at least 2 x 2");

  FlowDataset ds;
  ds.height = cfg.height;
  ds.width = cfg.width;
  const Rng root(cfg.seed);
  Rng re_stream = root.child(0);
  ds.re.resize(cfg.n);
  for (double& r : ds.re) r = re_stream.uniform(cfg.re_min, cfg.re_max);

  const std::size_t p = ds.sample_size(), px = cfg.height * cfg.width;
  const auto n = static_cast<std::int64_t>(cfg.n);

  // pass 1: per-sample channel sums of squares of the clean fields
  std::vector<double> sumsq(cfg.n * kFlowChannels, 0.0);
#pragma omp parallel
  {
    std::vector<double> field(p);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      fill_kovasznay(ds.re[s], cfg.height, cfg.width, field.data());
      for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
        double acc = 0.0;
        for (std::size_t q = 0; q < px; ++q) acc += field[ch * px + q] * field[ch * px + q];
        sumsq[s * kFlowChannels + ch] = acc;
      }
    }
  }
  for (std::size_t ch = 0; ch < kFlowChannels; ++ch) {
    double acc = 0.0;
    for (std::size_t s = 0; s < cfg.n; ++s) acc += sumsq[s * kFlowChannels + ch];
    const double rms = std::sqrt(acc / static_cast<double>(cfg.n * px));
    ds.noise_sigma[ch] = cfg.noise_frac * rms;
  }

  // pass 2: regenerate, add noise from the sample's own stream, store as f32
  ds.data.resize(cfg.n * p);
#pragma omp parallel
  {
    std::vector<double> field(p);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(i);
      fill_kovasznay(ds.re[s], cfg.height, cfg.width, field.data());
      float* dst = ds.data.data() + s * p;
      if (cfg.noise_frac == 0.0) {
        for (std::size_t q = 0; q < p; ++q) dst[q] = static_cast<float>(field[q]);
        continue;
      }
      Rng noise = root.child(1 + static_cast<std::uint64_t>(s));
      for (std::size_t ch = 0; ch < kFlowChannels; ++ch)
        for (std::size_t q = 0; q < px; ++q)
          dst[ch * px + q] =
              static_cast<float>(field[ch * px + q] + ds.noise_sigma[ch] * noise.normal());
    }
  }
  return ds;
}

std::vector<double> clean_fields(const FlowDataset& ds) {
  const std::size_t p = ds.sample_size();
  std::vector<double> out(ds.size() * p);
  for (std::size_t i = 0; i < ds.size(); ++i)
    fill_kovasznay(ds.re[i], ds.height, ds.width, out.data() + i * p);
  return out;
}

std::vector<std::uint8_t> serialize_dataset(const FlowDataset& ds) {
  require(ds.data.size() == ds.size() * ds.sample_size(), "serialize_dataset: inconsistent sizes");
  binio::Writer w;
  w.bytes("GMVF");
  w.u32(kGmvfVersion);
  w.u32(static_cast<std::uint32_t>(ds.size()));
  w.u32(static_cast<std::uint32_t>(kFlowChannels));
  w.u32(static_cast<std::uint32_t>(ds.height));
  w.u32(static_cast<std::uint32_t>(ds.width));
  for (double r : ds.re) w.f64(r);
  for (float v : ds.data) w.f32(v);
  return std::move(w.buffer());
}

FlowDataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes, "GMVF");
  if (r.remaining() < 4 || r.bytes(4) != "GMVF")
    throw FormatError(FormatErrorKind::BadMagic, "GMVF: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kGmvfVersion)
    throw FormatError(FormatErrorKind::VersionMismatch,
                      "GMVF: unsupported version " + std::to_string(version));
  const std::uint32_t n = r.u32(), c = r.u32(), h = r.u32(), w = r.u32();
  if (c != kFlowChannels)
    throw FormatError(FormatErrorKind::Malformed, "GMVF: expected 3 channels, got " + std::to_string(c));
  FlowDataset ds;
  ds.height = h;
  ds.width = w;
  ds.noise_sigma.fill(std::numeric_limits<double>::quiet_NaN());
  const std::uint64_t values = std::uint64_t{n} * c * h * w;
  r.need(static_cast<std::size_t>(8ULL * n + 4ULL * values));
  ds.re.resize(n);
  for (double& v : ds.re) v = r.f64();
  ds.data.resize(static_cast<std::size_t>(values));
  for (float& v : ds.data) v = r.f32();
  if (r.remaining() != 0)
    throw FormatError(FormatErrorKind::Malformed, "GMVF: trailing bytes after payload");
  return ds;
}

void save_dataset(const std::filesystem::path& path, const FlowDataset& ds) {
  binio::write_file(path, serialize_dataset(ds));
}

FlowDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(binio::read_file(path));
}

}  // namespace gmvae
