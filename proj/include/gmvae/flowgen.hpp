#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gmvae/tensor.hpp"

namespace gmvae {

inline constexpr std::size_t kFlowChannels = 3;  // u, v, p

/// Kovasznay decay rate lambda = Re/2 - sqrt(Re^2/4 + 4 pi^2).
double kovasznay_lambda(double re);

/// Exact Kovasznay solution sampled at cell centres of x in [-0.5, 1.0],
/// y in [-0.5, 1.5]. Returns a 3 x H x W tensor (u, v, p), rows indexed by y.
Tensor kovasznay_field(double re, std::size_t height, std::size_t width);

/// N samples of 3 x H x W fields stored as f32, plus per-sample Reynolds
/// numbers (NaN for unconditional samples).
struct FlowDataset {
  std::size_t height = 0, width = 0;
  std::vector<double> re;
  std::vector<float> data;  // n x 3 x H x W, row-major
  /// Noise standard deviation applied per channel; NaN when unknown.
  std::array<double, kFlowChannels> noise_sigma{};

  std::size_t size() const { return re.size(); }
  std::size_t sample_size() const { return kFlowChannels * height * width; }
  std::span<const float> sample(std::size_t i) const {
    return {data.data() + i * sample_size(), sample_size()};
  }
  /// Rows `indices` flattened to an N x P double matrix.
  Tensor matrix(std::span<const std::size_t> indices) const;
  Tensor matrix() const;

  /// Bitwise equality of grid, Re values and field data (noise_sigma is
  /// not part of the file format and is ignored).
  friend bool operator==(const FlowDataset& a, const FlowDataset& b);
};

struct FlowGenConfig {
  std::size_t n = 256;
  double re_min = 98.0;
  double re_max = 2000.0;
  std::size_t height = 32;
  std::size_t width = 32;
  double noise_frac = 0.15;
  std::uint64_t seed = 0;
};

/// Re ~ U[re_min, re_max] from child stream 0; Gaussian noise with
/// sigma_ch = noise_frac * (RMS of channel ch over the clean dataset),
/// drawn for sample i from child stream 1 + i.
FlowDataset generate(const FlowGenConfig& cfg);

/// Clean fields for the dataset's Reynolds numbers, same layout as `data`.
std::vector<double> clean_fields(const FlowDataset& ds);

// GMVF v1: "GMVF", u32 version, n, C, H, W, f64 re[n], f32 data[n][C][H][W].
inline constexpr std::uint32_t kGmvfVersion = 1;
std::vector<std::uint8_t> serialize_dataset(const FlowDataset& ds);
FlowDataset deserialize_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const std::filesystem::path& path, const FlowDataset& ds);
FlowDataset load_dataset(const std::filesystem::path& path);

}  // namespace gmvae
