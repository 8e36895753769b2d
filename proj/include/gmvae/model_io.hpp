#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmvae/condgen.hpp"
#include "gmvae/model.hpp"

namespace gmvae {

// GMVM v1, little-endian:
//   "GMVM", u32 version, u32 section count, then per section
//   u32 name length, name bytes, u32 rank, u32 extents[rank], f32 data[].
// Sections: encoder.*, decoder.*, gmm.{pi_logits,mu,sigma2}, optional
// data.{layout,mean,std} for field models and cond.* for a conditional MLP.
inline constexpr std::uint32_t kGmvmVersion = 1;

struct LoadedModel {
  GmvaeModel model;
  std::optional<CondMlp> cond;
};

std::vector<std::uint8_t> serialize_model(const GmvaeModel& model, const CondMlp* cond = nullptr);
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const GmvaeModel& model,
                const CondMlp* cond = nullptr);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace gmvae
