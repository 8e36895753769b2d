#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gmvae/embedding.hpp"

namespace gmvae {

enum class ColorBy { Re, Cluster };

/// 8-colour categorical palette for cluster labels (label % 8).
inline constexpr std::array<const char*, 8> kClusterPalette = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7"};

/// Linear RGB ramp through #440154, #21918c, #fde725 for t in [0, 1].
std::array<std::uint8_t, 3> ramp_color(double t);

/// Standalone SVG scatter of (pc1, pc2): axes plus one <circle> per row.
/// Output bytes depend only on the table.
std::string render_scatter_svg(const EmbeddingTable& table, ColorBy color_by);

}  // namespace gmvae
