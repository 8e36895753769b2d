#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "gmvae/linalg.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

/// Union-symmetrized k-nearest-neighbour graph, stored as sorted adjacency
/// lists (0/1 weights, no self-loops).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> neighbors;

  bool has_edge(std::size_t i, std::size_t j) const;
  std::size_t edge_count() const;
  Tensor adjacency() const;
};

/// Euclidean k-NN on N x d points (self excluded, distance ties to the lower
/// index), then an edge is kept if it appears in either direction.
KnnGraph knn_graph(const Tensor& points, std::size_t k);

enum class LaplacianKind {
  Unnormalized,          // L = D - W
  SymmetricNormalized,   // I - D^-1/2 W D^-1/2
};

Tensor laplacian(const KnnGraph& g, LaplacianKind kind = LaplacianKind::Unnormalized);

/// Eigenbasis of a point cloud's k-NN graph Laplacian; reusable across signals.
struct SpectralBasis {
  KnnGraph graph;
  EigenDecomposition eig;
};

SpectralBasis spectral_basis(const Tensor& points, std::size_t k,
                             LaplacianKind kind = LaplacianKind::Unnormalized);

struct SpectralReport {
  std::vector<double> eigenvalues;      // ascending
  std::vector<double> energy_per_mode;  // <u_j, f - mean f>^2 / |f - mean f|^2
  double score = 1.0;                   // energy in the m smoothest modes
  std::size_t m = 0;
  std::size_t k = 0;
  double alpha = 0.0;
};

/// Mode count for a given alpha: ceil(alpha * N), grown to cover the whole
/// eigenspace of the last included eigenvalue (ties within 1e-9).
std::size_t smooth_mode_count(std::span<const double> eigenvalues, double alpha);

/// Score a signal against a precomputed basis. A constant signal scores 1.
SpectralReport score_signal(const SpectralBasis& basis, std::span<const double> f, double alpha);

/// k-NN graph -> Laplacian -> eigenmodes -> fraction of the centred signal's
/// energy in the smoothest ceil(alpha N) modes.
SpectralReport smoothness_score(const Tensor& points, std::span<const double> f, std::size_t k,
                                double alpha);

/// smoothness_score on the 2-D PCA projection of latent embeddings.
SpectralReport interpretability_of_embedding(const Tensor& embeddings, std::span<const double> f,
                                             std::size_t k = 10, double alpha = 0.05);

/// Scores of `shuffles` random permutations of f against the same basis.
std::vector<double> permutation_null(const SpectralBasis& basis, std::span<const double> f,
                                     double alpha, std::size_t shuffles, std::uint64_t seed);

/// "mode,eigenvalue,energy" rows.
void write_report_csv(std::ostream& os, const SpectralReport& report);
/// One line: score=... m=... k=... alpha=...
void write_report_summary(std::ostream& os, const SpectralReport& report);

}  // namespace gmvae
