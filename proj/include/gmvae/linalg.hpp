#pragma once

#include <cstddef>
#include <vector>

#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

struct EigenDecomposition {
  Tensor eigenvalues;   // length n, ascending
  Tensor eigenvectors;  // n x n, column j pairs with eigenvalues[j]
};

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Eigenvalues come back ascending; equal eigenvalues keep the order of the
/// diagonal slot they converged in. Throws ContractError if `m` is not
/// square or not symmetric within `tol`, ConvergenceError after
/// kMaxJacobiSweeps sweeps without convergence.
EigenDecomposition sym_eig(const Tensor& m, double tol = 1e-10);

inline constexpr int kMaxJacobiSweeps = 100;

struct PcaResult {
  Tensor projected;           // N x out_dim
  Tensor components;          // D x out_dim, orthonormal columns
  Tensor explained_variance;  // out_dim, non-increasing (sample variance, N-1)
  Tensor mean;                // D
  bool rank_deficient = false;  // some returned component carries ~zero variance
};

/// Principal components of N x D points. Each component's largest-magnitude
/// entry is made positive so the result is deterministic.
PcaResult pca(const Tensor& points, std::size_t out_dim);

struct KMeansResult {
  Tensor centroids;                  // k x D
  std::vector<std::size_t> labels;   // N
  std::vector<double> inertia_trace; // total within-cluster squared distance per iteration
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// to the point farthest from its nearest centroid.
KMeansResult kmeans(const Tensor& points, std::size_t k, Rng& rng, int max_iter = 100);

}  // namespace gmvae
