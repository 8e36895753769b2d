#include "gmvae/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gmvae/error.hpp"
#include "gmvae/kernels.hpp"
#include "gmvae/rng.hpp"

namespace gmvae {

bool KnnGraph::has_edge(std::size_t i, std::size_t j) const {
  const auto& nb = neighbors.at(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t KnnGraph::edge_count() const {
  std::size_t deg = 0;
  for (const auto& nb : neighbors) deg += nb.size();
  return deg / 2;
}

Tensor KnnGraph::adjacency() const {
  Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : neighbors[i]) w(i, j) = 1.0;
  return w;
}

KnnGraph knn_graph(const Tensor& points, std::size_t k) {
  require(points.rank() == 2, "knn_graph: expected N x d points");
  const std::size_t n = points.rows();
  require(k >= 1 && n > k, "knn_graph: need N > k >= 1");

  std::vector<double> dist(n * n);
  kernels::pairwise_sq_dist(points.data(), dist.data(), n, points.cols());

  KnnGraph g{n, k, std::vector<std::vector<std::size_t>>(n)};
  std::vector<std::size_t> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand[w++] = j;
    const double* row = dist.data() + i * n;
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      [row](std::size_t a, std::size_t b) {
                        return row[a] < row[b] || (row[a] == row[b] && a < b);
                      });
    for (std::size_t q = 0; q < k; ++q) {
      g.neighbors[i].push_back(cand[q]);
      g.neighbors[cand[q]].push_back(i);
    }
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

Tensor laplacian(const KnnGraph& g, LaplacianKind kind) {
  Tensor l({g.n, g.n});
  if (kind == LaplacianKind::Unnormalized) {
    for (std::size_t i = 0; i < g.n; ++i) {
      l(i, i) = static_cast<double>(g.neighbors[i].size());
      for (auto j : g.neighbors[i]) l(i, j) = -1.0;
    }
    return l;
  }
  for (std::size_t i = 0; i < g.n; ++i) {
    const double di = static_cast<double>(g.neighbors[i].size());
    l(i, i) = di > 0 ? 1.0 : 0.0;
    for (auto j : g.neighbors[i])
      l(i, j) = -1.0 / std::sqrt(di * static_cast<double>(g.neighbors[j].size()));
  }
  return l;
}

SpectralBasis spectral_basis(const Tensor& points, std::size_t k, LaplacianKind kind) {
  SpectralBasis b{knn_graph(points, k), {}};
  b.eig = sym_eig(laplacian(b.graph, kind), 1e-12);
  return b;
}

std::size_t smooth_mode_count(std::span<const double> eigenvalues, double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "smoothness score: alpha must be in (0, 1]");
  const std::size_t n = eigenvalues.size();
  auto m = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  while (m < n && std::abs(eigenvalues[m] - eigenvalues[m - 1]) <= 1e-9) ++m;
  return m;
}

SpectralReport score_signal(const SpectralBasis& basis, std::span<const double> f, double alpha) {
  const std::size_t n = basis.graph.n;
  require(f.size() == n, "smoothness score: signal length must equal the number of points");
  SpectralReport rep;
  rep.k = basis.graph.k;
  rep.alpha = alpha;
  rep.eigenvalues.assign(basis.eig.eigenvalues.values().begin(),
                         basis.eig.eigenvalues.values().end());
  rep.m = smooth_mode_count(rep.eigenvalues, alpha);
  rep.energy_per_mode.assign(n, 0.0);

  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centred[i] = f[i] - mean;
    norm2 += centred[i] * centred[i];
  }
  if (norm2 == 0.0) {
    rep.score = 1.0;
    return rep;
  }
  const Tensor& u = basis.eig.eigenvectors;
  for (std::size_t j = 0; j < n; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += u(i, j) * centred[i];
    rep.energy_per_mode[j] = dot * dot / norm2;
  }
  if (rep.m == n) {
    rep.score = 1.0;  // complete orthonormal basis
    return rep;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < rep.m; ++j) s += rep.energy_per_mode[j];
  rep.score = std::clamp(s, 0.0, 1.0);
  return rep;
}

SpectralReport smoothness_score(const Tensor& points, std::span<const double> f, std::size_t k,
                                double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "smoothness_score: alpha must be in (0, 1]");
  require(points.rank() == 2 && points.rows() > k,
          "smoothness_score: need more points than neighbours");
  return score_signal(spectral_basis(points, k), f, alpha);
}

SpectralReport interpretability_of_embedding(const Tensor& embeddings, std::span<const double> f,
                                             std::size_t k, double alpha) {
  require(embeddings.rank() == 2 && embeddings.rows() > k,
          "interpretability_of_embedding: need more points than neighbours");
  return smoothness_score(pca(embeddings, 2).projected, f, k, alpha);
}

std::vector<double> permutation_null(const SpectralBasis& basis, std::span<const double> f,
                                     double alpha, std::size_t shuffles, std::uint64_t seed) {
  std::vector<double> perm(f.begin(), f.end());
  std::vector<double> scores;
  scores.reserve(shuffles);
  const Rng root(seed);
  for (std::size_t s = 0; s < shuffles; ++s) {
    Rng rng = root.child(s);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    scores.push_back(score_signal(basis, perm, alpha).score);
  }
  return scores;
}

void write_report_csv(std::ostream& os, const SpectralReport& report) {
  const auto old = os.precision(17);
  os << "mode,eigenvalue,energy\n";
  for (std::size_t j = 0; j < report.eigenvalues.size(); ++j)
    os << j << ',' << report.eigenvalues[j] << ',' << report.energy_per_mode[j] << '\n';
  os.precision(old);
}

void write_report_summary(std::ostream& os, const SpectralReport& report) {
  os << "score=" << report.score << " m=" << report.m << " k=" << report.k
     << " alpha=" << report.alpha << '\n';
}

}  // namespace gmvae
