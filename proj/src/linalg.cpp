#include "gmvae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmvae/error.hpp"
#include "gmvae/kernels.hpp"

namespace gmvae {

EigenDecomposition sym_eig(const Tensor& m, double tol) {
  require(m.rank() == 2 && m.rows() == m.cols() && m.rows() >= 1,
          "sym_eig: expected a non-empty square matrix, got " + m.shape_string());
  const std::size_t n = m.rows();
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      require(std::abs(m(i, j) - m(j, i)) <= tol * scale, "sym_eig: matrix is not symmetric");

  Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Tensor v({n, n});
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double frob2 = 0.0;
  for (double x : a.values()) frob2 += x * x;
  const double stop = frob2 * 1e-32;

  bool converged = n == 1;
  for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= stop || off == 0.0) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        // skip rotations that no longer move the diagonal
        const double g = 100.0 * std::abs(apq);
        if (std::abs(apq) < 1e-300 ||
            (sweep > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off > stop && off != 0.0)
      throw ConvergenceError("sym_eig: no convergence after " + std::to_string(kMaxJacobiSweeps) +
                             " Jacobi sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomposition out{Tensor({n}), Tensor({n, n})};
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, j) = v(r, order[j]);
  }
  return out;
}

PcaResult pca(const Tensor& points, std::size_t out_dim) {
  require(points.rank() == 2, "pca: expected N x D points");
  const std::size_t n = points.rows(), d = points.cols();
  require(n >= 2, "pca: need at least 2 points");
  require(out_dim >= 1 && out_dim <= std::min(n, d), "pca: out_dim must be in [1, min(N, D)]");

  PcaResult res;
  res.mean = Tensor({d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) res.mean[j] += points(i, j);
  for (std::size_t j = 0; j < d; ++j) res.mean[j] /= static_cast<double>(n);

  Tensor centered({n, d});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = points(i, j) - res.mean[j];

  Tensor cov({d, d});
  kernels::matmul_tn(centered.data(), centered.data(), cov.data(), n, d, d);
  for (double& c : cov.values()) c /= static_cast<double>(n - 1);

  const auto eig = sym_eig(cov, 1e-9);
  res.components = Tensor({d, out_dim});
  res.explained_variance = Tensor({out_dim});
  const double top = std::max(eig.eigenvalues[d - 1], 0.0);
  for (std::size_t j = 0; j < out_dim; ++j) {
    const std::size_t src = d - 1 - j;
    std::size_t arg = 0;
    for (std::size_t r = 1; r < d; ++r)
      if (std::abs(eig.eigenvectors(r, src)) > std::abs(eig.eigenvectors(arg, src))) arg = r;
    const double sign = eig.eigenvectors(arg, src) < 0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d; ++r) res.components(r, j) = sign * eig.eigenvectors(r, src);
    res.explained_variance[j] = std::max(eig.eigenvalues[src], 0.0);
    if (res.explained_variance[j] <= 1e-12 * std::max(top, 1e-300)) res.rank_deficient = true;
  }

  res.projected = Tensor({n, out_dim});
  kernels::matmul_nn(centered.data(), res.components.data(), res.projected.data(), n, d, out_dim);
  return res;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const Tensor& points, std::size_t k, Rng& rng, int max_iter) {
  require(points.rank() == 2, "kmeans: expected N x D points");
  const std::size_t n = points.rows(), d = points.cols();
  require(k >= 1 && n >= k, "kmeans: need 1 <= k <= N");
  require(max_iter >= 1, "kmeans: max_iter must be positive");

  KMeansResult res;
  res.centroids = Tensor({k, d});
  auto set_centroid = [&](std::size_t c, std::size_t i) {
    for (std::size_t j = 0; j < d; ++j) res.centroids(c, j) = points(i, j);
  };

  // k-means++ seeding
  set_centroid(0, static_cast<std::size_t>(rng.below(n)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points.row_span(i), res.centroids.row_span(c - 1)));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    set_centroid(c, pick);
  }

  res.labels.assign(n, k);
  std::vector<double> dist(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points.row_span(i), res.centroids.row_span(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double dc = sq_dist(points.row_span(i), res.centroids.row_span(c));
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (res.labels[i] != best) changed = true;
      res.labels[i] = best;
      dist[i] = best_d;
    }

    std::vector<std::size_t> counts(k, 0);
    for (auto l : res.labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[res.labels[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) continue;
      --counts[res.labels[far]];
      res.labels[far] = c;
      ++counts[c];
      dist[far] = 0.0;
      changed = true;
    }

    res.centroids.fill(0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) res.centroids(res.labels[i], j) += points(i, j);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j) res.centroids(c, j) /= static_cast<double>(counts[c]);

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += sq_dist(points.row_span(i), res.centroids.row_span(res.labels[i]));
    res.inertia_trace.push_back(inertia);
    res.inertia = inertia;
    if (!changed) break;
  }
  return res;
}

}  // namespace gmvae
