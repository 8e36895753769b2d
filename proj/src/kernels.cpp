#include "gmvae/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace gmvae::kernels {
namespace {

// Row kernels shared by both variants; the per-element summation order is
// fixed by these loops alone.

constexpr std::size_t kRowBlock = 8;

// Rows [i0, i1) of A * B. Each output row still sums over p in increasing
// order, so blocking does not change any result bit.
inline void nn_block(const double* __restrict a, const double* __restrict b,
                     double* __restrict c, std::size_t i0, std::size_t i1, std::size_t k,
                     std::size_t n, bool accumulate) {
  if (!accumulate)
    for (std::size_t i = i0; i < i1; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = i0; i < i1; ++i) {
      const double av = a[i * k + p];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline void nt_row(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t i, std::size_t k,
                   std::size_t n, bool accumulate) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
    crow[j] = accumulate ? crow[j] + s : s;
  }
}

// Output row p of A^T B: sum over i of A[i,p] * B[i,:].
inline void tn_row(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t p, std::size_t m,
                   std::size_t k, std::size_t n, bool accumulate) {
  double* crow = c + p * n;
  if (!accumulate)
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double av = a[i * k + p];
    const double* brow = b + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

inline void dist_row(const double* __restrict x, double* __restrict d, std::size_t i, std::size_t n, std::size_t dim) {
  const double* xi = x + i * dim;
  for (std::size_t j = 0; j < n; ++j) {
    const double* xj = x + j * dim;
    double s = 0.0;
    for (std::size_t q = 0; q < dim; ++q) {
      const double diff = xi[q] - xj[q];
      s += diff * diff;
    }
    d[i * n + j] = s;
  }
}

}  // namespace

namespace serial {

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock)
    nn_block(a, b, c, i0, std::min(m, i0 + kRowBlock), k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) nt_row(a, b, c, i, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  for (std::size_t p = 0; p < k; ++p) tn_row(a, b, c, p, m, k, n, accumulate);
}

void pairwise_sq_dist(const double* x, double* d, std::size_t n, std::size_t dim) {
  for (std::size_t i = 0; i < n; ++i) dist_row(x, d, i, n, dim);
}

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  const auto blocks = static_cast<std::int64_t>((m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
    nn_block(a, b, c, i0, std::min(m, i0 + kRowBlock), k, n, accumulate);
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t i = 0; i < rows; ++i)
    nt_row(a, b, c, static_cast<std::size_t>(i), k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static) if (m * k * n > 32768)
  for (std::int64_t p = 0; p < rows; ++p)
    tn_row(a, b, c, static_cast<std::size_t>(p), m, k, n, accumulate);
}

void pairwise_sq_dist(const double* x, double* d, std::size_t n, std::size_t dim) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (n > 64)
  for (std::int64_t i = 0; i < rows; ++i) dist_row(x, d, static_cast<std::size_t>(i), n, dim);
}

}  // namespace parallel
}  // namespace gmvae::kernels
