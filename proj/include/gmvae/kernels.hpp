#pragma once

#include <cstddef>

namespace gmvae::kernels {

// Dense kernels on raw row-major buffers. Every kernel has a serial
// reference and an OpenMP version; the OpenMP versions split work over
// output rows only, so each output element is reduced in the same order
// and the two are bit-identical for any thread count.
//
//   matmul_nn: C[m,n]  = A[m,k]  * B[k,n]
//   matmul_nt: C[m,n]  = A[m,k]  * B[n,k]^T
//   matmul_tn: C[k,n]  = A[m,k]^T * B[m,n]
//   pairwise_sq_dist: D[i,j] = |X_i - X_j|^2 for X[n,d]
//
// With accumulate=true the product is added into C instead of overwriting.

namespace serial {
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void pairwise_sq_dist(const double* x, double* d, std::size_t n, std::size_t dim);
}  // namespace serial

namespace parallel {
void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
               std::size_t n, bool accumulate = false);
void pairwise_sq_dist(const double* x, double* d, std::size_t n, std::size_t dim);
}  // namespace parallel

using parallel::matmul_nn;
using parallel::matmul_nt;
using parallel::matmul_tn;
using parallel::pairwise_sq_dist;

}  // namespace gmvae::kernels
