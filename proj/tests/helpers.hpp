#pragma once

#include <cmath>
#include <vector>

#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace testutil {

inline gmvae::Tensor random_matrix(std::size_t r, std::size_t c, gmvae::Rng& rng, double lo = -1.0,
                                   double hi = 1.0) {
  gmvae::Tensor t({r, c});
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline gmvae::Tensor random_symmetric(std::size_t n, gmvae::Rng& rng) {
  gmvae::Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) t(i, j) = t(j, i) = rng.uniform(-1.0, 1.0);
  return t;
}

// Plain triple loop.
inline gmvae::Tensor naive_matmul(const gmvae::Tensor& a, const gmvae::Tensor& b) {
  gmvae::Tensor c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

inline double rel_err(double a, double b, double abs_floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), abs_floor});
}

}  // namespace testutil
