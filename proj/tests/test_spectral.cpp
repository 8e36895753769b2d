#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gmvae/error.hpp"
#include "gmvae/linalg.hpp"
#include "gmvae/spectral.hpp"
#include "helpers.hpp"

using namespace gmvae;
using testutil::random_matrix;

namespace {

Tensor line_points(std::size_t n) {
  Tensor p({n, 2});
  for (std::size_t i = 0; i < n; ++i) p(i, 0) = static_cast<double>(i);
  return p;
}

// O(N^2) neighbour lists: sort all other points by (distance, index).
std::vector<std::vector<bool>> brute_knn(const Tensor& pts, std::size_t k) {
  const std::size_t n = pts.rows();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = pts(i, 0) - pts(j, 0), dy = pts(i, 1) - pts(j, 1);
      cand.push_back({dx * dx + dy * dy, j});
    }
    std::sort(cand.begin(), cand.end());
    for (std::size_t q = 0; q < k; ++q) adj[i][cand[q].second] = adj[cand[q].second][i] = true;
  }
  return adj;
}

Tensor transform(const Tensor& pts, double angle, double scale, double tx, double ty) {
  Tensor out(pts.shape());
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    out(i, 0) = scale * (c * pts(i, 0) - s * pts(i, 1)) + tx;
    out(i, 1) = scale * (s * pts(i, 0) + c * pts(i, 1)) + ty;
  }
  return out;
}

std::vector<double> random_signal(std::size_t n, Rng& rng) {
  std::vector<double> f(n);
  for (auto& v : f) v = rng.normal();
  return f;
}

}  // namespace

TEST_CASE("knn graph on three collinear points") {
  auto g = knn_graph(line_points(3), 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK(g.edge_count() == 2);
}

TEST_CASE("knn graph with k = N-1 is complete") {
  Rng rng(1);
  auto g = knn_graph(random_matrix(6, 2, rng), 5);
  CHECK(g.edge_count() == 15);
}

TEST_CASE("knn graph matches a brute-force neighbour oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto pts = random_matrix(10, 2, rng);
    auto g = knn_graph(pts, 3);
    auto ref = brute_knn(pts, 3);
    auto adj = g.adjacency();
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(adj(i, i) == 0.0);
      for (std::size_t j = 0; j < 10; ++j) {
        CHECK(adj(i, j) == (ref[i][j] ? 1.0 : 0.0));
        CHECK(adj(i, j) == adj(j, i));
      }
      CHECK(g.neighbors[i].size() >= 3);
    }
  }
}

TEST_CASE("duplicate points break ties by index") {
  Tensor pts({4, 2}, 0.0);
  auto g = knn_graph(pts, 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK(g.has_edge(2, 0));
  CHECK(g.has_edge(3, 0));
  CHECK_FALSE(g.has_edge(2, 3));
  CHECK_THROWS_AS(knn_graph(pts, 4), ContractError);
  CHECK_THROWS_AS(knn_graph(pts, 0), ContractError);
}

TEST_CASE("laplacian examples") {
  auto l = laplacian(knn_graph(line_points(3), 1));
  CHECK(l == Tensor::matrix(3, 3, {1, -1, 0, -1, 2, -1, 0, -1, 1}));
  Rng rng(3);
  auto k3 = laplacian(knn_graph(random_matrix(3, 2, rng), 2));
  CHECK(k3 == Tensor::matrix(3, 3, {2, -1, -1, -1, 2, -1, -1, -1, 2}));
}

TEST_CASE("laplacian quadratic form equals the edge sum") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = knn_graph(random_matrix(25, 2, rng), 4);
    auto l = laplacian(g);
    auto x = random_signal(25, rng);
    double q = 0.0, edges = 0.0;
    for (std::size_t i = 0; i < 25; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 25; ++j) {
        q += x[i] * l(i, j) * x[j];
        row += l(i, j);
        if (j > i && g.has_edge(i, j)) edges += (x[i] - x[j]) * (x[i] - x[j]);
      }
      CHECK(row == 0.0);
    }
    CHECK(std::abs(q - edges) <= 1e-10);
    auto e = sym_eig(l);
    CHECK(e.eigenvalues[0] >= -1e-10);
  }
}

TEST_CASE("normalized laplacian has a unit diagonal") {
  Rng rng(5);
  auto l = laplacian(knn_graph(random_matrix(12, 2, rng), 3), LaplacianKind::SymmetricNormalized);
  for (std::size_t i = 0; i < 12; ++i) CHECK(l(i, i) == doctest::Approx(1.0));
  CHECK(sym_eig(l).eigenvalues[0] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("smoothness score trivial cases") {
  Rng rng(6);
  auto pts = random_matrix(20, 2, rng);
  std::vector<double> constant(20, 3.5);
  CHECK(smoothness_score(pts, constant, 4, 0.05).score == 1.0);
  auto f = random_signal(20, rng);
  CHECK(smoothness_score(pts, f, 4, 1.0).score == 1.0);
  CHECK_THROWS_AS(smoothness_score(pts, f, 4, 0.0), ContractError);
  CHECK_THROWS_AS(smoothness_score(pts, f, 4, 1.5), ContractError);
  CHECK_THROWS_AS(smoothness_score(pts, f, 20, 0.5), ContractError);
}

TEST_CASE("single-mode signal on a path graph") {
  auto pts = line_points(8);
  auto basis = spectral_basis(pts, 1);
  std::vector<double> u1(8);
  for (std::size_t i = 0; i < 8; ++i) u1[i] = basis.eig.eigenvectors(i, 1);
  auto rep = score_signal(basis, u1, 0.25);
  CHECK(rep.m == 2);
  CHECK(rep.score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("P4 path graph, equal mix of modes 1 and 3, alpha 0.5") {
  // P4 Laplacian eigenvectors: u_j(i) = cos(pi j (i + 1/2) / 4), eigenvalue 2 - 2 cos(pi j / 4)
  std::vector<double> f(4, 0.0);
  for (std::size_t j : {1u, 3u}) {
    double norm = 0.0;
    std::vector<double> u(4);
    for (std::size_t i = 0; i < 4; ++i) {
      u[i] = std::cos(std::numbers::pi * j * (i + 0.5) / 4.0);
      norm += u[i] * u[i];
    }
    for (std::size_t i = 0; i < 4; ++i) f[i] += u[i] / std::sqrt(norm);
  }
  auto rep = smoothness_score(line_points(4), f, 1, 0.5);
  CHECK(rep.m == 2);
  CHECK(std::abs(rep.score - 0.5) <= 1e-9);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::abs(rep.eigenvalues[j] - (2.0 - 2.0 * std::cos(std::numbers::pi * j / 4.0))) < 1e-12);
  CHECK(std::abs(rep.energy_per_mode[1] - 0.5) <= 1e-9);
  CHECK(std::abs(rep.energy_per_mode[3] - 0.5) <= 1e-9);
}

TEST_CASE("tied eigenvalues are included as a whole eigenspace") {
  // regular octagon with k=2 is the cycle C8: eigenvalues 2 - 2cos(2 pi j / 8), paired
  Tensor pts({8, 2});
  for (std::size_t i = 0; i < 8; ++i) {
    pts(i, 0) = std::cos(2 * std::numbers::pi * i / 8.0);
    pts(i, 1) = std::sin(2 * std::numbers::pi * i / 8.0);
  }
  Rng rng(7);
  auto rep = smoothness_score(pts, random_signal(8, rng), 2, 0.25);
  CHECK(rep.m == 3);
  std::vector<double> eig{0.0, 1.0, 1.0 + 1e-12, 2.0};
  CHECK(smooth_mode_count(eig, 0.5) == 3);
  CHECK(smooth_mode_count(eig, 0.25) == 1);
}

TEST_CASE("score invariances") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto pts = random_matrix(40, 2, rng);
    auto f = random_signal(40, rng);
    const double base = smoothness_score(pts, f, 5, 0.1).score;
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
    auto moved = transform(pts, 0.7 + trial, 2.5, -3.0, 11.0);
    CHECK(knn_graph(moved, 5).neighbors == knn_graph(pts, 5).neighbors);
    CHECK(std::abs(smoothness_score(moved, f, 5, 0.1).score - base) <= 1e-9);

    std::vector<double> g(40);
    for (std::size_t i = 0; i < 40; ++i) g[i] = -3.0 * f[i] + 7.0;
    CHECK(std::abs(smoothness_score(pts, g, 5, 0.1).score - base) <= 1e-12);

    double prev = 0.0;
    for (double alpha : {0.02, 0.05, 0.1, 0.2, 0.5, 0.8, 1.0}) {
      const double s = smoothness_score(pts, f, 5, alpha).score;
      CHECK(s >= prev - 1e-12);
      prev = s;
    }

    auto rep = smoothness_score(pts, f, 5, 0.1);
    CHECK(std::abs(std::accumulate(rep.energy_per_mode.begin(), rep.energy_per_mode.end(), 0.0) -
                   1.0) <= 1e-9);
  }
}

TEST_CASE("interpretability of a 2-D embedding ignores the PCA rotation") {
  Rng rng(9);
  auto emb = random_matrix(30, 2, rng);
  auto f = random_signal(30, rng);
  auto direct = smoothness_score(emb, f, 5, 0.1);
  auto via = interpretability_of_embedding(emb, f, 5, 0.1);
  CHECK(std::abs(direct.score - via.score) <= 1e-9);
}

TEST_CASE("interpretability composes pca, knn and the score") {
  Rng rng(10);
  auto emb = random_matrix(12, 4, rng);
  auto f = random_signal(12, rng);
  auto manual = smoothness_score(pca(emb, 2).projected, f, 3, 0.25);
  auto via = interpretability_of_embedding(emb, f, 3, 0.25);
  CHECK(manual.score == via.score);
  CHECK(manual.energy_per_mode == via.energy_per_mode);
}

TEST_CASE("smooth quantity on a dense line beats shuffled copies") {
  Rng rng(11);
  Tensor emb({200, 3});
  for (std::size_t i = 0; i < 200; ++i) {
    const double t = static_cast<double>(i) / 199.0;
    emb(i, 0) = 3.0 * t;
    emb(i, 1) = 1.0 * t + 0.01 * rng.normal();
    emb(i, 2) = 0.01 * rng.normal();
  }
  const auto pc = pca(emb, 2).projected;
  std::vector<double> f(200);
  for (std::size_t i = 0; i < 200; ++i) f[i] = pc(i, 0);
  auto basis = spectral_basis(pc, 10);
  const double s = score_signal(basis, f, 0.05).score;
  CHECK(s == interpretability_of_embedding(emb, f, 10, 0.05).score);
  auto null = permutation_null(basis, f, 0.05, 100, 12);
  REQUIRE(null.size() == 100);
  for (double v : null) CHECK(v <= s);
  CHECK(permutation_null(basis, f, 0.05, 100, 12) == null);
}

TEST_CASE("report output") {
  auto rep = smoothness_score(line_points(4), std::vector<double>{0, 1, 2, 3}, 1, 0.5);
  std::ostringstream csv, summary;
  write_report_csv(csv, rep);
  write_report_summary(summary, rep);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "mode,eigenvalue,energy");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  CHECK(summary.str().find("m=2 k=1 alpha=0.5") != std::string::npos);
}
