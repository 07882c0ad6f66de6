#include "ehwsn/graph.hpp"

#include <cmath>

#include "doctest.h"
#include "ehwsn/rng.hpp"

using namespace ehwsn;

namespace {

// small random geometric instance for property checks
Graph random_graph(Rng& rng, int n, int k, double sigma2) {
  std::vector<Eigen::Vector2d> pos(n);
  for (auto& p : pos) p = {10.0 * rng.uniform(), 10.0 * rng.uniform()};
  return build_knn_graph(pos, k, sigma2);
}

}  // namespace

TEST_CASE("from_edges builds W, D and L consistently") {
  const Graph g = Graph::from_edges(3, {{0, 1, 2.0}, {1, 2, 0.5}});
  CHECK(g.weights(0, 1) == 2.0);
  CHECK(g.weights(1, 0) == 2.0);
  CHECK(g.weights(0, 2) == 0.0);
  CHECK(g.degrees(1) == doctest::Approx(2.5));
  CHECK(g.laplacian(1, 1) == doctest::Approx(2.5));
  CHECK(g.laplacian(0, 1) == doctest::Approx(-2.0));
  // rows of any Laplacian sum to zero
  CHECK((g.laplacian.rowwise().sum()).lpNorm<Eigen::Infinity>() ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 1, -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(Graph::from_edges(2, {{0, 2, 1.0}}), std::invalid_argument);
}

TEST_CASE("knn on three collinear points links the chain with kernel weights") {
  // nodes at 0, 1, 2 on a line; k = 1 sends the ends to the middle and the
  // middle to the nearer end, so the union is the path graph
  const std::vector<Eigen::Vector2d> pos = {{0, 0}, {1, 0}, {2, 0}};
  const Graph g = build_knn_graph(pos, 1, 1.0);
  REQUIRE(g.edges.size() == 2);
  CHECK(g.weights(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(g.weights(1, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(g.weights(0, 2) == 0.0);
}

TEST_CASE("knn ties resolve by node index") {
  // unit square, k = 2: nodes 1 and 2 are both at distance 1 from node 0
  // while the diagonal is longer, so only the square's sides appear
  const std::vector<Eigen::Vector2d> pos = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const Graph g = build_knn_graph(pos, 2, 1.0);
  CHECK(g.edges.size() == 4);
  CHECK(g.weights(0, 3) == 0.0);
  CHECK(g.weights(1, 2) == 0.0);
}

TEST_CASE("two-node graph has spectrum {0, 2w}") {
  const Graph g = Graph::from_edges(2, {{0, 1, 1.0}});
  const GraphSpectrum s = eigendecompose(g);
  CHECK(s.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.eigenvalues(1) == doctest::Approx(2.0).epsilon(1e-12));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(s.eigenvectors(0, 0) == doctest::Approx(r));
  CHECK(s.eigenvectors(1, 0) == doctest::Approx(r));
  // sign convention: first nonzero entry of each eigenvector is positive
  CHECK(s.eigenvectors(0, 1) == doctest::Approx(r));
  CHECK(s.eigenvectors(1, 1) == doctest::Approx(-r));
}

TEST_CASE("smoothness equals the weighted difference form and the spectral form") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform() * 8);
    const int k = 1 + static_cast<int>(rng.uniform() * (n - 1));
    const Graph g = random_graph(rng, n, k, 2.0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();

    double by_edges = 0.0;
    for (const Edge& e : g.edges)
      by_edges += e.weight * (x(e.a) - x(e.b)) * (x(e.a) - x(e.b));

    const GraphSpectrum s = eigendecompose(g);
    const Eigen::VectorXd alpha = gft(s, x);
    const double by_spectrum = (s.eigenvalues.array() * alpha.array().square()).sum();

    const double q = smoothness(x, g);
    CHECK(q == doctest::Approx(by_edges).epsilon(1e-10));
    CHECK(q == doctest::Approx(by_spectrum).epsilon(1e-8));
    CHECK(q >= -1e-12);  // Laplacian quadratic forms are nonnegative
  }
}

TEST_CASE("eigendecomposition is orthonormal and reconstructs L") {
  Rng rng(7);
  const Graph g = random_graph(rng, 12, 3, 5.0);
  const GraphSpectrum s = eigendecompose(g);
  const int n = g.n_nodes;
  CHECK((s.eigenvectors.transpose() * s.eigenvectors -
         Eigen::MatrixXd::Identity(n, n))
            .lpNorm<Eigen::Infinity>() < 1e-10);
  const Eigen::MatrixXd rebuilt = s.eigenvectors *
                                  s.eigenvalues.asDiagonal() *
                                  s.eigenvectors.transpose();
  CHECK((rebuilt - g.laplacian).lpNorm<Eigen::Infinity>() < 1e-9);
  // ascending order with a zero leading eigenvalue
  for (int i = 1; i < n; ++i) CHECK(s.eigenvalues(i) >= s.eigenvalues(i - 1));
  CHECK(std::abs(s.eigenvalues(0)) < 1e-10);
}

TEST_CASE("gft round trip") {
  Rng rng(11);
  const Graph g = random_graph(rng, 8, 2, 1.0);
  const GraphSpectrum s = eigendecompose(g);
  Eigen::VectorXd x(8);
  for (int i = 0; i < 8; ++i) x(i) = rng.normal();
  const Eigen::VectorXd back = s.eigenvectors * gft(s, x);
  CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gmrf model factors the shifted Laplacian") {
  Rng rng(3);
  const Graph g = random_graph(rng, 10, 3, 4.0);
  const GmrfModel m = GmrfModel::build(g, 0.01);
  CHECK((m.precision - g.laplacian -
         0.01 * Eigen::MatrixXd::Identity(10, 10))
            .lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((m.chol_lower * m.chol_lower.transpose() - m.precision)
            .lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK_THROWS_AS(GmrfModel::build(g, 0.0), std::invalid_argument);
}

TEST_CASE("gmrf samples are deterministic per seed and match the covariance") {
  const std::vector<Eigen::Vector2d> pos = {{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const Graph g = build_knn_graph(pos, 2, 2.0);
  const GmrfModel m = GmrfModel::build(g, 0.05);

  Rng a(99), b(99);
  CHECK((sample_gmrf(m, a) - sample_gmrf(m, b)).lpNorm<Eigen::Infinity>() == 0.0);

  // empirical second moments against the model covariance, 3 sigma slack
  const int trials = 20000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  Rng rng(123);
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd x = sample_gmrf(m, rng);
    acc += x * x.transpose();
  }
  acc /= trials;
  const Eigen::MatrixXd cov = m.precision.inverse();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      // var of a product moment is bounded by second moments; crude but safe
      const double se = 3.0 * std::sqrt((cov(i, i) * cov(j, j) +
                                         cov(i, j) * cov(i, j)) /
                                        trials);
      CHECK(std::abs(acc(i, j) - cov(i, j)) < se + 1e-12);
    }
  }
}

TEST_CASE("knn input validation") {
  const std::vector<Eigen::Vector2d> pos = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(build_knn_graph(pos, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(pos, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(pos, 1, 0.0), std::invalid_argument);
}
