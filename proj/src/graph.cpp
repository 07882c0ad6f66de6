#include "ehwsn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ehwsn {

Graph Graph::from_edges(int n_nodes, std::vector<Edge> edges) {
  if (n_nodes <= 0) throw std::invalid_argument("graph needs at least one node");
  Graph g;
  g.n_nodes = n_nodes;
  g.weights = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (auto& e : edges) {
    if (e.a > e.b) std::swap(e.a, e.b);
    if (e.a < 0 || e.b >= n_nodes || e.a == e.b)
      throw std::invalid_argument("edge endpoints out of range");
    if (e.weight <= 0.0) throw std::invalid_argument("edge weight must be positive");
    g.weights(e.a, e.b) = e.weight;
    g.weights(e.b, e.a) = e.weight;
  }
  // Re-read the weights so duplicate edge entries collapse to the last one.
  g.edges.clear();
  for (int a = 0; a < n_nodes; ++a)
    for (int b = a + 1; b < n_nodes; ++b)
      if (g.weights(a, b) > 0.0) g.edges.push_back({a, b, g.weights(a, b)});
  g.degrees = g.weights.rowwise().sum();
  g.laplacian = Eigen::MatrixXd(g.degrees.asDiagonal());
  g.laplacian -= g.weights;
  return g;
}

Graph build_knn_graph(const std::vector<Eigen::Vector2d>& positions, int k,
                      double sigma2) {
  const int n = static_cast<int>(positions.size());
  if (k < 1 || k >= n) throw std::invalid_argument("knn k must be in [1, n-1]");
  if (sigma2 <= 0.0) throw std::invalid_argument("kernel bandwidth must be positive");

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> by_dist;
    by_dist.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      by_dist.emplace_back((positions[i] - positions[j]).norm(), j);
    }
    // sort on (distance, index) so equidistant neighbors resolve stably
    std::sort(by_dist.begin(), by_dist.end());
    for (int r = 0; r < k; ++r) {
      const auto& [dist, j] = by_dist[r];
      edges.push_back({i, j, std::exp(-dist / sigma2)});
    }
  }
  // from_edges symmetrizes: an edge is kept when either endpoint selected it
  return Graph::from_edges(n, std::move(edges));
}

double smoothness(const Eigen::VectorXd& x, const Graph& g) {
  return x.dot(g.laplacian * x);
}

GraphSpectrum eigendecompose(const Graph& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.laplacian);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("laplacian eigendecomposition failed");
  GraphSpectrum s;
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  // Fix each eigenvector's sign by its first entry of visible magnitude so
  // the basis does not depend on solver internals.
  for (int j = 0; j < s.eigenvectors.cols(); ++j) {
    for (int i = 0; i < s.eigenvectors.rows(); ++i) {
      const double v = s.eigenvectors(i, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) s.eigenvectors.col(j) = -s.eigenvectors.col(j);
        break;
      }
    }
  }
  return s;
}

Eigen::VectorXd gft(const GraphSpectrum& s, const Eigen::VectorXd& x) {
  return s.eigenvectors.transpose() * x;
}

GmrfModel GmrfModel::build(const Graph& g, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("precision shift must be positive");
  GmrfModel m;
  m.delta = delta;
  m.precision = g.laplacian;
  m.precision.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(m.precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gmrf precision is not positive definite");
  m.chol_lower = llt.matrixL();
  return m;
}

Eigen::VectorXd sample_gmrf(const GmrfModel& model, Rng& rng) {
  const int n = static_cast<int>(model.precision.rows());
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.normal();
  // precision = C C', so x = C'^-1 z has covariance (C C')^-1 = precision^-1
  return model.chol_lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

}  // namespace ehwsn
