// Correlation graph over sensor positions: KNN construction, Laplacian,
// spectrum, smoothness quadratic form, and GMRF signal sampling.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ehwsn/rng.hpp"

namespace ehwsn {

struct Edge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Undirected weighted graph with W, D and L = D - W kept dense.
// Immutable after construction.
struct Graph {
  int n_nodes = 0;
  std::vector<Edge> edges;    // a < b, weight > 0
  Eigen::MatrixXd weights;    // symmetric, zero diagonal
  Eigen::VectorXd degrees;    // row sums of weights
  Eigen::MatrixXd laplacian;  // D - W

  static Graph from_edges(int n_nodes, std::vector<Edge> edges);
};

// Connects each node to its k nearest Euclidean neighbors, symmetrized by
// union, with weight exp(-dist / sigma2). Ties broken by node index.
Graph build_knn_graph(const std::vector<Eigen::Vector2d>& positions, int k,
                      double sigma2);

// x' L x
double smoothness(const Eigen::VectorXd& x, const Graph& g);

struct GraphSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending, first is 0 for any valid graph
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, sign-fixed so the
                                 // first nonzero entry of each is positive
};

GraphSpectrum eigendecompose(const Graph& g);

// Spectral coefficients V' x
Eigen::VectorXd gft(const GraphSpectrum& s, const Eigen::VectorXd& x);

// Zero-mean Gaussian field with precision L + delta*I.
struct GmrfModel {
  Eigen::MatrixXd precision;
  double delta = 0.0;
  Eigen::MatrixXd chol_lower;  // precision = C C'

  static GmrfModel build(const Graph& g, double delta);
};

// One draw from N(0, (L + delta*I)^-1) via back-substitution on the
// Cholesky factor of the precision.
Eigen::VectorXd sample_gmrf(const GmrfModel& model, Rng& rng);

}  // namespace ehwsn
