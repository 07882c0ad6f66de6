// Independent reference computations for the test suite: exhaustive basis
// enumeration for small LPs and a random-point probe for box-constrained
// least squares. Deliberately slow and simple.
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "ehwsn/lp.hpp"
#include "ehwsn/rng.hpp"

namespace oracle {

struct Vertex {
  std::vector<int> columns;
  Eigen::VectorXd z;
};

// Every basic feasible solution of the LP, found by trying all column
// subsets of size rows(). Exponential; keep the instances tiny.
inline std::vector<Vertex> enumerate_vertices(const ehwsn::StandardLp& lp,
                                              double feas_tol = 1e-9) {
  const int m = lp.rows();
  const int n = lp.cols();
  std::vector<Vertex> out;
  std::vector<int> pick(m);
  for (int i = 0; i < m; ++i) pick[i] = i;

  const auto advance = [&]() {
    int i = m - 1;
    while (i >= 0 && pick[i] == n - m + i) --i;
    if (i < 0) return false;
    ++pick[i];
    for (int j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
    return true;
  };

  do {
    Eigen::MatrixXd a_b(m, m);
    for (int p = 0; p < m; ++p) a_b.col(p) = lp.a.col(pick[p]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_b);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd v = lu.solve(lp.b);
    if (v.minCoeff() < -feas_tol) continue;
    Vertex vx;
    vx.columns = pick;
    vx.z = Eigen::VectorXd::Zero(n);
    for (int p = 0; p < m; ++p) vx.z(pick[p]) = std::max(v(p), 0.0);
    out.push_back(std::move(vx));
  } while (advance());
  return out;
}

struct BruteResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd z;
};

// Minimum of c'z over all basic feasible solutions: the LP optimum whenever
// the objective is bounded on the feasible set.
inline BruteResult brute_force_lp(const ehwsn::StandardLp& lp) {
  BruteResult res;
  for (const Vertex& v : enumerate_vertices(lp)) {
    res.feasible = true;
    const double obj = lp.c.dot(v.z);
    if (obj < res.objective) {
      res.objective = obj;
      res.z = v.z;
    }
  }
  return res;
}

// Best objective among `trials` uniform points of the box [0, hi]^n; an
// upper bound certificate for box-constrained least squares.
inline double random_box_probe(const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& q, double hi, int trials,
                               ehwsn::Rng& rng) {
  const int n = static_cast<int>(q.cols());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd eta(n);
  for (int t = 0; t < trials; ++t) {
    for (int j = 0; j < n; ++j) eta(j) = hi * rng.uniform();
    best = std::min(best, (y - q * eta).squaredNorm());
  }
  return best;
}

}  // namespace oracle
