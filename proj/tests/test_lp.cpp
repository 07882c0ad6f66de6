#include "ehwsn/lp.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ehwsn/rng.hpp"
#include "support/oracles.hpp"

using namespace ehwsn;

namespace {

// random standard-form LP that is feasible by construction
StandardLp random_feasible_lp(Rng& rng, int m, int n, bool nonneg_cost) {
  Eigen::MatrixXd a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::VectorXd z(n);
  for (int j = 0; j < n; ++j) z(j) = rng.uniform();
  Eigen::VectorXd c(n);
  for (int j = 0; j < n; ++j)
    c(j) = nonneg_cost ? rng.uniform() : rng.normal();
  return StandardLp::make(a, a * z, c);
}

}  // namespace

TEST_CASE("make drops consistent dependent rows and keeps the map") {
  Eigen::MatrixXd a(3, 4);
  a << 1, 2, 0, 1,
       0, 1, 1, 0,
       2, 4, 0, 2;  // row 2 = 2 * row 0
  Eigen::VectorXd b(3);
  b << 3, 1, 6;
  const StandardLp lp = StandardLp::make(a, b, Eigen::VectorXd::Zero(4));
  CHECK(lp.rows() == 2);
  CHECK(lp.row_map == std::vector<int>{0, 1});
  CHECK((lp.a.row(0) - a.row(0)).norm() == 0.0);

  b(2) = 5.0;  // same dependency, contradictory right-hand side
  CHECK_THROWS_AS(StandardLp::make(a, b, Eigen::VectorXd::Zero(4)),
                  LpAssemblyError);
}

TEST_CASE("make rejects systems with more independent rows than columns") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 1, 1, 3;  // inconsistent: row3 != row1 + row2 in b
  CHECK_THROWS_AS(StandardLp::make(a, b, Eigen::VectorXd::Zero(2)),
                  LpAssemblyError);
}

TEST_CASE("basis solves, directions, pivots and long-run refactorization") {
  Rng rng(101);
  const StandardLp lp = random_feasible_lp(rng, 4, 9, false);
  Basis basis(lp, {0, 1, 2, 3});

  // basic values and directions satisfy their defining systems
  Eigen::MatrixXd a_b(4, 4);
  for (int p = 0; p < 4; ++p) a_b.col(p) = lp.a.col(p);
  CHECK((a_b * basis.basic_values(lp) - lp.b).norm() < 1e-10);
  CHECK((a_b * basis.direction(lp, 7) - lp.a.col(7)).norm() < 1e-10);
  CHECK(basis.position_of(2) == 2);
  CHECK(basis.position_of(7) == -1);
  CHECK(basis.contains(2));
  CHECK(!basis.contains(7));

  // 150 random exchanges cross the refactorization interval; the updated
  // inverse must stay in lockstep with a freshly factored basis
  int done = 0;
  for (int t = 0; t < 1000 && done < 150; ++t) {
    const int entering = static_cast<int>(rng.uniform() * 9);
    if (basis.contains(entering)) continue;
    const int pos = static_cast<int>(rng.uniform() * 4);
    const Eigen::VectorXd h = basis.direction(lp, entering);
    if (std::abs(h(pos)) < 1e-6) continue;
    basis.pivot(lp, entering, pos);
    ++done;
    const Basis fresh(lp, basis.columns());
    CHECK((basis.basic_values(lp) - fresh.basic_values(lp)).norm() < 1e-8);
  }
  CHECK(done == 150);
}

TEST_CASE("basis rejects bad column sets") {
  Rng rng(5);
  const StandardLp lp = random_feasible_lp(rng, 3, 6, false);
  CHECK_THROWS_AS(Basis(lp, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Basis(lp, {0, 0, 1}), std::invalid_argument);

  Eigen::MatrixXd a(2, 4);
  a << 1, 2, 0, 1,
       2, 4, 1, 0;  // columns 0 and 1 are proportional
  const StandardLp sing =
      StandardLp::make(a, Eigen::Vector2d(1, 1), Eigen::VectorXd::Zero(4));
  CHECK_THROWS_AS(Basis(sing, {0, 1}), DegenerateBasisError);
}

TEST_CASE("ratio test picks the tightest row with smallest-index ties") {
  Eigen::VectorXd values(3), h(3);
  values << 2, 1, 3;
  h << 1, 2, -1;
  RatioResult r = ratio_test(values, h);
  CHECK(r.bounded);
  CHECK(r.theta == doctest::Approx(0.5));
  CHECK(r.leaving_pos == 1);

  values.resize(2); h.resize(2);
  values << 1, 2;
  h << 1, 2;  // both rows give theta = 1
  r = ratio_test(values, h);
  CHECK(r.leaving_pos == 0);

  h << -1, -2;
  CHECK(!ratio_test(values, h).bounded);

  // slightly negative basic value clamps to a zero-length step
  values << -1e-12, 5;
  h << 1, 1;
  r = ratio_test(values, h);
  CHECK(r.theta == 0.0);
  CHECK(r.leaving_pos == 0);
}

TEST_CASE("simplex agrees with exhaustive vertex enumeration") {
  Rng rng(2025);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    // nonnegative costs keep the minimum finite on these unbounded cones
    const StandardLp lp = random_feasible_lp(rng, 3, 7, true);
    const oracle::BruteResult ref = oracle::brute_force_lp(lp);
    REQUIRE(ref.feasible);

    const LpSolution bfs = two_phase_solve(lp);
    REQUIRE(bfs.status == LpStatus::kOptimal);
    const LpSolution opt = simplex_optimize(lp, std::move(*bfs.basis));
    REQUIRE(opt.status == LpStatus::kOptimal);
    CHECK(opt.objective ==
          doctest::Approx(ref.objective).epsilon(1e-7).scale(1.0));
    CHECK((lp.a * opt.z - lp.b).lpNorm<Eigen::Infinity>() <
          kLpResidualTol * (1.0 + lp.b.lpNorm<Eigen::Infinity>()));
    CHECK(opt.z.minCoeff() >= -kLpFeasTol);
    ++solved;
  }
  CHECK(solved == 60);
}

TEST_CASE("textbook instance reaches the known optimum") {
  // max x1 + 2 x2 s.t. x1 + x2 <= 4, x1 + 3 x2 <= 6 has optimum (3, 1)
  Eigen::MatrixXd a(2, 4);
  a << 1, 1, 1, 0,
       1, 3, 0, 1;
  Eigen::VectorXd b(2), c(4);
  b << 4, 6;
  c << -1, -2, 0, 0;
  const StandardLp lp = StandardLp::make(a, b, c);
  const LpSolution sol = simplex_optimize(lp, Basis(lp, {2, 3}));
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(-5.0));
  CHECK(sol.z(0) == doctest::Approx(3.0));
  CHECK(sol.z(1) == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded programs are classified") {
  // x1 + x2 = -1 with x >= 0 cannot hold
  Eigen::MatrixXd a(1, 2);
  a << 1, 1;
  CHECK(two_phase_solve(StandardLp::make(a, Eigen::VectorXd::Constant(1, -1),
                                         Eigen::VectorXd::Zero(2)))
            .status == LpStatus::kInfeasible);

  // min -x1 with x1 - x2 = 0 rides the ray x1 = x2 to infinity
  Eigen::MatrixXd a2(1, 2);
  a2 << 1, -1;
  Eigen::VectorXd c2(2);
  c2 << -1, 0;
  const StandardLp lp2 =
      StandardLp::make(a2, Eigen::VectorXd::Zero(1), c2);
  const LpSolution bfs = two_phase_solve(lp2);
  REQUIRE(bfs.status == LpStatus::kOptimal);
  CHECK(simplex_optimize(lp2, std::move(*bfs.basis)).status ==
        LpStatus::kUnbounded);
}

TEST_CASE("degenerate vertices do not trap the solver") {
  // classic cycling-prone instance (Beale); the degenerate-pivot fallback
  // must still reach the optimum, which the oracle provides
  Eigen::MatrixXd a(3, 7);
  a << 1, 0, 0, 0.25, -60, -1.0 / 25, 9,
       0, 1, 0, 0.50, -90, -1.0 / 50, 3,
       0, 0, 1, 0, 0, 1, 0;
  Eigen::VectorXd b(3), c(7);
  b << 0, 0, 1;
  c << 0, 0, 0, -0.75, 150, -0.02, 6;
  const StandardLp lp = StandardLp::make(a, b, c);
  const LpSolution sol = simplex_optimize(lp, Basis(lp, {0, 1, 2}));
  REQUIRE(sol.status == LpStatus::kOptimal);
  const oracle::BruteResult ref = oracle::brute_force_lp(lp);
  CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-9));
}

TEST_CASE("pivot budget is honored") {
  Rng rng(55);
  const StandardLp lp = random_feasible_lp(rng, 3, 8, true);
  SimplexOptions opts;
  opts.max_pivots = 0;
  const LpSolution sol = two_phase_solve(lp, opts);
  CHECK(sol.status == LpStatus::kPivotLimit);
  CHECK(sol.pivots == 0);
}

TEST_CASE("trace stream records the walk") {
  Eigen::MatrixXd a(2, 4);
  a << 1, 1, 1, 0,
       1, 3, 0, 1;
  Eigen::VectorXd b(2), c(4);
  b << 4, 6;
  c << -1, -2, 0, 0;
  const StandardLp lp = StandardLp::make(a, b, c);
  std::ostringstream trace;
  SimplexOptions opts;
  opts.trace = &trace;
  simplex_optimize(lp, Basis(lp, {2, 3}), opts);
  CHECK(trace.str().find("simplex rows=2 cols=4") != std::string::npos);
  CHECK(trace.str().find("enter=") != std::string::npos);
}

TEST_CASE("two-phase always delivers a clean vertex") {
  Rng rng(606);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform() * 3);
    const int n = m + 2 + static_cast<int>(rng.uniform() * 4);
    const StandardLp lp = random_feasible_lp(rng, m, n, false);
    const LpSolution sol = two_phase_solve(lp);
    REQUIRE(sol.status == LpStatus::kOptimal);
    CHECK((lp.a * sol.z - lp.b).lpNorm<Eigen::Infinity>() <
          kLpResidualTol * (1.0 + lp.b.lpNorm<Eigen::Infinity>()));
    CHECK(sol.z.minCoeff() >= -kLpFeasTol);
    int nonzeros = 0;
    for (int j = 0; j < n; ++j) nonzeros += sol.z(j) > kLpFeasTol ? 1 : 0;
    CHECK(nonzeros <= m);  // vertices have at most rows() positive entries
    for (int col : sol.basis->columns()) CHECK(col < n);  // no artificials
  }
}

TEST_CASE("zero right-hand side rows survive the two-phase hand-off") {
  Eigen::MatrixXd a(2, 4);
  a << 1, -1, 1, 0,
       1, 1, 0, 1;
  Eigen::VectorXd b(2);
  b << 0, 2;  // first constraint is active at the origin face
  const StandardLp lp = StandardLp::make(a, b, Eigen::VectorXd::Ones(4));
  const LpSolution sol = two_phase_solve(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK((lp.a * sol.z - lp.b).lpNorm<Eigen::Infinity>() < 1e-10);
}
