// Standard-form LP representation and a two-phase Simplex solver whose
// pivoting primitives (basis, ratio test, pivot application) are exposed so
// callers can steer the walk between basic feasible solutions themselves.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ehwsn {

inline constexpr double kLpFeasTol = 1e-9;      // bfs nonnegativity slack
inline constexpr double kLpResidualTol = 1e-8;  // ||Az - b|| acceptance
inline constexpr double kPivotTol = 1e-10;      // ratio-test denominator cutoff

struct DegenerateBasisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LpAssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// min c'z  s.t.  A z = b, z >= 0, with A full row rank.
struct StandardLp {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<int> row_map;  // original indices of the surviving rows

  int rows() const { return static_cast<int>(a.rows()); }
  int cols() const { return static_cast<int>(a.cols()); }

  // Drops linearly dependent rows after confirming the dropped right-hand
  // sides are consistent with the kept ones. Throws LpAssemblyError on an
  // inconsistent dependency or when rank exceeds the column count.
  static StandardLp make(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd c);
};

// Ordered basis with an explicit inverse of A_B. The inverse is updated in
// place on each pivot and rebuilt from a dense LU factorization every
// kRefactorInterval pivots.
class Basis {
 public:
  static constexpr int kRefactorInterval = 50;

  // Throws DegenerateBasisError if the selected columns are singular.
  Basis(const StandardLp& lp, std::vector<int> columns);

  const std::vector<int>& columns() const { return columns_; }
  bool contains(int column) const { return member_[column] != 0; }
  int position_of(int column) const;  // -1 if non-basic

  Eigen::VectorXd basic_values(const StandardLp& lp) const;  // A_B^-1 b
  // h_j = A_B^-1 A_j, the representation of column j in the basis
  Eigen::VectorXd direction(const StandardLp& lp, int column) const;
  // Simplex multipliers (A_B^-1)' c_B; reduced costs are c_j - dual . A_j
  Eigen::VectorXd dual(const StandardLp& lp) const;

  // Replace the column at leaving_pos with `entering`. Throws
  // DegenerateBasisError when the exchange would make A_B singular.
  void pivot(const StandardLp& lp, int entering, int leaving_pos);

 private:
  void refactorize(const StandardLp& lp);

  std::vector<int> columns_;
  std::vector<char> member_;
  Eigen::MatrixXd inverse_;
  int pivots_since_refactor_ = 0;
};

// Full solution vector: basic entries from A_B^-1 b, zeros elsewhere.
Eigen::VectorXd basic_solution(const StandardLp& lp, const Basis& basis);

struct RatioResult {
  bool bounded = false;
  double theta = 0.0;
  int leaving_pos = -1;  // position within the basis ordering
};

// theta* = min over {i : h_i > kPivotTol} of z_i / h_i, smallest-index
// tie-break; unbounded when no component of h is positive.
RatioResult ratio_test(const StandardLp& lp, const Basis& basis, int entering);
// Variant that reuses precomputed basic values and direction.
RatioResult ratio_test(const Eigen::VectorXd& basic_values,
                       const Eigen::VectorXd& direction);

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kPivotLimit };

struct SimplexOptions {
  long max_pivots = 200000;
  std::ostream* trace = nullptr;  // per-pivot text dump when set
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::optional<Basis> basis;
  Eigen::VectorXd z;
  double objective = 0.0;
  long pivots = 0;
};

// Dantzig entering rule with a Bland's-rule fallback after 50 consecutive
// degenerate pivots. `start` must be a bfs of lp.
LpSolution simplex_optimize(const StandardLp& lp, Basis start,
                            const SimplexOptions& options = {});

// Phase-I with artificial variables; returns a bfs of lp or kInfeasible when
// the Phase-I optimum stays above tolerance.
LpSolution two_phase_solve(const StandardLp& lp, const SimplexOptions& options = {});

}  // namespace ehwsn
