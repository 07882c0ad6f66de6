#include "ehwsn/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ehwsn {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kDegenerateTheta = 1e-12;
constexpr int kBlandTrigger = 50;  // consecutive degenerate pivots

}  // namespace

StandardLp StandardLp::make(Eigen::MatrixXd a, Eigen::VectorXd b,
                            Eigen::VectorXd c) {
  if (a.rows() != b.size() || a.cols() != c.size())
    throw LpAssemblyError("lp dimension mismatch");
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());

  // Modified Gram-Schmidt over the rows; rows that vanish against the span
  // of the kept ones are dependent and get dropped.
  std::vector<int> kept, dropped;
  Eigen::MatrixXd ortho(m, n);  // orthonormalized kept rows
  int n_kept = 0;
  for (int i = 0; i < m; ++i) {
    Eigen::RowVectorXd r = a.row(i);
    const double scale = std::max(1.0, r.norm());
    for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize for stability
      for (int k = 0; k < n_kept; ++k) r -= (r * ortho.row(k).transpose()) * ortho.row(k);
    if (r.norm() > 1e-10 * scale) {
      ortho.row(n_kept++) = r / r.norm();
      kept.push_back(i);
    } else {
      dropped.push_back(i);
    }
  }

  StandardLp lp;
  if (dropped.empty()) {
    lp.a = std::move(a);
    lp.b = std::move(b);
    lp.c = std::move(c);
    lp.row_map.resize(m);
    for (int i = 0; i < m; ++i) lp.row_map[i] = i;
  } else {
    Eigen::MatrixXd a_kept(static_cast<int>(kept.size()), n);
    Eigen::VectorXd b_kept(static_cast<int>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
      a_kept.row(static_cast<int>(k)) = a.row(kept[k]);
      b_kept(static_cast<int>(k)) = b(kept[k]);
    }
    // Each dropped row must carry the right-hand side its dependency implies,
    // otherwise the system is contradictory rather than redundant.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_kept.transpose());
    for (int i : dropped) {
      const Eigen::VectorXd mu = qr.solve(a.row(i).transpose());
      const double implied = mu.dot(b_kept);
      if (std::abs(implied - b(i)) > 1e-8 * (1.0 + std::abs(b(i))))
        throw LpAssemblyError("dependent row with inconsistent right-hand side");
    }
    lp.a = std::move(a_kept);
    lp.b = std::move(b_kept);
    lp.c = std::move(c);
    lp.row_map = std::move(kept);
  }
  if (lp.rows() > lp.cols())
    throw LpAssemblyError("more independent rows than variables");
  return lp;
}

Basis::Basis(const StandardLp& lp, std::vector<int> columns)
    : columns_(std::move(columns)), member_(lp.cols(), 0) {
  if (static_cast<int>(columns_.size()) != lp.rows())
    throw std::invalid_argument("basis size must equal the row count");
  for (int cidx : columns_) {
    if (cidx < 0 || cidx >= lp.cols())
      throw std::invalid_argument("basis column out of range");
    if (member_[cidx]) throw std::invalid_argument("duplicate basis column");
    member_[cidx] = 1;
  }
  refactorize(lp);
}

int Basis::position_of(int column) const {
  for (std::size_t p = 0; p < columns_.size(); ++p)
    if (columns_[p] == column) return static_cast<int>(p);
  return -1;
}

Eigen::VectorXd Basis::basic_values(const StandardLp& lp) const {
  return inverse_ * lp.b;
}

Eigen::VectorXd Basis::direction(const StandardLp& lp, int column) const {
  return inverse_ * lp.a.col(column);
}

Eigen::VectorXd Basis::dual(const StandardLp& lp) const {
  Eigen::VectorXd c_b(columns_.size());
  for (std::size_t p = 0; p < columns_.size(); ++p) c_b(p) = lp.c(columns_[p]);
  return inverse_.transpose() * c_b;
}

void Basis::pivot(const StandardLp& lp, int entering, int leaving_pos) {
  if (entering < 0 || entering >= lp.cols() || member_[entering])
    throw std::invalid_argument("entering column absent or already basic");
  if (leaving_pos < 0 || leaving_pos >= static_cast<int>(columns_.size()))
    throw std::invalid_argument("leaving position out of range");

  const Eigen::VectorXd h = direction(lp, entering);
  const double piv = h(leaving_pos);
  if (std::abs(piv) < 1e-11)
    throw DegenerateBasisError("pivot element vanishes; exchange would be singular");

  // Product-form update of the explicit inverse: one row scaling plus rank-1
  // elimination of the remaining rows.
  inverse_.row(leaving_pos) /= piv;
  for (int i = 0; i < inverse_.rows(); ++i) {
    if (i == leaving_pos) continue;
    inverse_.row(i) -= h(i) * inverse_.row(leaving_pos);
  }

  member_[columns_[leaving_pos]] = 0;
  columns_[leaving_pos] = entering;
  member_[entering] = 1;

  if (++pivots_since_refactor_ >= kRefactorInterval) refactorize(lp);
}

void Basis::refactorize(const StandardLp& lp) {
  const int m = lp.rows();
  Eigen::MatrixXd a_b(m, m);
  for (int p = 0; p < m; ++p) a_b.col(p) = lp.a.col(columns_[p]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a_b);
  if (!lu.isInvertible())
    throw DegenerateBasisError("basis matrix is singular");
  inverse_ = lu.inverse();
  pivots_since_refactor_ = 0;
}

Eigen::VectorXd basic_solution(const StandardLp& lp, const Basis& basis) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(lp.cols());
  const Eigen::VectorXd values = basis.basic_values(lp);
  const auto& cols = basis.columns();
  for (std::size_t p = 0; p < cols.size(); ++p) z(cols[p]) = values(p);
  return z;
}

RatioResult ratio_test(const Eigen::VectorXd& basic_values,
                       const Eigen::VectorXd& direction) {
  RatioResult r;
  for (int i = 0; i < direction.size(); ++i) {
    if (direction(i) <= kPivotTol) continue;
    // clamp tiny negative basic values so degenerate vertices yield theta 0
    const double theta = std::max(basic_values(i), 0.0) / direction(i);
    if (!r.bounded || theta < r.theta) {
      r.bounded = true;
      r.theta = theta;
      r.leaving_pos = i;
    }
  }
  return r;
}

RatioResult ratio_test(const StandardLp& lp, const Basis& basis, int entering) {
  if (basis.contains(entering))
    throw std::invalid_argument("ratio test needs a non-basic entering column");
  return ratio_test(basis.basic_values(lp), basis.direction(lp, entering));
}

LpSolution simplex_optimize(const StandardLp& lp, Basis start,
                            const SimplexOptions& options) {
  Basis basis = std::move(start);
  LpSolution sol;
  if (options.trace)
    *options.trace << "simplex rows=" << lp.rows() << " cols=" << lp.cols() << "\n";

  int degenerate_run = 0;
  while (sol.pivots < options.max_pivots) {
    const Eigen::VectorXd lambda = basis.dual(lp);
    const bool bland = degenerate_run >= kBlandTrigger;

    int entering = -1;
    double best_rc = -kReducedCostTol;
    for (int j = 0; j < lp.cols(); ++j) {
      if (basis.contains(j)) continue;
      const double rc = lp.c(j) - lambda.dot(lp.a.col(j));
      if (rc >= -kReducedCostTol) continue;
      if (bland) {  // first eligible index
        entering = j;
        break;
      }
      if (rc < best_rc) {
        best_rc = rc;
        entering = j;
      }
    }
    if (entering < 0) {
      sol.status = LpStatus::kOptimal;
      sol.z = basic_solution(lp, basis);
      sol.objective = lp.c.dot(sol.z);
      sol.basis.emplace(std::move(basis));
      return sol;
    }

    const Eigen::VectorXd values = basis.basic_values(lp);
    const Eigen::VectorXd h = basis.direction(lp, entering);
    const RatioResult rt = ratio_test(values, h);
    if (!rt.bounded) {
      sol.status = LpStatus::kUnbounded;
      sol.z = basic_solution(lp, basis);
      sol.objective = lp.c.dot(sol.z);
      sol.basis.emplace(std::move(basis));
      return sol;
    }
    degenerate_run = rt.theta < kDegenerateTheta ? degenerate_run + 1 : 0;

    if (options.trace)
      *options.trace << "pivot=" << sol.pivots << " enter=" << entering
                     << " leave=" << basis.columns()[rt.leaving_pos]
                     << " theta=" << rt.theta << "\n";
    basis.pivot(lp, entering, rt.leaving_pos);
    ++sol.pivots;
  }

  sol.status = LpStatus::kPivotLimit;
  sol.z = basic_solution(lp, basis);
  sol.objective = lp.c.dot(sol.z);
  sol.basis.emplace(std::move(basis));
  return sol;
}

LpSolution two_phase_solve(const StandardLp& lp, const SimplexOptions& options) {
  const int m = lp.rows();
  const int n = lp.cols();

  // Phase-I program: flip rows with negative b, append an identity of
  // artificial columns, and minimize their sum.
  StandardLp aux;
  aux.a.resize(m, n + m);
  aux.a.leftCols(n) = lp.a;
  aux.a.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
  aux.b = lp.b;
  for (int i = 0; i < m; ++i) {
    if (aux.b(i) < 0.0) {
      aux.a.row(i) = -aux.a.row(i);
      aux.a(i, n + i) = 1.0;  // keep the artificial block an identity
      aux.b(i) = -aux.b(i);
    }
  }
  aux.c = Eigen::VectorXd::Zero(n + m);
  aux.c.tail(m).setOnes();
  aux.row_map = lp.row_map;

  std::vector<int> art(m);
  for (int i = 0; i < m; ++i) art[i] = n + i;
  LpSolution phase1 = simplex_optimize(aux, Basis(aux, std::move(art)), options);

  LpSolution sol;
  sol.pivots = phase1.pivots;
  if (phase1.status != LpStatus::kOptimal) {
    sol.status = phase1.status;
    sol.z = phase1.z.head(n);
    return sol;
  }
  if (phase1.objective > 1e-8) {
    sol.status = LpStatus::kInfeasible;
    sol.z = phase1.z.head(n);
    sol.objective = lp.c.dot(sol.z);
    return sol;
  }

  // Swap any artificial still sitting in the basis (at value ~0) for an
  // original column; with a full-row-rank A one always exists.
  Basis& b1 = *phase1.basis;
  for (int p = 0; p < m; ++p) {
    if (b1.columns()[p] < n) continue;
    int replacement = -1;
    for (int j = 0; j < n; ++j) {
      if (b1.contains(j)) continue;
      if (std::abs(b1.direction(aux, j)(p)) > kPivotTol) {
        replacement = j;
        break;
      }
    }
    if (replacement < 0)
      throw DegenerateBasisError("artificial column stuck in a phase-1 basis");
    b1.pivot(aux, replacement, p);
    ++sol.pivots;
  }

  Basis final_basis(lp, b1.columns());  // refactorized against the real rows
  sol.z = basic_solution(lp, final_basis);
  if (sol.z.minCoeff() < -kLpFeasTol ||
      (lp.a * sol.z - lp.b).lpNorm<Eigen::Infinity>() >
          kLpResidualTol * (1.0 + lp.b.lpNorm<Eigen::Infinity>()))
    throw DegenerateBasisError("phase-1 basis fails feasibility checks");
  sol.status = LpStatus::kOptimal;
  sol.objective = lp.c.dot(sol.z);
  sol.basis.emplace(std::move(final_basis));
  return sol;
}

}  // namespace ehwsn
