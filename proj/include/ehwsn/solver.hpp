// Alternating restoration of a smooth graph signal and a sparse transmit
// amplitude vector from underdetermined multiplied observations. The power
// step solves a box-constrained least-squares problem, re-expresses the
// residual as an equality-constrained LP and walks its vertices with a
// sparsity-controlled pivot search; the signal step is a closed-form
// Laplacian-regularized least-squares solve.
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "ehwsn/lp.hpp"
#include "ehwsn/wsn.hpp"

namespace ehwsn {

// |eta_i| above this counts toward the recovered support
inline constexpr double kSupportTol = 1e-9;

// Auto-selected signal-step regularizer: mu = factor * tr(A'A) / tr(L) with
// A the effective sensing matrix at the first signal step.
inline constexpr double kAutoMuFactor = 1e-2;

struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  // Signal-step regularizer; negative means auto: 1e-2 tr(A'A)/tr(L) frozen
  // at the first signal step.
  double mu = -1.0;
  double gamma = 1.0;           // weight of the activation-likelihood term
  int k_target = -1;            // desired support size; must be set by caller
  int max_outer_iters = 20;
  double x_convergence_tol = 1e-4;  // relative change in x between iterations
  long max_pivots = 4000;           // per power step
  bool check_pivot_feasibility = false;  // audit every visited vertex
  std::ostream* diagnostics = nullptr;
};

struct InitResult {
  Eigen::VectorXd x0;
  double c_star = 0.0;
};

// Constant initial guess x0 = c* 1 with c* the least-squares coefficient of
// the all-active, full-power predictor. Throws DegenerateInputError when the
// predictor is (numerically) zero.
InitResult init_signal(const Eigen::VectorXd& y, const Eigen::MatrixXd& sensing,
                       double eta_max);

// x = argmin ||y - A eta x|| ... solved as (A'A + mu L)^-1 A' y with
// A = sensing * diag(eta). Throws SingularSystemError when the normal
// equations fail to solve.
Eigen::VectorXd signal_step(const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& sensing,
                            const Eigen::VectorXd& eta_hat,
                            const Eigen::MatrixXd& laplacian, double mu);

struct BoxLsResult {
  Eigen::VectorXd eta;
  bool converged = false;
  int iterations = 0;
};

// min ||y - Q eta||^2 over 0 <= eta <= eta_max, by greedy coordinate descent
// (steepest-improvement coordinate, exact per-coordinate minimization), which
// favors support-sparse minimizers when the fit is degenerate. Convergence is
// declared on the projected-gradient KKT residual; `iterations` counts blocks
// of n coordinate moves.
BoxLsResult power_box_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& q,
                         double eta_max,
                         const Eigen::VectorXd* warm_start = nullptr,
                         int max_iterations = 2000);

// Componentwise slack eps_i = |y_i - [Q eta*]_i| for the LP band constraints.
Eigen::VectorXd compute_epsilon(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& q,
                                const Eigen::VectorXd& eta_star);

// Standard-form LP whose feasible set is
//   y - eps <= Q eta <= y + eps,  0 <= eta <= eta_max,
// expressed with slack blocks q1, q2, q3 in z = [eta; q1; q2; q3] >= 0.
StandardLp assemble_power_lp(const Eigen::VectorXd& y, const Eigen::MatrixXd& q,
                             const Eigen::VectorXd& eps, double eta_max);

enum class PivotSearchStatus {
  kSparsityMet,        // reached |support| == k with no improving move left
  kBudgetExhausted,    // pivot budget ran out first
  kInfeasibleSparsity  // no move can change the support size as required
};

struct PivotSearchOptions {
  long max_pivots = 4000;
  bool check_feasibility = false;  // verify every visited vertex is feasible
  std::ostream* trace = nullptr;
};

struct PivotSearchResult {
  PivotSearchStatus status = PivotSearchStatus::kBudgetExhausted;
  Eigen::VectorXd eta;       // first n_eta entries of the final vertex
  Eigen::VectorXd z;         // full final vertex
  int support_size = 0;
  double score = 0.0;        // gamma * sum of -log psi over the support
  long pivots = 0;
  double max_violation = 0.0;  // worst feasibility breach seen (if checked)
};

// Steered vertex walk: while the support size g differs from k, move toward
// k (g > k shrinks, g < k grows); once g == k keep pivoting only while the
// activation score strictly decreases. When no single pivot can move the
// support — the usual state at a degenerate vertex — the walk drives one
// amplitude, chosen by its activation likelihood, to its extreme with plain
// cost-driven pivoting until the support budges or the amplitude is proven
// stuck. `initial` must be a bfs of lp; throws DegenerateBasisError when the
// initial vertex cannot be made numerically feasible even by
// refactorization.
PivotSearchResult sparsity_pivot_search(const StandardLp& lp, int n_eta,
                                        const Eigen::VectorXd& psi, int k_target,
                                        double gamma, const Basis& initial,
                                        const PivotSearchOptions& opts = {});

enum class RestoreStatus { kConverged, kIterLimit, kInfeasibleSparsity };

enum class PowerStepMode {
  kSparsityPivot,  // box-LS, then LP vertex walk toward the target support
  kBoxOnly         // box-LS estimate used directly
};

struct RestorationResult {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd eta_hat;
  std::vector<int> active_estimate;  // indices with |eta_i| > kSupportTol
  // Objective value after each outer iteration: squared data fidelity plus
  // the smoothness term, plus the activation score in sparsity mode.
  std::vector<double> objective_trace;
  int outer_iters = 0;
  bool converged = false;
  RestoreStatus status = RestoreStatus::kIterLimit;
  bool sparsity_met = false;
  // Terminal status of the final power-step walk (meaningful in sparsity
  // mode only); kept separate from `status`, which convergence can mask.
  PivotSearchStatus last_walk_status = PivotSearchStatus::kSparsityMet;
  double mu_used = 0.0;
  long total_pivots = 0;
  // Worst excess of ||y - Q eta||^2 over sum eps_i^2 across power steps; a
  // nonpositive value means every amplitude estimate stayed inside the
  // residual sphere its LP band was built from.
  double max_fidelity_gap = 0.0;
  double max_pivot_violation = 0.0; // from per-vertex feasibility audits
};

// Shared alternating loop used by the proposed scheme and the box-only
// baseline. k_target must be set in config for kSparsityPivot mode.
RestorationResult alternating_restore(const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& sensing,
                                      const Eigen::MatrixXd& laplacian,
                                      const Eigen::VectorXd& psi, double eta_max,
                                      const SolverConfig& config,
                                      PowerStepMode mode);

// Full proposed scheme on a real-stacked observation system.
RestorationResult restore(const RealSystem& system,
                          const Eigen::MatrixXd& laplacian,
                          const Eigen::VectorXd& psi, double eta_max,
                          const SolverConfig& config);

}  // namespace ehwsn
