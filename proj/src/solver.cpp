#include "ehwsn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

namespace ehwsn {

namespace {

constexpr double kScoreImprove = 1e-12;  // strict-decrease margin for the walk

// Vertex residual that triggers a from-scratch refactorization inside the
// walk and, if even that cannot restore feasibility, a rollback of the
// offending exchange. Near-singular pivot elements otherwise poison the
// product-form factorization and every later "basic" value with it.
constexpr double kWalkRepairTol = 1e-9;

double support_score(const Eigen::VectorXd& eta, const Eigen::VectorXd& psi,
                     double gamma, int* support_out) {
  int g = 0;
  double score = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    if (eta(i) > kSupportTol) {
      ++g;
      score -= gamma * std::log(psi(i));
    }
  }
  if (support_out) *support_out = g;
  return score;
}

}  // namespace

InitResult init_signal(const Eigen::VectorXd& y, const Eigen::MatrixXd& sensing,
                       double eta_max) {
  // Least-squares amplitude of the all-active full-power predictor: the best
  // constant signal explaining y when every sensor transmits at eta_max.
  const Eigen::VectorXd v = eta_max * sensing.rowwise().sum();
  const double denom = v.squaredNorm();
  if (denom <= 1e-12 * std::max(1.0, sensing.squaredNorm()) || denom == 0.0)
    throw DegenerateInputError("all-active predictor is numerically zero");
  InitResult r;
  r.c_star = y.dot(v) / denom;
  r.x0 = Eigen::VectorXd::Constant(sensing.cols(), r.c_star);
  return r;
}

Eigen::VectorXd signal_step(const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& sensing,
                            const Eigen::VectorXd& eta_hat,
                            const Eigen::MatrixXd& laplacian, double mu) {
  const Eigen::MatrixXd a = sensing * eta_hat.asDiagonal();
  const Eigen::MatrixXd gram = a.transpose() * a + mu * laplacian;
  const Eigen::VectorXd rhs = a.transpose() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystemError("regularized normal matrix failed to factor");
  const Eigen::VectorXd x = ldlt.solve(rhs);
  if ((gram * x - rhs).norm() > 1e-6 * (1.0 + rhs.norm()))
    throw SingularSystemError("regularized normal equations are singular");
  return x;
}

BoxLsResult power_box_ls(const Eigen::VectorXd& y, const Eigen::MatrixXd& q,
                         double eta_max, const Eigen::VectorXd* warm_start,
                         int max_iterations) {
  const int n = static_cast<int>(q.cols());
  const auto clamp = [&](double v) { return std::clamp(v, 0.0, eta_max); };

  // The minimizer set is typically a whole face of the box once the fit can
  // be made exact, and the choice within it matters downstream: the band
  // polytope carved around a sparse minimizer leaves room to move amplitude
  // mass between sensors, a dense one pins every amplitude where it stands.
  // Starting from zero and always descending along the coordinate with the
  // steepest improvement builds the support up greedily, like a matching
  // pursuit, and lands on minimizers with many inactive coordinates.
  BoxLsResult r;
  r.eta = Eigen::VectorXd::Zero(n);
  if (warm_start)
    r.eta = warm_start->unaryExpr([&](double v) { return clamp(v); });

  // Greedy coordinate descent with exact per-coordinate minimization; the
  // iterate count is in units of n coordinate moves. Termination on the
  // unit-step projected-gradient KKT residual.
  const Eigen::VectorXd col_sq = q.colwise().squaredNorm();
  const double tol =
      1e-10 * (1.0 + (q.transpose() * y).lpNorm<Eigen::Infinity>());

  Eigen::VectorXd resid = q * r.eta - y;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    for (int move = 0; move < n; ++move) {
      int pick = -1;
      double pick_delta = 0.0, pick_gain = 0.0;
      for (int j = 0; j < n; ++j) {
        if (col_sq(j) <= 0.0) continue;  // column cannot affect the fit
        const double g = q.col(j).dot(resid);
        const double delta = clamp(r.eta(j) - g / col_sq(j)) - r.eta(j);
        const double gain = -(g * delta + 0.5 * col_sq(j) * delta * delta);
        if (gain > pick_gain) {  // ties keep the smaller index
          pick = j;
          pick_delta = delta;
          pick_gain = gain;
        }
      }
      if (pick < 0) break;
      r.eta(pick) += pick_delta;
      resid += pick_delta * q.col(pick);
    }
    const Eigen::VectorXd grad = q.transpose() * resid;
    double kkt = 0.0;
    for (int j = 0; j < n; ++j)
      kkt = std::max(kkt, std::abs(r.eta(j) - clamp(r.eta(j) - grad(j))));
    if (kkt <= tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

Eigen::VectorXd compute_epsilon(const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& q,
                                const Eigen::VectorXd& eta_star) {
  return (y - q * eta_star).cwiseAbs();
}

StandardLp assemble_power_lp(const Eigen::VectorXd& y, const Eigen::MatrixXd& q,
                             const Eigen::VectorXd& eps, double eta_max) {
  const int m = static_cast<int>(y.size());
  const int n = static_cast<int>(q.cols());
  if (q.rows() != m || eps.size() != m)
    throw std::invalid_argument("power lp dimension mismatch");

  // z = [eta; q1; q2; q3] >= 0 with
  //   Q eta + q1 = y + eps   (upper band)
  //   Q eta - q2 = y - eps   (lower band)
  //   eta  + q3 = eta_max    (amplitude cap)
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m + n, 2 * (m + n));
  a.block(0, 0, m, n) = q;
  a.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  a.block(m, 0, m, n) = q;
  a.block(m, n + m, m, m) = -Eigen::MatrixXd::Identity(m, m);
  a.block(2 * m, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
  a.block(2 * m, n + 2 * m, n, n) = Eigen::MatrixXd::Identity(n, n);

  Eigen::VectorXd b(2 * m + n);
  b << y + eps, y - eps, Eigen::VectorXd::Constant(n, eta_max);

  return StandardLp::make(std::move(a), std::move(b),
                          Eigen::VectorXd::Zero(2 * (m + n)));
}

PivotSearchResult sparsity_pivot_search(const StandardLp& lp, int n_eta,
                                        const Eigen::VectorXd& psi, int k_target,
                                        double gamma, const Basis& initial,
                                        const PivotSearchOptions& opts) {
  if (n_eta <= 0 || n_eta > lp.cols() || psi.size() != n_eta)
    throw std::invalid_argument("pivot search dimension mismatch");
  if (k_target < 0 || k_target > n_eta)
    throw std::invalid_argument("target support outside [0, n]");

  Basis basis = initial;
  PivotSearchResult res;

  // Best vertex seen anywhere along the walk, ordered by distance of the
  // support size from the target and then by activation score; returned
  // whenever the walk cannot finish at the target itself.
  struct Snapshot {
    Eigen::VectorXd z, eta;
    int support = 0;
    double score = 0.0;
  } best_seen;

  const auto refresh = [&] {
    res.z = basic_solution(lp, basis);
    res.eta = res.z.head(n_eta);
    res.score = support_score(res.eta, psi, gamma, &res.support_size);
  };
  const auto violation = [&] {
    const double resid = (lp.a * res.z - lp.b).lpNorm<Eigen::Infinity>() /
                         (1.0 + lp.b.lpNorm<Eigen::Infinity>());
    return std::max(resid, std::max(0.0, -res.z.minCoeff()));
  };
  const auto audit = [&] {
    res.max_violation = std::max(res.max_violation, violation());
  };
  // Snapshots happen only for vertices that passed the residual guard, so a
  // numerically corrupt iterate can never become the returned best.
  const auto record_best = [&] {
    const int dist = std::abs(res.support_size - k_target);
    const int seen_dist = std::abs(best_seen.support - k_target);
    if (best_seen.z.size() == 0 || dist < seen_dist ||
        (dist == seen_dist && res.score < best_seen.score - kScoreImprove))
      best_seen = {res.z, res.eta, res.support_size, res.score};
  };
  const auto yield_best = [&] {
    res.z = best_seen.z;
    res.eta = best_seen.eta;
    res.support_size = best_seen.support;
    res.score = best_seen.score;
  };

  const auto rebuilt =
      [&lp](const std::vector<int>& cols) -> std::optional<Basis> {
    try {
      return Basis(lp, cols);
    } catch (const DegenerateBasisError&) {
      return std::nullopt;
    }
  };

  // Exchange the basis columns and keep the vertex numerically honest: on a
  // residual breach refactorize from scratch, and when even that fails, roll
  // back to the pre-exchange columns and report the move as unusable. Failed
  // attempts still consume budget so a wall of singular exchanges terminates.
  // kDead means not even the pre-exchange basis survives refactorization;
  // the walk then has no sound vertex to continue from and must bail out.
  enum class PivotOutcome { kMoved, kRejected, kDead };
  const auto guarded_pivot = [&](int entering, int leaving_pos) {
    const std::vector<int> before = basis.columns();
    const auto back_out = [&] {
      if (auto fresh = rebuilt(before)) {
        basis = std::move(*fresh);
        refresh();
        ++res.pivots;
        return PivotOutcome::kRejected;
      }
      return PivotOutcome::kDead;
    };
    try {
      basis.pivot(lp, entering, leaving_pos);
    } catch (const DegenerateBasisError&) {
      return back_out();
    }
    refresh();
    if (violation() > kWalkRepairTol) {
      if (auto fresh = rebuilt(basis.columns())) {
        basis = std::move(*fresh);
        refresh();
      }
    }
    if (violation() <= kWalkRepairTol) {
      ++res.pivots;
      record_best();
      if (opts.check_feasibility) audit();
      return PivotOutcome::kMoved;
    }
    return back_out();
  };

  refresh();
  if (violation() > kWalkRepairTol) {
    // inherited factorization drift from the feeding solver; rebuild
    bool repaired = false;
    if (auto fresh = rebuilt(basis.columns())) {
      basis = std::move(*fresh);
      refresh();
      repaired = violation() <= kWalkRepairTol;
    }
    if (!repaired)
      throw DegenerateBasisError("pivot walk start vertex is unusable");
  }
  record_best();
  if (opts.check_feasibility) audit();

  // The vertex that maximizes the total amplitude is heavily degenerate:
  // many slack variables sit in the basis at value zero, so single pivots
  // that change the support rarely exist there. When the direct rules run
  // out of moves we steer instead: pick one sensor by its activation
  // likelihood and run plain cost-driven pivoting that minimizes (to evict)
  // or maximizes (to admit) that single amplitude until the support moves.
  // Each steered pivot stays a feasible vertex exchange of the same program.
  enum class Steer { kGoalMet, kPinned, kBudget, kDead };
  StandardLp steered = lp;  // same constraints, cost rewritten per call
  // Columns whose exchange proved numerically singular at the current
  // vertex; cleared after every successful pivot.
  std::vector<char> banned(lp.cols(), 0);
  const auto steer_amplitude = [&](int target, double sense) -> Steer {
    steered.c.setZero();
    steered.c(target) = sense;
    int degenerate_run = 0;
    while (res.pivots < opts.max_pivots) {
      if (sense > 0.0 ? res.eta(target) <= kSupportTol
                      : res.eta(target) > kSupportTol)
        return Steer::kGoalMet;

      const Eigen::VectorXd lambda = basis.dual(steered);
      const bool bland = degenerate_run >= 50;
      int entering = -1;
      double best_rc = -1e-9;
      for (int j = 0; j < lp.cols(); ++j) {
        if (banned[j] || basis.contains(j)) continue;
        const double rc = steered.c(j) - lambda.dot(steered.a.col(j));
        if (rc >= -1e-9) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (rc < best_rc) {
          best_rc = rc;
          entering = j;
        }
      }
      if (entering < 0) return Steer::kPinned;  // amplitude is at its extreme

      const RatioResult rt = ratio_test(lp, basis, entering);
      if (!rt.bounded) return Steer::kPinned;  // cannot happen on this polytope
      switch (guarded_pivot(entering, rt.leaving_pos)) {
        case PivotOutcome::kMoved:
          degenerate_run = rt.theta < 1e-12 ? degenerate_run + 1 : 0;
          std::fill(banned.begin(), banned.end(), 0);
          break;
        case PivotOutcome::kRejected:
          banned[entering] = 1;
          break;
        case PivotOutcome::kDead:
          return Steer::kDead;
      }
    }
    return Steer::kBudget;
  };

  // One sticky flag per sensor: set when steering proved the amplitude is
  // already at its extreme over the band polytope, cleared whenever the
  // support actually gets closer to the target.
  std::vector<char> pinned(n_eta, 0);
  int best_dist = std::abs(res.support_size - k_target);
  int fruitless_steers = 0;

  if (opts.trace)
    *opts.trace << "walk start g=" << res.support_size << " k=" << k_target
                << " score=" << res.score << "\n";

  while (res.pivots < opts.max_pivots) {
    const int g = res.support_size;
    const int dist = std::abs(g - k_target);
    if (dist < best_dist) {
      best_dist = dist;
      std::fill(pinned.begin(), pinned.end(), 0);
      fruitless_steers = 0;
    }

    // Evaluate every admissible adjacent vertex once.
    struct Move {
      int entering = -1;
      int leaving_pos = -1;
      int support = 0;
      double score = 0.0;
    };
    const Eigen::VectorXd values = basis.basic_values(lp);
    const Move* chosen = nullptr;
    Move best;
    for (int j = 0; j < lp.cols(); ++j) {
      if (banned[j] || basis.contains(j)) continue;
      const Eigen::VectorXd h = basis.direction(lp, j);
      const RatioResult rt = ratio_test(values, h);
      if (!rt.bounded) continue;  // bounded polytopes never hit this

      // support of the eta block after the exchange
      Eigen::VectorXd eta_next = res.eta;
      if (j < n_eta) eta_next(j) = rt.theta;
      const auto& cols = basis.columns();
      for (int p = 0; p < static_cast<int>(cols.size()); ++p) {
        if (cols[p] >= n_eta) continue;
        eta_next(cols[p]) =
            p == rt.leaving_pos ? 0.0 : values(p) - rt.theta * h(p);
      }
      Move mv;
      mv.entering = j;
      mv.leaving_pos = rt.leaving_pos;
      mv.score = support_score(eta_next, psi, gamma, &mv.support);

      // Admissible moves shrink the support when above target and grow it
      // when below; at the target they must hold it and strictly lower the
      // activation score. Best admissible move by score, first-seen on ties.
      const bool admissible =
          g > k_target   ? mv.support < g
          : g < k_target ? mv.support > g
                         : mv.support == k_target &&
                               mv.score < res.score - kScoreImprove;
      if (admissible && (!chosen || mv.score < best.score - kScoreImprove)) {
        best = mv;
        chosen = &best;
      }
    }

    if (!chosen && g == k_target) {
      res.status = PivotSearchStatus::kSparsityMet;
      return res;
    }

    if (chosen) {
      if (opts.trace)
        *opts.trace << "walk pivot=" << res.pivots << " enter=" << best.entering
                    << " leave=" << basis.columns()[best.leaving_pos]
                    << " g=" << best.support << " score=" << best.score << "\n";
      const PivotOutcome outcome =
          guarded_pivot(best.entering, best.leaving_pos);
      if (outcome == PivotOutcome::kDead) break;  // no sound basis left
      if (outcome == PivotOutcome::kMoved)
        std::fill(banned.begin(), banned.end(), 0);
      else
        banned[best.entering] = 1;
      continue;
    }

    // No single pivot changes the support in the right direction: steer one
    // sensor. Above target, evict the active sensor least likely to transmit;
    // below it, admit the inactive sensor most likely to. Ties break toward
    // the smaller index. A sensor whose amplitude steering proved extremal
    // stays out of the running until the support improves.
    int target = -1;
    for (int i = 0; i < n_eta; ++i) {
      if (pinned[i]) continue;
      if (g > k_target) {
        if (res.eta(i) > kSupportTol && (target < 0 || psi(i) < psi(target)))
          target = i;
      } else {
        if (res.eta(i) <= kSupportTol && (target < 0 || psi(i) > psi(target)))
          target = i;
      }
    }
    if (target < 0 || fruitless_steers >= n_eta) {
      res.status = PivotSearchStatus::kInfeasibleSparsity;
      yield_best();
      return res;
    }
    const Steer outcome =
        steer_amplitude(target, g > k_target ? 1.0 : -1.0);
    if (opts.trace)
      *opts.trace << "walk steer target=" << target
                  << (g > k_target ? " evict" : " admit") << " outcome="
                  << (outcome == Steer::kGoalMet  ? "moved"
                      : outcome == Steer::kPinned ? "pinned"
                      : outcome == Steer::kDead   ? "dead"
                                                  : "budget")
                  << " g=" << res.support_size << " pivots=" << res.pivots
                  << "\n";
    if (outcome == Steer::kDead) break;  // no sound basis left
    if (outcome == Steer::kPinned) pinned[target] = 1;
    ++fruitless_steers;  // reset only by real progress at the loop head
  }
  res.status = PivotSearchStatus::kBudgetExhausted;
  yield_best();
  return res;
}

RestorationResult alternating_restore(const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& sensing,
                                      const Eigen::MatrixXd& laplacian,
                                      const Eigen::VectorXd& psi, double eta_max,
                                      const SolverConfig& config,
                                      PowerStepMode mode) {
  const int n = static_cast<int>(sensing.cols());
  if (mode == PowerStepMode::kSparsityPivot) {
    if (config.k_target < 0)
      throw std::invalid_argument("sparsity mode requires a target support");
    if (psi.size() != n)
      throw std::invalid_argument("activation prior size mismatch");
  }

  RestorationResult res;
  res.mu_used = config.mu;

  const InitResult init = init_signal(y, sensing, eta_max);
  Eigen::VectorXd x = init.x0;
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, eta_max);

  if (config.max_outer_iters == 0) {
    res.x_hat = x;
    res.eta_hat = eta;
    res.mu_used = std::max(config.mu, 0.0);
    return res;
  }

  double mu = config.mu;
  PivotSearchStatus last_walk = PivotSearchStatus::kSparsityMet;

  for (int iter = 0; iter < config.max_outer_iters; ++iter) {
    // --- power step ---
    // The box fit restarts from the center of the box each iteration. Warm
    // starting from the previous amplitudes looks tempting but locks the
    // alternation in: the fit is underdetermined, a start at the old support
    // returns a minimizer on the same support, and the band built from it
    // leaves the pivot walk no room to change anything.
    const Eigen::MatrixXd q = sensing * x.asDiagonal();
    const BoxLsResult box = power_box_ls(y, q, eta_max);
    eta = box.eta;

    if (mode == PowerStepMode::kSparsityPivot) {
      const Eigen::VectorXd eps = compute_epsilon(y, q, eta);
      // Divide the band constraints by the largest |Q| entry before pivoting:
      // at physical signal scales Q is many orders below the identity slack
      // blocks, and an unbalanced basis matrix breaks the pivot tolerances.
      // The amplitude columns keep their physical units, so the walked eta
      // needs no unscaling.
      double band_scale = q.cwiseAbs().maxCoeff();
      if (!(band_scale > 0.0)) band_scale = 1.0;
      StandardLp lp = assemble_power_lp(y / band_scale, q / band_scale,
                                        eps / band_scale, eta_max);
      SimplexOptions sopts;
      sopts.max_pivots = config.max_pivots;
      // A numerically degenerate band (singular bases under the phase-1 or
      // push-up pivoting) downgrades this power step to the box estimate
      // rather than failing the whole restoration.
      try {
        LpSolution bfs = two_phase_solve(lp, sopts);
        res.total_pivots += bfs.pivots;
        if (bfs.status == LpStatus::kOptimal) {
          // push the amplitudes up first so the walk starts support-rich
          StandardLp pushed = lp;
          pushed.c.head(n).setConstant(-1.0);
          LpSolution rich =
              simplex_optimize(pushed, std::move(*bfs.basis), sopts);
          res.total_pivots += rich.pivots;

          PivotSearchOptions wopts;
          wopts.max_pivots = config.max_pivots;
          wopts.check_feasibility = config.check_pivot_feasibility;
          wopts.trace = config.diagnostics;
          const PivotSearchResult walk = sparsity_pivot_search(
              lp, n, psi, config.k_target, config.gamma, *rich.basis, wopts);
          res.total_pivots += walk.pivots;
          res.max_pivot_violation =
              std::max(res.max_pivot_violation, walk.max_violation);
          eta = walk.eta;
          last_walk = walk.status;
        } else {
          // numerically infeasible band: fall back to the box estimate
          last_walk = PivotSearchStatus::kBudgetExhausted;
          if (config.diagnostics)
            *config.diagnostics << "power lp infeasible at iteration " << iter
                                << "; keeping box estimate\n";
        }
      } catch (const DegenerateBasisError& e) {
        last_walk = PivotSearchStatus::kBudgetExhausted;
        if (config.diagnostics)
          *config.diagnostics << "power lp degenerate at iteration " << iter
                              << " (" << e.what() << "); keeping box estimate\n";
      }

      // The band polytope sits inside the residual sphere of radius
      // sum eps_i^2; record by how much the returned amplitudes ever leave it.
      const double excess = (y - q * eta).squaredNorm() - eps.squaredNorm();
      res.max_fidelity_gap = std::max(res.max_fidelity_gap, excess);
    }

    // --- signal step ---
    if (mu < 0.0) {
      const Eigen::MatrixXd a = sensing * eta.asDiagonal();
      const double tr_l = laplacian.trace();
      mu = tr_l > 0.0 ? kAutoMuFactor * a.squaredNorm() / tr_l : 0.0;
    }
    const Eigen::VectorXd x_next = signal_step(y, sensing, eta, laplacian, mu);

    const double fidelity =
        (y - sensing * eta.cwiseProduct(x_next)).squaredNorm();
    const double smooth = x_next.dot(laplacian * x_next);
    int g = 0;
    double score = 0.0;
    if (mode == PowerStepMode::kSparsityPivot)
      score = support_score(eta, psi, config.gamma, &g);
    res.objective_trace.push_back(fidelity + mu * smooth + score);

    const double dx = (x_next - x).norm() / std::max(1.0, x.norm());
    if (config.diagnostics)
      *config.diagnostics << "iter=" << iter << " fidelity=" << fidelity
                          << " smoothness=" << smooth << " score=" << score
                          << " g=" << g << " pivots=" << res.total_pivots
                          << " dx=" << dx << "\n";
    x = x_next;
    res.outer_iters = iter + 1;
    if (dx <= config.x_convergence_tol) {
      res.converged = true;
      break;
    }
  }

  res.x_hat = x;
  res.eta_hat = eta;
  res.mu_used = mu;
  for (int i = 0; i < n; ++i)
    if (eta(i) > kSupportTol) res.active_estimate.push_back(i);
  if (mode == PowerStepMode::kSparsityPivot) {
    res.last_walk_status = last_walk;
    res.sparsity_met = last_walk == PivotSearchStatus::kSparsityMet;
    if (res.converged)
      res.status = RestoreStatus::kConverged;
    else if (last_walk == PivotSearchStatus::kInfeasibleSparsity)
      res.status = RestoreStatus::kInfeasibleSparsity;
    else
      res.status = RestoreStatus::kIterLimit;
  } else {
    res.status = res.converged ? RestoreStatus::kConverged : RestoreStatus::kIterLimit;
  }
  return res;
}

RestorationResult restore(const RealSystem& system,
                          const Eigen::MatrixXd& laplacian,
                          const Eigen::VectorXd& psi, double eta_max,
                          const SolverConfig& config) {
  return alternating_restore(system.y, system.sensing, laplacian, psi, eta_max,
                             config, PowerStepMode::kSparsityPivot);
}

}  // namespace ehwsn
