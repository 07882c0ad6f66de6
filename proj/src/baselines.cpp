#include "ehwsn/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace ehwsn {

namespace {

// min ||alpha||_1 s.t. |y - B alpha| <= slack, via the positive/negative
// split alpha = ap - am and band slacks s1, s2:
//   B ap - B am + s1 = y + slack
//   B ap - B am - s2 = y - slack
CsResult l1_band_fit(const Eigen::MatrixXd& basis_mat, const Eigen::VectorXd& y,
                     double slack0, int max_widenings) {
  const int m = static_cast<int>(y.size());
  const int n = static_cast<int>(basis_mat.cols());

  // Work on band rows divided by the largest dictionary entry so the pivot
  // tolerances see an O(1) matrix; the coefficient units are unaffected.
  double row_scale = basis_mat.cwiseAbs().maxCoeff();
  if (!(row_scale > 0.0)) row_scale = 1.0;
  const Eigen::MatrixXd dict = basis_mat / row_scale;
  const Eigen::VectorXd ys = y / row_scale;

  CsResult res;
  res.alpha_hat = Eigen::VectorXd::Zero(n);
  double slack = slack0;
  if (slack <= 0.0) slack = std::max(1e-12, 1e-9 * y.lpNorm<Eigen::Infinity>());

  for (int attempt = 0; attempt <= max_widenings; ++attempt, slack *= 10.0) {
    const double s = slack / row_scale;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m, 2 * n + 2 * m);
    a.block(0, 0, m, n) = dict;
    a.block(0, n, m, n) = -dict;
    a.block(0, 2 * n, m, m) = Eigen::MatrixXd::Identity(m, m);
    a.block(m, 0, m, n) = dict;
    a.block(m, n, m, n) = -dict;
    a.block(m, 2 * n + m, m, m) = -Eigen::MatrixXd::Identity(m, m);

    Eigen::VectorXd b(2 * m);
    b << ys.array() + s, ys.array() - s;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n + 2 * m);
    c.head(2 * n).setOnes();

    const StandardLp lp = StandardLp::make(std::move(a), std::move(b), std::move(c));
    LpSolution start = two_phase_solve(lp);
    res.pivots += start.pivots;
    if (start.status != LpStatus::kOptimal) continue;

    LpSolution opt = simplex_optimize(lp, std::move(*start.basis));
    res.pivots += opt.pivots;
    if (opt.status != LpStatus::kOptimal) continue;

    res.alpha_hat = opt.z.head(n) - opt.z.segment(n, n);
    res.feasible = true;
    res.slack_used = slack;
    return res;
  }
  res.slack_used = slack / 10.0;  // last width actually tried
  return res;
}

}  // namespace

CsResult cs_reference(const RealSystem& system, const GraphSpectrum& spectrum,
                      const Eigen::VectorXd& eta_assumed, const CsOptions& opts) {
  const int n = static_cast<int>(spectrum.eigenvectors.rows());
  if (eta_assumed.size() != n)
    throw std::invalid_argument("amplitude vector size mismatch");

  Eigen::MatrixXd basis_mat;
  Eigen::VectorXd y = system.y;
  if (opts.model == CsSensingModel::kSignatureChannelBasis) {
    basis_mat = system.sensing * eta_assumed.asDiagonal() * spectrum.eigenvectors;
  } else {
    // Literal sample-the-graph-signal model: each measurement reads one
    // assumed-active node, so the dictionary is the matching rows of V.
    std::vector<int> omega;
    for (int i = 0; i < n; ++i)
      if (eta_assumed(i) > kSupportTol) omega.push_back(i);
    if (static_cast<int>(omega.size()) != y.size())
      throw std::invalid_argument(
          "row-sampled model needs as many assumed-active nodes as measurements");
    basis_mat.resize(y.size(), n);
    for (std::size_t r = 0; r < omega.size(); ++r)
      basis_mat.row(static_cast<int>(r)) = spectrum.eigenvectors.row(omega[r]);
  }

  const double slack0 = opts.noise_slack >= 0.0
                            ? opts.noise_slack
                            : 3.0 * std::sqrt(opts.component_noise_w);
  CsResult res = l1_band_fit(basis_mat, y, slack0, opts.max_slack_widenings);
  res.x_hat = res.feasible ? (spectrum.eigenvectors * res.alpha_hat).eval()
                           : Eigen::VectorXd::Zero(n);
  return res;
}

CsResult cs_reference_unknown(const RealSystem& system,
                              const GraphSpectrum& spectrum,
                              const std::vector<int>& assumed_active,
                              const SensorField& field, EtaGuessPolicy policy,
                              const CsOptions& opts) {
  const int n = field.n();
  Eigen::VectorXd eta_guess = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd dist = field.distances_to_fc();
  for (int i : assumed_active) {
    if (i < 0 || i >= n) throw std::invalid_argument("assumed index out of range");
    if (policy == EtaGuessPolicy::kEtaMax) {
      eta_guess(i) = std::sqrt(field.p_max_w);
    } else {
      // mean harvested energy under unit-power fading: rho E|g|^2 P_e T_e
      const double mean_gain = std::pow(10.0, -path_loss_db(dist(i)) / 10.0);
      const double mean_xi = field.rho(i) * mean_gain * field.p_e_w * field.t_e;
      eta_guess(i) = std::sqrt(std::min(field.p_max_w, mean_xi / field.t_e));
    }
  }
  return cs_reference(system, spectrum, eta_guess, opts);
}

RestorationResult baseline_restore(const RealSystem& system,
                                   const Eigen::MatrixXd& laplacian,
                                   double eta_max, const SolverConfig& config) {
  return alternating_restore(system.y, system.sensing, laplacian,
                             Eigen::VectorXd(), eta_max, config,
                             PowerStepMode::kBoxOnly);
}

Eigen::VectorXd known_power_restore(const RealSystem& system,
                                    const Eigen::VectorXd& eta_true,
                                    const Eigen::MatrixXd& laplacian, double mu) {
  if (mu < 0.0) {
    const Eigen::MatrixXd a = system.sensing * eta_true.asDiagonal();
    const double tr_l = laplacian.trace();
    mu = tr_l > 0.0 ? kAutoMuFactor * a.squaredNorm() / tr_l : 0.0;
  }
  return signal_step(system.y, system.sensing, eta_true, laplacian, mu);
}

}  // namespace ehwsn
