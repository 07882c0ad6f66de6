// Comparison schemes: sparse spectral recovery by l1 minimization (with known
// or guessed transmit amplitudes) and degraded variants of the alternating
// solver.
#pragma once

#include <Eigen/Dense>

#include "ehwsn/graph.hpp"
#include "ehwsn/solver.hpp"
#include "ehwsn/wsn.hpp"

namespace ehwsn {

enum class CsSensingModel {
  // B = sensing * diag(eta_assumed) * V: the actual acquisition chain applied
  // to the spectral representation.
  kSignatureChannelBasis,
  // Row-sampled GFT basis; requires exactly M assumed-active sensors.
  kRowSampledGft
};

struct CsOptions {
  // Componentwise residual band half-width. Negative means auto:
  // 3 sqrt(component_noise_w).
  double noise_slack = -1.0;
  // Noise variance of one real observation component, for the auto slack.
  double component_noise_w = 1e-13;
  CsSensingModel model = CsSensingModel::kSignatureChannelBasis;
  int max_slack_widenings = 3;  // x10 each retry when the LP is infeasible
};

struct CsResult {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd alpha_hat;   // recovered spectral coefficients
  bool feasible = false;
  double slack_used = 0.0;
  long pivots = 0;
};

// min ||alpha||_1 s.t. |y - B alpha| <= slack componentwise, solved through
// alpha = alpha+ - alpha- on the Simplex engine; x_hat = V alpha.
CsResult cs_reference(const RealSystem& system, const GraphSpectrum& spectrum,
                      const Eigen::VectorXd& eta_assumed,
                      const CsOptions& opts = {});

enum class EtaGuessPolicy {
  kEtaMax,          // every assumed-active sensor at full amplitude
  kExpectedHarvest  // amplitude from the mean harvested energy
};

// Same recovery with the amplitudes replaced by a guess on an assumed
// support, modeling a receiver without power knowledge.
CsResult cs_reference_unknown(const RealSystem& system,
                              const GraphSpectrum& spectrum,
                              const std::vector<int>& assumed_active,
                              const SensorField& field, EtaGuessPolicy policy,
                              const CsOptions& opts = {});

// Alternating solver with the power step reduced to box-constrained LS (no
// sparsity-controlled vertex walk).
RestorationResult baseline_restore(const RealSystem& system,
                                   const Eigen::MatrixXd& laplacian,
                                   double eta_max, const SolverConfig& config);

// Single signal step with the true amplitudes: the performance cap for any
// power-estimation scheme.
Eigen::VectorXd known_power_restore(const RealSystem& system,
                                    const Eigen::VectorXd& eta_true,
                                    const Eigen::MatrixXd& laplacian, double mu);

}  // namespace ehwsn
