// Monte-Carlo experiment driver: sweeps signature counts, runs the recovery
// schemes on identical frames, and aggregates per-frame MSE into a CSV table.
// The frame loop has a serial and an OpenMP execution path that produce
// bit-identical results.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "ehwsn/baselines.hpp"
#include "ehwsn/graph.hpp"
#include "ehwsn/solver.hpp"
#include "ehwsn/wsn.hpp"

namespace ehwsn {

enum class Scheme {
  kProposed,              // alternating solver, sparsity-controlled power step
  kProposedBaseline,      // alternating solver, box-LS power step only
  kProposedKnownPower,    // single signal step with true amplitudes
  kReferenceKnownPower,   // l1 spectral recovery, true amplitudes
  kReferenceUnknownPower  // l1 spectral recovery, guessed amplitudes
};

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

enum class KRule {
  kEqualM,         // target support = signature count
  kExpectedActive  // target support = round(sum psi)
};

enum class PhiPolicy { kFixedPerExperiment, kPerFrame };

enum class ExecutionMode { kSerial, kOpenMp };

struct ExperimentConfig {
  int n_sensors = 30;
  double area_side_m = 10.0;
  int knn_k = 8;
  double sigma2 = 5.0;     // kernel bandwidth of the graph weights
  double delta = 0.01;     // GMRF precision regularizer
  std::vector<int> m_values = {5, 10, 15, 20, 25};
  KRule k_rule = KRule::kEqualM;
  int n_frames = 1000;
  std::uint64_t seed = 1;
  double noise_power_w = 1e-13;
  double p_e_w = 0.1;
  double p_max_w = 0.1;
  double t_e = 1.0;
  double rho = 0.9;
  double psi_high = 0.9;  // odd-indexed sensors
  double psi_low = 0.1;   // even-indexed sensors
  FadingMode fading_mode = FadingMode::kRealMagnitude;
  PhiPolicy phi_policy = PhiPolicy::kFixedPerExperiment;
  PowerPolicy power_policy = PowerPolicy::kFullBudget;
  EtaGuessPolicy eta_guess_policy = EtaGuessPolicy::kEtaMax;
  std::vector<Scheme> schemes = {
      Scheme::kProposed, Scheme::kProposedBaseline, Scheme::kProposedKnownPower,
      Scheme::kReferenceKnownPower, Scheme::kReferenceUnknownPower};
  SolverConfig solver;
  double cs_slack_sigmas = 3.0;  // multiplier on the per-component noise std
  bool verbose = false;

  // Flat "key = value" file; '#' comments; comma-separated lists.
  static ExperimentConfig from_file(const std::string& path);
};

double compute_mse(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_hat);

struct MseRow {
  std::string scheme;
  int m = 0;
  double sigma2 = 0.0;
  double mse_mean = 0.0;
  double mse_stderr = 0.0;
  int frames_used = 0;
  std::uint64_t seed = 0;
};

using MseTable = std::vector<MseRow>;

struct CellStats {
  int frames_attempted = 0;
  int frames_used = 0;
  int sparsity_met = 0;
  int sparsity_infeasible = 0;  // final walk reported infeasible sparsity
  double max_fidelity_gap = 0.0;
  double max_pivot_violation = 0.0;
  std::vector<double> per_frame_mse;  // NaN where the scheme failed
  std::string first_error;            // message of the first failed frame
};

// Keyed by (scheme name, signature count).
using RunStats = std::map<std::pair<std::string, int>, CellStats>;

MseTable run_experiment(const ExperimentConfig& config,
                        ExecutionMode mode = ExecutionMode::kOpenMp,
                        RunStats* stats = nullptr);

void emit_csv(const MseTable& table, std::ostream& out);
std::string csv_string(const MseTable& table);
MseTable parse_csv(std::istream& in);

}  // namespace ehwsn
