// Physical layer of the sensor network: placement, path loss, fading,
// downlink energy harvesting, activation, signatures, and synthesis of the
// received vector y = Phi H diag(eta) x + w.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ehwsn/rng.hpp"

namespace ehwsn {

// kUnitGain pins |f| = 1 (no fading); kept as a deterministic test hook.
enum class FadingMode { kRealMagnitude, kComplex, kUnitGain };

// How an active sensor spends its harvested budget.
enum class PowerPolicy { kFullBudget, kUniformRandomFraction };

struct SensorField {
  std::vector<Eigen::Vector2d> positions;
  Eigen::Vector2d fc_position = Eigen::Vector2d::Zero();
  Eigen::VectorXd psi;  // activation probabilities, (0, 1]
  Eigen::VectorXd rho;  // harvesting efficiencies, (0, 1]
  double p_max_w = 0.1;
  double p_e_w = 0.1;  // FC transmit power
  double t_e = 1.0;    // normalized harvesting time
  PowerPolicy power_policy = PowerPolicy::kFullBudget;

  int n() const { return static_cast<int>(positions.size()); }
  Eigen::VectorXd eta_max() const {
    return Eigen::VectorXd::Constant(n(), std::sqrt(p_max_w));
  }
  Eigen::VectorXd distances_to_fc() const;
};

// n i.i.d. uniform points in [0, side]^2
std::vector<Eigen::Vector2d> place_sensors(int n, double side, Rng& rng);

// 30 dB at the 1 m reference, exponent 2; distances below 1 m clamp to the
// reference (near-field guard).
double path_loss_db(double d);

struct ChannelRealization {
  Eigen::VectorXcd g;  // downlink
  Eigen::VectorXcd h;  // uplink; equals g by reciprocity
  FadingMode mode = FadingMode::kRealMagnitude;
};

ChannelRealization draw_channels(const SensorField& field, Rng& rng,
                                 FadingMode mode);

// xi = rho |g|^2 P_e T_e
double harvest_energy(double rho, std::complex<double> g, double p_e_w, double t_e);

std::vector<bool> sample_activation(const Eigen::VectorXd& psi, Rng& rng);

// m x n Bernoulli(1/2) matrix over {0,1}; all-zero columns are redrawn since
// a sensor with a zero signature is unobservable.
Eigen::MatrixXd gen_signatures(int m, int n, Rng& rng);

struct Frame {
  Eigen::MatrixXd phi;
  ChannelRealization channels;
  std::vector<bool> active;
  Eigen::VectorXd eta_true;  // sqrt of transmit power, zero for inactive
  Eigen::VectorXd x_true;
  Eigen::VectorXcd noise;
  Eigen::VectorXcd y;  // Phi H diag(eta) x + noise, by construction
};

Frame synthesize_frame(const SensorField& field, const ChannelRealization& channels,
                       const Eigen::VectorXd& x, const Eigen::MatrixXd& phi,
                       double noise_power_w, Rng& rng);

// Real view of a frame's measurement. In complex mode the real and imaginary
// parts are stacked into 2M rows; in real modes this is the plain M-row system.
struct RealSystem {
  Eigen::VectorXd y;
  Eigen::MatrixXd sensing;  // rows of Phi * diag(h)
};

RealSystem stack_real(const Frame& frame);

}  // namespace ehwsn
