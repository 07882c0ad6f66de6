#include "ehwsn/wsn.hpp"

#include <cmath>
#include <stdexcept>

namespace ehwsn {

Eigen::VectorXd SensorField::distances_to_fc() const {
  Eigen::VectorXd d(n());
  for (int i = 0; i < n(); ++i) d(i) = (positions[i] - fc_position).norm();
  return d;
}

std::vector<Eigen::Vector2d> place_sensors(int n, double side, Rng& rng) {
  if (n <= 0 || side <= 0.0) throw std::invalid_argument("bad placement parameters");
  std::vector<Eigen::Vector2d> p(n);
  for (int i = 0; i < n; ++i) {
    const double x = side * rng.uniform();
    const double y = side * rng.uniform();
    p[i] = {x, y};
  }
  return p;
}

double path_loss_db(double d) {
  return 30.0 + 20.0 * std::log10(std::max(d, 1.0));
}

ChannelRealization draw_channels(const SensorField& field, Rng& rng,
                                 FadingMode mode) {
  const int n = field.n();
  ChannelRealization ch;
  ch.mode = mode;
  ch.g.resize(n);
  const Eigen::VectorXd d = field.distances_to_fc();
  for (int i = 0; i < n; ++i) {
    const double amp = std::sqrt(std::pow(10.0, -path_loss_db(d(i)) / 10.0));
    switch (mode) {
      case FadingMode::kRealMagnitude:
        ch.g(i) = amp * rng.rayleigh_unit_power();
        break;
      case FadingMode::kComplex: {
        const double re = rng.normal();
        const double im = rng.normal();
        ch.g(i) = amp / std::sqrt(2.0) * std::complex<double>(re, im);
        break;
      }
      case FadingMode::kUnitGain:
        ch.g(i) = amp;
        break;
    }
  }
  ch.h = ch.g;  // reciprocal link within the coherence interval
  return ch;
}

double harvest_energy(double rho, std::complex<double> g, double p_e_w,
                      double t_e) {
  return rho * std::norm(g) * p_e_w * t_e;
}

std::vector<bool> sample_activation(const Eigen::VectorXd& psi, Rng& rng) {
  std::vector<bool> active(psi.size());
  for (int i = 0; i < psi.size(); ++i) active[i] = rng.bernoulli(psi(i));
  return active;
}

Eigen::MatrixXd gen_signatures(int m, int n, Rng& rng) {
  if (m <= 0 || n <= 0) throw std::invalid_argument("bad signature dimensions");
  Eigen::MatrixXd phi(m, n);
  for (int j = 0; j < n; ++j) {
    bool any = false;
    while (!any) {
      for (int i = 0; i < m; ++i) {
        phi(i, j) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        any = any || phi(i, j) > 0.0;
      }
    }
  }
  return phi;
}

Frame synthesize_frame(const SensorField& field, const ChannelRealization& channels,
                       const Eigen::VectorXd& x, const Eigen::MatrixXd& phi,
                       double noise_power_w, Rng& rng) {
  const int n = field.n();
  const int m = static_cast<int>(phi.rows());
  if (phi.cols() != n || x.size() != n || channels.g.size() != n)
    throw std::invalid_argument("frame dimension mismatch");

  Frame f;
  f.phi = phi;
  f.channels = channels;
  f.x_true = x;
  f.active = sample_activation(field.psi, rng);

  // Fractions are drawn for every sensor (not only active ones) so that the
  // activation pattern never shifts the draw sequence.
  Eigen::VectorXd fraction = Eigen::VectorXd::Ones(n);
  if (field.power_policy == PowerPolicy::kUniformRandomFraction)
    for (int i = 0; i < n; ++i) fraction(i) = rng.uniform();

  f.eta_true = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (!f.active[i]) continue;
    const double xi = harvest_energy(field.rho(i), channels.g(i), field.p_e_w,
                                     field.t_e);
    const double p = fraction(i) * std::min(field.p_max_w, xi / field.t_e);
    f.eta_true(i) = std::sqrt(p);
  }

  f.noise.resize(m);
  if (channels.mode == FadingMode::kComplex) {
    const double s = std::sqrt(noise_power_w / 2.0);
    for (int i = 0; i < m; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      f.noise(i) = s * std::complex<double>(re, im);
    }
  } else {
    const double s = std::sqrt(noise_power_w);
    for (int i = 0; i < m; ++i) f.noise(i) = s * rng.normal();
  }

  f.y = phi * (channels.h.cwiseProduct(f.eta_true.cwiseProduct(x).cast<std::complex<double>>())) +
        f.noise;
  return f;
}

RealSystem stack_real(const Frame& frame) {
  const Eigen::MatrixXcd sensing_c = frame.phi * frame.channels.h.asDiagonal();
  RealSystem s;
  if (frame.channels.mode == FadingMode::kComplex) {
    const int m = static_cast<int>(frame.y.size());
    s.y.resize(2 * m);
    s.y << frame.y.real(), frame.y.imag();
    s.sensing.resize(2 * m, sensing_c.cols());
    s.sensing << sensing_c.real(), sensing_c.imag();
  } else {
    s.y = frame.y.real();
    s.sensing = sensing_c.real();
  }
  return s;
}

}  // namespace ehwsn
