#include "ehwsn/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ehwsn {

namespace {

// Substream salts for the experiment's independent random draws.
constexpr std::uint64_t kSaltPositions = 1;
constexpr std::uint64_t kSaltPhi = 2;
constexpr std::uint64_t kSaltFrame = 3;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

// Kahan-compensated sum over the values selected by `use`.
double compensated_sum(const std::vector<double>& v,
                       const std::vector<char>& use,
                       const std::function<double(double)>& f) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!use[i]) continue;
    const double term = f(v[i]) - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return sum;
}

struct FrameOutcome {
  double mse = std::numeric_limits<double>::quiet_NaN();
  bool sparsity_met = false;
  bool sparsity_infeasible = false;
  double fidelity_gap = 0.0;
  double pivot_violation = 0.0;
  std::string error;  // nonempty when the scheme threw on this frame
};

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kProposed: return "proposed";
    case Scheme::kProposedBaseline: return "proposed_baseline";
    case Scheme::kProposedKnownPower: return "proposed_known_power";
    case Scheme::kReferenceKnownPower: return "reference_known_power";
    case Scheme::kReferenceUnknownPower: return "reference_unknown_power";
  }
  throw std::invalid_argument("unknown scheme");
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "proposed") return Scheme::kProposed;
  if (name == "proposed_baseline") return Scheme::kProposedBaseline;
  if (name == "proposed_known_power") return Scheme::kProposedKnownPower;
  if (name == "reference_known_power") return Scheme::kReferenceKnownPower;
  if (name == "reference_unknown_power") return Scheme::kReferenceUnknownPower;
  throw std::invalid_argument("unknown scheme name: " + name);
}

double compute_mse(const Eigen::VectorXd& x_true, const Eigen::VectorXd& x_hat) {
  if (x_true.size() != x_hat.size())
    throw std::invalid_argument("mse size mismatch");
  return (x_true - x_hat).squaredNorm() / static_cast<double>(x_true.size());
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);

  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    auto as_double = [&] { return std::stod(val); };
    auto as_int = [&] { return std::stoi(val); };
    auto as_bool = [&] { return val == "1" || val == "true" || val == "yes"; };

    if (key == "n_sensors") cfg.n_sensors = as_int();
    else if (key == "area_side_m") cfg.area_side_m = as_double();
    else if (key == "knn_k") cfg.knn_k = as_int();
    else if (key == "sigma2") cfg.sigma2 = as_double();
    else if (key == "delta") cfg.delta = as_double();
    else if (key == "m_values") {
      cfg.m_values.clear();
      for (const auto& t : split(val, ',')) cfg.m_values.push_back(std::stoi(t));
    } else if (key == "k_rule") {
      if (val == "equal_m") cfg.k_rule = KRule::kEqualM;
      else if (val == "expected_active") cfg.k_rule = KRule::kExpectedActive;
      else throw std::runtime_error("bad k_rule: " + val);
    } else if (key == "n_frames") cfg.n_frames = as_int();
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "noise_power_w") cfg.noise_power_w = as_double();
    else if (key == "p_e_w") cfg.p_e_w = as_double();
    else if (key == "p_max_w") cfg.p_max_w = as_double();
    else if (key == "t_e") cfg.t_e = as_double();
    else if (key == "rho") cfg.rho = as_double();
    else if (key == "psi_high") cfg.psi_high = as_double();
    else if (key == "psi_low") cfg.psi_low = as_double();
    else if (key == "fading") {
      if (val == "real") cfg.fading_mode = FadingMode::kRealMagnitude;
      else if (val == "complex") cfg.fading_mode = FadingMode::kComplex;
      else if (val == "unit") cfg.fading_mode = FadingMode::kUnitGain;
      else throw std::runtime_error("bad fading mode: " + val);
    } else if (key == "phi_policy") {
      if (val == "fixed") cfg.phi_policy = PhiPolicy::kFixedPerExperiment;
      else if (val == "per_frame") cfg.phi_policy = PhiPolicy::kPerFrame;
      else throw std::runtime_error("bad phi_policy: " + val);
    } else if (key == "power_policy") {
      if (val == "full") cfg.power_policy = PowerPolicy::kFullBudget;
      else if (val == "random_fraction")
        cfg.power_policy = PowerPolicy::kUniformRandomFraction;
      else throw std::runtime_error("bad power_policy: " + val);
    } else if (key == "eta_guess") {
      if (val == "eta_max") cfg.eta_guess_policy = EtaGuessPolicy::kEtaMax;
      else if (val == "expected_harvest")
        cfg.eta_guess_policy = EtaGuessPolicy::kExpectedHarvest;
      else throw std::runtime_error("bad eta_guess: " + val);
    } else if (key == "schemes") {
      cfg.schemes.clear();
      for (const auto& t : split(val, ','))
        cfg.schemes.push_back(scheme_from_string(t));
    } else if (key == "mu") cfg.solver.mu = as_double();
    else if (key == "gamma") cfg.solver.gamma = as_double();
    else if (key == "max_outer_iters") cfg.solver.max_outer_iters = as_int();
    else if (key == "x_tol") cfg.solver.x_convergence_tol = as_double();
    else if (key == "max_pivots") cfg.solver.max_pivots = std::stol(val);
    else if (key == "check_pivot_feasibility")
      cfg.solver.check_pivot_feasibility = as_bool();
    else if (key == "cs_slack_sigmas") cfg.cs_slack_sigmas = as_double();
    else if (key == "verbose") cfg.verbose = as_bool();
    else
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
  }
  return cfg;
}

MseTable run_experiment(const ExperimentConfig& config, ExecutionMode mode,
                        RunStats* stats) {
  const int n = config.n_sensors;

  SensorField field;
  {
    Rng rng = Rng::substream(config.seed, kSaltPositions);
    field.positions = place_sensors(n, config.area_side_m, rng);
  }
  field.fc_position = {config.area_side_m / 2.0, config.area_side_m / 2.0};
  field.psi.resize(n);
  for (int i = 0; i < n; ++i)
    field.psi(i) = (i % 2 == 1) ? config.psi_high : config.psi_low;
  field.rho = Eigen::VectorXd::Constant(n, config.rho);
  field.p_max_w = config.p_max_w;
  field.p_e_w = config.p_e_w;
  field.t_e = config.t_e;
  field.power_policy = config.power_policy;

  const Graph graph = build_knn_graph(field.positions, config.knn_k, config.sigma2);
  const GmrfModel gmrf = GmrfModel::build(graph, config.delta);
  const GraphSpectrum spectrum = eigendecompose(graph);
  const double eta_max = std::sqrt(config.p_max_w);

  const bool complex_mode = config.fading_mode == FadingMode::kComplex;
  const double component_noise =
      config.noise_power_w / (complex_mode ? 2.0 : 1.0);

  MseTable table;
  for (int m : config.m_values) {
    const int k_target =
        config.k_rule == KRule::kEqualM
            ? m
            : static_cast<int>(std::lround(field.psi.sum()));

    Eigen::MatrixXd phi_fixed;
    if (config.phi_policy == PhiPolicy::kFixedPerExperiment) {
      Rng rng = Rng::substream(config.seed, kSaltPhi, static_cast<std::uint64_t>(m));
      phi_fixed = gen_signatures(m, n, rng);
    }

    const int n_schemes = static_cast<int>(config.schemes.size());
    std::vector<std::vector<FrameOutcome>> outcomes(
        n_schemes, std::vector<FrameOutcome>(config.n_frames));

    // Every scheme consumes the identical frame; outcome slots are indexed
    // by frame, so the parallel and serial paths fill the same data.
    auto run_frame = [&](int f) {
      Rng rng = Rng::substream(config.seed, kSaltFrame,
                               static_cast<std::uint64_t>(m),
                               static_cast<std::uint64_t>(f));
      const Eigen::VectorXd x_true = sample_gmrf(gmrf, rng);
      const ChannelRealization channels =
          draw_channels(field, rng, config.fading_mode);
      Eigen::MatrixXd phi = phi_fixed;
      if (config.phi_policy == PhiPolicy::kPerFrame)
        phi = gen_signatures(m, n, rng);
      const Frame frame = synthesize_frame(field, channels, x_true, phi,
                                           config.noise_power_w, rng);
      const RealSystem system = stack_real(frame);

      for (int s = 0; s < n_schemes; ++s) {
        FrameOutcome& out = outcomes[s][f];
        try {
          switch (config.schemes[s]) {
            case Scheme::kProposed: {
              SolverConfig sc = config.solver;
              sc.k_target = k_target;
              const RestorationResult r =
                  restore(system, graph.laplacian, field.psi, eta_max, sc);
              out.mse = compute_mse(x_true, r.x_hat);
              out.sparsity_met = r.sparsity_met;
              out.sparsity_infeasible =
                  !r.sparsity_met &&
                  r.last_walk_status == PivotSearchStatus::kInfeasibleSparsity;
              out.fidelity_gap = r.max_fidelity_gap;
              out.pivot_violation = r.max_pivot_violation;
              break;
            }
            case Scheme::kProposedBaseline: {
              const RestorationResult r = baseline_restore(
                  system, graph.laplacian, eta_max, config.solver);
              out.mse = compute_mse(x_true, r.x_hat);
              out.fidelity_gap = r.max_fidelity_gap;
              break;
            }
            case Scheme::kProposedKnownPower: {
              const Eigen::VectorXd x_hat = known_power_restore(
                  system, frame.eta_true, graph.laplacian, config.solver.mu);
              out.mse = compute_mse(x_true, x_hat);
              break;
            }
            case Scheme::kReferenceKnownPower: {
              CsOptions copts;
              copts.noise_slack = config.cs_slack_sigmas * std::sqrt(component_noise);
              copts.component_noise_w = component_noise;
              const CsResult r =
                  cs_reference(system, spectrum, frame.eta_true, copts);
              if (r.feasible) out.mse = compute_mse(x_true, r.x_hat);
              break;
            }
            case Scheme::kReferenceUnknownPower: {
              CsOptions copts;
              copts.noise_slack = config.cs_slack_sigmas * std::sqrt(component_noise);
              copts.component_noise_w = component_noise;
              // The reference schemes assume the active set is known at the
              // receiver; only the amplitudes are guessed here.
              std::vector<int> assumed_active;
              for (int i = 0; i < n; ++i)
                if (frame.active[i]) assumed_active.push_back(i);
              const CsResult r = cs_reference_unknown(
                  system, spectrum, assumed_active, field,
                  config.eta_guess_policy, copts);
              if (r.feasible) out.mse = compute_mse(x_true, r.x_hat);
              break;
            }
          }
        } catch (const std::exception& e) {
          // frame counts as failed for this scheme; mse stays NaN
          out.error = e.what();
        }
      }
    };

    if (mode == ExecutionMode::kOpenMp) {
#pragma omp parallel for schedule(dynamic)
      for (int f = 0; f < config.n_frames; ++f) run_frame(f);
    } else {
      for (int f = 0; f < config.n_frames; ++f) run_frame(f);
    }

    // Serial aggregation pass in frame order, shared by both execution modes.
    for (int s = 0; s < n_schemes; ++s) {
      std::vector<double> mse(config.n_frames);
      std::vector<char> ok(config.n_frames);
      CellStats cell;
      cell.frames_attempted = config.n_frames;
      for (int f = 0; f < config.n_frames; ++f) {
        const FrameOutcome& out = outcomes[s][f];
        mse[f] = out.mse;
        ok[f] = std::isfinite(out.mse) ? 1 : 0;
        if (ok[f]) ++cell.frames_used;
        if (out.sparsity_met) ++cell.sparsity_met;
        if (out.sparsity_infeasible) ++cell.sparsity_infeasible;
        if (!out.error.empty() && cell.first_error.empty())
          cell.first_error = out.error;
        cell.max_fidelity_gap = std::max(cell.max_fidelity_gap, out.fidelity_gap);
        cell.max_pivot_violation =
            std::max(cell.max_pivot_violation, out.pivot_violation);
      }
      cell.per_frame_mse = mse;

      MseRow row;
      row.scheme = to_string(config.schemes[s]);
      row.m = m;
      row.sigma2 = config.sigma2;
      row.seed = config.seed;
      row.frames_used = cell.frames_used;
      if (cell.frames_used > 0) {
        const double total =
            compensated_sum(mse, ok, [](double v) { return v; });
        row.mse_mean = total / cell.frames_used;
        if (cell.frames_used > 1) {
          const double mean = row.mse_mean;
          const double ss = compensated_sum(
              mse, ok, [mean](double v) { return (v - mean) * (v - mean); });
          row.mse_stderr =
              std::sqrt(ss / (cell.frames_used - 1) / cell.frames_used);
        }
      } else {
        row.mse_mean = std::numeric_limits<double>::quiet_NaN();
        row.mse_stderr = std::numeric_limits<double>::quiet_NaN();
      }
      table.push_back(row);
      if (config.verbose) {
        std::cerr << "cell " << row.scheme << " m=" << m
                  << " mse=" << row.mse_mean << " used=" << row.frames_used
                  << "\n";
        if (!cell.first_error.empty())
          std::cerr << "  first failure: " << cell.first_error << "\n";
      }
      if (stats) (*stats)[{row.scheme, m}] = std::move(cell);
    }
  }
  return table;
}

void emit_csv(const MseTable& table, std::ostream& out) {
  out << "scheme,M,sigma2,mse_mean,mse_stderr,frames_used,seed\n";
  char buf[96];
  for (const auto& r : table) {
    out << r.scheme << ',' << r.m << ',';
    std::snprintf(buf, sizeof buf, "%.17e,%.17e,%.17e", r.sigma2, r.mse_mean,
                  r.mse_stderr);
    out << buf << ',' << r.frames_used << ',' << r.seed << '\n';
  }
}

std::string csv_string(const MseTable& table) {
  std::ostringstream ss;
  emit_csv(table, ss);
  return ss.str();
}

MseTable parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "scheme,M,sigma2,mse_mean,mse_stderr,frames_used,seed")
    throw std::runtime_error("bad csv header");
  MseTable table;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    if (parts.size() != 7) throw std::runtime_error("bad csv row: " + line);
    MseRow r;
    r.scheme = parts[0];
    r.m = std::stoi(parts[1]);
    r.sigma2 = std::stod(parts[2]);
    r.mse_mean = std::stod(parts[3]);
    r.mse_stderr = std::stod(parts[4]);
    r.frames_used = std::stoi(parts[5]);
    r.seed = std::stoull(parts[6]);
    table.push_back(r);
  }
  return table;
}

}  // namespace ehwsn
