#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "pulselock/master_equation.hpp"
#include "pulselock/nuclear.hpp"
#include "pulselock/parallel.hpp"

// Ensemble observables: time-resolved rotation/ellipticity traces and
// positive-delay spectra versus probe detuning, with or without the nuclear
// feedback loop.

namespace pulselock {

// Probe detuning relative to the pump maps to the same sign convention used
// for the pump: a dot below the pump energy (delta_qd < 0) sees a positive
// pulse detuning.
inline double pulse_detuning_from_delta_qd(double delta_qd_mev) {
  return -mev_to_angular(delta_qd_mev);
}

// Gaussian inhomogeneous spread with envelope exp(-sigma^2 t^2 / 2); T2* is
// the 1/e time of the envelope, so sigma = sqrt(2)/T2*.
inline double inhomogeneous_sigma(double t2star_ps) {
  if (!(t2star_ps > 0.0)) throw std::invalid_argument("inhomogeneous_sigma: T2* must be > 0");
  return std::sqrt(2.0) / t2star_ps;
}

struct ProbeKernels {
  double rotation = 0.0;     // dispersive, odd in detuning, extrema +-1/2 at delta = +-gamma
  double ellipticity = 0.0;  // absorptive, even in detuning, max 1 at delta = 0
};

inline ProbeKernels probe_kernels(double delta_mev, double gamma_mev) {
  if (!(gamma_mev > 0.0)) throw std::invalid_argument("probe_kernels: gamma must be > 0");
  const double d2 = delta_mev * delta_mev + gamma_mev * gamma_mev;
  return ProbeKernels{gamma_mev * delta_mev / d2, gamma_mev * gamma_mev / d2};
}

struct EnsembleConfig {
  double delta_window_mev = 3.0;  // QD detuning grid spans [-window, +window]
  int delta_samples = 121;
  double probe_gamma_mev = 0.65;

  double omega_center = 0.0;      // mean bare precession frequency [rad/ps]
  double omega_sigma = 0.0;       // inhomogeneous spread [rad/ps]
  double omega_span_sigma = 4.5;  // half-span of the sampled Gaussian, in sigmas
  int trace_omega_per_psc = 192;  // samples per PSC spacing for traces
  int spectra_omega_per_psc = 32; // samples over one PSC period for spectra

  bool nuclei = false;
  PulseParams pump;       // detuning is overwritten per QD sample
  EvolutionParams evo;    // omega is overwritten per sample
  NuclearConfig nuclear;  // grid window used when nuclei are on

  unsigned threads = 1;

  void validate() const {
    if (delta_samples < 1) throw std::invalid_argument("EnsembleConfig: delta_samples must be >= 1");
    if (!(delta_window_mev > 0.0))
      throw std::invalid_argument("EnsembleConfig: delta_window_mev must be > 0");
    if (!(probe_gamma_mev > 0.0))
      throw std::invalid_argument("EnsembleConfig: probe_gamma_mev must be > 0");
    if (!(omega_center > 0.0)) throw std::invalid_argument("EnsembleConfig: omega_center must be > 0");
    if (!(omega_sigma > 0.0)) throw std::invalid_argument("EnsembleConfig: omega_sigma must be > 0");
    if (trace_omega_per_psc < 1 || spectra_omega_per_psc < 1)
      throw std::invalid_argument("EnsembleConfig: omega sample counts must be >= 1");
  }
};

// Post-pulse phasor Sz + i*Sy of one QD. Without nuclei this is the steady
// state at the bare frequency; with nuclei it is the coherent sum over the
// stationary nuclear distribution, whose magnitude is the positive-delay
// precession amplitude.
inline std::complex<double> qd_amplitude(double delta_qd_mev, double omega0,
                                         const EnsembleConfig& cfg) {
  PulseParams pulse = cfg.pump;
  pulse.detuning = pulse_detuning_from_delta_qd(delta_qd_mev);
  const PulseAction act = pulse_action(pulse);

  if (!cfg.nuclei) {
    EvolutionParams e = cfg.evo;
    e.omega = omega0;
    const BlochVector s = steady_state_after_pulse(act, e);
    return {s.z, s.y};
  }

  const BirthDeathGenerator gen = build_generator(omega0, pulse, cfg.evo, cfg.nuclear);
  const NuclearDistribution stat = stationary_distribution(gen);
  const AffineMap3 pmap = pulse_bloch_map(act);
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < stat.p.size(); ++i) {
    if (stat.p[i] == 0.0) continue;
    EvolutionParams e = cfg.evo;
    e.omega = omega_of_n(omega0, stat.n_at(i), cfg.nuclear);
    const BlochVector s = steady_state(compose(pmap, free_evolution_map(e, e.t_rep)));
    acc += stat.p[i] * std::complex<double>(s.z, s.y);
  }
  return acc;
}

namespace detail {

inline std::vector<double> delta_qd_grid(const EnsembleConfig& cfg) {
  std::vector<double> g(cfg.delta_samples);
  if (cfg.delta_samples == 1) {
    g[0] = 0.0;
    return g;
  }
  const double step = 2.0 * cfg.delta_window_mev / (cfg.delta_samples - 1);
  for (int i = 0; i < cfg.delta_samples; ++i) g[i] = -cfg.delta_window_mev + step * i;
  return g;
}

// Steady-state observables are periodic in omega0 with the PSC spacing, so
// the wide Gaussian of bare frequencies averages to a midpoint sum over one
// period of the comb nearest the ensemble center.
inline double averaged_amplitude(double delta_qd_mev, const EnsembleConfig& cfg) {
  const double spacing = 2.0 * pi / cfg.evo.t_rep;
  const double omega_ref = nearest_psc(cfg.omega_center, cfg.evo.t_rep).second;
  const int k = cfg.spectra_omega_per_psc;
  double acc = 0.0;
  for (int j = 0; j < k; ++j) {
    const double omega0 = omega_ref + spacing * (j + 0.5) / k;
    acc += std::abs(qd_amplitude(delta_qd_mev, omega0, cfg));
  }
  return acc / k;
}

}  // namespace detail

struct SpectraResult {
  std::vector<double> delta_probe_mev;
  std::vector<double> rotation;
  std::vector<double> ellipticity;
};

// Positive-delay amplitude spectra: the QD amplitude profile over a uniform
// spectral density of dots, convolved with the dispersive/absorptive probe
// kernels.
inline SpectraResult spectra(const EnsembleConfig& cfg, const std::vector<double>& probe_grid_mev) {
  cfg.validate();
  if (probe_grid_mev.empty()) throw std::invalid_argument("spectra: empty probe grid");

  const std::vector<double> dgrid = detail::delta_qd_grid(cfg);
  std::vector<double> amp(dgrid.size());
  parallel_for(dgrid.size(), cfg.threads,
               [&](std::size_t i) { amp[i] = detail::averaged_amplitude(dgrid[i], cfg); });

  const double d_delta =
      dgrid.size() > 1 ? dgrid[1] - dgrid[0] : 1.0;  // uniform QD spectral density
  SpectraResult out;
  out.delta_probe_mev = probe_grid_mev;
  out.rotation.assign(probe_grid_mev.size(), 0.0);
  out.ellipticity.assign(probe_grid_mev.size(), 0.0);
  for (std::size_t j = 0; j < probe_grid_mev.size(); ++j) {
    double fr = 0.0, fe = 0.0;
    for (std::size_t i = 0; i < dgrid.size(); ++i) {
      const ProbeKernels ker = probe_kernels(probe_grid_mev[j] - dgrid[i], cfg.probe_gamma_mev);
      fr += amp[i] * ker.rotation;
      fe += amp[i] * ker.ellipticity;
    }
    out.rotation[j] = fr * d_delta;
    out.ellipticity[j] = fe * d_delta;
  }
  return out;
}

struct TraceResult {
  std::vector<double> delay_ps;
  std::vector<double> rotation;
  std::vector<double> ellipticity;
};

namespace detail {

struct TraceTerm {
  double omega = 0.0;
  double ye = 0.0, ze = 0.0;  // ellipticity-kernel weighted Sy*, Sz*
  double yr = 0.0, zr = 0.0;  // rotation-kernel weighted Sy*, Sz*
};

}  // namespace detail

// Time-resolved ensemble signal at zero probe detuning: Sz(t) averaged over
// the Gaussian of bare frequencies and over QD detunings weighted by the
// probe kernels. Negative delays are evaluated at T_R + t. The frequency
// grid is commensurate with the PSC comb so the mode-locked revival near
// t = T_R is represented exactly; the grid's own alias revival sits at
// trace_omega_per_psc * T_R.
inline TraceResult time_trace(const EnsembleConfig& cfg, const std::vector<double>& delays_ps) {
  cfg.validate();
  const double t_rep = cfg.evo.t_rep;
  for (double t : delays_ps)
    if (!(t > -t_rep && t < t_rep))
      throw std::invalid_argument("time_trace: delays must lie within (-T_R, T_R)");

  const double spacing = 2.0 * pi / t_rep;
  const int per_psc = cfg.nuclei ? cfg.spectra_omega_per_psc : cfg.trace_omega_per_psc;
  const double d_omega = spacing / per_psc;
  const double omega_ref = nearest_psc(cfg.omega_center, t_rep).second;
  const long span = std::lround(std::ceil(cfg.omega_span_sigma * cfg.omega_sigma / d_omega));
  const std::size_t n_omega = static_cast<std::size_t>(2 * span + 1);

  const std::vector<double> dgrid = detail::delta_qd_grid(cfg);
  std::vector<double> ker_r(dgrid.size()), ker_e(dgrid.size());
  double ker_norm = 0.0;
  for (std::size_t i = 0; i < dgrid.size(); ++i) {
    const ProbeKernels ker = probe_kernels(-dgrid[i], cfg.probe_gamma_mev);
    ker_r[i] = ker.rotation;
    ker_e[i] = ker.ellipticity;
    ker_norm += ker.ellipticity;
  }

  // Pulse actions per QD detuning are reused across the frequency grid.
  std::vector<PulseAction> acts(dgrid.size());
  for (std::size_t i = 0; i < dgrid.size(); ++i) {
    PulseParams pulse = cfg.pump;
    pulse.detuning = pulse_detuning_from_delta_qd(dgrid[i]);
    acts[i] = pulse_action(pulse);
  }

  // Collapse the QD average (and, with nuclei, the stationary distribution)
  // into kernel-weighted phasor terms per frequency.
  std::vector<std::vector<detail::TraceTerm>> slots(n_omega);
  parallel_for(n_omega, cfg.threads, [&](std::size_t k) {
    const double omega0 = omega_ref + d_omega * (static_cast<double>(k) - span);
    const double gw = std::exp(-0.5 * std::pow((omega0 - cfg.omega_center) / cfg.omega_sigma, 2));
    std::vector<detail::TraceTerm>& terms = slots[k];
    if (!cfg.nuclei) {
      detail::TraceTerm term;
      term.omega = omega0;
      for (std::size_t i = 0; i < dgrid.size(); ++i) {
        EvolutionParams e = cfg.evo;
        e.omega = omega0;
        const BlochVector s = steady_state_after_pulse(acts[i], e);
        term.ye += gw * ker_e[i] * s.y;
        term.ze += gw * ker_e[i] * s.z;
        term.yr += gw * ker_r[i] * s.y;
        term.zr += gw * ker_r[i] * s.z;
      }
      terms.push_back(term);
      return;
    }
    for (std::size_t i = 0; i < dgrid.size(); ++i) {
      PulseParams pulse = cfg.pump;
      pulse.detuning = pulse_detuning_from_delta_qd(dgrid[i]);
      const BirthDeathGenerator gen = build_generator(omega0, pulse, cfg.evo, cfg.nuclear);
      const NuclearDistribution stat = stationary_distribution(gen);
      const AffineMap3 pmap = pulse_bloch_map(acts[i]);
      if (terms.empty()) {
        terms.resize(stat.p.size());
        for (std::size_t n = 0; n < stat.p.size(); ++n)
          terms[n].omega = omega_of_n(omega0, stat.n_at(n), cfg.nuclear);
      }
      for (std::size_t n = 0; n < stat.p.size(); ++n) {
        if (stat.p[n] == 0.0) continue;
        EvolutionParams e = cfg.evo;
        e.omega = terms[n].omega;
        const BlochVector s = steady_state(compose(pmap, free_evolution_map(e, e.t_rep)));
        const double wn = gw * stat.p[n];
        terms[n].ye += wn * ker_e[i] * s.y;
        terms[n].ze += wn * ker_e[i] * s.z;
        terms[n].yr += wn * ker_r[i] * s.y;
        terms[n].zr += wn * ker_r[i] * s.z;
      }
    }
  });

  double gw_total = 0.0;
  for (std::size_t k = 0; k < n_omega; ++k) {
    const double omega0 = omega_ref + d_omega * (static_cast<double>(k) - span);
    gw_total += std::exp(-0.5 * std::pow((omega0 - cfg.omega_center) / cfg.omega_sigma, 2));
  }
  const double norm = gw_total * ker_norm;
  if (!(norm > 0.0))
    throw std::runtime_error(
        "time_trace: ensemble weights vanish on the frequency grid (omega_sigma too small "
        "relative to the grid step)");

  TraceResult out;
  out.delay_ps = delays_ps;
  out.rotation.assign(delays_ps.size(), 0.0);
  out.ellipticity.assign(delays_ps.size(), 0.0);
  parallel_for(delays_ps.size(), cfg.threads, [&](std::size_t j) {
    const double t = delays_ps[j] < 0.0 ? t_rep + delays_ps[j] : delays_ps[j];
    const double decay = std::exp(-t / cfg.evo.t2);
    double fr = 0.0, fe = 0.0;
    for (const auto& terms : slots) {
      for (const detail::TraceTerm& term : terms) {
        const double sn = std::sin(term.omega * t), cs = std::cos(term.omega * t);
        fe += term.ye * sn + term.ze * cs;
        fr += term.yr * sn + term.zr * cs;
      }
    }
    out.rotation[j] = decay * fr / norm;
    out.ellipticity[j] = decay * fe / norm;
  });
  return out;
}

struct FrequencyDistribution {
  std::vector<double> omega;   // bare frequencies [rad/ps]
  std::vector<double> weight;  // nonnegative, need not be normalized
};

struct DensityOfStates {
  std::vector<double> bin_edges;  // size = density.size() + 1
  std::vector<double> density;    // normalized to unit integral
};

// Steady-state density of electron precession frequencies: each bare
// frequency relaxes its nuclear bath to the stationary distribution and the
// mass is histogrammed at the Overhauser-shifted frequencies.
inline DensityOfStates dos(const FrequencyDistribution& omega0_weights, const PulseParams& pulse,
                           const EvolutionParams& evo, const NuclearConfig& cfg,
                           const std::vector<double>& bin_edges, unsigned threads = 1) {
  if (omega0_weights.omega.size() != omega0_weights.weight.size() || omega0_weights.omega.empty())
    throw std::invalid_argument("dos: malformed frequency distribution");
  if (bin_edges.size() < 2) throw std::invalid_argument("dos: need at least one bin");
  for (std::size_t j = 1; j < bin_edges.size(); ++j)
    if (!(bin_edges[j] > bin_edges[j - 1]))
      throw std::invalid_argument("dos: bin edges must be ascending");

  const std::size_t n_bins = bin_edges.size() - 1;
  std::vector<std::vector<double>> slots(omega0_weights.omega.size());
  parallel_for(omega0_weights.omega.size(), threads, [&](std::size_t s) {
    std::vector<double> local(n_bins, 0.0);
    const double omega0 = omega0_weights.omega[s];
    const BirthDeathGenerator gen = build_generator(omega0, pulse, evo, cfg);
    const NuclearDistribution stat = stationary_distribution(gen);
    for (std::size_t i = 0; i < stat.p.size(); ++i) {
      if (stat.p[i] == 0.0) continue;
      const double w = omega_of_n(omega0, stat.n_at(i), cfg);
      if (w < bin_edges.front() || w >= bin_edges.back()) continue;
      const std::size_t j =
          std::upper_bound(bin_edges.begin(), bin_edges.end(), w) - bin_edges.begin() - 1;
      local[j] += omega0_weights.weight[s] * stat.p[i];
    }
    slots[s] = std::move(local);
  });

  std::vector<double> mass(n_bins, 0.0);
  for (const auto& local : slots)
    for (std::size_t j = 0; j < n_bins; ++j) mass[j] += local[j];

  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) throw std::runtime_error("dos: no stationary mass falls inside the bin range");

  DensityOfStates out;
  out.bin_edges = bin_edges;
  out.density.resize(n_bins);
  for (std::size_t j = 0; j < n_bins; ++j)
    out.density[j] = mass[j] / (total * (bin_edges[j + 1] - bin_edges[j]));
  return out;
}

}  // namespace pulselock
