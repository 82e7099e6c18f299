#pragma once

#include <cmath>
#include <complex>
#include <ostream>
#include <string>
#include <vector>

#include "pulselock/complex_gamma.hpp"
#include "pulselock/config.hpp"
#include "pulselock/ensemble.hpp"
#include "pulselock/master_equation.hpp"
#include "pulselock/pulse_ode.hpp"
#include "pulselock/table.hpp"
#include "pulselock/version.hpp"

// Figure-oriented subcommands. Every run is a deterministic function of the
// resolved configuration: identical bytes for repeated runs and for any
// thread count.

namespace pulselock {

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  const double step = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) out[i] = a + step * i;
  out.back() = b;
  return out;
}

inline std::vector<double> arange(double a, double b, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double x = a + step * i;
    if (x > b + 0.5 * step) break;
    out.push_back(std::min(x, b));
  }
  return out;
}

inline std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> out(n);
  const double r = std::pow(b / a, 1.0 / (n - 1));
  double x = a;
  for (int i = 0; i < n; ++i) {
    out[i] = x;
    x *= r;
  }
  out.back() = b;
  return out;
}

namespace runner {

inline Table run_pulse(const ExperimentConfig& cfg, unsigned threads) {
  const PulseParams pump = cfg.pump_params();
  const double rate =
      pump.shape == PulseShape::sech ? pump.bandwidth : 1.0 / pump.duration;
  const std::vector<double> xs = arange(cfg.pulse_x_min, cfg.pulse_x_max, cfg.pulse_x_step);

  std::vector<std::vector<double>> rows(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) {
    PulseParams p = pump;
    p.detuning = xs[i] * rate;
    const PulseAction analytic = pulse_action(p);
    const PulseAction oracle = ode_pulse_oracle(p);
    rows[i] = {xs[i],       p.detuning,  angular_to_mev(p.detuning), analytic.q,
               analytic.phi, analytic.w, oracle.q,                   oracle.phi,
               oracle.w};
  });

  Table t;
  t.columns = {"delta_over_rate", "detuning_rad_ps", "detuning_mev", "q", "phi_rad", "w",
               "q_ode",           "phi_ode_rad",     "w_ode"};
  t.rows = std::move(rows);
  return t;
}

inline Table run_steady_state(const ExperimentConfig& cfg, unsigned threads) {
  const double t_rep = cfg.t_rep_ps();
  const long n0 = nearest_psc(cfg.omega_mean(), t_rep).first;
  const std::vector<double> xs =
      linspace(n0 - cfg.omega_window_psc, n0 + cfg.omega_window_psc, cfg.omega_samples);
  const double dq = std::abs(cfg.delta_qd_mev);

  PulseParams pump = cfg.pump_params();
  pump.detuning = pulse_detuning_from_delta_qd(-dq);
  const PulseAction act_neg = pulse_action(pump);
  pump.detuning = pulse_detuning_from_delta_qd(+dq);
  const PulseAction act_pos = pulse_action(pump);

  std::vector<std::vector<double>> rows(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) {
    const EvolutionParams e = cfg.evolution(xs[i] * 2.0 * pi / t_rep);
    const BlochVector sn = steady_state_after_pulse(act_neg, e);
    const BlochVector sp = steady_state_after_pulse(act_pos, e);
    rows[i] = {xs[i], sn.x, sn.y, sn.z, sp.x, sp.y, sp.z};
  });

  Table t;
  t.columns = {"omega_psc_units", "sx_neg", "sy_neg", "sz_neg", "sx_pos", "sy_pos", "sz_pos"};
  t.rows = std::move(rows);
  return t;
}

inline Table run_trace(const ExperimentConfig& cfg, unsigned threads) {
  const std::vector<double> delays = arange(cfg.delay_min_ps, cfg.delay_max_ps, cfg.delay_step_ps);
  const EnsembleConfig ec = cfg.ensemble_config(cfg.trace_nuclei == "on", threads);
  const TraceResult res = time_trace(ec, delays);

  Table t;
  t.columns = {"delay_ps", "rotation", "ellipticity"};
  for (std::size_t i = 0; i < delays.size(); ++i)
    t.add_row({res.delay_ps[i], res.rotation[i], res.ellipticity[i]});
  return t;
}

inline Table run_spectra(const ExperimentConfig& cfg, unsigned threads) {
  const std::vector<double> probe = arange(cfg.probe_min_mev, cfg.probe_max_mev, cfg.probe_step_mev);
  EnsembleConfig ec = cfg.ensemble_config(cfg.spectra_nuclei == "on", threads);

  Table t;
  t.columns = {"area_pi", "delta_probe_mev", "rotation", "ellipticity"};
  for (double area : cfg.spectra_areas_pi) {
    ec.pump.area = pi * area;
    const SpectraResult res = spectra(ec, probe);
    for (std::size_t j = 0; j < probe.size(); ++j)
      t.add_row({area, res.delta_probe_mev[j], res.rotation[j], res.ellipticity[j]});
  }
  return t;
}

inline Table run_nuclear_evolve(const ExperimentConfig& cfg, unsigned threads,
                                MetaEntries& extra) {
  const double omega0 = cfg.omega_mean();
  const int n_init = cfg.initial_n();
  const NuclearConfig nc = cfg.nuclear_config(n_init);
  const BirthDeathGenerator gen =
      build_generator(omega0, cfg.pump_params(), cfg.evolution(omega0), nc, threads);

  NuclearDistribution p0;
  p0.n_lo = nc.n_lo;
  p0.p.assign(nc.grid_size(), 0.0);
  p0.p[(n_init - nc.n_lo) / 2] = 1.0;

  std::vector<double> t_grid{0.0};
  for (double t : logspace(cfg.evolve_t_min_ps, cfg.evolve_t_max_ps, cfg.evolve_points))
    t_grid.push_back(t);

  EvolveReport rep;
  const std::vector<NuclearDistribution> ps = evolve_distribution(p0, gen, t_grid, {}, &rep);

  extra.emplace_back("evolve_max_drift", format_value(rep.max_drift));
  extra.emplace_back("evolve_total_clipped", format_value(rep.total_clipped));

  Table t;
  t.columns = {"t_ps", "n", "n_frac", "p"};
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    for (std::size_t i = 0; i < ps[k].p.size(); ++i) {
      const int n = ps[k].n_at(i);
      t.add_row({t_grid[k], static_cast<double>(n),
                 static_cast<double>(n) / cfg.n_nuclei, ps[k].p[i]});
    }
  return t;
}

inline Table run_nuclear_dos(const ExperimentConfig& cfg, unsigned threads) {
  const double t_rep = cfg.t_rep_ps();
  const double spacing = 2.0 * pi / t_rep;
  const auto [n0, omega_ref] = nearest_psc(cfg.omega_mean(), t_rep);

  FrequencyDistribution fd;
  const int s_count = cfg.dos_omega_samples;
  for (int s = 0; s < s_count; ++s) {
    const double frac = (s + 0.5) / s_count;  // midpoints, uniform weights
    fd.omega.push_back(omega_ref + spacing * cfg.dos_span_psc * (2.0 * frac - 1.0));
    fd.weight.push_back(1.0);
  }

  std::vector<double> edges(cfg.dos_bins + 1);
  for (int j = 0; j <= cfg.dos_bins; ++j)
    edges[j] = omega_ref + spacing * cfg.dos_bin_span_psc *
                               (2.0 * static_cast<double>(j) / cfg.dos_bins - 1.0);

  const NuclearConfig nc = cfg.nuclear_config(0);
  const EvolutionParams evo = cfg.evolution(cfg.omega_mean());

  Table t;
  t.columns = {"delta_qd_mev", "omega_psc_units", "density"};
  for (double dq : cfg.dos_delta_qd_mev) {
    PulseParams pump = cfg.pump_params();
    pump.detuning = pulse_detuning_from_delta_qd(dq);
    const DensityOfStates d = dos(fd, pump, evo, nc, edges, threads);
    for (int j = 0; j < cfg.dos_bins; ++j) {
      const double center = 0.5 * (edges[j] + edges[j + 1]);
      // density per PSC unit on the omega*T_R/(2 pi) axis
      t.add_row({dq, center / spacing, d.density[j] * spacing});
    }
  }
  return t;
}

// --- selftest: fast analytic and oracle identities, deterministic output ---

struct SelftestContext {
  std::ostream& os;
  int failures = 0;

  void check(bool ok, const std::string& name, const std::string& detail) {
    os << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
    if (!ok) ++failures;
  }
};

inline double action_distance(const PulseAction& a, const PulseAction& b) {
  const std::complex<double> pa = a.q * std::exp(std::complex<double>(0.0, a.phi));
  const std::complex<double> pb = b.q * std::exp(std::complex<double>(0.0, b.phi));
  return std::max(std::abs(pa - pb), std::abs(a.w - b.w));
}

inline int run_selftest(const ExperimentConfig& cfg, std::ostream& os) {
  SelftestContext ctx{os};

  {  // log-gamma special values and the reflection identity
    double err = std::abs(std::exp(log_gamma_complex({1.0, 0.0})) - 1.0);
    err = std::max(err, std::abs(std::exp(log_gamma_complex({0.5, 0.0})) -
                                 std::sqrt(pi)) / std::sqrt(pi));
    for (double y : {0.3, 1.0, 2.0}) {
      const std::complex<double> lg = log_gamma_complex({0.5, y});
      const double mag2 = std::exp(2.0 * lg.real());
      err = std::max(err, std::abs(mag2 - pi / std::cosh(pi * y)) / (pi / std::cosh(pi * y)));
    }
    ctx.check(err <= 1e-12, "log_gamma", "max relative error " + format_value(err));
  }

  const PulseParams pump = cfg.pump_params();

  {  // analytic pulse actions vs the ODE oracle
    double err_sech = 0.0, err_square = 0.0;
    for (double area : {0.5 * pi, pi, 2.0 * pi}) {
      for (double x : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
        PulseParams p = pump;
        p.shape = PulseShape::sech;
        p.area = area;
        p.detuning = x * p.bandwidth;
        err_sech = std::max(err_sech, action_distance(sech_pulse_action(p), ode_pulse_oracle(p)));
        p.shape = PulseShape::square;
        p.detuning = x / p.duration;
        err_square =
            std::max(err_square, action_distance(square_pulse_action(p), ode_pulse_oracle(p)));
      }
    }
    ctx.check(err_sech <= 1e-6, "pulse_sech_vs_oracle", "max action distance " + format_value(err_sech));
    ctx.check(err_square <= 1e-6, "pulse_square_vs_oracle",
              "max action distance " + format_value(err_square));
  }

  {  // unitarity and detuning parity of the analytic actions
    double err_unit = 0.0, err_parity = 0.0;
    for (double area : {0.3 * pi, pi, 1.7 * pi}) {
      for (double x : {0.1, 0.7, 1.9, 2.8}) {
        for (int shape = 0; shape < 2; ++shape) {
          PulseParams p = pump;
          p.shape = shape == 0 ? PulseShape::sech : PulseShape::square;
          p.area = area;
          const double rate = shape == 0 ? p.bandwidth : 1.0 / p.duration;
          p.detuning = x * rate;
          const PulseAction plus = pulse_action(p);
          p.detuning = -x * rate;
          const PulseAction minus = pulse_action(p);
          err_unit = std::max(err_unit, std::abs(plus.w + plus.q * plus.q - 1.0));
          err_parity = std::max({err_parity, std::abs(plus.w - minus.w),
                                 std::abs(plus.phi + minus.phi), std::abs(plus.q - minus.q)});
        }
      }
    }
    ctx.check(err_unit <= 1e-12, "pulse_unitarity", "max |W + Q^2 - 1| = " + format_value(err_unit));
    ctx.check(err_parity <= 1e-15, "pulse_detuning_parity",
              "max parity violation " + format_value(err_parity));
  }

  {  // 2 pi sech transparency: W = 0, |phi| = 2 atan(sigma/|delta|)
    double werr = 0.0, perr = 0.0;
    for (double x : {0.25, 0.5, 1.0, 2.0, 3.0}) {
      PulseParams p = pump;
      p.shape = PulseShape::sech;
      p.area = 2.0 * pi;
      p.detuning = x * p.bandwidth;
      const PulseAction a = sech_pulse_action(p);
      werr = std::max(werr, std::abs(a.w));
      perr = std::max(perr, std::abs(std::abs(a.phi) - 2.0 * std::atan(1.0 / x)));
    }
    ctx.check(werr <= 1e-6 && perr <= 1e-6, "sech_transparency",
              "max |W| = " + format_value(werr) + ", max phase error = " + format_value(perr));
  }

  const double t_rep = cfg.t_rep_ps();

  {  // steady-state closed forms for a resonant pi pulse without decay
    PulseParams p = pump;
    p.shape = PulseShape::sech;
    p.area = pi;
    p.detuning = 0.0;
    const PulseAction act = pulse_action(p);
    EvolutionParams e;
    e.t_rep = t_rep;
    e.t2 = std::numeric_limits<double>::infinity();
    e.t1 = std::numeric_limits<double>::infinity();
    e.omega = 2.0 * pi * 5.0 / t_rep;
    const BlochVector psc = steady_state_after_pulse(act, e);
    e.omega = 2.0 * pi * 5.5 / t_rep;
    const BlochVector anti = steady_state_after_pulse(act, e);
    const double err = std::max(
        {std::abs(psc.x), std::abs(psc.y), std::abs(psc.z + 0.5), std::abs(anti.x),
         std::abs(anti.y), std::abs(anti.z + 1.0 / 6.0)});
    ctx.check(err <= 1e-12, "steady_state_closed_forms",
              "max error vs (-1/2, -1/6) = " + format_value(err));
  }

  {  // general fixed point against brute-force iteration
    PulseParams p = pump;
    p.detuning = pulse_detuning_from_delta_qd(-0.4);
    const PulseAction act = pulse_action(p);
    const EvolutionParams e = cfg.evolution(cfg.omega_mean() + 0.3 * cfg.psc_spacing());
    const AffineMap3 m = period_map(act, e);
    const BlochVector direct = steady_state(m);
    const BlochVector iter = iterate_map(m, BlochVector{}, 10000);
    const double err = std::max({std::abs(direct.x - iter.x), std::abs(direct.y - iter.y),
                                 std::abs(direct.z - iter.z)});
    ctx.check(err <= 1e-10, "steady_state_vs_iteration", "difference " + format_value(err));
  }

  {  // detuning-sign reflection of the steady state
    double err = 0.0;
    for (double dq : {0.2, 0.5, 0.9}) {
      for (int k = 0; k < 5; ++k) {
        const EvolutionParams e =
            cfg.evolution(cfg.omega_mean() + (0.13 + 0.19 * k) * cfg.psc_spacing());
        PulseParams p = pump;
        p.detuning = pulse_detuning_from_delta_qd(-dq);
        const BlochVector a = steady_state_after_pulse(pulse_action(p), e);
        p.detuning = pulse_detuning_from_delta_qd(+dq);
        const BlochVector b = steady_state_after_pulse(pulse_action(p), e);
        err = std::max({err, std::abs(a.x + b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
      }
    }
    ctx.check(err <= 1e-12, "steady_state_reflection", "max violation " + format_value(err));
  }

  {  // two-state master equation against the closed form
    BirthDeathGenerator gen;
    gen.n_lo = 0;
    gen.up = {0.7, 0.0};
    gen.down = {0.0, 0.3};
    NuclearDistribution p0;
    p0.n_lo = 0;
    p0.p = {1.0, 0.0};
    EvolveReport rep;
    const std::vector<double> ts{1.0, 3.0, 10.0};
    const auto ps = evolve_distribution(p0, gen, ts, {}, &rep);
    double err = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double p1 = 0.3 / 1.0 + (1.0 - 0.3 / 1.0) * std::exp(-1.0 * ts[k]);
      err = std::max(err, std::abs(ps[k].p[0] - p1));
    }
    ctx.check(err <= 1e-8 && rep.max_drift <= 1e-9, "master_equation_two_state",
              "max error " + format_value(err) + ", drift " + format_value(rep.max_drift));
  }

  {  // constant-rate chain: stationary distribution is the binomial measure
    const int n_tot = 40;
    BirthDeathGenerator gen;
    gen.n_lo = -n_tot;
    const std::size_t m = n_tot + 1;
    gen.up.assign(m, 0.0);
    gen.down.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const int n = gen.n_at(i);
      if (i + 1 < m) gen.up[i] = 0.5 * (n_tot - n);
      if (i > 0) gen.down[i] = 0.5 * (n_tot + n);
    }
    const NuclearDistribution stat = stationary_distribution(gen);
    double norm = 0.0;
    std::vector<double> binom(m);
    for (std::size_t i = 0; i < m; ++i) {
      const int k = (gen.n_at(i) + n_tot) / 2;
      binom[i] = std::exp(std::lgamma(n_tot + 1.0) - std::lgamma(k + 1.0) -
                          std::lgamma(n_tot - k + 1.0));
      norm += binom[i];
    }
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) err = std::max(err, std::abs(stat.p[i] - binom[i] / norm));
    std::vector<double> resid;
    gen.apply(stat.p, resid);
    double rmax = 0.0;
    for (double r : resid) rmax = std::max(rmax, std::abs(r));
    const double rel = rmax / gen.max_total_rate();
    ctx.check(err <= 1e-12 && rel <= 1e-10, "stationary_binomial",
              "L_inf vs binomial " + format_value(err) + ", residual " + format_value(rel));
  }

  {  // directionality of the flip-rate bias around a synchronization point
    const double spacing = cfg.psc_spacing();
    const double omega_psc = nearest_psc(cfg.omega_mean(), t_rep).second;
    bool ok = true;
    NuclearConfig nc = cfg.nuclear_config(0);
    for (double dq : {-0.5, 0.5}) {
      PulseParams p = pump;
      p.detuning = pulse_detuning_from_delta_qd(dq);
      const PulseAction act = pulse_action(p);
      for (double off : {-0.25, -0.1, 0.1, 0.25}) {
        const EvolutionParams e = cfg.evolution(omega_psc + off * spacing);
        const BlochVector s = steady_state_after_pulse(act, e);
        const FlipRates fr = flip_rates(act.w, s, e.omega, t_rep, nc);
        const double expected = (omega_psc - e.omega) * (dq < 0 ? 1.0 : -1.0);
        if ((fr.up - fr.down) * expected <= 0.0) ok = false;
      }
    }
    {
      PulseParams p = pump;
      p.detuning = 0.0;
      const PulseAction act = pulse_action(p);
      const EvolutionParams e = cfg.evolution(omega_psc + 0.2 * spacing);
      const BlochVector s = steady_state_after_pulse(act, e);
      const FlipRates fr = flip_rates(act.w, s, e.omega, t_rep, nc);
      if (std::abs(fr.up - fr.down) > 1e-12 * (fr.up + fr.down)) ok = false;
    }
    ctx.check(ok, "flip_rate_directionality",
              "sign(w+ - w-) matches sign(omega_psc - omega) for delta_qd < 0, reversed for > 0");
  }

  os << (ctx.failures == 0 ? "selftest: all checks passed\n"
                           : "selftest: " + std::to_string(ctx.failures) + " check(s) failed\n");
  return ctx.failures;
}

}  // namespace runner

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{
      "pulse", "steady-state", "trace", "spectra", "nuclear-evolve", "nuclear-dos", "selftest"};
  return names;
}

// Executes a subcommand against a resolved config, writing the tabular
// artifact (or selftest report) to os. Returns a process exit code.
inline int run_subcommand(const std::string& name, const ExperimentConfig& cfg, std::ostream& os,
                          OutputFormat fmt = OutputFormat::csv) {
  const unsigned threads = resolve_threads(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : 0);

  if (name == "selftest") return runner::run_selftest(cfg, os) == 0 ? 0 : 1;

  MetaEntries extra;
  Table table;
  if (name == "pulse") table = runner::run_pulse(cfg, threads);
  else if (name == "steady-state") table = runner::run_steady_state(cfg, threads);
  else if (name == "trace") table = runner::run_trace(cfg, threads);
  else if (name == "spectra") table = runner::run_spectra(cfg, threads);
  else if (name == "nuclear-evolve") table = runner::run_nuclear_evolve(cfg, threads, extra);
  else if (name == "nuclear-dos") table = runner::run_nuclear_dos(cfg, threads);
  else throw std::runtime_error("unknown subcommand '" + name + "'");

  const MetaEntries config_echo = [&] {
    MetaEntries e;
    for (const auto& [k, v] : cfg.echo()) e.emplace_back(k, v);
    return e;
  }();

  MetaEntries meta;
  meta.emplace_back("tool", "pulselock");
  meta.emplace_back("version", version);
  meta.emplace_back("subcommand", name);
  meta.emplace_back("config_hash", config_hash(config_echo));
  for (const auto& kv : config_echo) meta.push_back(kv);
  for (const auto& kv : extra) meta.push_back(kv);

  write_table(os, fmt, meta, table);
  return 0;
}

}  // namespace pulselock
