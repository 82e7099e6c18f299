#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pulselock/bloch.hpp"
#include "pulselock/ensemble.hpp"
#include "pulselock/nuclear.hpp"
#include "pulselock/pulse.hpp"
#include "pulselock/units.hpp"

// Experiment configuration: a flat key = value text file ('#' comments) plus
// command-line overrides. Unknown keys are rejected; validation errors name
// the offending key.

namespace pulselock {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // physical parameters
  double b_tesla = 3.0;
  double g_e = 0.43;
  double rep_rate_mhz = 81.0;
  double t2_ns = 150.0;
  double t1_ns = -1.0;  // resolved to T2 when not set
  double t2star_ps = 450.0;

  // pump pulse
  std::string pump_shape = "sech";
  double pump_area_pi = 1.0;
  double pump_fwhm_ps = 3.0;
  double pump_duration_ps = 3.0;
  double delta_qd_mev = -0.5;

  // steady-state sweep (precession frequency axis)
  double omega_window_psc = 2.0;
  int omega_samples = 2001;

  // time-resolved trace
  double delay_min_ps = -1000.0;
  double delay_max_ps = 1000.0;
  double delay_step_ps = 1.0;
  int trace_omega_per_psc = 192;
  double omega_span_sigma = 4.5;
  std::string trace_nuclei = "off";

  // spectra vs probe detuning
  double probe_min_mev = -3.0;
  double probe_max_mev = 3.0;
  double probe_step_mev = 0.05;
  double delta_qd_window_mev = 3.0;
  int delta_qd_samples = 121;
  std::vector<double> spectra_areas_pi{0.25, 0.5, 1.0};
  int spectra_omega_per_psc = 32;
  std::string spectra_nuclei = "on";
  double probe_gamma_mev = 0.65;

  // nuclear bath
  int n_nuclei = 20000;
  double full_shift_ghz = 35.0;
  double rate_scale = 1.0;
  double omega_min_frac = 0.01;
  double window_psc = 4.0;
  double init_polarization = 0.0085;
  double evolve_t_min_ps = 10.0;
  double evolve_t_max_ps = 1.0e6;
  int evolve_points = 25;

  // density of states
  std::vector<double> dos_delta_qd_mev{-0.8, 0.0, 0.8};
  int dos_omega_samples = 384;
  double dos_span_psc = 1.0;
  double dos_bin_span_psc = 1.5;
  int dos_bins = 720;

  // pulse action sweep (detuning in units of the envelope rate)
  double pulse_x_min = -3.0;
  double pulse_x_max = 3.0;
  double pulse_x_step = 0.05;

  int seed = 0;  // reserved: all pipelines are deterministic quadratures
  int threads = 0;  // 0 = hardware concurrency

  // --- derived quantities ---

  double t_rep_ps() const { return rep_rate_mhz_to_period_ps(rep_rate_mhz); }
  double psc_spacing() const { return 2.0 * pi / t_rep_ps(); }
  double omega_mean() const { return larmor_angular(g_e, b_tesla); }
  double resolved_t1_ns() const { return t1_ns > 0.0 ? t1_ns : t2_ns; }
  double hyperfine_per_n() const { return ghz_to_angular(full_shift_ghz) / n_nuclei; }
  double psc_spacing_n() const { return psc_spacing() / hyperfine_per_n(); }

  PulseParams pump_params() const {
    PulseParams p;
    p.shape = pump_shape == "square" ? PulseShape::square : PulseShape::sech;
    p.area = pi * pump_area_pi;
    p.bandwidth = sech_fwhm_to_rate / pump_fwhm_ps;
    p.duration = pump_duration_ps;
    p.detuning = pulse_detuning_from_delta_qd(delta_qd_mev);
    return p;
  }

  EvolutionParams evolution(double omega) const {
    EvolutionParams e;
    e.omega = omega;
    e.t_rep = t_rep_ps();
    e.t2 = ns_to_ps(t2_ns);
    e.t1 = ns_to_ps(resolved_t1_ns());
    return e;
  }

  // Nuclear grid window of +- window_psc PSC spacings around center_n.
  NuclearConfig nuclear_config(int center_n) const {
    NuclearConfig nc;
    nc.n_nuclei = n_nuclei;
    nc.hyperfine_shift = hyperfine_per_n();
    nc.rate_scale = rate_scale;
    nc.omega_min = omega_min_frac * psc_spacing();
    const double half = window_psc * psc_spacing_n();
    auto to_even = [](double x) { return 2 * static_cast<int>(std::lround(x / 2.0)); };
    nc.n_lo = std::max(-n_nuclei, to_even(center_n - half));
    nc.n_hi = std::min(n_nuclei, to_even(center_n + half));
    return nc;
  }

  int initial_n() const {
    const int n0 = 2 * static_cast<int>(std::lround(init_polarization * n_nuclei / 2.0));
    return std::clamp(n0, -n_nuclei, n_nuclei);
  }

  EnsembleConfig ensemble_config(bool nuclei, unsigned run_threads) const {
    EnsembleConfig ec;
    ec.delta_window_mev = delta_qd_window_mev;
    ec.delta_samples = delta_qd_samples;
    ec.probe_gamma_mev = probe_gamma_mev;
    ec.omega_center = omega_mean();
    ec.omega_sigma = inhomogeneous_sigma(t2star_ps);
    ec.omega_span_sigma = omega_span_sigma;
    ec.trace_omega_per_psc = trace_omega_per_psc;
    ec.spectra_omega_per_psc = spectra_omega_per_psc;
    ec.nuclei = nuclei;
    ec.pump = pump_params();
    ec.evo = evolution(omega_mean());
    ec.nuclear = nuclear_config(0);
    ec.threads = run_threads;
    return ec;
  }

  void validate() const;
  void set(const std::string& key, const std::string& value);
  std::vector<std::pair<std::string, std::string>> echo() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: value for '" + key + "' is not a number: '" + value + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: value for '" + key + "' is not an integer: '" + value + "'");
  }
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config: empty element in list for '" + key + "'");
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
  return out;
}

inline std::string parse_onoff(const std::string& key, const std::string& value) {
  if (value != "on" && value != "off")
    throw ConfigError("config: '" + key + "' must be 'on' or 'off', got '" + value + "'");
  return value;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_double_list;
  using detail::parse_int;
  using detail::parse_onoff;

  if (key == "B_tesla") b_tesla = parse_double(key, value);
  else if (key == "g_e") g_e = parse_double(key, value);
  else if (key == "rep_rate_mhz") rep_rate_mhz = parse_double(key, value);
  else if (key == "T2_ns") t2_ns = parse_double(key, value);
  else if (key == "T1_ns") t1_ns = parse_double(key, value);
  else if (key == "T2star_ps") t2star_ps = parse_double(key, value);
  else if (key == "pump_shape") {
    if (value != "sech" && value != "square")
      throw ConfigError("config: 'pump_shape' must be 'sech' or 'square', got '" + value + "'");
    pump_shape = value;
  }
  else if (key == "pump_area_pi") pump_area_pi = parse_double(key, value);
  else if (key == "pump_fwhm_ps") pump_fwhm_ps = parse_double(key, value);
  else if (key == "pump_duration_ps") pump_duration_ps = parse_double(key, value);
  else if (key == "delta_qd_mev") delta_qd_mev = parse_double(key, value);
  else if (key == "omega_window_psc") omega_window_psc = parse_double(key, value);
  else if (key == "omega_samples") omega_samples = parse_int(key, value);
  else if (key == "delay_min_ps") delay_min_ps = parse_double(key, value);
  else if (key == "delay_max_ps") delay_max_ps = parse_double(key, value);
  else if (key == "delay_step_ps") delay_step_ps = parse_double(key, value);
  else if (key == "trace_omega_per_psc") trace_omega_per_psc = parse_int(key, value);
  else if (key == "omega_span_sigma") omega_span_sigma = parse_double(key, value);
  else if (key == "trace_nuclei") trace_nuclei = parse_onoff(key, value);
  else if (key == "probe_min_mev") probe_min_mev = parse_double(key, value);
  else if (key == "probe_max_mev") probe_max_mev = parse_double(key, value);
  else if (key == "probe_step_mev") probe_step_mev = parse_double(key, value);
  else if (key == "delta_qd_window_mev") delta_qd_window_mev = parse_double(key, value);
  else if (key == "delta_qd_samples") delta_qd_samples = parse_int(key, value);
  else if (key == "spectra_areas_pi") spectra_areas_pi = parse_double_list(key, value);
  else if (key == "spectra_omega_per_psc") spectra_omega_per_psc = parse_int(key, value);
  else if (key == "spectra_nuclei") spectra_nuclei = parse_onoff(key, value);
  else if (key == "probe_gamma_mev") probe_gamma_mev = parse_double(key, value);
  else if (key == "n_nuclei") n_nuclei = parse_int(key, value);
  else if (key == "full_shift_ghz") full_shift_ghz = parse_double(key, value);
  else if (key == "rate_scale") rate_scale = parse_double(key, value);
  else if (key == "omega_min_frac") omega_min_frac = parse_double(key, value);
  else if (key == "window_psc") window_psc = parse_double(key, value);
  else if (key == "init_polarization") init_polarization = parse_double(key, value);
  else if (key == "evolve_t_min_ps") evolve_t_min_ps = parse_double(key, value);
  else if (key == "evolve_t_max_ps") evolve_t_max_ps = parse_double(key, value);
  else if (key == "evolve_points") evolve_points = parse_int(key, value);
  else if (key == "dos_delta_qd_mev") dos_delta_qd_mev = parse_double_list(key, value);
  else if (key == "dos_omega_samples") dos_omega_samples = parse_int(key, value);
  else if (key == "dos_span_psc") dos_span_psc = parse_double(key, value);
  else if (key == "dos_bin_span_psc") dos_bin_span_psc = parse_double(key, value);
  else if (key == "dos_bins") dos_bins = parse_int(key, value);
  else if (key == "pulse_x_min") pulse_x_min = parse_double(key, value);
  else if (key == "pulse_x_max") pulse_x_max = parse_double(key, value);
  else if (key == "pulse_x_step") pulse_x_step = parse_double(key, value);
  else if (key == "seed") seed = parse_int(key, value);
  else if (key == "threads") threads = parse_int(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(b_tesla > 0.0, "'B_tesla' must be > 0");
  require(g_e > 0.0, "'g_e' must be > 0");
  require(rep_rate_mhz > 0.0, "'rep_rate_mhz' must be > 0");
  require(t2_ns > 0.0, "'T2_ns' must be > 0");
  require(t1_ns < 0.0 || t1_ns > 0.0, "'T1_ns' must be > 0 (or unset to inherit T2_ns)");
  require(t2star_ps > 0.0, "'T2star_ps' must be > 0");
  require(pump_area_pi >= 0.0, "'pump_area_pi' must be >= 0");
  require(pump_fwhm_ps > 0.0, "'pump_fwhm_ps' must be > 0");
  require(pump_duration_ps > 0.0, "'pump_duration_ps' must be > 0");
  require(std::isfinite(delta_qd_mev), "'delta_qd_mev' must be finite");
  require(omega_window_psc > 0.0, "'omega_window_psc' must be > 0");
  require(omega_samples >= 3, "'omega_samples' must be >= 3");
  require(delay_step_ps > 0.0, "'delay_step_ps' must be > 0");
  require(delay_max_ps > delay_min_ps, "'delay_max_ps' must exceed 'delay_min_ps'");
  require(delay_min_ps > -t_rep_ps() && delay_max_ps < t_rep_ps(),
          "'delay_min_ps'/'delay_max_ps' must lie within (-T_R, T_R)");
  require(trace_omega_per_psc >= 1, "'trace_omega_per_psc' must be >= 1");
  require(omega_span_sigma > 0.0, "'omega_span_sigma' must be > 0");
  require(probe_step_mev > 0.0, "'probe_step_mev' must be > 0");
  require(probe_max_mev > probe_min_mev, "'probe_max_mev' must exceed 'probe_min_mev'");
  require(delta_qd_window_mev > 0.0, "'delta_qd_window_mev' must be > 0");
  require(delta_qd_samples >= 2, "'delta_qd_samples' must be >= 2");
  for (double a : spectra_areas_pi) require(a >= 0.0, "'spectra_areas_pi' entries must be >= 0");
  require(spectra_omega_per_psc >= 1, "'spectra_omega_per_psc' must be >= 1");
  require(probe_gamma_mev > 0.0, "'probe_gamma_mev' must be > 0");
  require(n_nuclei >= 2 && n_nuclei % 2 == 0, "'n_nuclei' must be even and >= 2");
  require(full_shift_ghz > 0.0, "'full_shift_ghz' must be > 0");
  require(rate_scale > 0.0, "'rate_scale' must be > 0");
  require(omega_min_frac > 0.0, "'omega_min_frac' must be > 0");
  require(window_psc > 0.0, "'window_psc' must be > 0");
  require(std::abs(init_polarization) <= 1.0, "'init_polarization' must lie in [-1, 1]");
  require(evolve_t_min_ps > 0.0, "'evolve_t_min_ps' must be > 0");
  require(evolve_t_max_ps > evolve_t_min_ps, "'evolve_t_max_ps' must exceed 'evolve_t_min_ps'");
  require(evolve_points >= 2, "'evolve_points' must be >= 2");
  for (double d : dos_delta_qd_mev)
    require(std::isfinite(d), "'dos_delta_qd_mev' entries must be finite");
  require(dos_omega_samples >= 1, "'dos_omega_samples' must be >= 1");
  require(dos_span_psc > 0.0, "'dos_span_psc' must be > 0");
  require(dos_bin_span_psc > 0.0, "'dos_bin_span_psc' must be > 0");
  require(dos_bins >= 2, "'dos_bins' must be >= 2");
  require(pulse_x_step > 0.0, "'pulse_x_step' must be > 0");
  require(pulse_x_max >= pulse_x_min, "'pulse_x_max' must be >= 'pulse_x_min'");
  require(seed >= 0, "'seed' must be >= 0");
  require(threads >= 0, "'threads' must be >= 0");
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  using detail::fmt_double;
  using detail::fmt_list;
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("B_tesla", fmt_double(b_tesla));
  e.emplace_back("g_e", fmt_double(g_e));
  e.emplace_back("rep_rate_mhz", fmt_double(rep_rate_mhz));
  e.emplace_back("T2_ns", fmt_double(t2_ns));
  e.emplace_back("T1_ns", fmt_double(resolved_t1_ns()));
  e.emplace_back("T2star_ps", fmt_double(t2star_ps));
  e.emplace_back("pump_shape", pump_shape);
  e.emplace_back("pump_area_pi", fmt_double(pump_area_pi));
  e.emplace_back("pump_fwhm_ps", fmt_double(pump_fwhm_ps));
  e.emplace_back("pump_duration_ps", fmt_double(pump_duration_ps));
  e.emplace_back("delta_qd_mev", fmt_double(delta_qd_mev));
  e.emplace_back("omega_window_psc", fmt_double(omega_window_psc));
  e.emplace_back("omega_samples", std::to_string(omega_samples));
  e.emplace_back("delay_min_ps", fmt_double(delay_min_ps));
  e.emplace_back("delay_max_ps", fmt_double(delay_max_ps));
  e.emplace_back("delay_step_ps", fmt_double(delay_step_ps));
  e.emplace_back("trace_omega_per_psc", std::to_string(trace_omega_per_psc));
  e.emplace_back("omega_span_sigma", fmt_double(omega_span_sigma));
  e.emplace_back("trace_nuclei", trace_nuclei);
  e.emplace_back("probe_min_mev", fmt_double(probe_min_mev));
  e.emplace_back("probe_max_mev", fmt_double(probe_max_mev));
  e.emplace_back("probe_step_mev", fmt_double(probe_step_mev));
  e.emplace_back("delta_qd_window_mev", fmt_double(delta_qd_window_mev));
  e.emplace_back("delta_qd_samples", std::to_string(delta_qd_samples));
  e.emplace_back("spectra_areas_pi", fmt_list(spectra_areas_pi));
  e.emplace_back("spectra_omega_per_psc", std::to_string(spectra_omega_per_psc));
  e.emplace_back("spectra_nuclei", spectra_nuclei);
  e.emplace_back("probe_gamma_mev", fmt_double(probe_gamma_mev));
  e.emplace_back("n_nuclei", std::to_string(n_nuclei));
  e.emplace_back("full_shift_ghz", fmt_double(full_shift_ghz));
  e.emplace_back("rate_scale", fmt_double(rate_scale));
  e.emplace_back("omega_min_frac", fmt_double(omega_min_frac));
  e.emplace_back("window_psc", fmt_double(window_psc));
  e.emplace_back("init_polarization", fmt_double(init_polarization));
  e.emplace_back("evolve_t_min_ps", fmt_double(evolve_t_min_ps));
  e.emplace_back("evolve_t_max_ps", fmt_double(evolve_t_max_ps));
  e.emplace_back("evolve_points", std::to_string(evolve_points));
  e.emplace_back("dos_delta_qd_mev", fmt_list(dos_delta_qd_mev));
  e.emplace_back("dos_omega_samples", std::to_string(dos_omega_samples));
  e.emplace_back("dos_span_psc", fmt_double(dos_span_psc));
  e.emplace_back("dos_bin_span_psc", fmt_double(dos_bin_span_psc));
  e.emplace_back("dos_bins", std::to_string(dos_bins));
  e.emplace_back("pulse_x_min", fmt_double(pulse_x_min));
  e.emplace_back("pulse_x_max", fmt_double(pulse_x_max));
  e.emplace_back("pulse_x_step", fmt_double(pulse_x_step));
  e.emplace_back("seed", std::to_string(seed));
  e.emplace_back("threads", std::to_string(threads));
  return e;
}

// Reads a config file (empty path = all defaults), applies key=value override
// strings, validates, and returns the resolved configuration.
inline ExperimentConfig parse_config(const std::string& path,
                                     const std::vector<std::string>& overrides = {}) {
  ExperimentConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config: line " + std::to_string(lineno) +
                          " of '" + path + "' is not 'key = value': '" + line + "'");
      try {
        cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
      } catch (const ConfigError& err) {
        throw ConfigError(std::string(err.what()) + " (line " + std::to_string(lineno) + " of '" +
                          path + "')");
      }
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override is not 'key=value': '" + ov + "'");
    cfg.set(detail::trim(ov.substr(0, eq)), detail::trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

}  // namespace pulselock
