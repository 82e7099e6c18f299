#pragma once

#include <cmath>
#include <numbers>

// Unit conventions used throughout: time in ps, angular frequencies in
// rad/ps, energies in meV, magnetic field in T. Conversions go through
// hbar and the Bohr magneton below; nothing else carries hidden units.

namespace pulselock {

inline constexpr double pi = std::numbers::pi;

inline constexpr double hbar_mev_ps = 0.6582119;          // meV*ps
inline constexpr double mu_bohr_mev_per_tesla = 0.0578838;  // meV/T

// sech pulse: intensity FWHM tau -> envelope rate sigma, sigma = 2*acosh(sqrt(2))/tau
inline constexpr double sech_fwhm_to_rate = 1.7627471740390861;

inline double mev_to_angular(double e_mev) { return e_mev / hbar_mev_ps; }
inline double angular_to_mev(double w) { return w * hbar_mev_ps; }

inline double ghz_to_angular(double f_ghz) { return 2.0 * pi * 1.0e-3 * f_ghz; }
inline double angular_to_ghz(double w) { return w / (2.0 * pi * 1.0e-3); }

// Larmor precession frequency for g-factor g in field b_tesla, rad/ps.
inline double larmor_angular(double g, double b_tesla) {
  return g * mu_bohr_mev_per_tesla * b_tesla / hbar_mev_ps;
}

inline double rep_rate_mhz_to_period_ps(double rate_mhz) { return 1.0e6 / rate_mhz; }

inline double ns_to_ps(double t_ns) { return 1.0e3 * t_ns; }

}  // namespace pulselock
