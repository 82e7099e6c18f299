#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "pulselock/complex_gamma.hpp"
#include "pulselock/units.hpp"

namespace pulselock {

enum class PulseShape { sech, square };

// One optical pulse driving the electron-trion transition.
//   area      Theta, time-integrated Rabi angle [rad]
//   bandwidth sech envelope rate sigma [1/ps], Omega(t) = Omega0*sech(sigma t)
//   duration  square pulse length T [ps], Omega0 = Theta/T
//   detuning  delta [rad/ps] between pulse carrier and the transition
struct PulseParams {
  PulseShape shape = PulseShape::sech;
  double area = pi;
  double bandwidth = sech_fwhm_to_rate / 3.0;
  double duration = 3.0;
  double detuning = 0.0;

  void validate() const {
    if (!(area >= 0.0)) throw std::invalid_argument("PulseParams: area must be >= 0");
    if (shape == PulseShape::sech && !(bandwidth > 0.0))
      throw std::invalid_argument("PulseParams: bandwidth must be > 0 for sech pulses");
    if (shape == PulseShape::square && !(duration > 0.0))
      throw std::invalid_argument("PulseParams: duration must be > 0 for square pulses");
    if (!std::isfinite(detuning)) throw std::invalid_argument("PulseParams: detuning must be finite");
  }
};

// Net effect of one pulse on the driven transition: the ground amplitude
// survives with magnitude q and phase phi, or is transferred to the trion
// with probability w = 1 - q^2.
struct PulseAction {
  double q = 1.0;    // amplitude retention, [0, 1]
  double phi = 0.0;  // phase [rad], wrapped to (-pi, pi], odd in detuning
  double w = 0.0;    // transition probability, [0, 1]
};

namespace detail {

inline double wrap_phase(double phi) {
  while (phi > pi) phi -= 2.0 * pi;
  while (phi <= -pi) phi += 2.0 * pi;
  return phi;
}

inline PulseAction action_from_amplitude(std::complex<double> a, double detuning) {
  PulseAction act;
  act.q = std::min(std::abs(a), 1.0);
  // Parity is enforced by construction: a is computed for |detuning| and the
  // phase is mirrored, so q and w are exactly even and phi exactly odd.
  double phi = wrap_phase(std::arg(a));
  act.phi = detuning < 0.0 ? wrap_phase(-phi) : phi;
  act.w = std::max(0.0, 1.0 - act.q * act.q);
  return act;
}

}  // namespace detail

// Rosen-Zener solution for a hyperbolic-secant pulse. With alpha = Theta/(2 pi)
// and beta = delta/(2 sigma) the surviving ground amplitude is
//   a = Gamma(1/2 + i beta)^2 / [Gamma(1/2 + i beta + alpha) Gamma(1/2 + i beta - alpha)]
// giving w = sin^2(Theta/2) sech^2(pi delta / (2 sigma)).
inline PulseAction sech_pulse_action(const PulseParams& p) {
  p.validate();
  if (p.shape != PulseShape::sech)
    throw std::invalid_argument("sech_pulse_action: pulse shape is not sech");
  if (p.area == 0.0) return PulseAction{};

  const double alpha = p.area / (2.0 * pi);
  const double beta = std::abs(p.detuning) / (2.0 * p.bandwidth);

  if (beta == 0.0) {
    // On resonance the amplitude is real: a = cos(Theta/2).
    const double a = std::cos(0.5 * p.area);
    PulseAction act;
    act.q = std::abs(a);
    act.phi = a < 0.0 ? pi : 0.0;
    act.w = std::max(0.0, 1.0 - act.q * act.q);
    return act;
  }

  const std::complex<double> z0(0.5, beta);
  const std::complex<double> zp(0.5 + alpha, beta);
  const std::complex<double> zm(0.5 - alpha, beta);
  const std::complex<double> log_a =
      2.0 * log_gamma_complex(z0) - log_gamma_complex(zp) - log_gamma_complex(zm);
  return detail::action_from_amplitude(std::exp(log_a), p.detuning);
}

// Rabi solution for a square pulse of duration T, Omega0 = Theta/T and
// generalized frequency Lambda = sqrt(Omega0^2 + delta^2):
//   a = exp(-i delta T / 2) [cos(Lambda T/2) + i (delta/Lambda) sin(Lambda T/2)]
// The exp(-i delta T/2) factor references the surviving amplitude to the free
// evolution of the undriven spin state, so Theta = 0 gives the identity.
inline PulseAction square_pulse_action(const PulseParams& p) {
  p.validate();
  if (p.shape != PulseShape::square)
    throw std::invalid_argument("square_pulse_action: pulse shape is not square");
  if (p.area == 0.0) return PulseAction{};

  const double omega0 = p.area / p.duration;
  const double delta = std::abs(p.detuning);
  const double lambda = std::hypot(omega0, delta);
  const double half = 0.5 * lambda * p.duration;
  const std::complex<double> bracket(std::cos(half), (delta / lambda) * std::sin(half));
  const std::complex<double> a =
      std::exp(std::complex<double>(0.0, -0.5 * delta * p.duration)) * bracket;
  return detail::action_from_amplitude(a, p.detuning);
}

inline PulseAction pulse_action(const PulseParams& p) {
  return p.shape == PulseShape::sech ? sech_pulse_action(p) : square_pulse_action(p);
}

}  // namespace pulselock
