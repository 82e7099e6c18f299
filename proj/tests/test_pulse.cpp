#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "pulselock/pulse.hpp"
#include "pulselock/pulse_ode.hpp"

using namespace pulselock;

namespace {

PulseParams sech_pulse(double area, double detuning, double sigma = 0.5) {
  PulseParams p;
  p.shape = PulseShape::sech;
  p.area = area;
  p.bandwidth = sigma;
  p.detuning = detuning;
  return p;
}

PulseParams square_pulse(double area, double detuning, double duration = 2.0) {
  PulseParams p;
  p.shape = PulseShape::square;
  p.area = area;
  p.duration = duration;
  p.detuning = detuning;
  return p;
}

// distance between two actions comparing the complex amplitude and W
double action_distance(const PulseAction& a, const PulseAction& b) {
  const std::complex<double> pa = a.q * std::exp(std::complex<double>(0.0, a.phi));
  const std::complex<double> pb = b.q * std::exp(std::complex<double>(0.0, b.phi));
  return std::max(std::abs(pa - pb), std::abs(a.w - b.w));
}

}  // namespace

TEST_CASE("sech pulse: resonant pi pulse transfers everything") {
  const PulseAction a = sech_pulse_action(sech_pulse(pi, 0.0));
  CHECK(a.w == Catch::Approx(1.0).margin(1e-12));
  CHECK(a.q == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("sech pulse: W = sech^2(pi delta / (2 sigma)) at area pi") {
  const double sigma = 0.5;
  const PulseAction a = sech_pulse_action(sech_pulse(pi, sigma, sigma));
  const double want = 1.0 / std::pow(std::cosh(pi / 2.0), 2);  // 0.1588316...
  CHECK(a.w == Catch::Approx(want).epsilon(1e-9));
  CHECK(a.w == Catch::Approx(ode_pulse_oracle(sech_pulse(pi, sigma, sigma)).w).margin(1e-6));
}

TEST_CASE("sech pulse: 2 pi transparency with rotation angle 2 atan(sigma/|delta|)") {
  const double sigma = 0.7;
  for (double x : {0.2, 0.5, 1.0, 2.0, 3.0}) {
    const PulseAction a = sech_pulse_action(sech_pulse(2.0 * pi, x * sigma, sigma));
    CHECK(a.w == Catch::Approx(0.0).margin(1e-12));
    CHECK(a.q == Catch::Approx(1.0).margin(1e-12));
    CHECK(a.phi == Catch::Approx(2.0 * std::atan(1.0 / x)).margin(1e-12));
    // at delta = sigma the rotation is pi/2
    if (x == 1.0) CHECK(a.phi == Catch::Approx(pi / 2.0).margin(1e-12));
  }
}

TEST_CASE("square pulse: resonant pi pulse and identity at zero area") {
  const PulseAction full = square_pulse_action(square_pulse(pi, 0.0));
  CHECK(full.w == Catch::Approx(1.0).margin(1e-12));

  const PulseAction none = square_pulse_action(square_pulse(0.0, 1.3));
  CHECK(none.q == 1.0);
  CHECK(none.phi == 0.0);
  CHECK(none.w == 0.0);
}

TEST_CASE("square pulse: W at delta = Omega0, Omega0 T = pi") {
  // Lambda T/2 = pi/sqrt(2), W = sin^2(pi/sqrt(2))/2
  const double duration = 2.0;
  const double omega0 = pi / duration;
  const PulseAction a = square_pulse_action(square_pulse(pi, omega0, duration));
  const double want = 0.5 * std::pow(std::sin(pi / std::sqrt(2.0)), 2);  // 0.31656...
  CHECK(a.w == Catch::Approx(want).epsilon(1e-12));
  CHECK(a.w == Catch::Approx(0.3166).margin(1e-3));
}

TEST_CASE("detuning parity: W, Q even and phi odd, exactly") {
  for (double area : {0.3 * pi, 0.5 * pi, pi, 1.6 * pi, 2.0 * pi}) {
    for (double x : {0.1, 0.4, 1.3, 2.9}) {
      {
        const PulseAction plus = sech_pulse_action(sech_pulse(area, x * 0.5));
        const PulseAction minus = sech_pulse_action(sech_pulse(area, -x * 0.5));
        CHECK(plus.q == minus.q);
        CHECK(plus.w == minus.w);
        CHECK(plus.phi == -minus.phi);
      }
      {
        const PulseAction plus = square_pulse_action(square_pulse(area, x / 2.0));
        const PulseAction minus = square_pulse_action(square_pulse(area, -x / 2.0));
        CHECK(plus.q == minus.q);
        CHECK(plus.w == minus.w);
        CHECK(plus.phi == -minus.phi);
      }
    }
  }
}

TEST_CASE("W + Q^2 = 1 for analytic actions and the oracle") {
  for (double area : {0.5 * pi, pi, 2.0 * pi}) {
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      const PulseAction s = sech_pulse_action(sech_pulse(area, x * 0.5));
      CHECK(std::abs(s.w + s.q * s.q - 1.0) < 1e-12);
      const PulseAction r = square_pulse_action(square_pulse(area, x / 2.0));
      CHECK(std::abs(r.w + r.q * r.q - 1.0) < 1e-12);
      const PulseAction o = ode_pulse_oracle(sech_pulse(area, x * 0.5));
      CHECK(std::abs(o.w + o.q * o.q - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("analytic sech action matches the ODE oracle to 1e-6") {
  double worst = 0.0;
  for (double area : {0.5 * pi, pi, 2.0 * pi}) {
    for (int k = 0; k <= 24; ++k) {
      const double x = -3.0 + 0.25 * k;
      const PulseParams p = sech_pulse(area, x * 0.5);
      const double d = action_distance(sech_pulse_action(p), ode_pulse_oracle(p));
      worst = std::max(worst, d);
    }
  }
  INFO("worst action distance " << worst);
  CHECK(worst < 1e-6);
}

TEST_CASE("analytic square action matches the ODE oracle to 1e-6") {
  double worst = 0.0;
  for (double area : {0.5 * pi, pi, 2.0 * pi}) {
    for (int k = 0; k <= 24; ++k) {
      const double x = -3.0 + 0.25 * k;
      const PulseParams p = square_pulse(area, x / 2.0);
      const double d = action_distance(square_pulse_action(p), ode_pulse_oracle(p));
      worst = std::max(worst, d);
    }
  }
  INFO("worst action distance " << worst);
  CHECK(worst < 1e-6);
}

TEST_CASE("oracle on a zero-area pulse is the identity") {
  const PulseAction o = ode_pulse_oracle(sech_pulse(0.0, 0.9));
  CHECK(o.q == Catch::Approx(1.0).margin(1e-10));
  CHECK(o.phi == Catch::Approx(0.0).margin(1e-10));
  CHECK(o.w == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("pulse parameter validation") {
  PulseParams p;
  p.area = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = PulseParams{};
  p.bandwidth = 0.0;
  CHECK_THROWS_AS(sech_pulse_action(p), std::invalid_argument);
  p = PulseParams{};
  p.shape = PulseShape::square;
  p.duration = -2.0;
  CHECK_THROWS_AS(square_pulse_action(p), std::invalid_argument);
}
