#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "pulselock/bloch.hpp"
#include "pulselock/units.hpp"

using namespace pulselock;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

EvolutionParams no_decay(double omega, double t_rep) {
  return EvolutionParams{omega, t_rep, inf, inf};
}

double max_component_diff(const BlochVector& a, const BlochVector& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

}  // namespace

TEST_CASE("pulse_bloch_map limits") {
  SECTION("full retention, no phase: identity") {
    const AffineMap3 m = pulse_bloch_map(PulseAction{1.0, 0.0, 0.0});
    const BlochVector s{0.2, -0.3, 0.1};
    CHECK(max_component_diff(m.apply(s), s) < 1e-15);
  }
  SECTION("resonant pi pulse: A = diag(0, 0, 1/2), b = (0, 0, -1/4)") {
    const AffineMap3 m = pulse_bloch_map(PulseAction{0.0, 0.0, 1.0});
    CHECK(m.a[0][0] == 0.0);
    CHECK(m.a[1][1] == 0.0);
    CHECK(m.a[2][2] == 0.5);
    CHECK(m.b[2] == -0.25);
    CHECK(m.b[0] == 0.0);
    CHECK(m.b[1] == 0.0);
  }
  SECTION("pure phase pi/2 rotates the transverse components about z") {
    const AffineMap3 m = pulse_bloch_map(PulseAction{1.0, pi / 2.0, 0.0});
    const BlochVector out = m.apply(BlochVector{0.3, 0.0, 0.11});
    CHECK(out.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(out.y == Catch::Approx(0.3).margin(1e-15));
    CHECK(out.z == Catch::Approx(0.11).margin(1e-15));
  }
}

TEST_CASE("free evolution: quarter turn, full turn, decay") {
  const double t_rep = 100.0;
  SECTION("t = 0 is the identity") {
    const AffineMap3 m = free_evolution_map(no_decay(0.37, t_rep), 0.0);
    const BlochVector s{0.1, 0.2, -0.4};
    CHECK(max_component_diff(m.apply(s), s) < 1e-15);
  }
  SECTION("right-handed quarter turn about +x maps -z to +y") {
    const EvolutionParams e = no_decay(2.0 * pi / t_rep / 4.0 * 4.0, t_rep);
    // omega t = pi/2 at t = quarter period
    const double t = 0.25 * 2.0 * pi / e.omega;
    const BlochVector out = free_evolution_map(e, t).apply(BlochVector{0.0, 0.0, -0.5});
    CHECK(out.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(out.y == Catch::Approx(0.5).margin(1e-12));
    CHECK(out.z == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("full period without decay is the identity") {
    const EvolutionParams e = no_decay(2.0 * pi / t_rep, t_rep);
    const AffineMap3 m = free_evolution_map(e, t_rep);
    const BlochVector s{0.12, -0.33, 0.21};
    CHECK(max_component_diff(m.apply(s), s) < 1e-12);
  }
  SECTION("transverse components decay with T2, Sx with T1") {
    EvolutionParams e{0.0, t_rep, 50.0, 200.0};
    const AffineMap3 m = free_evolution_map(e, 25.0);
    const BlochVector out = m.apply(BlochVector{0.4, 0.0, 0.4});
    CHECK(out.x == Catch::Approx(0.4 * std::exp(-25.0 / 200.0)).epsilon(1e-14));
    CHECK(out.z == Catch::Approx(0.4 * std::exp(-25.0 / 50.0)).epsilon(1e-14));
  }
  SECTION("negative time rejected") {
    CHECK_THROWS_AS(free_evolution_map(no_decay(1.0, t_rep), -1.0), std::invalid_argument);
  }
}

TEST_CASE("compose: identities and rotation additivity") {
  const EvolutionParams e = no_decay(0.91, 50.0);
  const AffineMap3 f1 = free_evolution_map(e, 7.0);
  const AffineMap3 f2 = free_evolution_map(e, 11.0);
  const AffineMap3 sum = free_evolution_map(e, 18.0);
  const AffineMap3 composed = compose(f1, f2);

  const AffineMap3 id = AffineMap3::identity();
  const BlochVector s{0.2, 0.1, -0.3};
  CHECK(max_component_diff(compose(id, f1).apply(s), f1.apply(s)) < 1e-15);
  CHECK(max_component_diff(compose(f1, id).apply(s), f1.apply(s)) < 1e-15);
  CHECK(max_component_diff(composed.apply(s), sum.apply(s)) < 1e-12);
}

TEST_CASE("steady state closed forms for a resonant pi pulse, no decay") {
  const double t_rep = 100.0;
  const PulseAction act{0.0, 0.0, 1.0};

  const BlochVector psc =
      steady_state_after_pulse(act, no_decay(2.0 * pi * 7.0 / t_rep, t_rep));
  CHECK(max_component_diff(psc, BlochVector{0.0, 0.0, -0.5}) < 1e-12);

  const BlochVector anti =
      steady_state_after_pulse(act, no_decay(2.0 * pi * 7.5 / t_rep, t_rep));
  CHECK(max_component_diff(anti, BlochVector{0.0, 0.0, -1.0 / 6.0}) < 1e-12);
}

TEST_CASE("steady state equals many-fold iteration from any start") {
  const double t_rep = 100.0;
  const PulseAction act{0.8, 0.9, 1.0 - 0.64};
  const EvolutionParams e{2.0 * pi * 7.21 / t_rep, t_rep, 5000.0, 5000.0};
  const AffineMap3 m = period_map(act, e);
  const BlochVector fixed = steady_state(m);

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-0.28, 0.28);
  for (int trial = 0; trial < 10; ++trial) {
    const BlochVector s0{u(rng), u(rng), u(rng)};
    const BlochVector it = iterate_map(m, s0, 10000);
    CHECK(max_component_diff(fixed, it) < 1e-10);
  }
}

TEST_CASE("iterate_map basics") {
  const BlochVector s0{0.1, 0.2, 0.3};
  CHECK(max_component_diff(iterate_map(AffineMap3::identity(), s0, 0), s0) == 0.0);
  CHECK(max_component_diff(iterate_map(AffineMap3::identity(), s0, 17), s0) == 0.0);
}

TEST_CASE("steady_state rejects a lossless synchronized map") {
  // pure rotation by a full period: I - A is singular
  const EvolutionParams e = no_decay(2.0 * pi / 100.0, 100.0);
  const AffineMap3 m = compose(pulse_bloch_map(PulseAction{1.0, 0.0, 0.0}),
                               free_evolution_map(e, 100.0));
  CHECK_THROWS_AS(steady_state(m), std::runtime_error);
}

TEST_CASE("physical period maps are contractive on the Bloch ball") {
  const double t_rep = 100.0;
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double q = 0.5 * (u(rng) + 1.0);  // [0, 1)
    const PulseAction act{q, pi * u(rng), 1.0 - q * q};
    const EvolutionParams e{2.0 * pi * (5.0 + u(rng)) / t_rep, t_rep, 4000.0, 4000.0};
    const AffineMap3 m = period_map(act, e);
    // random point on the boundary of the ball
    BlochVector s{u(rng), u(rng), u(rng)};
    const double r = s.norm();
    if (r == 0.0) continue;
    s.x *= 0.5 / r;
    s.y *= 0.5 / r;
    s.z *= 0.5 / r;
    CHECK(m.apply(s).norm() <= 0.5 + 1e-12);
  }
}

TEST_CASE("spin trajectory: initial point, pure precession, decay envelope") {
  const double t_rep = 200.0;
  SECTION("t = 0 returns the post-pulse spin") {
    const EvolutionParams e = no_decay(0.3, t_rep);
    const BlochVector s{0.11, -0.2, 0.4};
    const auto traj = spin_trajectory(s, e, {0.0});
    CHECK(max_component_diff(traj[0], s) < 1e-15);
  }
  SECTION("synchronized resonant steady state precesses as -cos(omega t)/2") {
    const EvolutionParams e = no_decay(2.0 * pi * 9.0 / t_rep, t_rep);
    const BlochVector s{0.0, 0.0, -0.5};
    std::vector<double> ts;
    for (int k = 0; k < 16; ++k) ts.push_back(t_rep * k / 16.0);
    const auto traj = spin_trajectory(s, e, ts);
    for (std::size_t k = 0; k < ts.size(); ++k)
      CHECK(traj[k].z == Catch::Approx(-0.5 * std::cos(e.omega * ts[k])).margin(1e-12));
  }
  SECTION("amplitude at t -> T_R is smaller by exp(-T_R/T2)") {
    const EvolutionParams e{2.0 * pi * 9.0 / t_rep, t_rep, 300.0, 300.0};
    const BlochVector s{0.0, 0.0, -0.5};
    const double eps = 1e-9;
    const auto traj = spin_trajectory(s, e, {0.0, t_rep - eps});
    const double ratio = std::hypot(traj[1].y, traj[1].z) / std::hypot(traj[0].y, traj[0].z);
    CHECK(ratio == Catch::Approx(std::exp(-t_rep / 300.0)).epsilon(1e-6));
  }
  SECTION("out-of-range offsets are rejected") {
    const EvolutionParams e = no_decay(0.3, t_rep);
    CHECK_THROWS_AS(spin_trajectory(BlochVector{}, e, {t_rep}), std::invalid_argument);
    CHECK_THROWS_AS(spin_trajectory(BlochVector{}, e, {-1.0}), std::invalid_argument);
  }
}

TEST_CASE("nearest_psc: rounding, ties to even, paper operating point") {
  const double t_rep = 100.0;
  SECTION("exact and fractional multiples") {
    auto [n1, w1] = nearest_psc(2.0 * pi * 10.0 / t_rep, t_rep);
    CHECK(n1 == 10);
    CHECK(w1 == Catch::Approx(2.0 * pi * 10.0 / t_rep).epsilon(1e-15));
    auto [n2, w2] = nearest_psc(2.0 * pi * 10.4 / t_rep, t_rep);
    CHECK(n2 == 10);
  }
  SECTION("half-integer ties round to even") {
    CHECK(nearest_psc(2.0 * pi * 10.5 / t_rep, t_rep).first == 10);
    CHECK(nearest_psc(2.0 * pi * 11.5 / t_rep, t_rep).first == 12);
  }
  SECTION("18.2 GHz at 81 MHz repetition gives N = 225") {
    const double t_r = rep_rate_mhz_to_period_ps(81.0);
    const double omega = ghz_to_angular(18.2);
    CHECK(omega * t_r / (2.0 * pi) == Catch::Approx(224.69).margin(0.01));
    CHECK(nearest_psc(omega, t_r).first == 225);
  }
}

TEST_CASE("steady state parity in the pulse phase (detuning reflection)") {
  // flipping phi (odd part of the pulse action under detuning reflection)
  // flips Sx and leaves Sy, Sz unchanged
  const double t_rep = 123.0;
  for (double phi : {0.3, 1.2, 2.6}) {
    for (double frac : {7.13, 7.36, 7.5, 7.77}) {
      const EvolutionParams e{2.0 * pi * frac / t_rep, t_rep, 8000.0, 8000.0};
      const double q = 0.9;
      const BlochVector plus = steady_state_after_pulse(PulseAction{q, phi, 1 - q * q}, e);
      const BlochVector minus = steady_state_after_pulse(PulseAction{q, -phi, 1 - q * q}, e);
      CHECK(plus.x == Catch::Approx(-minus.x).margin(1e-12));
      CHECK(plus.y == Catch::Approx(minus.y).margin(1e-12));
      CHECK(plus.z == Catch::Approx(minus.z).margin(1e-12));
    }
  }
}
