#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pulselock/pulse.hpp"
#include "pulselock/units.hpp"

// Electron spin dynamics over one pulse repetition period. Geometry: the
// magnetic field points along x, the optical axis along z; spins precess in
// the y-z plane and |S| <= 1/2.

namespace pulselock {

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

// Affine action S -> A*S + b. Represents pulse maps, free evolution and
// their compositions; every physical map keeps the ball |S| <= 1/2 inside
// itself.
struct AffineMap3 {
  std::array<std::array<double, 3>, 3> a{};
  std::array<double, 3> b{};

  static AffineMap3 identity() {
    AffineMap3 m;
    m.a[0][0] = m.a[1][1] = m.a[2][2] = 1.0;
    return m;
  }

  BlochVector apply(const BlochVector& s) const {
    return BlochVector{
        a[0][0] * s.x + a[0][1] * s.y + a[0][2] * s.z + b[0],
        a[1][0] * s.x + a[1][1] * s.y + a[1][2] * s.z + b[1],
        a[2][0] * s.x + a[2][1] * s.y + a[2][2] * s.z + b[2],
    };
  }
};

struct EvolutionParams {
  double omega = 0.0;     // precession frequency about x [rad/ps]
  double t_rep = 0.0;     // pulse repetition period [ps]
  double t2 = 0.0;        // transverse coherence time [ps]
  double t1 = 0.0;        // longitudinal (along-field) relaxation time [ps]

  void validate() const {
    if (!(t_rep > 0.0)) throw std::invalid_argument("EvolutionParams: t_rep must be > 0");
    if (!(t2 > 0.0)) throw std::invalid_argument("EvolutionParams: t2 must be > 0");
    if (!(t1 > 0.0)) throw std::invalid_argument("EvolutionParams: t1 must be > 0");
  }
};

// Pulse action on the spin, in the optical-axis basis: the transverse
// coherence is scaled by q and rotated by phi about z; the pumped population
// returns through trion decay split equally between both spin states,
//   Sz -> (q^2 - 1)/4 + ((q^2 + 1)/2) Sz.
inline AffineMap3 pulse_bloch_map(const PulseAction& act) {
  const double c = std::cos(act.phi), s = std::sin(act.phi), q = act.q;
  AffineMap3 m;
  m.a[0][0] = q * c;
  m.a[0][1] = -q * s;
  m.a[1][0] = q * s;
  m.a[1][1] = q * c;
  m.a[2][2] = 0.5 * (q * q + 1.0);
  m.b[2] = 0.25 * (q * q - 1.0);
  return m;
}

// Right-handed precession about +x by omega*t with transverse decay exp(-t/T2)
// on (Sy, Sz) and exp(-t/T1) on Sx.
inline AffineMap3 free_evolution_map(const EvolutionParams& e, double t) {
  e.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("free_evolution_map: t must be >= 0");
  const double c = std::cos(e.omega * t), s = std::sin(e.omega * t);
  const double d2 = std::exp(-t / e.t2), d1 = std::exp(-t / e.t1);
  AffineMap3 m;
  m.a[0][0] = d1;
  m.a[1][1] = d2 * c;
  m.a[1][2] = -d2 * s;
  m.a[2][1] = d2 * s;
  m.a[2][2] = d2 * c;
  return m;
}

// (outer o inner): A = A_out * A_in, b = A_out * b_in + b_out.
inline AffineMap3 compose(const AffineMap3& outer, const AffineMap3& inner) {
  AffineMap3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += outer.a[i][k] * inner.a[k][j];
      m.a[i][j] = acc;
    }
    double acc = outer.b[i];
    for (int k = 0; k < 3; ++k) acc += outer.a[i][k] * inner.b[k];
    m.b[i] = acc;
  }
  return m;
}

inline BlochVector iterate_map(const AffineMap3& m, BlochVector s, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) s = m.apply(s);
  return s;
}

namespace detail {

// 3x3 solve with partial pivoting; returns false if a pivot vanishes.
inline bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs,
                   std::array<double, 3>& out) {
  std::array<int, 3> idx{0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[idx[r]][col]) > std::abs(m[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    const double d = m[idx[col]][col];
    if (d == 0.0) return false;
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[idx[r]][col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < 3; ++c) m[idx[r]][c] -= f * m[idx[col]][c];
      rhs[idx[r]] -= f * rhs[idx[col]];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double acc = rhs[idx[row]];
    for (int c = row + 1; c < 3; ++c) acc -= m[idx[row]][c] * out[c];
    out[row] = acc / m[idx[row]][row];
  }
  return true;
}

inline double norm_inf(const std::array<std::array<double, 3>, 3>& m) {
  double best = 0.0;
  for (int i = 0; i < 3; ++i) {
    double row = std::abs(m[i][0]) + std::abs(m[i][1]) + std::abs(m[i][2]);
    best = std::max(best, row);
  }
  return best;
}

}  // namespace detail

// Unique fixed point S* = (I - A)^-1 b of a contractive period map: the spin
// immediately after a pulse in the periodic steady state. Throws if I - A is
// singular beyond condition 1e12 (lossless synchronized edge case).
inline BlochVector steady_state(const AffineMap3& period_map) {
  std::array<std::array<double, 3>, 3> m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[i][j] = (i == j ? 1.0 : 0.0) - period_map.a[i][j];

  std::array<double, 3> x{};
  std::array<std::array<double, 3>, 3> inv;
  for (int col = 0; col < 3; ++col) {
    std::array<double, 3> e{};
    e[col] = 1.0;
    std::array<double, 3> sol{};
    if (!detail::solve3(m, e, sol))
      throw std::runtime_error("steady_state: singular period map (I - A not invertible)");
    for (int r = 0; r < 3; ++r) inv[r][col] = sol[r];
  }
  if (detail::norm_inf(m) * detail::norm_inf(inv) > 1e12)
    throw std::runtime_error("steady_state: period map too close to singular (cond > 1e12)");

  for (int i = 0; i < 3; ++i)
    x[i] = inv[i][0] * period_map.b[0] + inv[i][1] * period_map.b[1] +
           inv[i][2] * period_map.b[2];
  return BlochVector{x[0], x[1], x[2]};
}

// Full period map (pulse after one period of free evolution) and its fixed
// point, the post-pulse steady state.
inline AffineMap3 period_map(const PulseAction& act, const EvolutionParams& e) {
  return compose(pulse_bloch_map(act), free_evolution_map(e, e.t_rep));
}

inline BlochVector steady_state_after_pulse(const PulseAction& act, const EvolutionParams& e) {
  return steady_state(period_map(act, e));
}

// Free evolution of the post-pulse spin at offsets within one period; Sz(t)
// is the probed precession signal. Negative pump-probe delays correspond to
// t = T_R + t_neg.
inline std::vector<BlochVector> spin_trajectory(const BlochVector& s_post,
                                                const EvolutionParams& e,
                                                const std::vector<double>& times) {
  e.validate();
  std::vector<BlochVector> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0 && t < e.t_rep))
      throw std::invalid_argument("spin_trajectory: time offset outside [0, T_R)");
    out.push_back(free_evolution_map(e, t).apply(s_post));
  }
  return out;
}

// Nearest phase synchronization condition omega = 2 pi N / T_R; exact
// half-integer multiples round to even N.
inline std::pair<long, double> nearest_psc(double omega, double t_rep) {
  if (!(omega > 0.0)) throw std::invalid_argument("nearest_psc: omega must be > 0");
  const long n = static_cast<long>(std::nearbyint(omega * t_rep / (2.0 * pi)));
  return {n, 2.0 * pi * static_cast<double>(n) / t_rep};
}

}  // namespace pulselock
