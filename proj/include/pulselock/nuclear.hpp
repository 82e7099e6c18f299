#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pulselock/bloch.hpp"
#include "pulselock/parallel.hpp"
#include "pulselock/pulse.hpp"
#include "pulselock/units.hpp"

// Overhauser feedback loop: net nuclear polarization n (number of up minus
// down nuclei, steps of 2) shifts the electron precession frequency, the
// post-pulse electron spin sets direction-biased per-nucleus flip rates, and
// the resulting birth-death chain drives P(n).

namespace pulselock {

struct NuclearConfig {
  int n_nuclei = 20000;           // total nuclei, even
  double hyperfine_shift = 0.0;   // a_hf [rad/ps] per unit n
  double rate_scale = 1.0;        // C in the flip-rate prefactor [1/ps^2]
  double omega_min = 0.0;         // clamp floor for the 1/omega^2 factor
  int n_lo = 0;                   // grid window [n_lo, n_hi], step 2, even
  int n_hi = 0;

  void validate() const {
    if (n_nuclei < 2 || n_nuclei % 2 != 0)
      throw std::invalid_argument("NuclearConfig: n_nuclei must be even and >= 2");
    if (!(rate_scale > 0.0)) throw std::invalid_argument("NuclearConfig: rate_scale must be > 0");
    if (!(omega_min > 0.0)) throw std::invalid_argument("NuclearConfig: omega_min must be > 0");
    if (n_lo % 2 != 0 || n_hi % 2 != 0 || n_lo > n_hi)
      throw std::invalid_argument("NuclearConfig: grid window must be even values, n_lo <= n_hi");
    if (n_lo < -n_nuclei || n_hi > n_nuclei)
      throw std::invalid_argument("NuclearConfig: grid window exceeds [-N, N]");
  }

  std::size_t grid_size() const { return static_cast<std::size_t>((n_hi - n_lo) / 2) + 1; }
  int n_at(std::size_t i) const { return n_lo + 2 * static_cast<int>(i); }
};

// Probability masses over the n grid (step 2).
struct NuclearDistribution {
  int n_lo = 0;
  std::vector<double> p;

  int n_at(std::size_t i) const { return n_lo + 2 * static_cast<int>(i); }
  double sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }

  void validate() const {
    for (double v : p)
      if (!(v >= 0.0)) throw std::invalid_argument("NuclearDistribution: negative mass");
    if (std::abs(sum() - 1.0) > 1e-9)
      throw std::invalid_argument("NuclearDistribution: masses do not sum to 1");
  }
};

// Per-nucleus flip rates [1/ps]; up = w+ (down->up), down = w- (up->down).
struct FlipRates {
  double up = 0.0;
  double down = 0.0;
};

// Linear Overhauser shift of the precession frequency.
inline double omega_of_n(double omega0, int n, const NuclearConfig& cfg) {
  if (n < -cfg.n_nuclei || n > cfg.n_nuclei)
    throw std::invalid_argument("omega_of_n: n outside [-N, N]");
  return omega0 + cfg.hyperfine_shift * static_cast<double>(n);
}

//   w+- = C * [W/(2 T_R)] * [(1 + 2 Sz)/omega^2] * [1 +- 2 Sx]
// with S the post-pulse steady state. Both rates vanish when the pulse is
// transparent (W = 0) or the synchronized spin is fully polarized
// (1 + 2 Sz = 0); omega is clamped below by cfg.omega_min.
inline FlipRates flip_rates(double w, const BlochVector& s, double omega, double t_rep,
                            const NuclearConfig& cfg) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("flip_rates: W outside [0, 1]");
  if (s.norm() > 0.5 + 1e-9) throw std::invalid_argument("flip_rates: |S| > 1/2");
  const double wc = std::max(omega, cfg.omega_min);
  const double base =
      std::max(0.0, cfg.rate_scale * w / (2.0 * t_rep) * (1.0 + 2.0 * s.z) / (wc * wc));
  return FlipRates{std::max(0.0, base * (1.0 + 2.0 * s.x)),
                   std::max(0.0, base * (1.0 - 2.0 * s.x))};
}

// Total transition rates of the birth-death chain over the grid window:
// up[i] is the rate n -> n+2, down[i] the rate n -> n-2. Reflecting
// boundaries: rates leading out of the window are zero.
struct BirthDeathGenerator {
  int n_lo = 0;
  std::vector<double> up;
  std::vector<double> down;

  std::size_t size() const { return up.size(); }
  int n_at(std::size_t i) const { return n_lo + 2 * static_cast<int>(i); }

  double max_total_rate() const {
    double best = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) best = std::max(best, up[i] + down[i]);
    return best;
  }

  // dP/dt into out.
  void apply(const std::vector<double>& p, std::vector<double>& out) const {
    const std::size_t m = size();
    out.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = -(up[i] + down[i]) * p[i];
      if (i > 0) acc += up[i - 1] * p[i - 1];
      if (i + 1 < m) acc += down[i + 1] * p[i + 1];
      out[i] = acc;
    }
  }
};

// Builds the chain for a bare frequency omega0: per grid point the Overhauser
// shifted frequency, the post-pulse steady spin, the per-nucleus rates and
// the occupancy factors (N -+ n)/2. The pulse action does not depend on n
// (nuclear polarization shifts the spin splitting, not the optical
// transition), so it is computed once.
inline BirthDeathGenerator build_generator(double omega0, const PulseParams& pulse,
                                           const EvolutionParams& evo,
                                           const NuclearConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  evo.validate();
  const PulseAction act = pulse_action(pulse);
  const AffineMap3 pulse_map = pulse_bloch_map(act);
  const std::size_t m = cfg.grid_size();
  const double n_total = static_cast<double>(cfg.n_nuclei);

  BirthDeathGenerator gen;
  gen.n_lo = cfg.n_lo;
  gen.up.assign(m, 0.0);
  gen.down.assign(m, 0.0);

  parallel_for(m, threads, [&](std::size_t i) {
    const int n = cfg.n_at(i);
    EvolutionParams e = evo;
    e.omega = omega_of_n(omega0, n, cfg);
    const BlochVector s = steady_state(compose(pulse_map, free_evolution_map(e, e.t_rep)));
    const FlipRates fr = flip_rates(act.w, s, e.omega, e.t_rep, cfg);
    gen.up[i] = fr.up * 0.5 * (n_total - n);
    gen.down[i] = fr.down * 0.5 * (n_total + n);
  });

  gen.up[m - 1] = 0.0;
  gen.down[0] = 0.0;
  return gen;
}

// Stationary distribution by the detailed-balance product construction,
//   P(n+2)/P(n) = up(n)/down(n+2),
// accumulated in log space. If an interior link is broken (up(n) = 0 or
// down(n+2) = 0) the chain splits into classes; each class is solved
// separately and weighted by the reference distribution mass inside it
// (uniform when no reference is given).
inline NuclearDistribution stationary_distribution(const BirthDeathGenerator& gen,
                                                   const NuclearDistribution* ref = nullptr) {
  const std::size_t m = gen.size();
  if (m == 0) throw std::invalid_argument("stationary_distribution: empty generator");
  bool any_rate = false;
  for (std::size_t i = 0; i < m; ++i)
    if (gen.up[i] > 0.0 || gen.down[i] > 0.0) any_rate = true;
  if (!any_rate) throw std::runtime_error("stationary_distribution: all rates are zero");
  if (ref && ref->p.size() != m)
    throw std::invalid_argument("stationary_distribution: reference grid mismatch");

  NuclearDistribution out;
  out.n_lo = gen.n_lo;
  out.p.assign(m, 0.0);

  std::size_t cls_begin = 0;
  double total = 0.0;
  while (cls_begin < m) {
    std::size_t cls_end = cls_begin;  // inclusive
    while (cls_end + 1 < m && gen.up[cls_end] > 0.0 && gen.down[cls_end + 1] > 0.0) ++cls_end;

    // log-space product within the class
    std::vector<double> lp(cls_end - cls_begin + 1, 0.0);
    for (std::size_t i = cls_begin; i < cls_end; ++i)
      lp[i - cls_begin + 1] =
          lp[i - cls_begin] + std::log(gen.up[i]) - std::log(gen.down[i + 1]);
    const double lp_max = *std::max_element(lp.begin(), lp.end());

    double cls_sum = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
      out.p[cls_begin + i] = std::exp(lp[i] - lp_max);
      cls_sum += out.p[cls_begin + i];
    }

    double weight = static_cast<double>(lp.size()) / static_cast<double>(m);
    if (ref) {
      weight = 0.0;
      for (std::size_t i = cls_begin; i <= cls_end; ++i) weight += ref->p[i];
    }
    for (std::size_t i = cls_begin; i <= cls_end; ++i) out.p[i] *= weight / cls_sum;
    total += weight;

    cls_begin = cls_end + 1;
  }

  if (!(total > 0.0))
    throw std::runtime_error("stationary_distribution: reference mass entirely outside chain");
  for (double& v : out.p) v /= total;
  return out;
}

}  // namespace pulselock
