#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pulselock/nuclear.hpp"

// Time evolution of P(n) under the birth-death master equation. The
// generator is tridiagonal and the rate landscape is stiff (rates near a
// synchronized frequency are orders of magnitude below the rest), so steps
// are taken with Crank-Nicolson, which is A-stable and conserves total
// probability identically; accuracy is controlled by step doubling.

namespace pulselock {

struct EvolveOptions {
  // Local step tolerances; tight enough that accumulated global error stays
  // below ~1e-8 over full relaxations.
  double rtol = 1e-11;
  double atol = 1e-14;
  std::size_t max_steps = 50'000'000;
};

struct EvolveReport {
  double max_drift = 0.0;      // worst |sum P - 1| seen at step acceptance
  double total_clipped = 0.0;  // accumulated magnitude of clipped negatives
  std::size_t steps = 0;
};

namespace detail {

// Solves (I - h*G) x = rhs for the tridiagonal generator via the Thomas
// algorithm. I - h*G is an M-matrix, column diagonally dominant, so no
// pivoting is needed.
inline void solve_implicit(const BirthDeathGenerator& gen, double h,
                           const std::vector<double>& rhs, std::vector<double>& x,
                           std::vector<double>& diag_ws, std::vector<double>& rhs_ws) {
  const std::size_t m = gen.size();
  diag_ws.resize(m);
  rhs_ws = rhs;
  for (std::size_t i = 0; i < m; ++i) diag_ws[i] = 1.0 + h * (gen.up[i] + gen.down[i]);
  // sub-diagonal entry (row i, col i-1) is -h*up[i-1]; super is -h*down[i+1]
  for (std::size_t i = 1; i < m; ++i) {
    const double f = (-h * gen.up[i - 1]) / diag_ws[i - 1];
    diag_ws[i] -= f * (-h * gen.down[i]);
    rhs_ws[i] -= f * rhs_ws[i - 1];
  }
  x.resize(m);
  x[m - 1] = rhs_ws[m - 1] / diag_ws[m - 1];
  for (std::size_t i = m - 1; i-- > 0;)
    x[i] = (rhs_ws[i] - (-h * gen.down[i + 1]) * x[i + 1]) / diag_ws[i];
}

struct CnWorkspace {
  std::vector<double> gp, rhs, half, diag, rhs_ws;
};

// One Crank-Nicolson step: (I - h/2 G) P' = (I + h/2 G) P.
inline void cn_step(const BirthDeathGenerator& gen, double h, const std::vector<double>& p,
                    std::vector<double>& out, CnWorkspace& ws) {
  gen.apply(p, ws.gp);
  ws.rhs.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) ws.rhs[i] = p[i] + 0.5 * h * ws.gp[i];
  solve_implicit(gen, 0.5 * h, ws.rhs, out, ws.diag, ws.rhs_ws);
}

}  // namespace detail

// Integrates dP/dt = G P through the ascending times in t_grid (starting at
// t = 0) and returns P at each output time. Negative masses from roundoff
// are clipped and the distribution renormalized; the clip magnitude is
// accumulated in the report.
inline std::vector<NuclearDistribution> evolve_distribution(
    const NuclearDistribution& p0, const BirthDeathGenerator& gen,
    const std::vector<double>& t_grid, const EvolveOptions& opts = {},
    EvolveReport* report = nullptr) {
  if (p0.p.size() != gen.size() || p0.n_lo != gen.n_lo)
    throw std::invalid_argument("evolve_distribution: distribution/generator grid mismatch");
  p0.validate();
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0))
      throw std::invalid_argument("evolve_distribution: output times must be >= 0");
    if (k > 0 && !(t_grid[k] > t_grid[k - 1]))
      throw std::invalid_argument("evolve_distribution: output times must be ascending");
  }

  EvolveReport rep;
  std::vector<NuclearDistribution> out;
  out.reserve(t_grid.size());

  std::vector<double> p = p0.p;
  double t = 0.0;

  const double max_rate = gen.max_total_rate();
  double h = max_rate > 0.0 ? 0.1 / max_rate : 0.0;

  detail::CnWorkspace ws;
  std::vector<double> full, half1, half2;

  auto post_process = [&](std::vector<double>& v) {
    double sum = 0.0, clipped = 0.0;
    for (double& x : v) {
      if (x < 0.0) {
        clipped += -x;
        x = 0.0;
      }
      sum += x;
    }
    rep.max_drift = std::max(rep.max_drift, std::abs(sum - 1.0));
    if (clipped > 0.0) {
      if (clipped > 1e-6)
        throw std::runtime_error("evolve_distribution: negative mass beyond tolerance");
      rep.total_clipped += clipped;
      for (double& x : v) x /= sum;
    }
  };

  auto emit = [&] {
    NuclearDistribution d;
    d.n_lo = gen.n_lo;
    d.p = p;
    out.push_back(std::move(d));
  };

  for (double t_out : t_grid) {
    if (max_rate == 0.0) {  // generator inert: P(t) = P0
      emit();
      continue;
    }
    while (t < t_out) {
      if (++rep.steps > opts.max_steps)
        throw std::runtime_error("evolve_distribution: step limit exceeded");
      double hs = std::min(h, t_out - t);
      detail::cn_step(gen, hs, p, full, ws);
      detail::cn_step(gen, 0.5 * hs, p, half1, ws);
      detail::cn_step(gen, 0.5 * hs, half1, half2, ws);

      double err = 0.0, pmax = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        err = std::max(err, std::abs(half2[i] - full[i]));
        pmax = std::max(pmax, std::abs(half2[i]));
      }
      err /= 3.0;  // second order Richardson factor
      const double tol = opts.atol + opts.rtol * pmax;

      if (err <= tol) {
        p.swap(half2);
        t += hs;
        post_process(p);
        const double grow = err > 0.0 ? 0.85 * std::cbrt(tol / err) : 4.0;
        h = hs * std::clamp(grow, 0.2, 4.0);
      } else {
        h = hs * std::clamp(0.85 * std::cbrt(tol / err), 0.1, 1.0);
        if (!(h > 0.0) || t + h == t)
          throw std::runtime_error("evolve_distribution: step size underflow");
      }
    }
    emit();
  }

  if (report) *report = rep;
  return out;
}

}  // namespace pulselock
