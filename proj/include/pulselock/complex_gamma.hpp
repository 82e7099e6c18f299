#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "pulselock/units.hpp"

namespace pulselock {

namespace detail {

// Lanczos coefficients, g = 607/128, 15 terms (Godfrey's set). Gives
// relative error below 1e-13 on the right half plane in double precision.
inline constexpr double lanczos_g = 4.7421875;
inline constexpr double lanczos_c[15] = {
    0.99999999999999709182,     57.156235665862923517,
    -59.597960355475491248,     14.136097974741747174,
    -0.49191381609762019978,    0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4,
    0.15808870322491248884e-3,  -0.21026444172410488319e-3,
    0.21743961811521264320e-3,  -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

inline bool is_nonpositive_integer(const std::complex<double>& z) {
  return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

}  // namespace detail

// Principal-branch log-gamma for complex argument. Reflection is used for
// Re z < 0.5; the branch of the reflection log may differ from the principal
// lnGamma branch by 2*pi*i*k, which is irrelevant after exponentiation.
inline std::complex<double> log_gamma_complex(std::complex<double> z) {
  if (detail::is_nonpositive_integer(z)) {
    throw std::domain_error("log_gamma_complex: pole at non-positive integer");
  }
  if (z.real() < 0.5) {
    // lnGamma(z) = ln(pi) - ln(sin(pi z)) - lnGamma(1 - z)
    const std::complex<double> s = std::sin(pi * z);
    return std::log(pi) - std::log(s) - log_gamma_complex(1.0 - z);
  }
  const std::complex<double> zm1 = z - 1.0;
  std::complex<double> a = detail::lanczos_c[0];
  for (int k = 1; k < 15; ++k) a += detail::lanczos_c[k] / (zm1 + static_cast<double>(k));
  const std::complex<double> t = zm1 + detail::lanczos_g + 0.5;
  return 0.5 * std::log(2.0 * pi) + (zm1 + 0.5) * std::log(t) - t + std::log(a);
}

inline std::complex<double> gamma_complex(std::complex<double> z) {
  return std::exp(log_gamma_complex(z));
}

}  // namespace pulselock
