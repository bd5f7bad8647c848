#pragma once
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "constants.hpp"

// Cylinder-function kernels: J_n, Y_n, I_n, K_n for integer order and real
// positive argument, plus first derivatives. Self-contained on purpose: the
// mode solver's dispersion determinant is built from these, and they are
// tested against a bundled high-precision table (data/bessel_reference.csv).
//
// Regimes (chosen so no branch loses more than ~3 digits to cancellation):
//   J : ascending series for x <= 9, else Miller backward recurrence
//       normalized with J0 + 2*sum_k J_{2k} = 1.
//   Y : Neumann series Y0 = (2/pi)[(ln(x/2)+gamma) J0 + 2 sum (-1)^{k+1} J_2k / k]
//       and its term-wise derivative for Y1 = -Y0'; both ride on the J
//       array, converge once 2k > x, and have no cancellation blow-up.
//       Upward recurrence in order, which is stable for Y.
//   I : ascending series everywhere (all terms positive).
//   K : K0 log-series for x <= 2 with K1 from the Wronskian, else the
//       integral int_0^inf exp(-x cosh t) cosh(nt) dt by trapezoid, which
//       converges spectrally because the integrand is even and analytic.
// Supported domain: 0 <= x <= 120, 0 <= n <= 8, relative accuracy ~1e-12.

namespace ringspdc::bessel {

inline constexpr double euler_gamma = 0.57721566490153286;

namespace detail {

inline void check_domain(int n, double x) {
  if (n < 0 || n > 8) throw std::domain_error("bessel: order out of supported range [0,8]");
  if (!(x >= 0.0) || x > 120.0) throw std::domain_error("bessel: argument out of supported range [0,120]");
}

// J_n by ascending series, reliable for x <= 9.
inline double j_series(int n, double x) {
  double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;  // (x/2)^n / n!
  double sum = term;
  double q = half * half;
  for (int k = 1; k < 80; ++k) {
    term *= -q / (static_cast<double>(k) * (n + k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
  }
  return sum;
}

// Miller backward recurrence, all orders 0..nmax at once, for x > 9.
inline void j_miller(int nmax, double x, double* out) {
  int m = static_cast<int>(1.36 * x + 40.0);
  if (m < nmax + 8) m = nmax + 8;
  m += m & 1;  // even start keeps the normalization sum aligned
  double bp = 0.0, b = 1e-30, norm = 0.0;
  for (int k = m; k >= 1; --k) {
    double bm = (2.0 * k / x) * b - bp;
    bp = b;
    b = bm;
    if ((k & 1) == 0) norm += 2.0 * bp;  // accumulates J_k for even k >= 2... see below
    if (k - 1 <= nmax) out[k - 1] = b;
    if (std::abs(b) > 1e250) {  // rescale to dodge overflow on long recurrences
      b *= 1e-250;
      bp *= 1e-250;
      norm *= 1e-250;
      for (int i = k - 1; i <= nmax; ++i)
        if (i >= 0) out[i] *= 1e-250;
    }
  }
  norm += b;  // J0 term of J0 + 2*(J2 + J4 + ...)
  for (int i = 0; i <= nmax; ++i) out[i] /= norm;
}

// J_0..J_nmax with no public-domain order cap (orders beyond 8 feed the
// Neumann series for Y internally).
inline void j_array(int nmax, double x, double* out) {
  if (x <= 9.0) {
    for (int k = 0; k <= nmax; ++k) out[k] = j_series(k, x);
  } else {
    j_miller(nmax, x, out);
  }
}

// Y0 and Y1 from the Neumann series and its term-wise derivative.
inline void y0_y1(double x, double& y0, double& y1) {
  int nmax = static_cast<int>(x) + 45;
  std::vector<double> j(nmax + 1);
  j_array(nmax, x, j.data());
  double lg = std::log(0.5 * x) + euler_gamma;
  double s0 = 0.0, s1 = 0.0;
  for (int k = (nmax - 1) / 2; k >= 1; --k) {  // small terms first
    double sign = (k & 1) ? 1.0 : -1.0;
    s0 += sign * j[2 * k] / k;
    s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / (2.0 * k);
  }
  y0 = (2.0 / pi) * (lg * j[0] + 2.0 * s0);
  y1 = -(2.0 / pi) * (-lg * j[1] + j[0] / x + 2.0 * s1);
}

// K_n for n in {0,1}, x > 2: trapezoid on the even analytic integrand.
// The integrand narrows like 1/sqrt(x), so the step follows suit.
inline double k_integral(int n, double x) {
  const double h = 0.55 / std::sqrt(std::max(x, 4.0));
  double tmax = std::acosh(1.0 + 48.0 / x);
  int N = static_cast<int>(tmax / h) + 1;
  double sum = 0.5;  // t = 0 contributes cosh(0)*exp(0) with half weight
  for (int k = 1; k <= N; ++k) {
    double t = h * k;
    sum += std::cosh(n * t) * std::exp(-x * (std::cosh(t) - 1.0));
  }
  return h * sum * std::exp(-x);
}

inline double i_series(int n, double x) {
  double half = 0.5 * x;
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;
  double sum = term;
  double q = half * half;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (n + k));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace detail

// J_0..J_nmax written to out[0..nmax].
inline void cyl_j_array(int nmax, double x, double* out) {
  detail::check_domain(nmax, x);
  if (x <= 9.0) {
    for (int k = 0; k <= nmax; ++k) out[k] = detail::j_series(k, x);
  } else {
    detail::j_miller(nmax, x, out);
  }
}

inline double cyl_j(int n, double x) {
  detail::check_domain(n, x);
  if (x <= 9.0) return detail::j_series(n, x);
  std::array<double, 9> buf{};
  detail::j_miller(n, x, buf.data());
  return buf[n];
}

inline double cyl_y(int n, double x) {
  detail::check_domain(n, x);
  if (x <= 0.0) throw std::domain_error("bessel: Y_n requires x > 0");
  double y0, y1;
  detail::y0_y1(x, y0, y1);
  if (n == 0) return y0;
  double ym = y0, yc = y1;
  for (int k = 1; k < n; ++k) {
    double yn = (2.0 * k / x) * yc - ym;
    ym = yc;
    yc = yn;
  }
  return yc;
}

inline double mod_i(int n, double x) {
  detail::check_domain(n, x);
  return detail::i_series(n, x);
}

inline double mod_k(int n, double x) {
  detail::check_domain(n, x);
  if (x <= 0.0) throw std::domain_error("bessel: K_n requires x > 0");
  double k0, k1;
  if (x <= 2.0) {
    // A&S 9.6.13 series for K0; K1 from I0*K1 + I1*K0 = 1/x.
    double i0 = detail::i_series(0, x);
    double q = 0.25 * x * x;
    double term = 1.0, hk = 0.0, sum = 0.0;
    for (int k = 1; k < 40; ++k) {
      term *= q / (static_cast<double>(k) * k);
      hk += 1.0 / k;
      sum += hk * term;
      if (hk * term < 1e-18 * sum + 1e-300) break;
    }
    k0 = -(std::log(0.5 * x) + euler_gamma) * i0 + sum;
    k1 = (1.0 / x - detail::i_series(1, x) * k0) / i0;
  } else {
    k0 = detail::k_integral(0, x);
    k1 = detail::k_integral(1, x);
  }
  if (n == 0) return k0;
  double km = k0, kc = k1;
  for (int k = 1; k < n; ++k) {
    double kn = (2.0 * k / x) * kc + km;
    km = kc;
    kc = kn;
  }
  return kc;
}

// First derivatives via the standard recurrences.
inline double cyl_j_prime(int n, double x) {
  if (n == 0) return -cyl_j(1, x);
  return cyl_j(n - 1, x) - (n / x) * cyl_j(n, x);
}
inline double cyl_y_prime(int n, double x) {
  if (n == 0) return -cyl_y(1, x);
  return cyl_y(n - 1, x) - (n / x) * cyl_y(n, x);
}
inline double mod_i_prime(int n, double x) {
  if (n == 0) return mod_i(1, x);
  return mod_i(n - 1, x) - (n / x) * mod_i(n, x);
}
inline double mod_k_prime(int n, double x) {
  if (n == 0) return -mod_k(1, x);
  return -mod_k(n - 1, x) - (n / x) * mod_k(n, x);
}

}  // namespace ringspdc::bessel
