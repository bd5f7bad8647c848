#pragma once
#include <complex>
#include <numbers>

// Physical constants (SI) and the unit conventions used throughout:
// lengths in micrometers, propagation constants in rad/um, angular
// frequencies in rad/s, powers in watts. Magnetic fields are carried in
// the impedance-scaled form h = Z0 * H so that e and h share units.

namespace ringspdc {

using cplx = std::complex<double>;
inline constexpr cplx iu{0.0, 1.0};

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double c_m_per_s = 2.99792458e8;
inline constexpr double c_um_per_s = 2.99792458e14;
inline constexpr double hbar_J_s = 1.054571817e-34;
inline constexpr double eps0_F_per_m = 8.8541878128e-12;
inline constexpr double eps0_F_per_um = eps0_F_per_m * 1e-6;
inline constexpr double vacuum_impedance_ohm = 376.730313668;

inline constexpr double k0_rad_per_um(double lambda_um) { return two_pi / lambda_um; }
inline constexpr double omega_rad_per_s(double lambda_um) { return two_pi * c_um_per_s / lambda_um; }
inline constexpr double lambda_um_of_omega(double omega) { return two_pi * c_um_per_s / omega; }

// Dimension bookkeeping for the units audit: exponents over (kg, m, s, A).
struct Dim {
  int kg = 0, m = 0, s = 0, A = 0;
  friend constexpr Dim operator*(Dim a, Dim b) { return {a.kg + b.kg, a.m + b.m, a.s + b.s, a.A + b.A}; }
  friend constexpr Dim operator/(Dim a, Dim b) { return {a.kg - b.kg, a.m - b.m, a.s - b.s, a.A - b.A}; }
  friend constexpr bool operator==(Dim a, Dim b) = default;
};
constexpr Dim pow(Dim a, int n) {
  Dim r{};
  for (int i = 0; i < n; ++i) r = r * a;
  return r;
}
constexpr Dim sqrt_dim(Dim a) { return {a.kg / 2, a.m / 2, a.s / 2, a.A / 2}; }

namespace dim {
inline constexpr Dim one{};
inline constexpr Dim meter{0, 1, 0, 0};
inline constexpr Dim second{0, 0, 1, 0};
inline constexpr Dim watt{1, 2, -3, 0};
inline constexpr Dim joule{1, 2, -2, 0};
inline constexpr Dim volt{1, 2, -3, -1};
inline constexpr Dim volt_per_m{1, 1, -3, -1};
inline constexpr Dim hbar = joule * second;
inline constexpr Dim eps0{-1, -3, 4, 2};
inline constexpr Dim chi2 = meter / volt;
inline constexpr Dim omega = one / second;
}  // namespace dim

}  // namespace ringspdc
