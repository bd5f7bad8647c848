#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "ringspdc/bessel.hpp"
#include "ringspdc/constants.hpp"
#include "ringspdc/errors.hpp"
#include "ringspdc/mode_solver.hpp"
#include "ringspdc/profile.hpp"

// Two independent checks on the boundary-matching solver:
//   1. the classic single-core step-fiber dispersion relation, evaluated in
//      pole-free product form, for exact vector modes of two-layer profiles;
//   2. a scalar (weak-guidance) finite-difference eigensolver for arbitrary
//      radial profiles, expected to agree only up to the polarization gap.

namespace ringspdc::fdoracle {

struct FdOptions {
  int points = 4000;        // interior grid points
  double r_max_um = 0.0;    // 0 -> four outer-core radii
};

// Scalar LP effective indices of azimuthal order ell, descending, guided
// band only.  Conservative (flux-form) discretization of
//   (1/r)(r f')' + (eps k0^2 - ell^2/r^2) f = beta^2 f
// on a cell-centered grid: the r-weighted flux vanishes at the axis by
// construction, which sidesteps the critical 1/(4r^2) potential that the
// u = f sqrt(r) substitution would create at ell = 0.  A diag(sqrt(r))
// similarity makes the operator symmetric tridiagonal; the permittivity
// enters cell-averaged so layer steps need not sit on grid faces.
inline std::vector<double> scalar_lp_neff(const EvaluatedProfile& ep, int ell,
                                          const FdOptions& opt = {}) {
  if (ell < 0) throw ComputationError("scalar order must be >= 0");
  const double r_core = ep.r_bound_um.empty() ? ep.domain_radius_um
                                              : ep.r_bound_um.back();
  const double rmax = opt.r_max_um > 0.0 ? opt.r_max_um : 4.0 * r_core;
  const int N = std::max(opt.points, 64);
  const double h = rmax / N;

  auto eps_cell = [&](double lo, double hi) {
    double acc = 0.0, cursor = lo;
    for (std::size_t i = 0; i < ep.r_bound_um.size(); ++i) {
      const double b = ep.r_bound_um[i];
      if (b <= cursor) continue;
      if (b >= hi) break;
      acc += (b - cursor) * ep.eps[i];
      cursor = b;
    }
    acc += (hi - cursor) * ep.eps_at(0.5 * (cursor + hi));
    return acc / (hi - lo);
  };

  Eigen::VectorXd diag(N), sub(N - 1);
  for (int i = 0; i < N; ++i) {
    const double r = (i + 0.5) * h;     // cell center
    const double rl = i * h, rh = (i + 1) * h;  // cell faces
    diag(i) = -(rl + rh) / (r * h * h) + eps_cell(rl, rh) * ep.k0 * ep.k0 -
              static_cast<double>(ell) * ell / (r * r);
    if (i + 1 < N) sub(i) = rh / (h * h * std::sqrt(r * (r + h)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();

  const double lo = ep.eps.back() * ep.k0 * ep.k0;
  const double hi = ep.eps_max() * ep.k0 * ep.k0;
  std::vector<double> out;
  for (int i = N - 1; i >= 0; --i) {
    if (ev(i) <= lo || ev(i) >= hi) continue;
    out.push_back(std::sqrt(ev(i)) / ep.k0);
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

namespace detail {

// Characteristic functions of the uniform-core fiber, multiplied through by
// (U J_n(U) W K_n(W))^2 or its TE/TM analogue so that J-zeros do not fake
// sign changes during the scan.
inline double step_char(int n, Subsystem sub, double n_core, double n_clad,
                        double a_um, double k0, double beta) {
  const double U = a_um * std::sqrt(n_core * n_core * k0 * k0 - beta * beta);
  const double W = a_um * std::sqrt(beta * beta - n_clad * n_clad * k0 * k0);
  if (sub == Subsystem::TE || sub == Subsystem::TM) {
    const double J0 = bessel::cyl_j(0, U), J1 = bessel::cyl_j(1, U);
    const double K0 = bessel::mod_k(0, W), K1 = bessel::mod_k(1, W);
    if (sub == Subsystem::TE) return J1 * W * K0 + K1 * U * J0;
    return n_core * n_core * J1 * W * K0 + n_clad * n_clad * K1 * U * J0;
  }
  const double J = bessel::cyl_j(n, U);
  const double Jp = bessel::cyl_j_prime(n, U);
  const double K = bessel::mod_k(n, W);
  const double Kp = bessel::mod_k_prime(n, W);
  const double a1 = Jp * W * K + Kp * U * J;
  const double a2 =
      n_core * n_core * Jp * W * K + n_clad * n_clad * Kp * U * J;
  const double invsum = 1.0 / (U * U) + 1.0 / (W * W);
  const double prod = U * J * W * K;
  const double rhs = static_cast<double>(n) * n * (beta / k0) * (beta / k0) *
                     invsum * invsum * prod * prod;
  return a1 * a2 - rhs;
}

// Scalar LP dispersion function of the step fiber, in the same pole-free
// product form: U J_{l+1}(U) K_l(W) - W K_{l+1}(W) J_l(U).
inline double scalar_step_char(int ell, double n_core, double n_clad,
                               double a_um, double k0, double beta) {
  const double U = a_um * std::sqrt(n_core * n_core * k0 * k0 - beta * beta);
  const double W = a_um * std::sqrt(beta * beta - n_clad * n_clad * k0 * k0);
  return U * bessel::cyl_j(ell + 1, U) * bessel::mod_k(ell, W) -
         W * bessel::mod_k(ell + 1, W) * bessel::cyl_j(ell, U);
}

}  // namespace detail

// Exact scalar LP effective indices of a step fiber; the reference the FD
// discretization is held against.
inline std::vector<double> scalar_step_lp_neff(double n_core, double n_clad,
                                               double a_um, double lambda_um,
                                               int ell,
                                               int scan_points = 4000) {
  if (!(n_core > n_clad)) throw ComputationError("need n_core > n_clad");
  const double k0 = k0_rad_per_um(lambda_um);
  const double blo = k0 * (n_clad + 1e-9);
  const double bhi = k0 * (n_core - 1e-9);
  auto G = [&](double b) {
    return detail::scalar_step_char(ell, n_core, n_clad, a_um, k0, b);
  };
  std::vector<double> out;
  double pa = blo, fa = G(blo);
  for (int i = 1; i <= scan_points; ++i) {
    const double pb = blo + (bhi - blo) * i / scan_points;
    const double fb = G(pb);
    if (fb == 0.0) {
      out.push_back(pb / k0);
    } else if ((fa > 0.0) != (fb > 0.0)) {
      double a = pa, b = pb, fav = fa;
      for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = G(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm > 0.0) == (fav > 0.0)) {
          a = m;
          fav = fm;
        } else {
          b = m;
        }
      }
      out.push_back(0.5 * (a + b) / k0);
    }
    pa = pb;
    fa = fb;
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

// Guided effective indices of a uniform-core step fiber from the analytic
// dispersion relation.  Completely bypasses the layer-matrix machinery.
inline std::vector<double> step_fiber_neff(double n_core, double n_clad,
                                           double a_um, double lambda_um,
                                           Subsystem sub, int n,
                                           int scan_points = 4000) {
  if (!(n_core > n_clad)) throw ComputationError("need n_core > n_clad");
  const double k0 = k0_rad_per_um(lambda_um);
  const double blo = k0 * (n_clad + 1e-9);
  const double bhi = k0 * (n_core - 1e-9);
  auto G = [&](double b) {
    return detail::step_char(n, sub, n_core, n_clad, a_um, k0, b);
  };
  std::vector<double> roots;
  double pa = blo, fa = G(blo);
  for (int i = 1; i <= scan_points; ++i) {
    const double pb = blo + (bhi - blo) * i / scan_points;
    const double fb = G(pb);
    if (fb == 0.0) {
      roots.push_back(pb);
    } else if ((fa > 0.0) != (fb > 0.0)) {
      double a = pa, b = pb, fav = fa;
      for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = G(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm > 0.0) == (fav > 0.0)) {
          a = m;
          fav = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    pa = pb;
    fa = fb;
  }
  std::vector<double> out;
  for (double b : roots) out.push_back(b / k0);
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

}  // namespace ringspdc::fdoracle
