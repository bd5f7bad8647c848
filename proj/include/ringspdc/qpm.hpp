#pragma once
#include <cmath>
#include <complex>
#include <string>

#include "ringspdc/constants.hpp"
#include "ringspdc/dispersion.hpp"
#include "ringspdc/errors.hpp"

// Longitudinal side of three-wave mixing: phase mismatch from dispersion
// tables, period design, and the spectral amplitude of a rectangular on/off
// grating (chi2 lives on the poled fraction of each period, the erased
// remainder carries none),
//   Z(dbeta) = integral_{-L}^{0} chi2(z) e^{i dbeta z} dz
// evaluated in closed form (whole periods through a Dirichlet kernel plus a
// partial remainder), stable arbitrarily close to the resonances. The DC
// Fourier component is kept; a finite mismatch suppresses it on its own.

namespace ringspdc {

struct GratingSpec {
  double length_um = 0.0;       // grating occupies z in [-L, 0]
  double period_um = 0.0;       // 0 means unpoled (uniform chi2)
  double duty = 0.5;            // poled (chi2-on) fraction of each period
  double chi0_um_per_v = 1.0;   // peak |chi2|

  void validate() const {
    if (!(length_um > 0.0)) throw ConfigError("grating length must be > 0");
    if (period_um < 0.0) throw ConfigError("grating period must be >= 0");
    if (period_um > 0.0 && !(duty > 0.0 && duty < 1.0))
      throw ConfigError("grating duty must lie in (0, 1)");
    if (!(chi0_um_per_v > 0.0)) throw ConfigError("chi0 must be > 0");
  }
};

namespace qpmdetail {

inline double sinc(double u) {
  if (std::abs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
  }
  return std::sin(u) / u;
}

// integral_0^a e^{i q z} dz in phase-centered form
inline cplx seg(double q, double a) {
  return a * std::exp(iu * (0.5 * q * a)) * sinc(0.5 * q * a);
}

// sum_{k=0}^{N-1} e^{i k x}, guarded near x = 2 pi k
inline cplx dirichlet(long long N, double x) {
  if (N <= 0) return 0.0;
  const double s = std::sin(0.5 * x);
  const cplx phase = std::exp(iu * (0.5 * (N - 1) * x));
  if (std::abs(s) > 1e-7)
    return phase * (std::sin(0.5 * N * x) / s);
  // x = 2 pi k + delta with delta small
  const double k = std::round(x / two_pi);
  const double delta = x - two_pi * k;
  const double parity =
      (static_cast<long long>(k) * (N - 1)) % 2 == 0 ? 1.0 : -1.0;
  double ratio;
  if (std::abs(delta) < 1e-300) {
    ratio = static_cast<double>(N);
  } else {
    const double hd = 0.5 * delta;
    ratio = (static_cast<double>(N) * sinc(N * hd)) / sinc(hd);
  }
  return phase * parity * ratio;
}

}  // namespace qpmdetail

// Spectral amplitude Z; units chi0 * um.
inline cplx grating_amplitude(const GratingSpec& g, double dbeta) {
  g.validate();
  const double q = dbeta;
  const double L = g.length_um;
  if (g.period_um == 0.0) {
    return g.chi0_um_per_v * std::exp(iu * (-0.5 * q * L)) * L *
           qpmdetail::sinc(0.5 * q * L);
  }
  const double P = g.period_um;
  const double d = g.duty;
  const long long N = static_cast<long long>(std::floor(L / P + 1e-12));
  const double rho = L - static_cast<double>(N) * P;

  // one whole period anchored at its own start; only the leading poled
  // stretch of length d P contributes
  const cplx per = qpmdetail::seg(q, d * P);
  const cplx whole =
      std::exp(iu * (-q * L)) * qpmdetail::dirichlet(N, q * P) * per;

  // the partial period live at z in [-rho, 0]
  cplx rem{};
  if (rho > 1e-12)
    rem = std::exp(iu * (-q * rho)) * qpmdetail::seg(q, std::min(rho, d * P));
  return g.chi0_um_per_v * (whole + rem);
}

inline double grating_intensity(const GratingSpec& g, double dbeta) {
  return std::norm(grating_amplitude(g, dbeta));
}

struct LobeShape {
  double center = 0.0;          // rad/um
  double fwhm = 0.0;            // of |Z|^2
  double peak_intensity = 0.0;  // |Z|^2 at the center
};

// Locate the |Z|^2 peak near a guess and measure its full width at half
// maximum by bisection on both flanks.
inline LobeShape main_lobe(const GratingSpec& g, double center_guess) {
  const double L = g.length_um;
  const double half_window = 3.0 / L;
  double a = center_guess - half_window, b = center_guess + half_window;
  // golden-section maximization
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = grating_intensity(g, x1), f2 = grating_intensity(g, x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 / L; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = grating_intensity(g, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = grating_intensity(g, x1);
    }
  }
  LobeShape lobe;
  lobe.center = 0.5 * (a + b);
  lobe.peak_intensity = grating_intensity(g, lobe.center);
  const double half = 0.5 * lobe.peak_intensity;
  auto crossing = [&](double sgn) {
    double inner = lobe.center;
    double outer = lobe.center + sgn * 6.0 / L;
    if (grating_intensity(g, outer) > half)
      throw ComputationError("half-maximum crossing not bracketed");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inner + outer);
      if (grating_intensity(g, mid) > half)
        inner = mid;
      else
        outer = mid;
      if (std::abs(outer - inner) < 1e-10 / L) break;
    }
    return 0.5 * (inner + outer);
  };
  lobe.fwhm = crossing(+1.0) - crossing(-1.0);
  return lobe;
}

// beta_p(w_p) - beta_s(w_s) - beta_i(w_p - w_s); throws if a table does not
// cover its frequency.
inline double phase_mismatch(const DispersionBranch& pump,
                             const DispersionBranch& signal,
                             const DispersionBranch& idler, double omega_p,
                             double omega_s) {
  const double omega_i = omega_p - omega_s;
  if (!(omega_i > 0.0))
    throw ComputationError("idler frequency must stay positive");
  return pump.beta_at(omega_p) - signal.beta_at(omega_s) -
         idler.beta_at(omega_i);
}

struct PeriodDesign {
  double dbeta_rad_per_um = 0.0;
  bool grating_needed = true;
  double period_um = 0.0;  // meaningful when grating_needed
  int order = 1;
};

inline PeriodDesign design_period_from_mismatch(double dbeta, int order = 1) {
  if (order < 1) throw ConfigError("grating order must be >= 1");
  PeriodDesign out;
  out.dbeta_rad_per_um = dbeta;
  out.order = order;
  if (std::abs(dbeta) < 1e-6) {
    out.grating_needed = false;
    return out;
  }
  out.period_um = two_pi * order / std::abs(dbeta);
  return out;
}

inline PeriodDesign design_period(const DispersionBranch& pump,
                                  const DispersionBranch& signal,
                                  const DispersionBranch& idler,
                                  double omega_p, double omega_s,
                                  int order = 1) {
  return design_period_from_mismatch(
      phase_mismatch(pump, signal, idler, omega_p, omega_s), order);
}

}  // namespace ringspdc
