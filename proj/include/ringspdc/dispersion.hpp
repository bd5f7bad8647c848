#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ringspdc/constants.hpp"
#include "ringspdc/errors.hpp"
#include "ringspdc/mode_solver.hpp"
#include "ringspdc/profile.hpp"

// beta(omega) tables per guided branch, built once by walking the root
// across the band with continuity, then queried through a cubic spline.

namespace ringspdc {

class CubicSpline {
 public:
  CubicSpline() = default;

  // natural boundary conditions; x strictly ascending
  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n)
      throw ComputationError("spline needs at least three knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i]))
        throw ComputationError("spline knots must ascend");
    // Thomas sweep for the natural-spline moment system
    m2_.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x_[i] - x_[i - 1];
      const double hr = x_[i + 1] - x_[i];
      const double rhs =
          6.0 * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
      const double denom =
          2.0 * (hl + hr) - (i == 1 ? 0.0 : hl * c[i - 1]);
      c[i] = hr / denom;
      d[i] = (rhs - (i == 1 ? 0.0 : hl * d[i - 1])) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m2_[i] = d[i] - c[i] * m2_[i + 1];
      if (i == 1) break;
    }
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  bool covers(double x) const { return x >= x_.front() && x <= x_.back(); }

  double value(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double lin = (y_[i + 1] - y_[i]) / h - h * (2.0 * m2_[i] + m2_[i + 1]) / 6.0;
    return y_[i] + t * lin + 0.5 * t * t * m2_[i] +
           t * t * t * (m2_[i + 1] - m2_[i]) / (6.0 * h);
  }

  double derivative(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double lin = (y_[i + 1] - y_[i]) / h - h * (2.0 * m2_[i] + m2_[i + 1]) / 6.0;
    return lin + t * m2_[i] + 0.5 * t * t * (m2_[i + 1] - m2_[i]) / h;
  }

 private:
  std::size_t locate(double x) const {
    if (!covers(x))
      throw ComputationError("spline queried at " + std::to_string(x) +
                             " outside [" + std::to_string(x_.front()) + ", " +
                             std::to_string(x_.back()) + "]; no extrapolation");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i > 0) --i;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    return i;
  }

  std::vector<double> x_, y_, m2_;
};

struct DispersionBranch {
  ModeFamily family = ModeFamily::HE;
  int n = 0;
  int m = 1;
  Subsystem sub = Subsystem::Hybrid;
  std::string label;
  std::vector<double> omega;  // rad/s, ascending
  std::vector<double> beta;   // rad/um
  CubicSpline spline;

  bool covers_omega(double w) const { return spline.covers(w); }
  bool covers_lambda(double lambda_um) const {
    return spline.covers(omega_rad_per_s(lambda_um));
  }
  double beta_at(double w) const { return spline.value(w); }
  double beta_at_lambda(double lambda_um) const {
    return spline.value(omega_rad_per_s(lambda_um));
  }
  double dbeta_domega(double w) const { return spline.derivative(w); }
  // n_g = c dbeta/domega; beta in rad/um so c in um/s
  double group_index(double w) const {
    return c_um_per_s * spline.derivative(w);
  }
};

// Walk one branch from the short-wavelength anchor towards long wavelengths,
// predicting each next root from the previous two and refining locally.  The
// table ends early if the branch runs into cutoff inside the requested band.
inline DispersionBranch track_branch(const RadialProfile& prof,
                                     ModeFamily family, int n, int m,
                                     double lambda_lo_um, double lambda_hi_um,
                                     int points = 1200,
                                     const SolverOptions& opt = {}) {
  if (!(lambda_hi_um > lambda_lo_um))
    throw ConfigError("dispersion band must have lambda_hi > lambda_lo");
  if (points < 8) throw ConfigError("dispersion table needs >= 8 points");
  DispersionBranch br;
  br.family = family;
  br.n = n;
  br.m = m;
  br.sub = family == ModeFamily::TE   ? Subsystem::TE
           : family == ModeFamily::TM ? Subsystem::TM
                                      : Subsystem::Hybrid;
  br.label = family_name(family) + std::to_string(n) + std::to_string(m);

  // uniform in omega, descending while walking (lambda ascending)
  const double w_hi = omega_rad_per_s(lambda_lo_um);
  const double w_lo = omega_rad_per_s(lambda_hi_um);
  std::vector<double> ws(points);
  for (int i = 0; i < points; ++i)
    ws[i] = w_hi - (w_hi - w_lo) * i / (points - 1);

  // anchor: full scan, pick by family and radial index
  auto ep0 = build_profile(prof, lambda_um_of_omega(ws[0]));
  double beta_prev = 0.0;
  {
    bool found = false;
    for (const auto& md : find_modes(ep0, n, opt)) {
      if (md.family == family && md.m == m) {
        beta_prev = md.beta;
        found = true;
        break;
      }
    }
    if (!found)
      throw ComputationError("branch " + br.label +
                             " is not guided at the anchor wavelength " +
                             std::to_string(lambda_um_of_omega(ws[0])));
  }
  br.omega.push_back(ws[0]);
  br.beta.push_back(beta_prev);

  double step_prev = 0.0;
  for (int i = 1; i < points; ++i) {
    const double lam = lambda_um_of_omega(ws[i]);
    auto ep = build_profile(prof, lam);
    const double guess = beta_prev + step_prev;
    const double width =
        std::max({4.0 * std::abs(step_prev) * 1e-2, 1e-6, 1e-9 * ep.k0});
    double b;
    try {
      b = find_root_near(ep, n, br.sub, guess, width, opt);
    } catch (const ResolutionError&) {
      if (opt.warnings)
        opt.warnings->push_back("branch " + br.label +
                                " leaves the guided band near lambda=" +
                                std::to_string(lam) + " um; table truncated");
      break;
    }
    step_prev = b - beta_prev;
    beta_prev = b;
    br.omega.push_back(ws[i]);
    br.beta.push_back(b);
  }

  if (br.omega.size() < 8)
    throw ComputationError("branch " + br.label +
                           " guided over too little of the requested band");
  std::reverse(br.omega.begin(), br.omega.end());
  std::reverse(br.beta.begin(), br.beta.end());
  br.spline = CubicSpline(br.omega, br.beta);

  // spot re-solves: the spline must reproduce fresh roots between knots
  for (double frac : {0.233, 0.5, 0.787}) {
    const double w = br.omega.front() +
                     frac * (br.omega.back() - br.omega.front());
    auto ep = build_profile(prof, lambda_um_of_omega(w));
    const double direct =
        find_root_near(ep, n, br.sub, br.spline.value(w), 1e-6, opt);
    if (std::abs(direct - br.spline.value(w)) > 1e-9)
      throw ComputationError("dispersion spline for " + br.label +
                             " drifted from fresh roots; refine the table");
  }
  return br;
}

}  // namespace ringspdc
