#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ringspdc/bessel.hpp"
#include "ringspdc/constants.hpp"
#include "ringspdc/errors.hpp"
#include "ringspdc/profile.hpp"

// Full-vector modes of a piecewise-constant circular fiber via tangential
// field matching at every layer boundary.  Conventions:
//   - fields carry exp(i(j theta + beta z - omega t)), j signed
//   - magnetic profiles are pre-scaled by the vacuum impedance, h = Z0 H,
//     so electric and magnetic samples share one unit (V/um)
//   - stored radial profiles are real and belong to the j = +n member;
//     ringspdc::oam assembles signed-j and parity members from them
// Within one region the axial profiles solve a Bessel equation with signed
// kappa^2 = eps k0^2 - beta^2; J/Y where positive, I/K where negative.

namespace ringspdc {

enum class ModeFamily { TE, TM, HE, EH };
enum class Subsystem { Hybrid, TE, TM };

inline std::string family_name(ModeFamily f) {
  switch (f) {
    case ModeFamily::TE: return "TE";
    case ModeFamily::TM: return "TM";
    case ModeFamily::HE: return "HE";
    case ModeFamily::EH: return "EH";
  }
  return "??";
}

struct RegionWave {
  double r_lo_um = 0.0, r_hi_um = 0.0;
  double eps = 0.0;
  double kappa2 = 0.0;  // signed, rad^2/um^2
  double q = 0.0;       // sqrt(|kappa2|)
  bool oscillatory = false;
  // axial profiles inside the region: f = A F1 + B F2, g = C F1 + D F2
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
};

// Radial profile samples of the j = +n member.  The full fields are
//   e = (i a_r, a_th, f) e^{i n theta},  h = (b_r, i b_th, -i g) e^{i n theta}
struct ProfileSample {
  double a_r = 0.0, a_th = 0.0, f = 0.0;
  double b_r = 0.0, b_th = 0.0, g = 0.0;
};

struct SolverOptions {
  int scan_points = 2000;
  double beta_tol = 1e-12;       // rad/um
  int max_modes = 64;
  double neff_inset = 1e-9;
  int radial_points = 1201;      // quadrature budget for normalization
  std::vector<std::string>* warnings = nullptr;
};

namespace msdetail {

inline void warn(const SolverOptions& opt, const std::string& msg) {
  if (opt.warnings) opt.warnings->push_back(msg);
}

struct Basis {
  double F1 = 0.0, F2 = 0.0, dF1 = 0.0, dF2 = 0.0;
};

inline Basis basis_at(const RegionWave& w, int n, double r_um,
                      bool need_second) {
  Basis b;
  const double x = w.q * r_um;
  if (w.oscillatory) {
    b.F1 = bessel::cyl_j(n, x);
    b.dF1 = w.q * bessel::cyl_j_prime(n, x);
    if (need_second) {
      b.F2 = bessel::cyl_y(n, x);
      b.dF2 = w.q * bessel::cyl_y_prime(n, x);
    }
  } else {
    b.F1 = bessel::mod_i(n, x);
    b.dF1 = w.q * bessel::mod_i_prime(n, x);
    if (need_second) {
      b.F2 = bessel::mod_k(n, x);
      b.dF2 = w.q * bessel::mod_k_prime(n, x);
    }
  }
  return b;
}

inline std::vector<RegionWave> make_regions(const EvaluatedProfile& ep,
                                            double beta) {
  std::vector<RegionWave> regs(ep.regions());
  double lo = 0.0;
  for (std::size_t i = 0; i < ep.regions(); ++i) {
    RegionWave w;
    w.r_lo_um = lo;
    w.r_hi_um = i < ep.r_bound_um.size() ? ep.r_bound_um[i]
                                         : ep.domain_radius_um;
    lo = w.r_hi_um;
    w.eps = ep.eps[i];
    w.kappa2 = w.eps * ep.k0 * ep.k0 - beta * beta;
    w.q = std::sqrt(std::abs(w.kappa2));
    w.oscillatory = w.kappa2 > 0.0;
    if (w.q < 1e-9)
      throw ResolutionError(
          "transverse wavenumber vanished in a layer; move off the cutoff");
    regs[i] = w;
  }
  return regs;
}

// Coefficients kept per region.  0..3 = A,B,C,D.  The innermost region may
// not use the singular branch, the outermost not the growing one.
inline std::vector<int> active_coeffs(std::size_t region, std::size_t nreg,
                                      Subsystem sub) {
  const bool first = region == 0;
  const bool last = region + 1 == nreg;
  std::vector<int> ids;
  if (sub != Subsystem::TE) {
    if (!last) ids.push_back(0);
    if (!first) ids.push_back(1);
  }
  if (sub != Subsystem::TM) {
    if (!last) ids.push_back(2);
    if (!first) ids.push_back(3);
  }
  return ids;
}

enum RowKind { kRowF, kRowG, kRowEth, kRowHth };

inline std::vector<int> row_kinds(Subsystem sub) {
  switch (sub) {
    case Subsystem::Hybrid: return {kRowF, kRowG, kRowEth, kRowHth};
    case Subsystem::TE: return {kRowG, kRowEth};
    case Subsystem::TM: return {kRowF, kRowHth};
  }
  return {};
}

inline double entry(const RegionWave& w, int n, double k0, double beta,
                    int coeff, int kind, const Basis& b, double r) {
  const double inv = 1.0 / w.kappa2;
  const double ang = beta * n * inv / r;
  switch (kind) {
    case kRowF:
      return coeff == 0 ? b.F1 : coeff == 1 ? b.F2 : 0.0;
    case kRowG:
      return coeff == 2 ? b.F1 : coeff == 3 ? b.F2 : 0.0;
    case kRowEth:
      switch (coeff) {
        case 0: return -ang * b.F1;
        case 1: return -ang * b.F2;
        case 2: return -k0 * inv * b.dF1;
        case 3: return -k0 * inv * b.dF2;
      }
      break;
    case kRowHth:
      switch (coeff) {
        case 0: return k0 * w.eps * inv * b.dF1;
        case 1: return k0 * w.eps * inv * b.dF2;
        case 2: return ang * b.F1;
        case 3: return ang * b.F2;
      }
      break;
  }
  return 0.0;
}

inline Eigen::MatrixXd system_matrix(const std::vector<RegionWave>& regs,
                                     int n, double k0, double beta,
                                     Subsystem sub) {
  const std::size_t N = regs.size();
  std::vector<std::vector<int>> act(N);
  std::vector<int> col0(N);
  int ncols = 0;
  for (std::size_t i = 0; i < N; ++i) {
    act[i] = active_coeffs(i, N, sub);
    col0[i] = ncols;
    ncols += static_cast<int>(act[i].size());
  }
  const auto kinds = row_kinds(sub);
  const int per = static_cast<int>(kinds.size());
  const int nrows = per * static_cast<int>(N - 1);
  if (nrows != ncols)
    throw ComputationError("characteristic system is not square");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nrows, ncols);
  for (std::size_t k = 0; k + 1 < N; ++k) {
    const double r = regs[k].r_hi_um;
    for (int side = 0; side < 2; ++side) {
      const std::size_t ri = k + static_cast<std::size_t>(side);
      const auto& w = regs[ri];
      bool need2 = false;
      for (int c : act[ri]) need2 = need2 || c == 1 || c == 3;
      const Basis b = basis_at(w, n, r, need2);
      const double sgn = side == 0 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < act[ri].size(); ++j) {
        for (int rr = 0; rr < per; ++rr) {
          M(static_cast<int>(k) * per + rr, col0[ri] + static_cast<int>(j)) +=
              sgn * entry(w, n, k0, beta, act[ri][j], kinds[rr], b, r);
        }
      }
    }
  }
  return M;
}

// Determinant of the column-rescaled matching matrix.  Rescaling keeps the
// value O(1) across the scan without moving the zero set.
inline double char_det(const EvaluatedProfile& ep, int n, double beta,
                       Subsystem sub) {
  auto regs = make_regions(ep, beta);
  Eigen::MatrixXd M = system_matrix(regs, n, ep.k0, beta, sub);
  for (int j = 0; j < M.cols(); ++j) {
    const double s = M.col(j).cwiseAbs().maxCoeff();
    if (s == 0.0) return 0.0;
    M.col(j) /= s;
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(M).determinant();
}

}  // namespace msdetail

// Composite-Simpson radial grid aligned to layer boundaries so that each
// panel sees a smooth integrand and each sample knows its region (radial
// field components jump at permittivity steps).
struct RadialGrid {
  struct Segment {
    std::size_t region = 0;
    std::vector<double> r;
    std::vector<double> w;
  };
  std::vector<Segment> segments;
  double r_max_um = 0.0;
};

inline RadialGrid make_radial_grid(const std::vector<RegionWave>& regs,
                                   int approx_points = 1201) {
  RadialGrid g;
  g.r_max_um = regs.back().r_hi_um;
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const double len = regs[i].r_hi_um - regs[i].r_lo_um;
    int npts = static_cast<int>(std::lround(approx_points * len / g.r_max_um));
    npts = std::max(npts, 65);
    if (npts % 2 == 0) ++npts;
    RadialGrid::Segment s;
    s.region = i;
    s.r.resize(npts);
    s.w.resize(npts);
    const double h = len / (npts - 1);
    for (int j = 0; j < npts; ++j) {
      s.r[j] = regs[i].r_lo_um + h * j;
      double c = (j == 0 || j == npts - 1) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      s.w[j] = h / 3.0 * c;
    }
    g.segments.push_back(std::move(s));
  }
  return g;
}

template <class Fn>
double integrate_radial(const RadialGrid& g, Fn&& f) {
  double acc = 0.0;
  for (const auto& s : g.segments)
    for (std::size_t j = 0; j < s.r.size(); ++j)
      acc += s.w[j] * f(s.r[j], s.region);
  return acc;
}

class Mode {
 public:
  double lambda_um = 0.0;
  double k0 = 0.0;
  double omega = 0.0;  // rad/s
  double beta = 0.0;   // rad/um
  double n_eff = 0.0;
  int n = 0;           // azimuthal order >= 0
  ModeFamily family = ModeFamily::HE;
  int m = 0;           // radial index, 1 = largest beta in its family
  double sigma_plus_fraction = 0.5;  // circular content of the j=+n member
  std::vector<RegionWave> regions;

  std::string label() const {
    return family_name(family) + std::to_string(n) + std::to_string(m);
  }

  ProfileSample eval_in_region(double r_um, std::size_t reg) const {
    const auto& w = regions[reg];
    const double r = std::max(r_um, 1e-9);
    const bool need2 = w.B != 0.0 || w.D != 0.0;
    const auto b = msdetail::basis_at(w, n, r, need2);
    const double f = w.A * b.F1 + w.B * b.F2;
    const double g = w.C * b.F1 + w.D * b.F2;
    const double fp = w.A * b.dF1 + w.B * b.dF2;
    const double gp = w.C * b.dF1 + w.D * b.dF2;
    const double inv = 1.0 / w.kappa2;
    ProfileSample s;
    s.f = f;
    s.g = g;
    s.a_r = (beta * fp + k0 * n * g / r) * inv;
    s.a_th = -(beta * n * f / r + k0 * gp) * inv;
    s.b_r = (beta * gp + k0 * w.eps * n * f / r) * inv;
    s.b_th = (k0 * w.eps * fp + beta * n * g / r) * inv;
    return s;
  }

  std::size_t region_of(double r_um) const {
    for (std::size_t i = 0; i + 1 < regions.size(); ++i)
      if (r_um < regions[i].r_hi_um) return i;
    return regions.size() - 1;
  }

  ProfileSample eval(double r_um) const {
    return eval_in_region(r_um, region_of(r_um));
  }
};

namespace msdetail {

inline std::vector<double> scan_roots(const EvaluatedProfile& ep, int n,
                                      Subsystem sub,
                                      const SolverOptions& opt) {
  const double nlo = std::sqrt(ep.eps.back());
  const double nhi = std::sqrt(ep.eps_max());
  if (nhi <= nlo + 2.0 * opt.neff_inset) return {};
  const double blo = ep.k0 * (nlo + opt.neff_inset);
  const double bhi = ep.k0 * (nhi - opt.neff_inset);
  const int P = std::max(opt.scan_points, 16);
  std::vector<double> bs(P + 1), ds(P + 1);
  for (int i = 0; i <= P; ++i) {
    bs[i] = blo + (bhi - blo) * i / P;
    ds[i] = char_det(ep, n, bs[i], sub);
  }
  auto bisect = [&](double a, double fa, double b, double fb) {
    (void)fb;
    for (int it = 0; it < 200 && (b - a) > opt.beta_tol; ++it) {
      const double m = 0.5 * (a + b);
      const double fm = char_det(ep, n, m, sub);
      if (fm == 0.0) return m;
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  std::vector<double> roots;
  for (int i = 0; i < P; ++i) {
    if (ds[i] == 0.0) {
      roots.push_back(bs[i]);
      continue;
    }
    if ((ds[i] > 0.0) != (ds[i + 1] > 0.0))
      roots.push_back(bisect(bs[i], ds[i], bs[i + 1], ds[i + 1]));
  }
  // Even-order touches leave no sign change; hunt for suspiciously deep
  // local minima of |det| and subdivide around them once.
  std::vector<double> mags;
  for (double d : ds) mags.push_back(std::abs(d));
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  for (int i = 1; i < P; ++i) {
    const bool flat = (ds[i - 1] > 0.0) == (ds[i] > 0.0) &&
                      (ds[i] > 0.0) == (ds[i + 1] > 0.0);
    if (!flat || mags[i] > 1e-4 * med) continue;
    if (mags[i] > mags[i - 1] || mags[i] > mags[i + 1]) continue;
    const int K = 64;
    double pa = bs[i - 1], fa = ds[i - 1];
    for (int k = 1; k <= 2 * K; ++k) {
      const double pb = bs[i - 1] + (bs[i + 1] - bs[i - 1]) * k / (2.0 * K);
      const double fbv = char_det(ep, n, pb, sub);
      if (fbv == 0.0) {
        roots.push_back(pb);
      } else if ((fa > 0.0) != (fbv > 0.0)) {
        roots.push_back(bisect(pa, fa, pb, fbv));
      }
      pa = pb;
      fa = fbv;
    }
  }
  std::sort(roots.begin(), roots.end(), std::greater<double>());
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && out.back() - r < 100.0 * opt.beta_tol) {
      warn(opt, "near-degenerate roots at n_eff=" + std::to_string(r / ep.k0));
      continue;
    }
    out.push_back(r);
  }
  if (static_cast<int>(out.size()) > opt.max_modes) {
    warn(opt, "mode count capped at max_modes");
    out.resize(opt.max_modes);
  }
  return out;
}

}  // namespace msdetail

inline Mode finalize_mode(const EvaluatedProfile& ep, int n, double beta,
                          Subsystem sub, const SolverOptions& opt = {}) {
  if (sub == Subsystem::Hybrid && n < 1)
    throw ComputationError("hybrid systems need n >= 1");
  if (sub != Subsystem::Hybrid && n != 0)
    throw ComputationError("TE/TM systems need n = 0");
  Mode md;
  md.lambda_um = ep.lambda_um;
  md.k0 = ep.k0;
  md.omega = omega_rad_per_s(ep.lambda_um);
  md.beta = beta;
  md.n_eff = beta / ep.k0;
  md.n = n;
  md.regions = msdetail::make_regions(ep, beta);

  Eigen::MatrixXd M =
      msdetail::system_matrix(md.regions, n, ep.k0, beta, sub);
  const int sz = static_cast<int>(M.cols());
  std::vector<double> scale(sz);
  for (int j = 0; j < sz; ++j) {
    scale[j] = M.col(j).cwiseAbs().maxCoeff();
    if (scale[j] == 0.0)
      throw ResolutionError("degenerate column in matching matrix");
    M.col(j) /= scale[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double ratio = sv(sz - 1) / sv(0);
  if (ratio > 1e-5)
    throw ResolutionError("no null direction at beta=" + std::to_string(beta) +
                          " (sigma ratio " + std::to_string(ratio) + ")");
  if (ratio > 1e-7)
    msdetail::warn(opt, "weak null direction at n_eff=" +
                            std::to_string(md.n_eff));
  Eigen::VectorXd v = svd.matrixV().col(sz - 1);
  for (int j = 0; j < sz; ++j) v(j) /= scale[j];
  int imax = 0;
  for (int j = 1; j < sz; ++j)
    if (std::abs(v(j)) > std::abs(v(imax))) imax = j;
  if (v(imax) < 0.0) v = -v;

  int col = 0;
  for (std::size_t i = 0; i < md.regions.size(); ++i) {
    for (int c : msdetail::active_coeffs(i, md.regions.size(), sub)) {
      const double val = v(col++);
      switch (c) {
        case 0: md.regions[i].A = val; break;
        case 1: md.regions[i].B = val; break;
        case 2: md.regions[i].C = val; break;
        case 3: md.regions[i].D = val; break;
      }
    }
  }

  const RadialGrid grid = make_radial_grid(md.regions, opt.radial_points);
  const double flux =
      pi / vacuum_impedance_ohm *
      integrate_radial(grid, [&](double r, std::size_t reg) {
        const auto s = md.eval_in_region(r, reg);
        return (s.a_r * s.b_th - s.a_th * s.b_r) * r;
      });
  if (!(flux > 0.0))
    throw ComputationError("mode carries no forward flux; rejected");
  const double t = 1.0 / std::sqrt(flux);
  for (auto& w : md.regions) {
    w.A *= t;
    w.B *= t;
    w.C *= t;
    w.D *= t;
  }

  const double pp = integrate_radial(grid, [&](double r, std::size_t reg) {
    const auto s = md.eval_in_region(r, reg);
    return (s.a_r - s.a_th) * (s.a_r - s.a_th) * r;
  });
  const double pm = integrate_radial(grid, [&](double r, std::size_t reg) {
    const auto s = md.eval_in_region(r, reg);
    return (s.a_r + s.a_th) * (s.a_r + s.a_th) * r;
  });
  md.sigma_plus_fraction = pp / (pp + pm);
  switch (sub) {
    case Subsystem::TE: md.family = ModeFamily::TE; break;
    case Subsystem::TM: md.family = ModeFamily::TM; break;
    case Subsystem::Hybrid:
      md.family = pp >= pm ? ModeFamily::HE : ModeFamily::EH;
      break;
  }
  return md;
}

// All guided modes of one azimuthal order, beta descending, radial index m
// counted within each family.
inline std::vector<Mode> find_modes(const EvaluatedProfile& ep, int n,
                                    const SolverOptions& opt = {}) {
  std::vector<Mode> out;
  const auto subs = n == 0
                        ? std::vector<Subsystem>{Subsystem::TE, Subsystem::TM}
                        : std::vector<Subsystem>{Subsystem::Hybrid};
  for (Subsystem sub : subs) {
    for (double b : msdetail::scan_roots(ep, n, sub, opt))
      out.push_back(finalize_mode(ep, n, b, sub, opt));
  }
  std::sort(out.begin(), out.end(),
            [](const Mode& a, const Mode& b) { return a.beta > b.beta; });
  int cnt[4] = {0, 0, 0, 0};
  for (auto& m : out) m.m = ++cnt[static_cast<int>(m.family)];
  return out;
}

inline std::vector<Mode> find_all_modes(const EvaluatedProfile& ep, int n_max,
                                        const SolverOptions& opt = {}) {
  std::vector<Mode> all;
  for (int n = 0; n <= n_max; ++n) {
    auto v = find_modes(ep, n, opt);
    all.insert(all.end(), v.begin(), v.end());
  }
  std::sort(all.begin(), all.end(),
            [](const Mode& a, const Mode& b) { return a.beta > b.beta; });
  return all;
}

// Re-find a known root from a nearby guess by expanding a bracket around it.
// Returns beta; used by dispersion tracking where full scans would be waste.
inline double find_root_near(const EvaluatedProfile& ep, int n, Subsystem sub,
                             double beta_guess, double width0 = 0.0,
                             const SolverOptions& opt = {}) {
  const double blo = ep.k0 * (std::sqrt(ep.eps.back()) + opt.neff_inset);
  const double bhi = ep.k0 * (std::sqrt(ep.eps_max()) - opt.neff_inset);
  if (!(beta_guess > blo && beta_guess < bhi))
    throw ResolutionError("root guess outside the guided range");
  double w = width0 > 0.0 ? width0 : 1e-6 * ep.k0;
  double a = std::max(blo, beta_guess - w);
  double b = std::min(bhi, beta_guess + w);
  double fa = msdetail::char_det(ep, n, a, sub);
  double fb = msdetail::char_det(ep, n, b, sub);
  int grow = 0;
  while ((fa > 0.0) == (fb > 0.0)) {
    if (++grow > 40 || (a == blo && b == bhi))
      throw ResolutionError("failed to bracket a root near the guess");
    w *= 2.0;
    a = std::max(blo, beta_guess - w);
    b = std::min(bhi, beta_guess + w);
    fa = msdetail::char_det(ep, n, a, sub);
    fb = msdetail::char_det(ep, n, b, sub);
  }
  for (int it = 0; it < 200 && (b - a) > opt.beta_tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = msdetail::char_det(ep, n, m, sub);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Biorthogonality inner product; 1 on the diagonal for normalized modes.
// Only meaningful between modes sharing one azimuthal harmonic; harmonics
// differ -> the angular integral vanishes identically and callers may skip.
inline double cross_flux(const Mode& m1, const Mode& m2) {
  const RadialGrid grid = make_radial_grid(m1.regions, 2401);
  return pi / vacuum_impedance_ohm *
         integrate_radial(grid, [&](double r, std::size_t reg) {
           const auto s1 = m1.eval_in_region(r, reg);
           const auto s2 = m2.eval_in_region(r, reg);
           return 0.5 *
                  (s1.a_r * s2.b_th + s2.a_r * s1.b_th - s1.a_th * s2.b_r -
                   s2.a_th * s1.b_r) *
                  r;
         });
}

}  // namespace ringspdc
