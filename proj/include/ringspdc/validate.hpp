#pragma once
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ringspdc/bessel.hpp"
#include "ringspdc/config.hpp"
#include "ringspdc/dispersion.hpp"
#include "ringspdc/fd_oracle.hpp"
#include "ringspdc/oam.hpp"
#include "ringspdc/overlap.hpp"
#include "ringspdc/qpm.hpp"

// Self-check battery behind the `validate` subcommand. Every check always
// runs and reports; a thrown exception becomes a failed row, never a
// silent skip.

namespace ringspdc {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace valdetail {

inline std::string rel_detail(double worst, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << "worst " << worst << " (tol " << tol << ")";
  return os.str();
}

template <class Fn>
void run_check(std::vector<CheckResult>& out, const std::string& name,
               Fn&& fn) {
  CheckResult r;
  r.name = name;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = e.what();
  }
  out.push_back(std::move(r));
}

inline double bessel_eval(char f, int n, double x) {
  switch (f) {
    case 'J': return bessel::cyl_j(n, x);
    case 'Y': return bessel::cyl_y(n, x);
    case 'I': return bessel::mod_i(n, x);
    case 'K': return bessel::mod_k(n, x);
    default: throw ComputationError(std::string("unknown kernel '") + f + "'");
  }
}

inline RadialProfile synthetic_step(double n_core, double n_clad,
                                    double a_um) {
  RadialProfile p;
  p.layers.push_back({0.0, a_um, constant_material("core", n_core)});
  p.cladding = constant_material("clad", n_clad);
  p.domain_radius_um = 4.0 * a_um;
  return p;
}

}  // namespace valdetail

inline std::vector<CheckResult> run_validation(
    const RunConfig& cfg, const MaterialLibrary& lib,
    const std::string& bessel_table_path) {
  using valdetail::rel_detail;
  using valdetail::run_check;
  std::vector<CheckResult> out;
  const RadialProfile prof = make_profile(cfg, lib);
  const SolverOptions sopt = make_solver_options(cfg);
  const double lambda_mid = 0.5 * (cfg.lambda_lo_um + cfg.lambda_hi_um);

  run_check(out, "bessel.reference", [&](CheckResult& r) {
    std::ifstream in(bessel_table_path);
    if (!in.good())
      throw ComputationError("cannot read '" + bessel_table_path + "'");
    const double tol = 5e-11;
    double worst = 0.0;
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line[0] == 'f') continue;
      std::istringstream ss(line);
      std::string func, order, x, value;
      if (!std::getline(ss, func, ',') || !std::getline(ss, order, ',') ||
          !std::getline(ss, x, ',') || !std::getline(ss, value, ','))
        throw ComputationError("malformed table row: " + line);
      const double want = std::stod(value);
      const double got =
          valdetail::bessel_eval(func[0], std::stoi(order), std::stod(x));
      worst = std::max(worst, std::abs(got - want) / std::abs(want));
      ++rows;
    }
    if (rows < 100)
      throw ComputationError("reference table suspiciously short");
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol) + ", " + std::to_string(rows) + " rows";
  });

  run_check(out, "solver.two_layer", [&](CheckResult& r) {
    const double nco = 1.449, ncl = 1.444, a = 4.5, lam = 1.55;
    auto ep = build_profile(valdetail::synthetic_step(nco, ncl, a), lam);
    const double tol = 1e-8;
    double worst = 0.0;
    auto he = fdoracle::step_fiber_neff(nco, ncl, a, lam, Subsystem::Hybrid, 1);
    auto vec1 = find_modes(ep, 1, sopt);
    if (he.empty() || vec1.empty())
      throw ComputationError("no guided mode on the synthetic step");
    worst = std::max(worst, std::abs(vec1.front().n_eff / he.front() - 1.0));
    auto te = fdoracle::step_fiber_neff(nco, ncl, a, lam, Subsystem::TE, 0);
    for (const auto& md : find_modes(ep, 0, sopt))
      if (md.family == ModeFamily::TE && !te.empty())
        worst = std::max(worst, std::abs(md.n_eff / te.front() - 1.0));
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  run_check(out, "oracle.fd_weak", [&](CheckResult& r) {
    const double nco = 1.4485, ncl = 1.444, a = 4.5, lam = 1.55;
    auto ep = build_profile(valdetail::synthetic_step(nco, ncl, a), lam);
    fdoracle::FdOptions fopt;
    fopt.points = 1500;
    fopt.r_max_um = 6.0 * a;
    auto fd = fdoracle::scalar_lp_neff(ep, 0, fopt);
    auto vec = find_modes(ep, 1, sopt);
    if (fd.empty() || vec.empty())
      throw ComputationError("no guided mode on the weak step");
    const double tol = 1e-5;
    const double worst = std::abs(fd.front() / vec.front().n_eff - 1.0);
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  run_check(out, "oracle.fd_ring", [&](CheckResult& r) {
    auto ep = build_profile(prof, lambda_mid);
    fdoracle::FdOptions fopt;
    fopt.points = 4003;
    fopt.r_max_um = 4.0 * cfg.r2_um;
    const double tol = 1e-3;  // scalar approximation gap
    double worst = 0.0;
    // scalar l=0 sits on HE1m; scalar l=1 spans the TE/TM/HE2m group
    auto lp0 = fdoracle::scalar_lp_neff(ep, 0, fopt);
    auto he1 = find_modes(ep, 1, sopt);
    if (lp0.empty() || he1.empty())
      throw ComputationError("no guided mode on the ring profile");
    worst = std::max(worst, std::abs(lp0.front() / he1.front().n_eff - 1.0));
    auto lp1 = fdoracle::scalar_lp_neff(ep, 1, fopt);
    if (!lp1.empty()) {
      for (const auto& md : find_modes(ep, 0, sopt))
        worst = std::max(worst, std::abs(lp1.front() / md.n_eff - 1.0));
      for (const auto& md : find_modes(ep, 2, sopt))
        if (md.m == 1)
          worst = std::max(worst, std::abs(lp1.front() / md.n_eff - 1.0));
    }
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  // one guided triple reused by both quadrature checks
  OamMode qp, qs, qi;
  bool have_triple = false;
  try {
    auto epp = build_profile(prof, cfg.pump_lambda_um);
    auto eps = build_profile(prof, lambda_mid);
    const OamModeSpec pspec = parse_mode_spec(cfg.pump_mode);
    for (const auto& md : find_modes(epp, pspec.n, sopt))
      if (md.family == pspec.family && md.m == pspec.m)
        qp = make_oam_mode(md, pspec.variant);
    auto sig_all = find_all_modes(eps, 2, sopt);
    if (!qp.base.regions.empty() && sig_all.size() >= 2) {
      auto variant_of = [](const Mode& md) {
        return (md.family == ModeFamily::HE || md.family == ModeFamily::EH)
                   ? Variant::R
                   : Variant::Axial;
      };
      qs = make_oam_mode(sig_all[0], variant_of(sig_all[0]));
      qi = make_oam_mode(sig_all[1], variant_of(sig_all[1]));
      have_triple = true;
    }
  } catch (const std::exception&) {
    have_triple = false;
  }

  run_check(out, "quadrature.channel_vs_2d", [&](CheckResult& r) {
    if (!have_triple)
      throw ComputationError("configured modes not guided; no test triple");
    const Chi2Spec chi = make_chi_spec(cfg);
    const cplx a =
        transverse_overlap_channels(qp, qs, qi, chi, cfg.radial_points);
    const cplx b = transverse_overlap(qp, qs, qi, chi, cfg.theta_points,
                                      cfg.radial_points);
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) scale = 1e-30;  // both zero: consistent
    const double tol = 1e-8;
    const double worst = std::abs(a - b) / scale;
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  run_check(out, "quadrature.refinement", [&](CheckResult& r) {
    if (!have_triple)
      throw ComputationError("configured modes not guided; no test triple");
    const Chi2Spec chi = make_chi_spec(cfg);
    const cplx a =
        transverse_overlap_channels(qp, qs, qi, chi, cfg.radial_points);
    const cplx b = transverse_overlap_channels(qp, qs, qi, chi,
                                               2 * cfg.radial_points + 1);
    double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) scale = 1e-30;
    const double tol = 1e-8;
    const double worst = std::abs(a - b) / scale;
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  run_check(out, "units.density", [&](CheckResult& r) {
    // eps0^2 P w_s w_i |S Z|^2 / P0^3 must come out dimensionless
    const Dim s2 = pow(dim::volt, 4);
    const Dim z2 = pow(dim::meter, 2);
    const Dim density = pow(dim::eps0, 2) * dim::watt * pow(dim::omega, 2) *
                        s2 * z2 / pow(dim::watt, 3);
    r.pass = density == dim::one;
    r.detail = r.pass ? "density per rad/s is dimensionless"
                      : "density carries leftover units";
  });

  run_check(out, "modes.invariants", [&](CheckResult& r) {
    auto ep = build_profile(prof, cfg.pump_lambda_um);
    auto all = find_all_modes(ep, 2, sopt);
    if (all.empty()) throw ComputationError("no guided modes at the pump");
    const double tol = 1e-8;
    double worst = 0.0;
    for (const auto& md : all) {
      worst = std::max(worst, std::abs(cross_flux(md, md) - 1.0));
      double scale = 0.0;
      const auto grid = make_radial_grid(md.regions, 301);
      for (const auto& seg : grid.segments)
        for (double rr : seg.r) {
          const auto s = md.eval_in_region(rr, seg.region);
          scale = std::max({scale, std::abs(s.f), std::abs(s.g),
                            std::abs(s.a_th), std::abs(s.b_th)});
        }
      for (std::size_t i = 0; i + 1 < md.regions.size(); ++i) {
        const double rb = md.regions[i].r_hi_um;
        const auto in = md.eval_in_region(rb, i);
        const auto ot = md.eval_in_region(rb, i + 1);
        worst = std::max({worst, std::abs(in.f - ot.f) / scale,
                          std::abs(in.g - ot.g) / scale,
                          std::abs(in.a_th - ot.a_th) / scale,
                          std::abs(in.b_th - ot.b_th) / scale});
      }
      for (const auto& other : all)
        if (&other != &md && other.n == md.n)
          worst = std::max(worst, std::abs(cross_flux(md, other)));
    }
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol) + ", " + std::to_string(all.size()) +
               " modes";
  });

  run_check(out, "grating.symmetry", [&](CheckResult& r) {
    GratingSpec g = make_grating_spec(cfg, cfg.period_um.value_or(40.0));
    const double cap = g.chi0_um_per_v * g.length_um;
    double worst = 0.0;
    std::mt19937 rng(11u);
    std::uniform_real_distribution<double> body(-1.0, 1.0);
    for (int i = 0; i < 24; ++i) {
      const double q = body(rng);
      const cplx zp = grating_amplitude(g, q);
      worst = std::max(worst,
                       std::abs(grating_amplitude(g, -q) - std::conj(zp)) / cap);
      const double bound = cap * (g.duty + g.period_um / g.length_um);
      if (std::abs(zp) > bound)
        worst = std::max(worst, std::abs(zp) / bound - 1.0);
    }
    const long long nper =
        static_cast<long long>(std::floor(g.length_um / g.period_um));
    const double rho =
        g.length_um - static_cast<double>(nper) * g.period_um;
    const double poled = static_cast<double>(nper) * g.duty * g.period_um +
                         std::min(rho, g.duty * g.period_um);
    worst = std::max(worst, std::abs(std::abs(grating_amplitude(g, 0.0)) -
                                     g.chi0_um_per_v * poled) /
                                cap);
    const double tol = 1e-12;
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  run_check(out, "oam.conjugation", [&](CheckResult& r) {
    auto ep = build_profile(prof, cfg.pump_lambda_um);
    auto hybrids = find_modes(ep, 2, sopt);
    if (hybrids.empty()) hybrids = find_modes(ep, 1, sopt);
    if (hybrids.empty())
      throw ComputationError("no hybrid mode available at the pump");
    const auto& md = hybrids.front();
    const OamMode mr = make_oam_mode(md, Variant::R);
    const OamMode ml = make_oam_mode(md, Variant::L);
    const int wr = winding_number(mr);
    const int wl = winding_number(ml);
    r.pass = wr == -wl && wr == mr.l && wl == ml.l;
    std::ostringstream os;
    os << md.label() << ": R winds " << wr << ", L winds " << wl;
    r.detail = os.str();
  });

  run_check(out, "dispersion.branch", [&](CheckResult& r) {
    const OamModeSpec pspec = parse_mode_spec(cfg.pump_mode);
    auto br = track_branch(prof, pspec.family, pspec.n, pspec.m,
                           cfg.pump_lambda_um - 0.01,
                           cfg.pump_lambda_um + 0.01, 24, sopt);
    auto ep = build_profile(prof, cfg.pump_lambda_um);
    double beta_direct = 0.0;
    for (const auto& md : find_modes(ep, pspec.n, sopt))
      if (md.family == pspec.family && md.m == pspec.m) beta_direct = md.beta;
    if (beta_direct == 0.0)
      throw ComputationError("pump mode not guided at its wavelength");
    const double tol = 1e-9;
    const double worst =
        std::abs(br.beta_at_lambda(cfg.pump_lambda_um) / beta_direct - 1.0);
    r.pass = worst < tol;
    r.detail = rel_detail(worst, tol);
  });

  return out;
}

inline std::string format_validation_table(
    const std::vector<CheckResult>& checks) {
  std::size_t w = 0;
  for (const auto& c : checks) w = std::max(w, c.name.size());
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "PASS  " : "FAIL  ") << c.name
       << std::string(w - c.name.size() + 2, ' ') << c.detail << "\n";
  }
  return os.str();
}

}  // namespace ringspdc
