#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "ringspdc/profile.hpp"
#include "ringspdc/spdc.hpp"

using namespace ringspdc;

namespace {

const RadialProfile& reference_fiber() {
  static MaterialLibrary lib = MaterialLibrary::load(
      std::string(RINGSPDC_REPO_ROOT) + "/data/materials.dat");
  static RadialProfile p = ring_profile(lib, 2.5, 3.25, "ring_doped", "silica");
  return p;
}

GratingSpec reference_grating(double length_um = 1e6) {
  GratingSpec g;
  g.length_um = length_um;
  g.period_um = 44.384022;
  return g;
}

OamMode solve_oam(double lambda_um, const OamModeSpec& s) {
  auto ep = build_profile(reference_fiber(), lambda_um);
  for (const auto& md : find_modes(ep, s.n))
    if (md.family == s.family && md.m == s.m)
      return make_oam_mode(md, s.variant);
  throw ComputationError("mode " + s.str() + " not guided at " +
                         std::to_string(lambda_um));
}

OamModeSpec spec(const std::string& label) { return parse_mode_spec(label); }

// unit-test sized scan: same physics, lighter tables
ScanSpec light_scan() {
  ScanSpec s;
  s.points = 2000;
  s.coarse_points = 33;
  s.branch_points = 120;
  return s;
}

ScanSpec tight_scan(double lo, double hi) {
  ScanSpec s;
  s.lambda_lo_um = lo;
  s.lambda_hi_um = hi;
  s.points = 200;
  s.coarse_points = 9;
  s.branch_points = 60;
  return s;
}

const SpectrumResult& reference_spectrum() {
  static SpectrumResult res = compute_spectrum(
      reference_fiber(), PumpSpec{}, reference_grating(), Chi2Spec{},
      light_scan());
  return res;
}

const ProcessGroup& group_of(const SpectrumResult& res,
                             const std::string& label) {
  for (const auto& g : res.groups)
    if (g.label == label) return g;
  throw ComputationError("no group " + label);
}

std::size_t group_index(const SpectrumResult& res, const std::string& label) {
  for (std::size_t i = 0; i < res.groups.size(); ++i)
    if (res.groups[i].label == label) return i;
  throw ComputationError("no group " + label);
}

const PairSpectrum& pair_of(const SpectrumResult& res,
                            const std::string& label) {
  for (const auto& p : res.pairs)
    if (p.label == label) return p;
  throw ComputationError("no pair " + label);
}

}  // namespace

TEST_CASE("channel factorization matches the 2D quadrature", "[overlap]") {
  const Chi2Spec chi;
  const double lam_p = 0.775, lam_s = 1.5;
  const double lam_i =
      lambda_um_of_omega(omega_rad_per_s(lam_p) - omega_rad_per_s(lam_s));
  const OamMode pump = solve_oam(lam_p, spec("HE21R"));

  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"HE11R", "HE21R"}, {"HE11L", "HE21R"}, {"HE21R", "HE11R"},
      {"HE21R", "HE11L"}, {"TE01", "HE11R"},  {"TM01", "HE11R"},
      {"HE11R", "HE11R"},  // charge violating
      {"TE01", "HE11L"},   // charge allowed, tensor null
  };
  std::vector<cplx> s2d, sch;
  double scale = 0.0;
  for (const auto& [a, b] : pairs) {
    const OamMode ms = solve_oam(lam_s, spec(a));
    const OamMode mi = solve_oam(lam_i, spec(b));
    s2d.push_back(transverse_overlap(pump, ms, mi, chi, 256, 1201));
    sch.push_back(transverse_overlap_channels(pump, ms, mi, chi, 1201));
    scale = std::max(scale, std::abs(sch.back()));
  }
  REQUIRE(scale > 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    INFO(pairs[k].first << " + " << pairs[k].second << ": 2d=" << s2d[k]
                        << " ch=" << sch[k]);
    CHECK(std::abs(s2d[k] - sch[k]) < 1e-8 * scale);
  }
}

TEST_CASE("blind polar quadrature confirms the overlap integral",
          "[overlap]") {
  const Chi2Spec chi;
  const double lam_p = 0.775, lam_s = 1.5;
  const double lam_i =
      lambda_um_of_omega(omega_rad_per_s(lam_p) - omega_rad_per_s(lam_s));
  const OamMode pump = solve_oam(lam_p, spec("HE21R"));
  const OamMode sig = solve_oam(lam_s, spec("HE21R"));
  const OamMode idl = solve_oam(lam_i, spec("HE11R"));

  // midpoint radial rule that knows nothing about layer boundaries
  const double r_max = pump.base.regions.back().r_hi_um;
  const int nr = 12001, nt = 128;
  cplx acc{};
  for (int i = 0; i < nr; ++i) {
    const double r = r_max * (i + 0.5) / nr;
    const auto sp = pump.base.eval(r);
    const auto ss = sig.base.eval(r);
    const auto si = idl.base.eval(r);
    cplx ring{};
    for (int t = 0; t < nt; ++t) {
      const double th = two_pi * t / nt;
      const double ct = std::cos(th), st = std::sin(th);
      const auto a = ovdetail::to_cart(pump.field_from_sample(sp, th), ct, st,
                                       false);
      const auto b =
          ovdetail::to_cart(sig.field_from_sample(ss, th), ct, st, true);
      const auto c =
          ovdetail::to_cart(idl.field_from_sample(si, th), ct, st, true);
      ring += ovdetail::contract_cart(chi, a, b, c);
    }
    acc += (r_max / nr) * r * ring * (two_pi / nt);
  }
  const cplx want = transverse_overlap_channels(pump, sig, idl, chi, 1201);
  INFO("blind=" << acc << " channels=" << want);
  CHECK(std::abs(acc - want) < 1e-4 * std::abs(want));
}

TEST_CASE("violating and tensor-null triples vanish", "[overlap]") {
  const Chi2Spec chi;
  const double lam_p = 0.775, lam_s = 1.5;
  const double lam_i =
      lambda_um_of_omega(omega_rad_per_s(lam_p) - omega_rad_per_s(lam_s));
  const OamMode pump = solve_oam(lam_p, spec("HE21R"));
  const cplx ref = transverse_overlap_channels(
      pump, solve_oam(lam_s, spec("HE21R")), solve_oam(lam_i, spec("HE11R")),
      chi, 1201);

  // charge balance broken: l = 1 + 1 != 1
  const OamMode s1 = solve_oam(lam_s, spec("HE21R"));
  const OamMode i1 = solve_oam(lam_i, spec("HE21R"));
  CHECK(transverse_overlap_channels(pump, s1, i1, chi, 1201) == cplx{});
  CHECK(std::abs(transverse_overlap(pump, s1, i1, chi, 256, 801)) <
        1e-13 * std::abs(ref));

  // charge balanced via l = 1 + 0 but every polarization route is blocked
  const OamMode s2 = solve_oam(lam_s, spec("TE01"));
  const OamMode i2 = solve_oam(lam_i, spec("HE11L"));
  CHECK(transverse_overlap_channels(pump, s2, i2, chi, 1201) == cplx{});
  CHECK(std::abs(transverse_overlap(pump, s2, i2, chi, 256, 801)) <
        1e-13 * std::abs(ref));
}

TEST_CASE("on-axis tensor deviation opens the third-order channel",
          "[overlap]") {
  const double lam_p = 0.775, lam_s = 1.5;
  const double lam_i =
      lambda_um_of_omega(omega_rad_per_s(lam_p) - omega_rad_per_s(lam_s));
  const OamMode pump = solve_oam(lam_p, spec("HE21R"));
  const OamMode sig = solve_oam(lam_s, spec("TE01"));
  const OamMode idl = solve_oam(lam_i, spec("HE11L"));

  Chi2Spec kleinman;  // chi_xxx = 3 chi1 exactly
  kleinman.chi_xxx_um_per_v = 3.0 * kleinman.chi1_um_per_v;
  CHECK(transverse_overlap_channels(pump, sig, idl, kleinman, 1201) ==
        cplx{});

  Chi2Spec skew = kleinman;
  skew.chi_xxx_um_per_v = 5.0 * skew.chi1_um_per_v;
  const cplx open = transverse_overlap_channels(pump, sig, idl, skew, 1201);
  CHECK(std::abs(open) > 0.0);
  const cplx open2d = transverse_overlap(pump, sig, idl, skew, 256, 1201);
  CHECK(std::abs(open - open2d) < 1e-8 * std::abs(open));
}

TEST_CASE("mode labels round trip and reject nonsense", "[spdc]") {
  for (const std::string s :
       {"HE11R", "HE21L", "EH11R", "HE21e", "HE31o", "TE01", "TM01"})
    CHECK(parse_mode_spec(s).str() == s);
  CHECK(parse_mode_spec("HE21R").l_set() == std::vector<int>{1});
  CHECK(parse_mode_spec("HE21L").l_set() == std::vector<int>{-1});
  CHECK(parse_mode_spec("HE11L").l_set() == std::vector<int>{0});
  CHECK(parse_mode_spec("EH11R").l_set() == std::vector<int>{2});
  CHECK(parse_mode_spec("TE01").l_set() == (std::vector<int>{1, -1}));
  CHECK_THROWS_AS(parse_mode_spec("HE21"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("TE01R"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("TE11"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("HE01R"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("HE20R"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("XY11R"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("HE2"), ConfigError);
  CHECK_THROWS_AS(parse_mode_spec("HE21Q"), ConfigError);
}

TEST_CASE("input validation rejects broken pump and scan blocks", "[spdc]") {
  PumpSpec p;
  p.power_w = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.components.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.components.push_back({spec("TE01"), 0.2, 0.0});
  CHECK_THROWS_AS(p.validate(), ConfigError);  // fractions sum to 1.2
  p = {};
  p.shape = PumpSpec::Shape::Gaussian;
  CHECK_THROWS_AS(p.validate(), ConfigError);  // sigma missing
  p.sigma_rad_per_s = 1e9;
  p.spectral_points = 10;
  CHECK_THROWS_AS(p.validate(), ConfigError);  // even node count

  ScanSpec s;
  s.lambda_hi_um = s.lambda_lo_um;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.points = 4;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("density formula is dimensionless per unit bandwidth", "[spdc]") {
  using namespace dim;
  const Dim e_field = volt_per_m;
  const Dim S = chi2 * pow(e_field, 3) * pow(meter, 2);
  const Dim Z = meter;  // chi0 kept dimensionless in the grating transform
  const Dim density =
      pow(eps0, 2) * watt * pow(omega, 2) * pow(S, 2) * pow(Z, 2) /
      pow(watt, 3);
  CHECK(density == one);
  CHECK(density * omega == one / second);        // integrates to pairs/s
  CHECK(hbar * omega / (one * second) == watt);  // photon energy over time
}

TEST_CASE("reference spectrum shows the four ordered conversion peaks",
          "[spdc]") {
  const auto& res = reference_spectrum();

  const auto& tm = group_of(res, "TM01 + HE11");
  const auto& de = group_of(res, "HE21R + HE11");
  const auto& mi = group_of(res, "HE11R + HE21");
  const auto& te = group_of(res, "TE01 + HE11");
  for (const ProcessGroup* g : {&tm, &de, &mi, &te}) {
    INFO(g->label);
    REQUIRE(g->has_peak);
  }

  CHECK_THAT(de.peak_lambda_um, Catch::Matchers::WithinAbs(1.5, 5e-4));
  CHECK_THAT(tm.peak_lambda_um, Catch::Matchers::WithinAbs(1.408899, 1e-3));
  CHECK_THAT(mi.peak_lambda_um, Catch::Matchers::WithinAbs(1.603450, 1e-3));
  CHECK_THAT(te.peak_lambda_um, Catch::Matchers::WithinAbs(1.619850, 1e-3));
  CHECK(tm.peak_lambda_um < de.peak_lambda_um);
  CHECK(de.peak_lambda_um < mi.peak_lambda_um);
  CHECK(mi.peak_lambda_um < te.peak_lambda_um);

  // the designed process collects both idler handednesses; it must dominate
  CHECK(res.dominant().label == "HE21R + HE11");
  CHECK_THAT(de.fwhm_nm, Catch::Matchers::WithinRel(0.9563, 0.02));

  // the fine grid cannot overshoot the refined peak, only undersample it
  const auto& bd = res.branch_density.at("HE21R");
  double fine_max = 0.0;
  for (double v : bd) fine_max = std::max(fine_max, v);
  CHECK(fine_max <= de.peak_density * (1.0 + 1e-9));
  CHECK(fine_max > 0.95 * de.peak_density);

  // mismatch of the designed pair at the design wavelength
  const auto& ev = res.evals[group_of(res, "HE21R + HE11").pair_index.front()];
  CHECK_THAT(ev.dbeta_first(omega_rad_per_s(1.5)),
             Catch::Matchers::WithinAbs(0.1415641263, 1e-6));

  // Both idler handednesses ride the same phase-matching curve and share
  // the emission almost evenly. The two overlaps coincide exactly only in
  // the scalar limit; full vector modes lift the degeneracy at O(1e-3)
  // here (converged against radial resolution and both quadratures).
  const auto& pr = pair_of(res, "HE21R + HE11R");
  const auto& pl = pair_of(res, "HE21R + HE11L");
  const double wpk = omega_rad_per_s(de.peak_lambda_um);
  const double dr = res.evals[&pr - res.pairs.data()].density(wpk);
  const double dl = res.evals[&pl - res.pairs.data()].density(wpk);
  INFO("idler handedness split: R=" << dr << " L=" << dl
                                    << " rel=" << std::abs(dr - dl) /
                                                      std::max(dr, dl));
  CHECK(dr > 0.0);
  CHECK(dl > 0.0);
  CHECK(std::abs(dr - dl) / std::max(dr, dl) < 2e-3);
}

TEST_CASE("pair rate report matches the designed source", "[spdc]") {
  const auto& res = reference_spectrum();
  const RateReport rep = pair_rate_report(res);

  CHECK(rep.process == "HE21R + HE11");
  CHECK(rep.default_band);
  CHECK_THAT(rep.band_hi_um - rep.band_lo_um,
             Catch::Matchers::WithinRel(20.0 * rep.fwhm_nm * 1e-3, 1e-9));

  INFO("pairs/s = " << rep.pairs_per_s << ", efficiency = " << rep.efficiency
                    << ", Tc = " << rep.correlation_fwhm_s);
  CHECK(rep.pairs_per_s > 48.0);
  CHECK(rep.pairs_per_s < 1200.0);
  CHECK_THAT(rep.efficiency,
             Catch::Matchers::WithinRel(
                 rep.pairs_per_s * hbar_J_s * res.omega_p / res.pump.power_w,
                 1e-12));
  CHECK(rep.efficiency > 1.2e-11);
  CHECK(rep.efficiency < 3.1e-10);

  CHECK_THAT(rep.correlation_fwhm_s,
             Catch::Matchers::WithinRel(6.952e-12, 0.05));

  REQUIRE_FALSE(rep.separation.empty());
  for (const auto& sep : rep.separation) {
    INFO(sep.process << " ratio " << sep.ratio);
    CHECK(sep.ratio < 1e-2);
  }
}

TEST_CASE("signal and idler labels can be exchanged without changing rates",
          "[spdc]") {
  const auto& res = reference_spectrum();
  const double lo = 1.494, hi = 1.506;
  const double rate_design =
      integrated_rate(res, group_index(res, "HE21R + HE11"), lo, hi);
  // the mirrored band in the idler wavelength
  const double wp = res.omega_p;
  const double mlo = lambda_um_of_omega(wp - omega_rad_per_s(lo));
  const double mhi = lambda_um_of_omega(wp - omega_rad_per_s(hi));
  const double rate_mirror =
      integrated_rate(res, group_index(res, "HE11R + HE21"), mhi, mlo) +
      integrated_rate(res, group_index(res, "HE11L + HE21"), mhi, mlo);
  INFO("design " << rate_design << " mirror " << rate_mirror);
  CHECK_THAT(rate_mirror, Catch::Matchers::WithinRel(rate_design, 1e-6));
}

TEST_CASE("forced charge-violating process stays numerically dark", "[spdc]") {
  const auto scan = tight_scan(1.48, 1.52);
  const auto res = compute_spectrum(
      reference_fiber(), PumpSpec{}, reference_grating(), Chi2Spec{}, scan,
      {{spec("TE01"), spec("TE01")}});
  REQUIRE(res.pairs.size() == 1);
  CHECK_FALSE(res.pairs[0].allowed);
  CHECK_FALSE(res.pairs[0].rule_note.empty());
  double dmax = 0.0;
  for (double d : res.pairs[0].density) dmax = std::max(dmax, d);
  CHECK(dmax < 1e-20 * reference_spectrum().dominant().peak_density);
}

TEST_CASE("pair admission follows the tensor, not just the harmonics",
          "[spdc]") {
  // TE01 + HE11L balances harmonics, but with chi_xxx = 3 chi1 every route
  // through the tensor is dead. Skewing chi_xxx revives it, and the planner
  // must agree with the quadrature on both sides of that coincidence.
  const auto scan = tight_scan(1.48, 1.52);
  const std::vector<ProcessSelection> one = {{spec("TE01"), spec("HE11L")}};

  const auto dark = compute_spectrum(reference_fiber(), PumpSpec{},
                                     reference_grating(), Chi2Spec{}, scan,
                                     one);
  REQUIRE(dark.pairs.size() == 1);
  CHECK_FALSE(dark.pairs[0].allowed);

  Chi2Spec skew;
  skew.chi_xxx_um_per_v = 5.0 * skew.chi1_um_per_v;
  const auto lit = compute_spectrum(reference_fiber(), PumpSpec{},
                                    reference_grating(), skew, scan, one);
  REQUIRE(lit.pairs.size() == 1);
  CHECK(lit.pairs[0].allowed);
  double dmax = 0.0;
  for (double d : lit.pairs[0].density) dmax = std::max(dmax, d);
  CHECK(dmax > 0.0);
}

TEST_CASE("forced allowed process agrees with the full enumeration",
          "[spdc]") {
  const auto scan = tight_scan(1.49, 1.51);
  const auto res = compute_spectrum(
      reference_fiber(), PumpSpec{}, reference_grating(), Chi2Spec{}, scan,
      {{spec("HE21R"), spec("HE11R")}});
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].allowed);
  const double w = omega_rad_per_s(1.5);
  const double a = res.evals[0].density(w);
  const auto& full = reference_spectrum();
  const double b =
      full.evals[&pair_of(full, "HE21R + HE11R") - full.pairs.data()].density(
          w);
  CHECK_THAT(a, Catch::Matchers::WithinRel(b, 1e-3));
}

TEST_CASE("densities scale exactly with chi squared and pump power",
          "[spdc]") {
  const auto scan = tight_scan(1.49, 1.51);
  const std::vector<ProcessSelection> one = {{spec("HE21R"), spec("HE11R")}};
  const auto base = compute_spectrum(reference_fiber(), PumpSpec{},
                                     reference_grating(), Chi2Spec{}, scan,
                                     one);

  Chi2Spec chi2x;
  chi2x.chi1_um_per_v *= 2.0;
  chi2x.chi_xxx_um_per_v *= 2.0;
  const auto doubled = compute_spectrum(reference_fiber(), PumpSpec{},
                                        reference_grating(), chi2x, scan, one);

  PumpSpec p3;
  p3.power_w *= 3.0;
  const auto tripled = compute_spectrum(reference_fiber(), p3,
                                        reference_grating(), Chi2Spec{}, scan,
                                        one);

  REQUIRE(base.pairs[0].density.size() == doubled.pairs[0].density.size());
  REQUIRE(base.pairs[0].density.size() == tripled.pairs[0].density.size());
  for (std::size_t k = 0; k < base.pairs[0].density.size(); ++k) {
    const double d = base.pairs[0].density[k];
    if (d == 0.0) continue;
    CHECK_THAT(doubled.pairs[0].density[k],
               Catch::Matchers::WithinRel(4.0 * d, 1e-12));
    CHECK_THAT(tripled.pairs[0].density[k],
               Catch::Matchers::WithinRel(3.0 * d, 1e-12));
  }
}

TEST_CASE("pump leakage components carry their power fraction", "[spdc]") {
  const auto scan = tight_scan(1.49, 1.51);
  const std::vector<ProcessSelection> one = {{spec("HE21R"), spec("HE11R")}};
  const auto pure = compute_spectrum(reference_fiber(), PumpSpec{},
                                     reference_grating(), Chi2Spec{}, scan,
                                     one);
  PumpSpec leaky;
  leaky.components = {{spec("HE21R"), 0.98, 0.0},
                      {spec("TE01"), 0.01, 0.4},
                      {spec("TM01"), 0.01, -1.1}};
  const auto mixed = compute_spectrum(reference_fiber(), leaky,
                                      reference_grating(), Chi2Spec{}, scan,
                                      one);
  // TE01/TM01 pump light cannot feed this pair (polarization routes closed),
  // so the pair density is exactly the main component's share
  const double w = omega_rad_per_s(1.5);
  CHECK_THAT(mixed.evals[0].density(w),
             Catch::Matchers::WithinRel(0.98 * pure.evals[0].density(w),
                                        1e-9));
}

TEST_CASE("flat joint spectrum gives the analytic correlation window",
          "[spdc]") {
  const double W = 1e12;  // rad/s
  const int n = 2048;
  std::vector<double> omega(n);
  std::vector<cplx> amp(n, cplx{1.0, 0.0});
  for (int k = 0; k < n; ++k)
    omega[k] = 2.0e15 - W / 2.0 + W * k / (n - 1);
  const double got = correlation_fwhm_s(omega, {amp});
  const double weff = omega.back() - omega.front();
  CHECK_THAT(got, Catch::Matchers::WithinRel(5.56622951 / weff, 5e-3));

  // halving the spectral width doubles the window
  std::vector<double> omega2(n);
  for (int k = 0; k < n; ++k)
    omega2[k] = 2.0e15 - W / 4.0 + (W / 2.0) * k / (n - 1);
  const double got2 = correlation_fwhm_s(omega2, {amp});
  CHECK_THAT(got2, Catch::Matchers::WithinRel(2.0 * got, 5e-3));

  // a grid too coarse for its own window must refuse, naming the cure
  std::vector<double> omega3(32);
  std::vector<cplx> amp3(32, cplx{1.0, 0.0});
  for (int k = 0; k < 32; ++k)
    omega3[k] = 2.0e15 - W / 2.0 + W * k / 31.0;
  CHECK_THROWS_AS(correlation_fwhm_s(omega3, {amp3}), ResolutionError);
}

TEST_CASE("halving the grating keeps the peak but halves the correlation",
          "[spdc]") {
  ScanSpec scan = tight_scan(1.47, 1.53);
  scan.points = 600;
  scan.coarse_points = 17;
  scan.branch_points = 80;
  const auto half = compute_spectrum(reference_fiber(), PumpSpec{},
                                     reference_grating(5e5), Chi2Spec{}, scan);
  const RateReport rhalf = pair_rate_report(half);
  const auto& res = reference_spectrum();
  const RateReport rfull = pair_rate_report(res);

  CHECK(rhalf.process == "HE21R + HE11");
  CHECK_THAT(rhalf.peak_lambda_um,
             Catch::Matchers::WithinAbs(rfull.peak_lambda_um, 1e-4));
  CHECK_THAT(rhalf.correlation_fwhm_s,
             Catch::Matchers::WithinRel(0.5 * rfull.correlation_fwhm_s, 0.05));
  CHECK_THAT(rhalf.fwhm_nm, Catch::Matchers::WithinRel(2.0 * rfull.fwhm_nm,
                                                       0.05));

  // over one fixed band the rate falls by about the length ratio
  const double a = integrated_rate(res, res.dominant_group, 1.47, 1.53);
  const double b = integrated_rate(half, half.dominant_group, 1.47, 1.53);
  CHECK_THAT(a / b, Catch::Matchers::WithinRel(2.0, 0.05));
}

TEST_CASE("narrow Gaussian pump reduces to the monochromatic line", "[spdc]") {
  ScanSpec scan = tight_scan(1.49, 1.51);
  const std::vector<ProcessSelection> one = {{spec("HE21R"), spec("HE11R")}};
  const auto mono = compute_spectrum(reference_fiber(), PumpSpec{},
                                     reference_grating(), Chi2Spec{}, scan,
                                     one);
  PumpSpec narrow;
  narrow.shape = PumpSpec::Shape::Gaussian;
  narrow.sigma_rad_per_s = 1e9;  // far below the phase-matching bandwidth
  const auto gdens = compute_spectrum(reference_fiber(), narrow,
                                      reference_grating(), Chi2Spec{}, scan,
                                      one);
  const double w = omega_rad_per_s(1.5);
  CHECK_THAT(gdens.evals[0].density(w),
             Catch::Matchers::WithinRel(mono.evals[0].density(w), 5e-3));

  PumpSpec wide = narrow;
  wide.sigma_rad_per_s = 2e11;  // comparable to the lobe width: peak smears
  const auto gwide = compute_spectrum(reference_fiber(), wide,
                                      reference_grating(), Chi2Spec{}, scan,
                                      one);
  CHECK(gwide.evals[0].density(w) < 0.95 * mono.evals[0].density(w));
}

TEST_CASE("charge balance holds across every low-order triple", "[spdc]") {
  GratingSpec g = reference_grating();
  const auto table = selection_rule_scan(reference_fiber(), 0.775, 1.5,
                                         Chi2Spec{}, g, 1, 64, 401);
  double best_allowed = 0.0, worst_violating = 0.0;
  std::size_t n_allowed = 0, n_violating = 0;
  for (const auto& t : table) {
    if (t.allowed) {
      ++n_allowed;
      best_allowed = std::max(best_allowed, t.abs_I);
    } else {
      ++n_violating;
      worst_violating = std::max(worst_violating, t.abs_I);
    }
  }
  INFO("allowed " << n_allowed << " violating " << n_violating
                  << " best " << best_allowed << " worst " << worst_violating);
  REQUIRE(n_allowed > 0);
  REQUIRE(n_violating > 0);
  CHECK(worst_violating < 1e-12 * best_allowed);
}
