#pragma once
#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ringspdc/dispersion.hpp"
#include "ringspdc/overlap.hpp"
#include "ringspdc/qpm.hpp"

// Pair-generation spectra for a poled ring fiber. A monochromatic pump in
// one OAM mode down-converts into mode pairs; the per-pair coefficient is
//
//   C(w_s) = eps0 sqrt(P / 32 pi) sqrt(w_s w_i) S(w_s) Zbar(dbeta)
//
// with S the transverse interaction integral (V^2, chi included), Zbar the
// longitudinal grating transform (um, chi0 = 1), eps0 in F/um and P0 = 1 W
// absorbed. |C|^2 is then the pair density in pairs/s per rad/s of signal
// bandwidth, which is what this header computes, refines around its peaks
// and integrates into rates.

namespace ringspdc {

// ---------------------------------------------------------------- naming

struct OamModeSpec {
  ModeFamily family = ModeFamily::HE;
  int n = 1;
  int m = 1;
  Variant variant = Variant::R;

  Subsystem subsystem() const {
    return family == ModeFamily::TE   ? Subsystem::TE
           : family == ModeFamily::TM ? Subsystem::TM
                                      : Subsystem::Hybrid;
  }

  bool hybrid() const {
    return family == ModeFamily::HE || family == ModeFamily::EH;
  }

  // topological charges this mode can carry
  std::vector<int> l_set() const {
    if (!hybrid()) return {+1, -1};
    const int mag = family == ModeFamily::HE ? n - 1 : n + 1;
    if (mag == 0) return {0};
    switch (variant) {
      case Variant::R: return {+mag};
      case Variant::L: return {-mag};
      default: return {+mag, -mag};
    }
  }

  // Azimuthal (harmonic, polarization) channels of the full vector field.
  // A mode of total angular index j splits into sigma+ at j-1, sigma- at
  // j+1 and a longitudinal part at j. Both hybrid families sit at j = n;
  // HE puts the dominant weight on the co-rotating sigma+ channel, EH on
  // the counter-rotating one, but the minority channel is small rather
  // than zero, so it takes part in the charge bookkeeping. TE modes have
  // no longitudinal field, which removes their j channel.
  std::vector<std::pair<int, int>> channel_set() const {
    std::vector<int> js;
    if (!hybrid()) {
      js = {0};
    } else {
      switch (variant) {
        case Variant::R: js = {+n}; break;
        case Variant::L: js = {-n}; break;
        default: js = {+n, -n}; break;
      }
    }
    std::vector<std::pair<int, int>> out;
    for (int j : js) {
      out.push_back({j - 1, +1});
      out.push_back({j + 1, -1});
      if (family != ModeFamily::TE) out.push_back({j, 0});
    }
    return out;
  }

  std::string str() const {
    std::string s = family_name(family) + std::to_string(n) + std::to_string(m);
    if (!hybrid()) return s;
    switch (variant) {
      case Variant::R: return s + "R";
      case Variant::L: return s + "L";
      case Variant::Even: return s + "e";
      case Variant::Odd: return s + "o";
      default: return s;
    }
  }

  friend bool operator==(const OamModeSpec& a, const OamModeSpec& b) {
    return a.family == b.family && a.n == b.n && a.m == b.m &&
           (a.hybrid() ? a.variant == b.variant : true);
  }
};

inline OamModeSpec parse_mode_spec(const std::string& text) {
  auto bad = [&](const std::string& why) {
    throw ConfigError("mode label '" + text + "': " + why);
  };
  if (text.size() < 4) bad("too short, expected e.g. HE21R or TE01");
  OamModeSpec s;
  const std::string fam = text.substr(0, 2);
  if (fam == "HE") s.family = ModeFamily::HE;
  else if (fam == "EH") s.family = ModeFamily::EH;
  else if (fam == "TE") s.family = ModeFamily::TE;
  else if (fam == "TM") s.family = ModeFamily::TM;
  else bad("unknown family '" + fam + "'");
  if (!std::isdigit(static_cast<unsigned char>(text[2])) ||
      !std::isdigit(static_cast<unsigned char>(text[3])))
    bad("expected two digits after the family");
  s.n = text[2] - '0';
  s.m = text[3] - '0';
  if (s.m < 1) bad("radial index starts at 1");
  const std::string tail = text.substr(4);
  if (!s.hybrid()) {
    if (s.n != 0) bad("TE/TM modes have azimuthal order 0");
    if (!tail.empty()) bad("TE/TM modes take no handedness suffix");
    s.variant = Variant::Axial;
    return s;
  }
  if (s.n < 1) bad("hybrid modes have azimuthal order >= 1");
  if (tail == "R") s.variant = Variant::R;
  else if (tail == "L") s.variant = Variant::L;
  else if (tail == "e") s.variant = Variant::Even;
  else if (tail == "o") s.variant = Variant::Odd;
  else if (tail.empty()) bad("hybrid mode needs a R/L/e/o suffix");
  else bad("unknown suffix '" + tail + "'");
  return s;
}

// ---------------------------------------------------------------- inputs

struct PumpComponent {
  OamModeSpec mode{ModeFamily::HE, 2, 1, Variant::R};
  double power_fraction = 1.0;
  double phase_rad = 0.0;
};

struct PumpSpec {
  double lambda_um = 0.775;
  double power_w = 1e-6;
  std::vector<PumpComponent> components{PumpComponent{}};
  enum class Shape { Monochromatic, Gaussian };
  Shape shape = Shape::Monochromatic;
  double sigma_rad_per_s = 0.0;  // rms spectral width of the Gaussian shape
  int spectral_points = 21;

  void validate() const {
    if (!(lambda_um > 0.0)) throw ConfigError("pump wavelength must be > 0");
    if (!(power_w > 0.0)) throw ConfigError("pump power must be > 0");
    if (components.empty()) throw ConfigError("pump needs >= 1 component");
    double tot = 0.0;
    for (const auto& c : components) {
      if (!(c.power_fraction >= 0.0))
        throw ConfigError("pump power fraction must be >= 0");
      tot += c.power_fraction;
    }
    if (!(tot > 0.0)) throw ConfigError("pump power fractions are all zero");
    if (tot > 1.0 + 1e-9)
      throw ConfigError("pump power fractions sum above 1");
    if (shape == Shape::Gaussian) {
      if (!(sigma_rad_per_s > 0.0))
        throw ConfigError("Gaussian pump needs sigma > 0");
      if (spectral_points < 5 || spectral_points % 2 == 0)
        throw ConfigError("pump spectral_points must be odd and >= 5");
    }
  }
};

struct ScanSpec {
  double lambda_lo_um = 1.35;
  double lambda_hi_um = 1.70;
  int points = 4000;        // fine signal-wavelength grid
  int coarse_points = 65;   // knots for the slowly varying overlap integral
  int theta_points = 256;
  int radial_points = 1201;
  int refine_steps_per_fwhm = 80;  // local peak resampling density
  int branch_points = 260;
  int max_azimuthal = 3;
  bool full_2d_overlap = false;  // angle-exact factorization is the default

  void validate() const {
    if (!(lambda_hi_um > lambda_lo_um && lambda_lo_um > 0.0))
      throw ConfigError("scan band must satisfy 0 < lo < hi");
    if (points < 16) throw ConfigError("scan needs >= 16 points");
    if (coarse_points < 8) throw ConfigError("scan needs >= 8 coarse points");
    if (refine_steps_per_fwhm < 8)
      throw ConfigError("refine_steps_per_fwhm must be >= 8");
  }
};

struct ProcessSelection {
  OamModeSpec signal, idler;
};

// ---------------------------------------------------------------- results

struct PairSpectrum {
  OamModeSpec signal, idler;
  std::string label;
  bool allowed = true;     // charge balance l_p = l_s + l_i attainable
  std::string rule_note;   // filled when a forced pair violates the balance
  std::size_t k_lo = 0, k_hi = 0;  // covered slice of the fine grid
  std::vector<cplx> amplitude;     // C(w_s) at the central pump frequency
  std::vector<double> density;     // pairs/s per rad/s
  std::vector<double> dbeta;       // mismatch of the first pump component
};

// Pairs that differ only in idler handedness describe one down-conversion
// process; peaks, rates and the separation table live at this level.
struct ProcessGroup {
  OamModeSpec signal;
  ModeFamily idler_family = ModeFamily::HE;
  int idler_n = 1, idler_m = 1;
  std::string label;
  std::vector<std::size_t> pair_index;
  bool has_peak = false;
  double peak_lambda_um = 0.0;
  double peak_density = 0.0;  // pairs/s per rad/s at the refined maximum
  double fwhm_nm = 0.0;
  // refined window around the peak, ascending in wavelength
  std::vector<double> lambda_um;
  std::vector<double> omega;
  std::vector<double> density;
  std::vector<std::vector<cplx>> member_amplitude;  // parallel to pair_index
};

namespace spdcdetail {

// Everything needed to re-evaluate one pair coefficient at any in-band
// frequency: branch splines for the phases, overlap splines for S.
struct PairEvaluator {
  GratingSpec grating;
  double kpref = 0.0;  // eps0 sqrt(P/32 pi)
  double omega_p = 0.0;
  DispersionBranch sig, idl;
  struct Comp {
    cplx amp;  // sqrt(power fraction) e^{i phase}
    double beta_p = 0.0;
    CubicSpline s_re, s_im;
    double w_lo = 0.0, w_hi = 0.0;  // knot coverage
    std::optional<DispersionBranch> pump_branch;
  };
  std::vector<Comp> comps;
  bool gaussian = false;
  std::vector<double> gauss_offset, gauss_weight;

  bool covers(double ws) const {
    if (ws <= 0.0 || ws >= omega_p) return false;
    if (!sig.covers_omega(ws)) return false;
    const double lo = gaussian ? gauss_offset.front() : 0.0;
    const double hi = gaussian ? gauss_offset.back() : 0.0;
    if (!idl.covers_omega(omega_p + lo - ws) ||
        !idl.covers_omega(omega_p + hi - ws))
      return false;
    for (const auto& c : comps)
      if (ws < c.w_lo || ws > c.w_hi) return false;
    return true;
  }

  cplx component_amplitude(double ws, const Comp& c, double wp,
                           double beta_p) const {
    const double wi = wp - ws;
    const double db = beta_p - sig.beta_at(ws) - idl.beta_at(wi);
    const cplx S{c.s_re.value(ws), c.s_im.value(ws)};
    return kpref * std::sqrt(ws * wi) * c.amp * S *
           grating_amplitude(grating, db);
  }

  cplx amplitude(double ws) const {
    cplx acc{};
    for (const auto& c : comps)
      acc += component_amplitude(ws, c, omega_p, c.beta_p);
    return acc;
  }

  double density(double ws) const {
    if (!gaussian) return std::norm(amplitude(ws));
    double acc = 0.0;
    for (std::size_t q = 0; q < gauss_offset.size(); ++q) {
      const double wp = omega_p + gauss_offset[q];
      cplx a{};
      for (const auto& c : comps)
        a += component_amplitude(ws, c, wp, c.pump_branch->beta_at(wp));
      acc += gauss_weight[q] * std::norm(a);
    }
    return acc;
  }

  double dbeta_first(double ws) const {
    return comps.front().beta_p - sig.beta_at(ws) -
           idl.beta_at(omega_p - ws);
  }
};

}  // namespace spdcdetail

struct SpectrumResult {
  PumpSpec pump;
  GratingSpec grating;
  Chi2Spec chi;
  ScanSpec scan;
  double omega_p = 0.0;
  std::vector<double> lambda_um;  // fine grid, ascending
  std::vector<PairSpectrum> pairs;
  std::vector<spdcdetail::PairEvaluator> evals;  // parallel to pairs
  std::vector<ProcessGroup> groups;
  std::map<std::string, std::vector<double>> branch_density;  // by signal label
  std::size_t dominant_group = static_cast<std::size_t>(-1);
  std::vector<std::string> warnings;

  const ProcessGroup& dominant() const {
    if (dominant_group >= groups.size())
      throw ComputationError("spectrum has no resolved peak");
    return groups[dominant_group];
  }
};

// ------------------------------------------------------------ refinement

namespace spdcdetail {

struct RefineOut {
  bool ok = false;
  double lambda_peak_um = 0.0, density_peak = 0.0, fwhm_um = 0.0;
  std::vector<double> omega, lambda_um, density;
  std::vector<std::vector<cplx>> member_amplitude;
};

// One resampling pass over [w_c - span, w_c + span]; half-max crossings by
// linear interpolation. Fails when a crossing leaves the covered window.
inline RefineOut refine_pass(const std::vector<const PairEvaluator*>& evs,
                             double lambda_c_um, double fwhm_guess_um,
                             double halfspan_fwhm, int steps_per_fwhm) {
  RefineOut out;
  const double wc = omega_rad_per_s(lambda_c_um);
  const double fw = omega_rad_per_s(lambda_c_um) -
                    omega_rad_per_s(lambda_c_um + fwhm_guess_um);
  const double step = std::abs(fw) / steps_per_fwhm;
  const int half = static_cast<int>(std::lround(halfspan_fwhm * steps_per_fwhm));
  std::vector<double> ws;
  for (int k = -half; k <= half; ++k) {
    const double w = wc + k * step;
    bool cov = true;
    for (const auto* e : evs) cov = cov && e->covers(w);
    if (cov) ws.push_back(w);
  }
  if (ws.size() < 16) return out;
  out.omega = ws;
  out.density.resize(ws.size());
  out.member_amplitude.assign(evs.size(), std::vector<cplx>(ws.size()));
  out.lambda_um.resize(ws.size());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    double d = 0.0;
    for (std::size_t p = 0; p < evs.size(); ++p) {
      d += evs[p]->density(ws[k]);
      out.member_amplitude[p][k] = evs[p]->amplitude(ws[k]);
    }
    out.density[k] = d;
    out.lambda_um[k] = lambda_um_of_omega(ws[k]);
  }
  std::size_t kmax = 0;
  for (std::size_t k = 1; k < ws.size(); ++k)
    if (out.density[k] > out.density[kmax]) kmax = k;
  if (kmax == 0 || kmax + 1 == ws.size()) return out;
  const double half_h = out.density[kmax] / 2.0;
  auto cross = [&](int dir) -> std::optional<double> {
    std::size_t k = kmax;
    while (true) {
      const std::size_t nxt = k + dir;
      if (nxt >= ws.size()) return std::nullopt;  // unsigned wrap covers k=0
      if (out.density[nxt] < half_h) {
        const double f =
            (out.density[k] - half_h) / (out.density[k] - out.density[nxt]);
        return ws[k] + f * (ws[nxt] - ws[k]);
      }
      k = nxt;
      if (k == 0 || k + 1 == ws.size()) return std::nullopt;
    }
  };
  const auto lo = cross(-1), hi = cross(+1);
  if (!lo || !hi) return out;
  out.ok = true;
  out.density_peak = out.density[kmax];
  out.lambda_peak_um = lambda_um_of_omega(ws[kmax]);
  const double fwhm_w = std::abs(*hi - *lo);
  // convert the frequency width to wavelength at the peak
  out.fwhm_um = fwhm_w * out.lambda_peak_um * out.lambda_peak_um /
                (two_pi * c_um_per_s);
  // flip to ascending wavelength
  std::reverse(out.omega.begin(), out.omega.end());
  std::reverse(out.lambda_um.begin(), out.lambda_um.end());
  std::reverse(out.density.begin(), out.density.end());
  for (auto& v : out.member_amplitude) std::reverse(v.begin(), v.end());
  return out;
}

using ChannelSet = std::vector<std::pair<int, int>>;

// A triple couples when some channel combination balances the azimuthal
// harmonics with a nonzero tensor weight. The weight expression mirrors the
// one in transverse_overlap_channels exactly, signal and idler conjugated,
// so the classification agrees with the quadrature including the chi-value
// coincidences that silence a combination (chi_xxx = 3 chi_xyy kills the
// patterns that only the anisotropy term could drive).
inline bool charge_balanced(const ChannelSet& cp, const ChannelSet& cs,
                            const ChannelSet& ci, const Chi2Spec& chi) {
  const double dev = chi.deviation_um_per_v();
  auto dot = [](int a, int b) { return a == -b ? 1.0 : 0.0; };
  auto projx = [](int a) { return a != 0 ? 1.0 / std::sqrt(2.0) : 0.0; };
  for (const auto& a : cp)
    for (const auto& b : cs)
      for (const auto& c : ci) {
        if (a.first != b.first + c.first) continue;
        const int sp = a.second, ss = -b.second, si = -c.second;
        const double tens =
            chi.chi1_um_per_v * (dot(sp, ss) * projx(si) +
                                 dot(sp, si) * projx(ss) +
                                 dot(ss, si) * projx(sp)) +
            dev * projx(sp) * projx(ss) * projx(si);
        if (tens != 0.0) return true;
      }
  return false;
}

inline std::string channel_text(const ChannelSet& cs) {
  std::string out;
  for (const auto& [harm, pol] : cs) {
    out += std::to_string(harm);
    out += pol > 0 ? "+ " : pol < 0 ? "- " : "z ";
  }
  return out;
}

}  // namespace spdcdetail

// ---------------------------------------------------------- main pipeline

inline SpectrumResult compute_spectrum(
    const RadialProfile& prof, const PumpSpec& pump, const GratingSpec& grating,
    const Chi2Spec& chi, const ScanSpec& scan = {},
    const std::vector<ProcessSelection>& forced = {},
    const SolverOptions& opt_in = {}) {
  pump.validate();
  grating.validate();
  chi.validate();
  scan.validate();

  SpectrumResult res;
  res.pump = pump;
  res.grating = grating;
  res.chi = chi;
  res.scan = scan;
  res.omega_p = omega_rad_per_s(pump.lambda_um);
  SolverOptions opt = opt_in;
  opt.warnings = &res.warnings;

  if (std::abs(chi.deviation_um_per_v()) > 1e-3 * chi.chi1_um_per_v)
    res.warnings.push_back(
        "chi_xxx deviates from 3 chi1; |dl|=3 conversion channels open");

  const double wp = res.omega_p;
  const double w_s_lo = omega_rad_per_s(scan.lambda_hi_um);
  const double w_s_hi = omega_rad_per_s(scan.lambda_lo_um);
  if (!(wp > w_s_hi))
    throw ConfigError("pump frequency must exceed the scan band");
  const double lam_i_min = lambda_um_of_omega(wp - w_s_lo);
  const double lam_i_max = lambda_um_of_omega(wp - w_s_hi);

  // ---- candidate families, discovered where guidance is strongest
  const double pad = 0.01;
  const double lam_enum = std::min(scan.lambda_lo_um, lam_i_min);
  const double lam_far = std::max(scan.lambda_hi_um, lam_i_max);
  struct Key {
    ModeFamily family;
    int n, m;
    bool operator<(const Key& o) const {
      return std::tie(family, n, m) < std::tie(o.family, o.n, o.m);
    }
  };
  std::vector<Key> keys;
  {
    auto ep = build_profile(prof, lam_enum);
    for (const auto& md : find_all_modes(ep, scan.max_azimuthal, opt))
      keys.push_back({md.family, md.n, md.m});
  }
  if (keys.empty())
    throw ComputationError("no guided modes in the scan band");

  std::map<Key, DispersionBranch> branch;
  for (const auto& k : keys) {
    try {
      branch.emplace(k, track_branch(prof, k.family, k.n, k.m,
                                     lam_enum - pad, lam_far + pad,
                                     scan.branch_points, opt));
    } catch (const ComputationError&) {
      res.warnings.push_back("family " + family_name(k.family) +
                             std::to_string(k.n) + std::to_string(k.m) +
                             " barely guided; excluded from the scan");
    }
  }

  // ---- pump modes at the central frequency
  auto ep_p = build_profile(prof, pump.lambda_um);
  struct PumpCtx {
    PumpComponent comp;
    OamMode om;
    double beta_p;
    std::optional<DispersionBranch> br;
  };
  std::vector<PumpCtx> pctx;
  for (const auto& c : pump.components) {
    if (c.power_fraction == 0.0) continue;
    const Mode* found = nullptr;
    std::vector<Mode> mods = find_modes(ep_p, c.mode.n, opt);
    for (const auto& md : mods)
      if (md.family == c.mode.family && md.m == c.mode.m) found = &md;
    if (!found)
      throw ConfigError("pump mode " + c.mode.str() +
                        " is not guided at the pump wavelength");
    PumpCtx ctx{c, make_oam_mode(*found, c.mode.variant), found->beta, {}};
    if (pump.shape == PumpSpec::Shape::Gaussian) {
      const double w_lo = wp - 5.0 * pump.sigma_rad_per_s;
      const double w_hi = wp + 5.0 * pump.sigma_rad_per_s;
      ctx.br = track_branch(prof, c.mode.family, c.mode.n, c.mode.m,
                            lambda_um_of_omega(w_hi) - 1e-3,
                            lambda_um_of_omega(w_lo) + 1e-3, 33, opt);
    }
    pctx.push_back(std::move(ctx));
  }

  // Gaussian quadrature over the pump line: Simpson nodes weighted by the
  // normalized spectral density over +-4 sigma.
  std::vector<double> g_off, g_wgt;
  if (pump.shape == PumpSpec::Shape::Gaussian) {
    const int nq = pump.spectral_points;
    const double span = 4.0 * pump.sigma_rad_per_s;
    double norm = 0.0;
    for (int q = 0; q < nq; ++q) {
      const double x = -span + 2.0 * span * q / (nq - 1);
      double w = (q == 0 || q == nq - 1) ? 1.0 : (q % 2 ? 4.0 : 2.0);
      w *= std::exp(-x * x / (2.0 * pump.sigma_rad_per_s *
                              pump.sigma_rad_per_s));
      g_off.push_back(x);
      g_wgt.push_back(w);
      norm += w;
    }
    for (auto& w : g_wgt) w /= norm;
    res.warnings.push_back(
        "Gaussian pump: overlap integrals evaluated at the line center; "
        "correlation window uses the central-frequency kernel");
  }

  // ---- enumerate processes
  std::vector<OamModeSpec> specs;
  for (const auto& [k, br] : branch) {
    (void)br;
    OamModeSpec s{k.family, k.n, k.m, Variant::Axial};
    if (s.hybrid()) {
      s.variant = Variant::R;
      specs.push_back(s);
      s.variant = Variant::L;
      specs.push_back(s);
    } else {
      specs.push_back(s);
    }
  }
  spdcdetail::ChannelSet cp_any;
  for (const auto& ctx : pctx)
    for (const auto& ch : ctx.comp.mode.channel_set()) cp_any.push_back(ch);

  struct PairPlan {
    OamModeSpec s, i;
    bool allowed;
    std::string note;
  };
  std::vector<PairPlan> plan;
  if (forced.empty()) {
    std::size_t skipped = 0;
    for (const auto& s : specs)
      for (const auto& i : specs) {
        if (spdcdetail::charge_balanced(cp_any, s.channel_set(),
                                        i.channel_set(), chi))
          plan.push_back({s, i, true, ""});
        else
          ++skipped;
      }
    if (skipped)
      res.warnings.push_back(std::to_string(skipped) +
                             " mode pairs dropped by charge balance");
  } else {
    for (const auto& f : forced) {
      PairPlan p{f.signal, f.idler, true, ""};
      if (!spdcdetail::charge_balanced(cp_any, f.signal.channel_set(),
                                       f.idler.channel_set(), chi)) {
        p.allowed = false;
        p.note = "charge balance violated: pump channels { " +
                 spdcdetail::channel_text(cp_any) + "}, signal { " +
                 spdcdetail::channel_text(f.signal.channel_set()) +
                 "}, idler { " +
                 spdcdetail::channel_text(f.idler.channel_set()) + "}";
      }
      plan.push_back(std::move(p));
    }
  }

  // ---- coarse overlap knots, uniform in frequency across the band
  const int nc = scan.coarse_points;
  std::vector<double> wknot(nc);
  for (int k = 0; k < nc; ++k)
    wknot[k] = w_s_lo + (w_s_hi - w_s_lo) * k / (nc - 1);

  auto key_of = [](const OamModeSpec& s) {
    return Key{s.family, s.n, s.m};
  };
  std::map<Key, std::vector<std::optional<Mode>>> base_s, base_i;
  for (const auto& p : plan) {
    base_s.emplace(key_of(p.s), std::vector<std::optional<Mode>>(nc));
    base_i.emplace(key_of(p.i), std::vector<std::optional<Mode>>(nc));
  }
  for (int k = 0; k < nc; ++k) {
    const double ws = wknot[k];
    const double wi = wp - ws;
    std::optional<EvaluatedProfile> ep_s, ep_i;
    auto solve_into = [&](std::map<Key, std::vector<std::optional<Mode>>>& dst,
                          double w, std::optional<EvaluatedProfile>& ep) {
      for (auto& [key, col] : dst) {
        auto it = branch.find(key);
        if (it == branch.end() || !it->second.covers_omega(w)) continue;
        if (!ep) ep = build_profile(prof, lambda_um_of_omega(w));
        const double guess = it->second.beta_at(w);
        const double b = find_root_near(*ep, key.n, it->second.sub, guess,
                                        1e-6, opt);
        col[k] = finalize_mode(*ep, key.n, b, it->second.sub, opt);
      }
    };
    solve_into(base_s, ws, ep_s);
    solve_into(base_i, wi, ep_i);
  }

  const double kpref = eps0_F_per_um * std::sqrt(pump.power_w / (32.0 * pi));

  // ---- per-pair evaluators
  for (const auto& p : plan) {
    PairSpectrum ps;
    ps.signal = p.s;
    ps.idler = p.i;
    ps.label = p.s.str() + " + " + p.i.str();
    ps.allowed = p.allowed;
    ps.rule_note = p.note;

    spdcdetail::PairEvaluator ev;
    ev.grating = grating;
    ev.kpref = kpref;
    ev.omega_p = wp;
    auto its = branch.find(key_of(p.s));
    auto iti = branch.find(key_of(p.i));
    if (its == branch.end() || iti == branch.end()) {
      res.warnings.push_back("pair " + ps.label +
                             " skipped: family not guided in band");
      continue;
    }
    ev.sig = its->second;
    ev.idl = iti->second;
    ev.gaussian = pump.shape == PumpSpec::Shape::Gaussian;
    ev.gauss_offset = g_off;
    ev.gauss_weight = g_wgt;

    const auto& col_s = base_s[key_of(p.s)];
    const auto& col_i = base_i[key_of(p.i)];
    bool thin = false;
    for (const auto& ctx : pctx) {
      spdcdetail::PairEvaluator::Comp comp;
      comp.amp = std::sqrt(ctx.comp.power_fraction) *
                 std::exp(iu * ctx.comp.phase_rad);
      comp.beta_p = ctx.beta_p;
      comp.pump_branch = ctx.br;
      std::vector<double> kw, kre, kim;
      for (int k = 0; k < nc; ++k) {
        if (!col_s[k] || !col_i[k]) continue;
        const OamMode ms = make_oam_mode(*col_s[k], p.s.variant);
        const OamMode mi = make_oam_mode(*col_i[k], p.i.variant);
        const cplx S =
            scan.full_2d_overlap
                ? transverse_overlap(ctx.om, ms, mi, chi, scan.theta_points,
                                     scan.radial_points)
                : transverse_overlap_channels(ctx.om, ms, mi, chi,
                                              scan.radial_points);
        kw.push_back(wknot[k]);
        kre.push_back(S.real());
        kim.push_back(S.imag());
      }
      if (kw.size() < 4) {
        thin = true;
        break;
      }
      comp.w_lo = kw.front();
      comp.w_hi = kw.back();
      comp.s_re = CubicSpline(kw, kre);
      comp.s_im = CubicSpline(std::move(kw), std::move(kim));
      ev.comps.push_back(std::move(comp));
    }
    if (thin) {
      res.warnings.push_back("pair " + ps.label +
                             " skipped: almost no shared guided band");
      continue;
    }
    res.pairs.push_back(std::move(ps));
    res.evals.push_back(std::move(ev));
  }

  // ---- fine grid
  res.lambda_um.resize(scan.points);
  for (int k = 0; k < scan.points; ++k)
    res.lambda_um[k] = scan.lambda_lo_um +
                       (scan.lambda_hi_um - scan.lambda_lo_um) * k /
                           (scan.points - 1);
  for (std::size_t pidx = 0; pidx < res.pairs.size(); ++pidx) {
    auto& ps = res.pairs[pidx];
    const auto& ev = res.evals[pidx];
    std::size_t k = 0;
    while (k < res.lambda_um.size() &&
           !ev.covers(omega_rad_per_s(res.lambda_um[k])))
      ++k;
    ps.k_lo = k;
    while (k < res.lambda_um.size() &&
           ev.covers(omega_rad_per_s(res.lambda_um[k]))) {
      const double w = omega_rad_per_s(res.lambda_um[k]);
      ps.amplitude.push_back(ev.amplitude(w));
      ps.density.push_back(ev.density(w));
      ps.dbeta.push_back(ev.dbeta_first(w));
      ++k;
    }
    ps.k_hi = k;
    if (ps.allowed && ps.k_hi == ps.k_lo)
      res.warnings.push_back("pair " + ps.label +
                             " has no coverage inside the scan band");
  }

  // ---- per-signal-label densities on the fine grid
  for (const auto& ps : res.pairs) {
    auto& col = res.branch_density[ps.signal.str()];
    if (col.empty()) col.assign(res.lambda_um.size(), 0.0);
    for (std::size_t k = ps.k_lo; k < ps.k_hi; ++k)
      col[k] += ps.density[k - ps.k_lo];
  }

  // ---- process groups and their refined peaks
  std::map<std::string, std::size_t> gidx;
  for (std::size_t pidx = 0; pidx < res.pairs.size(); ++pidx) {
    const auto& ps = res.pairs[pidx];
    const std::string glabel =
        ps.signal.str() + " + " + family_name(ps.idler.family) +
        std::to_string(ps.idler.n) + std::to_string(ps.idler.m);
    auto it = gidx.find(glabel);
    if (it == gidx.end()) {
      ProcessGroup g;
      g.signal = ps.signal;
      g.idler_family = ps.idler.family;
      g.idler_n = ps.idler.n;
      g.idler_m = ps.idler.m;
      g.label = glabel;
      it = gidx.emplace(glabel, res.groups.size()).first;
      res.groups.push_back(std::move(g));
    }
    res.groups[it->second].pair_index.push_back(pidx);
  }

  for (auto& g : res.groups) {
    // coarse peak location from the fine grid
    double best = 0.0;
    std::size_t kbest = 0;
    for (const std::size_t pidx : g.pair_index) {
      const auto& ps = res.pairs[pidx];
      for (std::size_t k = ps.k_lo; k < ps.k_hi; ++k) {
        double d = 0.0;
        for (const std::size_t q : g.pair_index) {
          const auto& po = res.pairs[q];
          if (k >= po.k_lo && k < po.k_hi) d += po.density[k - po.k_lo];
        }
        if (d > best) {
          best = d;
          kbest = k;
        }
      }
      break;  // one sweep over the union suffices; members share the grid
    }
    if (best <= 0.0) continue;
    std::vector<const spdcdetail::PairEvaluator*> evs;
    for (const std::size_t pidx : g.pair_index) evs.push_back(&res.evals[pidx]);
    const double fine_step =
        res.lambda_um.size() > 1 ? res.lambda_um[1] - res.lambda_um[0] : 1e-4;
    auto p1 = spdcdetail::refine_pass(evs, res.lambda_um[kbest],
                                      4.0 * fine_step, 6.0, 20);
    if (!p1.ok) continue;
    auto p2 = spdcdetail::refine_pass(evs, p1.lambda_peak_um, p1.fwhm_um, 12.0,
                                      scan.refine_steps_per_fwhm);
    if (!p2.ok) continue;
    g.has_peak = true;
    g.peak_lambda_um = p2.lambda_peak_um;
    g.peak_density = p2.density_peak;
    g.fwhm_nm = p2.fwhm_um * 1e3;
    g.lambda_um = std::move(p2.lambda_um);
    g.omega = std::move(p2.omega);
    g.density = std::move(p2.density);
    g.member_amplitude = std::move(p2.member_amplitude);
  }

  double best = -1.0;
  for (std::size_t gi = 0; gi < res.groups.size(); ++gi)
    if (res.groups[gi].has_peak && res.groups[gi].peak_density > best) {
      best = res.groups[gi].peak_density;
      res.dominant_group = gi;
    }
  return res;
}

// ------------------------------------------------------------------ rates

// Trapezoid in frequency over one group's pairs; band in signal wavelength.
inline double integrated_rate(const SpectrumResult& res, std::size_t group_i,
                              double lambda_lo_um, double lambda_hi_um) {
  if (group_i >= res.groups.size())
    throw ConfigError("integrated_rate: no such group");
  const auto& g = res.groups[group_i];
  const double w_hi = omega_rad_per_s(lambda_lo_um);
  const double w_lo = omega_rad_per_s(lambda_hi_um);
  double step;
  if (g.has_peak) {
    const double fwhm_w = g.fwhm_nm * 1e-3 * two_pi * c_um_per_s /
                          (g.peak_lambda_um * g.peak_lambda_um);
    step = fwhm_w / 80.0;
  } else {
    step = (w_hi - w_lo) / 4000.0;
  }
  // floor keeps the trapezoid error far below the symmetry invariants
  const int npts = std::clamp(
      static_cast<int>(std::ceil((w_hi - w_lo) / step)) + 1, 20001, 400001);
  double acc = 0.0;
  for (const std::size_t pidx : g.pair_index) {
    const auto& ev = res.evals[pidx];
    double prev = 0.0;
    bool have_prev = false;
    double wprev = 0.0;
    for (int k = 0; k < npts; ++k) {
      const double w = w_lo + (w_hi - w_lo) * k / (npts - 1);
      const double d = ev.covers(w) ? ev.density(w) : 0.0;
      if (have_prev) acc += 0.5 * (prev + d) * (w - wprev);
      prev = d;
      wprev = w;
      have_prev = true;
    }
  }
  return acc;
}

struct SeparationEntry {
  std::string process;
  double ratio = 0.0;  // its density over the design density, both at the peak
};

struct RateReport {
  std::string process;
  double peak_lambda_um = 0.0;
  double peak_density = 0.0;
  double fwhm_nm = 0.0;
  double band_lo_um = 0.0, band_hi_um = 0.0;
  bool default_band = true;  // peak +- 10 FWHM unless overridden
  double pairs_per_s = 0.0;
  double efficiency = 0.0;  // pairs per pump photon
  double correlation_fwhm_s = 0.0;
  std::vector<SeparationEntry> separation;
  std::vector<std::string> warnings;
};

// FWHM in delay of the pair arrival-time correlation. Each inner vector is
// one orthogonal idler channel sampled on the shared ascending frequency
// grid; channels add in intensity.
inline double correlation_fwhm_s(
    const std::vector<double>& omega,
    const std::vector<std::vector<cplx>>& channels) {
  const std::size_t n = omega.size();
  if (n < 16) throw ConfigError("correlation needs >= 16 spectral samples");
  if (channels.empty()) throw ConfigError("correlation needs >= 1 channel");
  for (const auto& c : channels)
    if (c.size() != n)
      throw ConfigError("correlation channel length mismatch");
  double dw_max = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!(omega[k + 1] > omega[k]))
      throw ConfigError("correlation grid must ascend");
    dw_max = std::max(dw_max, omega[k + 1] - omega[k]);
  }
  std::vector<double> wgt(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = k ? omega[k] - omega[k - 1] : 0.0;
    const double r = k + 1 < n ? omega[k + 1] - omega[k] : 0.0;
    wgt[k] = 0.5 * (l + r);
  }
  const double w0 = omega[n / 2];
  auto G = [&](double tau) {
    double g = 0.0;
    for (const auto& c : channels) {
      cplx a{};
      for (std::size_t k = 0; k < n; ++k)
        a += wgt[k] * c[k] *
             std::exp(cplx{0.0, -(omega[k] - w0) * tau});
      g += std::norm(a);
    }
    return g;
  };

  const double tau_max = pi / dw_max;  // alias-free half range
  const int nt = 4001;
  double gbest = -1.0, tbest = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = -tau_max + 2.0 * tau_max * k / (nt - 1);
    const double g = G(t);
    if (g > gbest) {
      gbest = g;
      tbest = t;
    }
  }
  const double coarse = 2.0 * tau_max / (nt - 1);
  // second pass when the window is much narrower than the coarse step grid
  double span = 64.0 * coarse;
  for (int pass = 0; pass < 2; ++pass) {
    const int nn = 1601;
    double gb = -1.0, tb = tbest;
    for (int k = 0; k < nn; ++k) {
      const double t = tbest - span + 2.0 * span * k / (nn - 1);
      const double g = G(t);
      if (g > gb) {
        gb = g;
        tb = t;
      }
    }
    gbest = gb;
    tbest = tb;
    span /= 16.0;
  }
  const double half = gbest / 2.0;
  auto bisect = [&](double a, double b) {
    // G(a) >= half > G(b)
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (a + b);
      (G(mid) >= half ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };
  auto hunt = [&](double dir) -> double {
    double step = coarse;
    double a = tbest, b = tbest + dir * step;
    while (G(b) >= half) {
      a = b;
      step *= 1.5;
      b = tbest + dir * (std::abs(b - tbest) + step);
      if (std::abs(b) > 4.0 * tau_max)
        throw ResolutionError(
            "correlation window not resolved inside the alias-free range; "
            "use a finer frequency grid");
    }
    return bisect(a, b);
  };
  const double lo = hunt(-1.0), hi = hunt(+1.0);
  const double fwhm = hi - lo;
  if (dw_max * fwhm >= 0.1)
    throw ResolutionError(
        "correlation grid too coarse: step " + std::to_string(dw_max) +
        " rad/s, need <= " + std::to_string(0.1 / fwhm) +
        " rad/s for a " + std::to_string(fwhm * 1e12) + " ps window");
  return fwhm;
}

inline RateReport pair_rate_report(
    const SpectrumResult& res,
    std::optional<std::pair<double, double>> band_um = {}) {
  const ProcessGroup& g = res.dominant();
  RateReport rep;
  rep.process = g.label;
  rep.peak_lambda_um = g.peak_lambda_um;
  rep.peak_density = g.peak_density;
  rep.fwhm_nm = g.fwhm_nm;
  const double w = g.fwhm_nm * 1e-3;
  if (band_um) {
    rep.band_lo_um = band_um->first;
    rep.band_hi_um = band_um->second;
    rep.default_band = false;
    if (!(rep.band_hi_um > rep.band_lo_um))
      throw ConfigError("rate band must have hi > lo");
  } else {
    rep.band_lo_um = g.peak_lambda_um - 10.0 * w;
    rep.band_hi_um = g.peak_lambda_um + 10.0 * w;
  }

  const std::size_t gi = res.dominant_group;
  rep.pairs_per_s = integrated_rate(res, gi, rep.band_lo_um, rep.band_hi_um);
  rep.efficiency =
      rep.pairs_per_s * hbar_J_s * res.omega_p / res.pump.power_w;
  if (rep.efficiency > 1e-3)
    rep.warnings.push_back(
        "conversion above 1e-3 pairs per pump photon; the perturbative "
        "single-pair picture is strained");

  // unresolved spectral tails outside the band, estimated from the
  // asymptotic fall-off of the grating lobe
  {
    const auto& ev = res.evals[g.pair_index.front()];
    const double L = res.grating.length_um;
    const double db0 = ev.dbeta_first(omega_rad_per_s(g.peak_lambda_um));
    auto tail = [&](double lam_edge) {
      const double wq = omega_rad_per_s(lam_edge);
      if (!ev.covers(wq)) return 0.0;  // edge beyond coverage: unknown, skip
      const double x = std::abs(ev.dbeta_first(wq) - db0) * L / 2.0;
      return x > 2.0 ? 1.0 / (pi * x) * 0.5 : 0.25;
    };
    const double missing = tail(rep.band_lo_um) + tail(rep.band_hi_um);
    if (missing > 0.01)
      rep.warnings.push_back(
          "band truncates an estimated " + std::to_string(missing * 1e2) +
          "% of the peak; widen the band for absolute rates");
  }

  // correlation from the refined window, channels = idler variants; the
  // window is stored wavelength-ascending, so flip to ascending frequency
  {
    std::vector<double> w(g.omega.rbegin(), g.omega.rend());
    std::vector<std::vector<cplx>> ch;
    for (const auto& a : g.member_amplitude)
      ch.emplace_back(a.rbegin(), a.rend());
    rep.correlation_fwhm_s = correlation_fwhm_s(w, ch);
  }

  // competing processes at the design peak
  const double wpk = omega_rad_per_s(g.peak_lambda_um);
  for (std::size_t go = 0; go < res.groups.size(); ++go) {
    if (go == gi) continue;
    const auto& other = res.groups[go];
    double d = 0.0;
    for (const std::size_t pidx : other.pair_index) {
      const auto& ev = res.evals[pidx];
      if (ev.covers(wpk)) d += ev.density(wpk);
    }
    rep.separation.push_back({other.label, d / g.peak_density});
  }
  std::sort(rep.separation.begin(), rep.separation.end(),
            [](const SeparationEntry& a, const SeparationEntry& b) {
              return a.ratio > b.ratio;
            });
  return rep;
}

// --------------------------------------------------- selection-rule sweep

struct TripleStrength {
  std::string pump, signal, idler;
  bool allowed = false;
  double abs_I = 0.0;  // |S Zbar| at the grating mismatch of the triple
};

// Every OAM mode triple with |l| <= max_abs_l at (pump, signal, idler)
// wavelengths; the angular integral is done by honest 2D quadrature so the
// charge-balance zeros are numerical, not structural.
inline std::vector<TripleStrength> selection_rule_scan(
    const RadialProfile& prof, double lambda_p_um, double lambda_s_um,
    const Chi2Spec& chi, const GratingSpec& grating, int max_abs_l = 2,
    int theta_points = 256, int radial_points = 801,
    const SolverOptions& opt = {}) {
  const double wp = omega_rad_per_s(lambda_p_um);
  const double ws = omega_rad_per_s(lambda_s_um);
  if (!(wp > ws)) throw ConfigError("pump must be bluer than the signal");
  const double lambda_i_um = lambda_um_of_omega(wp - ws);

  struct Entry {
    OamMode om;
    spdcdetail::ChannelSet chs;
    std::string name;
  };
  auto collect = [&](double lam) {
    std::vector<Entry> out;
    auto ep = build_profile(prof, lam);
    for (const auto& md : find_all_modes(ep, max_abs_l + 1, opt)) {
      OamModeSpec s{md.family, md.n, md.m, Variant::Axial};
      std::vector<Variant> vars;
      if (s.hybrid()) vars = {Variant::R, Variant::L};
      else vars = {Variant::Axial};
      for (Variant v : vars) {
        s.variant = v;
        int lmax = 0;
        for (int l : s.l_set()) lmax = std::max(lmax, std::abs(l));
        if (lmax > max_abs_l) continue;
        out.push_back({make_oam_mode(md, v), s.channel_set(), s.str()});
      }
    }
    return out;
  };
  const auto P = collect(lambda_p_um);
  const auto S = collect(lambda_s_um);
  const auto I = collect(lambda_i_um);

  std::vector<TripleStrength> out;
  for (const auto& p : P)
    for (const auto& s : S)
      for (const auto& i : I) {
        TripleStrength t;
        t.pump = p.name;
        t.signal = s.name;
        t.idler = i.name;
        t.allowed = spdcdetail::charge_balanced(p.chs, s.chs, i.chs, chi);
        const cplx ov = transverse_overlap(p.om, s.om, i.om, chi,
                                           theta_points, radial_points);
        const double db = p.om.base.beta - s.om.base.beta - i.om.base.beta;
        t.abs_I = std::abs(ov * grating_amplitude(grating, db));
        out.push_back(std::move(t));
      }
  return out;
}

}  // namespace ringspdc
