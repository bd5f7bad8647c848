#pragma once
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ringspdc/constants.hpp"
#include "ringspdc/errors.hpp"
#include "ringspdc/mode_solver.hpp"

// Physical mode variants built from the solver's real radial profiles.  A
// variant is a weighted sum of signed-harmonic members
//   e = (i s a_r, a_th, f) e^{i j theta},  h = (b_r, i s b_th, -i s g) e^{i j theta}
// with j = +-n and s = sign(j) (+ for j = 0); the j = -n member equals the
// conjugate of the j = +n member, so one stored profile set serves both.
// Circular (R/L) variants carry definite orbital angular momentum on their
// dominant transverse circular-polarization component:
//   HE: l = handedness (n - 1),  EH: l = handedness (n + 1),  TE/TM: l = 0.

namespace ringspdc {

enum class Variant { R, L, Even, Odd, Axial };

struct CylField {
  cplx e_r{}, e_th{}, e_z{};
  cplx h_r{}, h_th{}, h_z{};
};

namespace oamdetail {

inline CylField assemble(const ProfileSample& p, int sign, int n,
                         double theta) {
  const double s = sign < 0 ? -1.0 : 1.0;
  const double j = s * n;
  const cplx ph = std::exp(iu * (j * theta));
  CylField F;
  F.e_r = iu * s * p.a_r * ph;
  F.e_th = p.a_th * ph;
  F.e_z = p.f * ph;
  F.h_r = p.b_r * ph;
  F.h_th = iu * s * p.b_th * ph;
  F.h_z = -iu * s * p.g * ph;
  return F;
}

}  // namespace oamdetail

struct OamMode {
  Mode base;
  Variant variant = Variant::Axial;
  struct Member {
    cplx w;
    int sign;  // j = sign * base.n
  };
  std::vector<Member> members;
  int l = 0;  // orbital label; meaningful for R/L/Axial variants

  std::string label() const {
    switch (variant) {
      case Variant::R: return base.label() + "R";
      case Variant::L: return base.label() + "L";
      case Variant::Even: return base.label() + "e";
      case Variant::Odd: return base.label() + "o";
      case Variant::Axial: return base.label();
    }
    return base.label();
  }

  bool pure_harmonic() const { return members.size() == 1; }

  int j() const {
    if (!pure_harmonic())
      throw ComputationError("parity member carries two harmonics");
    return members[0].sign * base.n;
  }

  // Orbital content relevant for three-wave selection: circular hybrids
  // contribute {l}; TE/TM split evenly over {+1, -1}.
  std::vector<int> l_set() const {
    if (base.family == ModeFamily::TE || base.family == ModeFamily::TM)
      return {+1, -1};
    if (variant == Variant::R || variant == Variant::L) return {l};
    throw ComputationError("parity members have no single orbital label");
  }

  CylField field(double r_um, double theta) const {
    const auto p = base.eval(r_um);
    return field_from_sample(p, theta);
  }

  CylField field_from_sample(const ProfileSample& p, double theta) const {
    CylField acc;
    for (const auto& m : members) {
      const CylField F = oamdetail::assemble(p, m.sign, base.n, theta);
      acc.e_r += m.w * F.e_r;
      acc.e_th += m.w * F.e_th;
      acc.e_z += m.w * F.e_z;
      acc.h_r += m.w * F.h_r;
      acc.h_th += m.w * F.h_th;
      acc.h_z += m.w * F.h_z;
    }
    return acc;
  }
};

inline int orbital_label(ModeFamily fam, int n, int handedness) {
  switch (fam) {
    case ModeFamily::HE: return handedness * (n - 1);
    case ModeFamily::EH: return handedness * (n + 1);
    default: return 0;
  }
}

inline OamMode make_oam_mode(const Mode& base, Variant v) {
  OamMode om;
  om.base = base;
  om.variant = v;
  const bool axial =
      base.family == ModeFamily::TE || base.family == ModeFamily::TM;
  if (axial) {
    if (v != Variant::Axial)
      throw ComputationError("TE/TM modes have a single member; use Axial");
    om.members = {{1.0, +1}};
    om.l = 0;
    return om;
  }
  const double rt = 1.0 / std::sqrt(2.0);
  switch (v) {
    case Variant::R:
      om.members = {{1.0, +1}};
      om.l = orbital_label(base.family, base.n, +1);
      break;
    case Variant::L:
      om.members = {{1.0, -1}};
      om.l = orbital_label(base.family, base.n, -1);
      break;
    case Variant::Even:
      om.members = {{rt, +1}, {rt, -1}};
      break;
    case Variant::Odd:
      om.members = {{-iu * rt, +1}, {iu * rt, -1}};
      break;
    case Variant::Axial:
      throw ComputationError("hybrid modes need a handedness or parity");
  }
  return om;
}

// (even + i h odd)/sqrt(2); recovers the circular members exactly.
inline OamMode circular_combination(const OamMode& even, const OamMode& odd,
                                    int handedness) {
  if (even.variant != Variant::Even || odd.variant != Variant::Odd)
    throw ComputationError("circular_combination wants an even/odd pair");
  if (even.base.beta != odd.base.beta || even.base.n != odd.base.n)
    throw ComputationError("parity members belong to different modes");
  if (handedness != 1 && handedness != -1)
    throw ComputationError("handedness must be +1 or -1");
  const double rt = 1.0 / std::sqrt(2.0);
  OamMode om;
  om.base = even.base;
  om.variant = handedness > 0 ? Variant::R : Variant::L;
  om.l = orbital_label(om.base.family, om.base.n, handedness);
  // merge weighted members on common signs
  cplx wp{}, wm{};
  auto add = [&](const OamMode& src, cplx c) {
    for (const auto& m : src.members)
      (m.sign > 0 ? wp : wm) += c * m.w;
  };
  add(even, rt);
  add(odd, iu * static_cast<double>(handedness) * rt);
  if (std::abs(wp) > 1e-15) om.members.push_back({wp, +1});
  if (std::abs(wm) > 1e-15) om.members.push_back({wm, -1});
  return om;
}

inline OamMode conjugate_mode(const OamMode& om) {
  OamMode out = om;
  // for n = 0 the flipped sign keeps j = 0 but still conjugates the i
  // prefactors carried by s, which is exactly what conjugation needs
  for (auto& m : out.members) {
    m.w = std::conj(m.w);
    m.sign = -m.sign;
  }
  switch (om.variant) {
    case Variant::R: out.variant = Variant::L; break;
    case Variant::L: out.variant = Variant::R; break;
    default: break;
  }
  out.l = -om.l;
  if (om.base.family == ModeFamily::TE || om.base.family == ModeFamily::TM)
    out.l = 0;
  return out;
}

// Transverse circular-polarization radial amplitudes of one member:
//   c+ = i (s a_r - a_th)/sqrt(2) on harmonic j-1
//   c- = i (s a_r + a_th)/sqrt(2) on harmonic j+1
struct CircChannel {
  cplx amp;      // multiplies the radial bracket below
  int harmonic;  // azimuthal exponent
  int pol;       // +1, -1, or 0 (axial z)
  int sign;      // member sign; selects the radial bracket orientation
};

inline std::vector<CircChannel> e_channels(const OamMode& om) {
  std::vector<CircChannel> ch;
  const double rt = 1.0 / std::sqrt(2.0);
  for (const auto& m : om.members) {
    const int s = m.sign < 0 ? -1 : 1;
    const int j = s * om.base.n;
    ch.push_back({m.w * iu * rt, j - 1, +1, s});
    ch.push_back({m.w * iu * rt, j + 1, -1, s});
    ch.push_back({m.w, j, 0, s});
  }
  return ch;
}

// Radial factor of a channel at one profile sample.
inline double channel_radial(const CircChannel& c, const ProfileSample& p) {
  switch (c.pol) {
    case +1: return c.sign * p.a_r - p.a_th;
    case -1: return c.sign * p.a_r + p.a_th;
    default: return p.f;
  }
}

// Power split between the two transverse circular components.
inline void circular_powers(const OamMode& om, double& p_plus,
                            double& p_minus, int radial_points = 1201) {
  const RadialGrid grid = make_radial_grid(om.base.regions, radial_points);
  p_plus = p_minus = 0.0;
  for (const auto& m : om.members) {
    const double s = m.sign < 0 ? -1.0 : 1.0;
    const double w2 = std::norm(m.w);
    p_plus += w2 * integrate_radial(grid, [&](double r, std::size_t reg) {
      const auto p = om.base.eval_in_region(r, reg);
      const double v = s * p.a_r - p.a_th;
      return 0.5 * v * v * r;
    });
    p_minus += w2 * integrate_radial(grid, [&](double r, std::size_t reg) {
      const auto p = om.base.eval_in_region(r, reg);
      const double v = s * p.a_r + p.a_th;
      return 0.5 * v * v * r;
    });
  }
}

// Winding of the dominant transverse circular component, measured by
// sampling the assembled field on a ring and taking a discrete Fourier
// transform.  Near-equal components (TE/TM by symmetry) are refused.
inline int winding_number(const OamMode& om, int theta_points = 256) {
  double pp = 0.0, pm = 0.0;
  circular_powers(om, pp, pm);
  if (std::abs(pp - pm) < 0.01 * (pp + pm))
    throw ComputationError(
        "circular components within 1% of each other; winding undefined for " +
        om.label());
  const int pol = pp > pm ? +1 : -1;

  // ring of peak circular density
  const RadialGrid grid = make_radial_grid(om.base.regions, 601);
  double best_r = grid.segments[0].r[1];
  std::size_t best_reg = 0;
  double best = -1.0;
  for (const auto& seg : grid.segments) {
    for (double r : seg.r) {
      if (r <= 0.0) continue;
      const auto p = om.base.eval_in_region(r, seg.region);
      double dens = 0.0;
      for (const auto& m : om.members) {
        const double s = m.sign < 0 ? -1.0 : 1.0;
        const double v = pol > 0 ? s * p.a_r - p.a_th : s * p.a_r + p.a_th;
        dens += std::norm(m.w) * v * v;
      }
      if (dens > best) {
        best = dens;
        best_r = r;
        best_reg = seg.region;
      }
    }
  }

  const auto p = om.base.eval_in_region(best_r, best_reg);
  std::vector<cplx> ring(theta_points);
  for (int i = 0; i < theta_points; ++i) {
    const double th = two_pi * i / theta_points;
    const CylField F = om.field_from_sample(p, th);
    const cplx c = pol > 0
                       ? (F.e_r - iu * F.e_th) * std::exp(-iu * th) / std::sqrt(2.0)
                       : (F.e_r + iu * F.e_th) * std::exp(iu * th) / std::sqrt(2.0);
    ring[i] = c;
  }
  int best_bin = 0;
  double best_mag = -1.0;
  for (int m = -theta_points / 2; m < theta_points / 2; ++m) {
    cplx acc{};
    for (int i = 0; i < theta_points; ++i)
      acc += ring[i] * std::exp(-iu * (two_pi * m * i / theta_points));
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best_bin = m;
    }
  }
  return best_bin;
}

// Time-averaged axial power by plain two-dimensional quadrature; the honest
// version of the flux the solver normalizes radially.
inline double flux_2d(const OamMode& om, int theta_points = 256,
                      int radial_points = 1201) {
  const RadialGrid grid = make_radial_grid(om.base.regions, radial_points);
  double acc = 0.0;
  for (const auto& seg : grid.segments) {
    for (std::size_t i = 0; i < seg.r.size(); ++i) {
      const auto p = om.base.eval_in_region(seg.r[i], seg.region);
      double ring = 0.0;
      for (int t = 0; t < theta_points; ++t) {
        const double th = two_pi * t / theta_points;
        const CylField F = om.field_from_sample(p, th);
        ring += (F.e_r * std::conj(F.h_th) - F.e_th * std::conj(F.h_r)).real();
      }
      acc += seg.w[i] * seg.r[i] * ring * (two_pi / theta_points);
    }
  }
  return acc / (2.0 * vacuum_impedance_ohm);
}

// Biorthogonality product between arbitrary variants by 2D quadrature.
inline double cross_flux_2d(const OamMode& a, const OamMode& b,
                            int theta_points = 256,
                            int radial_points = 1201) {
  const RadialGrid grid = make_radial_grid(a.base.regions, radial_points);
  double acc = 0.0;
  for (const auto& seg : grid.segments) {
    for (std::size_t i = 0; i < seg.r.size(); ++i) {
      const auto pa = a.base.eval_in_region(seg.r[i], seg.region);
      const auto pb = b.base.eval_in_region(seg.r[i], seg.region);
      double ring = 0.0;
      for (int t = 0; t < theta_points; ++t) {
        const double th = two_pi * t / theta_points;
        const CylField Fa = a.field_from_sample(pa, th);
        const CylField Fb = b.field_from_sample(pb, th);
        ring += 0.5 * (Fa.e_r * std::conj(Fb.h_th) -
                       Fa.e_th * std::conj(Fb.h_r) +
                       std::conj(Fb.e_r) * Fa.h_th -
                       std::conj(Fb.e_th) * Fa.h_r)
                    .real();
      }
      acc += seg.w[i] * seg.r[i] * ring * (two_pi / theta_points);
    }
  }
  return acc / (2.0 * vacuum_impedance_ohm);
}

}  // namespace ringspdc
