#pragma once
#include <array>
#include <cmath>
#include <vector>

#include "ringspdc/oam.hpp"

// Transverse interaction integral S = integral chi2 : e_p e_s* e_i* dA for
// an x-poled tensor
//   chi_jkl = chi1 (d_jk x_l + d_jl x_k + d_kl x_j)
//           + (chi_xxx - 3 chi1) x_j x_k x_l,
// which is fully symmetric, so the same S serves signal and idler coupled
// equations. Fields are the unit-flux profiles in V/um, chi in um/V, areas
// in um^2, so S carries V^2. Two code paths: an honest 2D quadrature and a
// channel factorization doing the angular integral exactly.

namespace ringspdc {

struct Chi2Spec {
  double chi1_um_per_v = 0.021e-6;     // the xyy-type element
  double chi_xxx_um_per_v = 0.063e-6;  // on-axis element

  // x x x deviation from the isotropic-part prediction 3 chi1
  double deviation_um_per_v() const {
    return chi_xxx_um_per_v - 3.0 * chi1_um_per_v;
  }
  void validate() const {
    if (!(chi1_um_per_v > 0.0)) throw ConfigError("chi1 must be > 0");
  }
};

namespace ovdetail {

// chi2 : a conj(b) conj(c) at one point, Cartesian components
inline cplx contract_cart(const Chi2Spec& chi, const std::array<cplx, 3>& a,
                          const std::array<cplx, 3>& b,
                          const std::array<cplx, 3>& c) {
  const cplx ab = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  const cplx ac = a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
  const cplx bc = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
  return chi.chi1_um_per_v * (ab * c[0] + ac * b[0] + bc * a[0]) +
         chi.deviation_um_per_v() * a[0] * b[0] * c[0];
}

inline std::array<cplx, 3> to_cart(const CylField& F, double ct, double st,
                                   bool conj) {
  const cplx er = conj ? std::conj(F.e_r) : F.e_r;
  const cplx et = conj ? std::conj(F.e_th) : F.e_th;
  const cplx ez = conj ? std::conj(F.e_z) : F.e_z;
  return {er * ct - et * st, er * st + et * ct, ez};
}

inline void check_same_geometry(const OamMode& a, const OamMode& b) {
  if (a.base.regions.size() != b.base.regions.size())
    throw ComputationError("overlap requires modes on one layer geometry");
  for (std::size_t k = 0; k < a.base.regions.size(); ++k)
    if (std::abs(a.base.regions[k].r_hi_um - b.base.regions[k].r_hi_um) >
        1e-12)
      throw ComputationError("overlap requires modes on one layer geometry");
}

}  // namespace ovdetail

// Plain 2D quadrature: trapezoid in theta (exact for the few azimuthal
// harmonics present), boundary-aligned composite rule radially.
inline cplx transverse_overlap(const OamMode& pump, const OamMode& signal,
                               const OamMode& idler, const Chi2Spec& chi,
                               int theta_points = 256,
                               int radial_points = 1201) {
  chi.validate();
  ovdetail::check_same_geometry(pump, signal);
  ovdetail::check_same_geometry(pump, idler);
  const RadialGrid grid = make_radial_grid(pump.base.regions, radial_points);
  std::vector<double> ct(theta_points), st(theta_points);
  for (int t = 0; t < theta_points; ++t) {
    ct[t] = std::cos(two_pi * t / theta_points);
    st[t] = std::sin(two_pi * t / theta_points);
  }
  cplx acc{};
  for (const auto& seg : grid.segments) {
    for (std::size_t i = 0; i < seg.r.size(); ++i) {
      const double r = seg.r[i];
      const auto sp = pump.base.eval_in_region(r, seg.region);
      const auto ss = signal.base.eval_in_region(r, seg.region);
      const auto si = idler.base.eval_in_region(r, seg.region);
      cplx ring{};
      for (int t = 0; t < theta_points; ++t) {
        const double th = two_pi * t / theta_points;
        const auto a =
            ovdetail::to_cart(pump.field_from_sample(sp, th), ct[t], st[t], false);
        const auto b =
            ovdetail::to_cart(signal.field_from_sample(ss, th), ct[t], st[t], true);
        const auto c =
            ovdetail::to_cart(idler.field_from_sample(si, th), ct[t], st[t], true);
        ring += ovdetail::contract_cart(chi, a, b, c);
      }
      acc += seg.w[i] * r * ring * (two_pi / theta_points);
    }
  }
  return acc;
}

// Channel factorization: expand each field over circular-polarization
// channels amp f(r) e^{i h theta} e_pol, do the theta integral as an exact
// integer selection, and quadrature only radially. In this basis the plain
// dot product pairs opposite transverse polarizations and z with z, and the
// x-projection is 1/sqrt2 on either transverse channel.
inline cplx transverse_overlap_channels(const OamMode& pump,
                                        const OamMode& signal,
                                        const OamMode& idler,
                                        const Chi2Spec& chi,
                                        int radial_points = 1201) {
  chi.validate();
  ovdetail::check_same_geometry(pump, signal);
  ovdetail::check_same_geometry(pump, idler);
  const RadialGrid grid = make_radial_grid(pump.base.regions, radial_points);

  struct Resolved {
    cplx amp;
    int harm;
    int pol;
    std::vector<double> f;  // radial factor on the flattened grid
  };
  std::vector<double> rw, rr;  // flattened weights and radii
  std::vector<std::size_t> reg;
  for (const auto& seg : grid.segments)
    for (std::size_t i = 0; i < seg.r.size(); ++i) {
      rw.push_back(seg.w[i]);
      rr.push_back(seg.r[i]);
      reg.push_back(seg.region);
    }

  auto resolve = [&](const OamMode& om, bool conj) {
    std::vector<ProfileSample> samp(rr.size());
    for (std::size_t k = 0; k < rr.size(); ++k)
      samp[k] = om.base.eval_in_region(rr[k], reg[k]);
    std::vector<Resolved> out;
    for (const CircChannel& c : e_channels(om)) {
      Resolved rc;
      rc.amp = conj ? std::conj(c.amp) : c.amp;
      rc.harm = conj ? -c.harmonic : c.harmonic;
      rc.pol = conj ? -c.pol : c.pol;
      rc.f.resize(rr.size());
      for (std::size_t k = 0; k < rr.size(); ++k)
        rc.f[k] = channel_radial(c, samp[k]);
      out.push_back(std::move(rc));
    }
    return out;
  };
  const auto P = resolve(pump, false);
  const auto S = resolve(signal, true);
  const auto I = resolve(idler, true);

  auto dot = [](int a, int b) { return a == -b ? 1.0 : 0.0; };
  auto projx = [](int a) { return a != 0 ? 1.0 / std::sqrt(2.0) : 0.0; };

  cplx acc{};
  for (const auto& p : P)
    for (const auto& s : S)
      for (const auto& q : I) {
        if (p.harm + s.harm + q.harm != 0) continue;
        const double tens =
            chi.chi1_um_per_v * (dot(p.pol, s.pol) * projx(q.pol) +
                                 dot(p.pol, q.pol) * projx(s.pol) +
                                 dot(s.pol, q.pol) * projx(p.pol)) +
            chi.deviation_um_per_v() * projx(p.pol) * projx(s.pol) *
                projx(q.pol);
        if (tens == 0.0) continue;
        double rad = 0.0;
        for (std::size_t k = 0; k < rr.size(); ++k)
          rad += rw[k] * rr[k] * p.f[k] * s.f[k] * q.f[k];
        acc += p.amp * s.amp * q.amp * tens * rad;
      }
  return two_pi * acc;
}

}  // namespace ringspdc
