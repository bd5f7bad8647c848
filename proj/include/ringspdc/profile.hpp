#pragma once
#include <algorithm>
#include <string>
#include <vector>

#include "ringspdc/constants.hpp"
#include "ringspdc/errors.hpp"
#include "ringspdc/material.hpp"

namespace ringspdc {

// Piecewise-constant radial layer stack.  Layers must tile [0, r_outer of the
// last layer] without gaps; everything beyond is the cladding material.
struct ProfileLayer {
  double r_inner_um = 0.0;
  double r_outer_um = 0.0;
  Material material;
};

struct RadialProfile {
  std::vector<ProfileLayer> layers;
  Material cladding;
  // Radius at which guided fields are taken as negligible for quadrature
  // purposes.  0 requests the default of three outer-layer radii.
  double domain_radius_um = 0.0;

  double outer_core_radius_um() const {
    return layers.empty() ? 0.0 : layers.back().r_outer_um;
  }

  void validate() const {
    if (layers.empty())
      throw ConfigError("profile: at least one layer is required");
    double prev = 0.0;
    for (const auto& l : layers) {
      if (l.r_inner_um != prev)
        throw ConfigError("profile: layers must be contiguous from r = 0; "
                          "layer starting at " + std::to_string(l.r_inner_um) +
                          " um does not touch " + std::to_string(prev) + " um");
      if (!(l.r_outer_um > l.r_inner_um))
        throw ConfigError("profile: layer radii must increase");
      prev = l.r_outer_um;
    }
    if (domain_radius_um != 0.0 && domain_radius_um <= prev)
      throw ConfigError("profile: domain radius must exceed the outer core");
  }

  double effective_domain_radius_um() const {
    return domain_radius_um != 0.0 ? domain_radius_um
                                   : 3.0 * outer_core_radius_um();
  }
};

// Dispersion collapsed at one wavelength; this is what the solver consumes.
struct EvaluatedProfile {
  double lambda_um = 0.0;
  double k0 = 0.0;                   // rad/um
  std::vector<double> r_bound_um;    // interior boundaries, ascending
  std::vector<double> eps;           // region permittivities, size bound+1
  double domain_radius_um = 0.0;

  std::size_t regions() const { return eps.size(); }

  double eps_at(double r_um) const {
    for (std::size_t i = 0; i < r_bound_um.size(); ++i)
      if (r_um <= r_bound_um[i]) return eps[i];
    return eps.back();
  }

  double eps_min() const {
    double m = eps.front();
    for (double e : eps) m = std::min(m, e);
    return m;
  }
  double eps_max() const {
    double m = eps.front();
    for (double e : eps) m = std::max(m, e);
    return m;
  }
};

inline EvaluatedProfile build_profile(const RadialProfile& p, double lambda_um) {
  p.validate();
  EvaluatedProfile ep;
  ep.lambda_um = lambda_um;
  ep.k0 = k0_rad_per_um(lambda_um);
  for (const auto& l : p.layers) {
    ep.r_bound_um.push_back(l.r_outer_um);
    ep.eps.push_back(l.material.permittivity(lambda_um));
  }
  ep.eps.push_back(p.cladding.permittivity(lambda_um));
  ep.domain_radius_um = p.effective_domain_radius_um();
  // Merge zero-contrast interior boundaries?  No: keep the stack as declared
  // so boundary-residual diagnostics see the geometry the user wrote.
  return ep;
}

// The ring geometry used throughout: cladding | raised ring | cladding.
inline RadialProfile ring_profile(const MaterialLibrary& lib, double r1_um,
                                  double r2_um,
                                  const std::string& ring_material,
                                  const std::string& clad_material,
                                  double domain_radius_um = 0.0) {
  if (!(r1_um > 0.0) || !(r2_um > r1_um))
    throw ConfigError("ring profile: need 0 < r1 < r2");
  RadialProfile p;
  p.layers.push_back({0.0, r1_um, lib.get(clad_material)});
  p.layers.push_back({r1_um, r2_um, lib.get(ring_material)});
  p.cladding = lib.get(clad_material);
  p.domain_radius_um = domain_radius_um;
  p.validate();
  return p;
}

}  // namespace ringspdc
