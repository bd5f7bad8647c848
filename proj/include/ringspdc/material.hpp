#pragma once
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ringspdc/errors.hpp"

namespace ringspdc {

// Sellmeier band all materials must cover.  Queries outside are rejected
// rather than extrapolated.
inline constexpr double material_lambda_min_um = 0.4;
inline constexpr double material_lambda_max_um = 2.0;

struct SellmeierTerm {
  double strength = 0.0;       // dimensionless B_k
  double resonance_um = 0.0;   // pole wavelength
};

struct Material {
  std::string name;
  double fraction = 0.0;       // dopant molar fraction
  std::vector<SellmeierTerm> terms;

  double index(double lambda_um) const {
    if (!(lambda_um >= material_lambda_min_um &&
          lambda_um <= material_lambda_max_um)) {
      throw ComputationError("material '" + name + "': wavelength " +
                             std::to_string(lambda_um) +
                             " um outside tabulated band [0.4, 2.0] um");
    }
    const double l2 = lambda_um * lambda_um;
    double n2 = 1.0;
    for (const auto& t : terms) {
      n2 += t.strength * l2 / (l2 - t.resonance_um * t.resonance_um);
    }
    if (!(n2 > 1.0)) {
      throw ComputationError("material '" + name +
                             "': Sellmeier fit is unphysical at " +
                             std::to_string(lambda_um) + " um (n^2 <= 1)");
    }
    return std::sqrt(n2);
  }

  double permittivity(double lambda_um) const {
    const double n = index(lambda_um);
    return n * n;
  }
};

// Non-dispersive stand-in used by test fixtures and oracles; a single term
// with a zero resonance wavelength makes n^2 = 1 + B at every wavelength.
inline Material constant_material(const std::string& name, double n) {
  if (!(n > 1.0)) throw ConfigError("constant material needs n > 1");
  Material m;
  m.name = name;
  m.terms.push_back({n * n - 1.0, 0.0});
  return m;
}

class MaterialLibrary {
 public:
  static MaterialLibrary parse(std::istream& in, const std::string& origin) {
    MaterialLibrary lib;
    std::vector<Material> raw;
    Material cur;
    bool open = false;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) -> void {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string key;
      if (!(ls >> key)) continue;
      if (key == "material") {
        if (open) fail("missing 'end' before new material block");
        cur = Material{};
        if (!(ls >> cur.name)) fail("material block without a name");
        open = true;
      } else if (key == "fraction") {
        if (!open) fail("'fraction' outside a material block");
        if (!(ls >> cur.fraction)) fail("unreadable fraction");
        if (cur.fraction < 0.0 || cur.fraction > 1.0)
          fail("fraction must lie in [0, 1]");
      } else if (key == "term") {
        if (!open) fail("'term' outside a material block");
        SellmeierTerm t;
        if (!(ls >> t.strength >> t.resonance_um)) fail("unreadable term");
        if (t.strength < 0.0) fail("negative Sellmeier strength");
        if (t.resonance_um <= 0.0) fail("resonance wavelength must be positive");
        cur.terms.push_back(t);
      } else if (key == "end") {
        if (!open) fail("'end' without a material block");
        raw.push_back(cur);
        open = false;
      } else {
        fail("unknown directive '" + key + "'");
      }
    }
    if (open) throw ConfigError(origin + ": unterminated material block");

    const Material* host = nullptr;
    const Material* dopant = nullptr;
    for (const auto& m : raw) {
      if (!m.terms.empty() && m.fraction == 0.0) host = &m;
      if (!m.terms.empty() && m.fraction == 1.0) dopant = &m;
    }
    for (auto& m : raw) {
      if (m.terms.empty()) {
        if (!host || !dopant)
          throw ConfigError(origin + ": material '" + m.name +
                            "' needs interpolation but the library lacks "
                            "fraction-0 and fraction-1 entries with terms");
        if (host->terms.size() != dopant->terms.size())
          throw ConfigError(origin +
                            ": host and dopant term counts differ; cannot "
                            "interpolate '" + m.name + "'");
        for (std::size_t k = 0; k < host->terms.size(); ++k) {
          SellmeierTerm t;
          const double x = m.fraction;
          t.strength = host->terms[k].strength +
                       x * (dopant->terms[k].strength - host->terms[k].strength);
          t.resonance_um =
              host->terms[k].resonance_um +
              x * (dopant->terms[k].resonance_um - host->terms[k].resonance_um);
          m.terms.push_back(t);
        }
      }
      if (lib.materials_.count(m.name))
        throw ConfigError(origin + ": duplicate material '" + m.name + "'");
      lib.materials_.emplace(m.name, m);
    }
    return lib;
  }

  static MaterialLibrary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open material file '" + path + "'");
    return parse(in, path);
  }

  const Material& get(const std::string& name) const {
    const auto it = materials_.find(name);
    if (it == materials_.end())
      throw ConfigError("unknown material '" + name + "'");
    return it->second;
  }

  bool has(const std::string& name) const { return materials_.count(name) != 0; }

  // Interpolated composition that need not be present in the file.
  Material doped(double fraction, const std::string& host_name = "silica",
                 const std::string& dopant_name = "germania") const {
    if (fraction < 0.0 || fraction > 1.0)
      throw ConfigError("dopant fraction must lie in [0, 1]");
    const Material& host = get(host_name);
    const Material& dop = get(dopant_name);
    if (host.terms.size() != dop.terms.size())
      throw ConfigError("host and dopant term counts differ");
    Material m;
    m.name = host_name + "+" + dopant_name + "@" + std::to_string(fraction);
    m.fraction = fraction;
    for (std::size_t k = 0; k < host.terms.size(); ++k) {
      SellmeierTerm t;
      t.strength = host.terms[k].strength +
                   fraction * (dop.terms[k].strength - host.terms[k].strength);
      t.resonance_um = host.terms[k].resonance_um +
                       fraction * (dop.terms[k].resonance_um -
                                   host.terms[k].resonance_um);
      m.terms.push_back(t);
    }
    return m;
  }

 private:
  std::map<std::string, Material> materials_;
};

}  // namespace ringspdc
