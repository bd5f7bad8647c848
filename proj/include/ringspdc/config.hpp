#pragma once
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ringspdc/errors.hpp"
#include "ringspdc/material.hpp"
#include "ringspdc/profile.hpp"
#include "ringspdc/qpm.hpp"
#include "ringspdc/spdc.hpp"

// Run configuration for the command-line tools. The on-disk format is a
// plain block/key-value text:
//
//   # comment
//   [fiber]
//   r1_um = 2.5
//   ring_material = ring_doped
//   [grating]
//   design_target = HE21R + HE11R @ 1.5
//   [pump]
//   leak = TE01 0.01
//
// Keys are checked strictly; unknown blocks or keys fail the parse so a
// typo cannot silently fall back to a default. `leak` and `force` may
// repeat. serialize_config() emits a canonical form whose reparse is
// field-identical, and config_hash() fingerprints that canonical text.

namespace ringspdc {

inline constexpr const char* tool_version = "0.1.0";

struct DesignTarget {
  OamModeSpec signal;
  OamModeSpec idler;
  double lambda_s_um = 0.0;
};

struct RunConfig {
  // fiber
  double r1_um = 2.5;
  double r2_um = 3.25;
  std::string ring_material = "ring_doped";
  std::string clad_material = "silica";
  std::string materials_file = "materials.dat";

  // grating; exactly one of period_um / design_target
  double length_m = 1.0;
  double duty = 0.5;
  int order = 1;
  double chi_xyy_pm_per_v = 0.021;
  double chi_xxx_pm_per_v = 0.063;
  std::optional<double> period_um;
  std::optional<DesignTarget> design_target;

  // pump
  double pump_lambda_um = 0.775;
  double pump_power_w = 1e-6;
  std::string pump_mode = "HE21R";
  std::vector<std::pair<std::string, double>> pump_leakage;

  // scan
  double lambda_lo_um = 1.35;
  double lambda_hi_um = 1.70;
  int points = 4000;
  int coarse_points = 65;
  int branch_points = 260;

  // tolerances
  double root_tol = 1e-12;
  int theta_points = 256;
  int radial_points = 1201;

  // optional forced process list (signal label, idler label)
  std::vector<std::pair<std::string, std::string>> forced;

  void validate() const;
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& where, const std::string& v) {
  const char* c = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(c, &end);
  if (end == c || *end != '\0')
    throw ConfigError("config: " + where + ": cannot parse '" + v +
                      "' as a number");
  return x;
}

inline int parse_int(const std::string& where, const std::string& v) {
  const double x = parse_double(where, v);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw ConfigError("config: " + where + ": '" + v + "' is not an integer");
  return i;
}

// "HE21R + HE11R @ 1.5"
inline DesignTarget parse_design_target(const std::string& v) {
  const std::size_t plus = v.find('+');
  const std::size_t at = v.find('@');
  if (plus == std::string::npos || at == std::string::npos || at < plus)
    throw ConfigError(
        "config: [grating] design_target: expected 'SIGNAL + IDLER @ "
        "lambda_um', got '" +
        v + "'");
  DesignTarget t;
  t.signal = parse_mode_spec(trim(v.substr(0, plus)));
  t.idler = parse_mode_spec(trim(v.substr(plus + 1, at - plus - 1)));
  t.lambda_s_um =
      parse_double("[grating] design_target wavelength", trim(v.substr(at + 1)));
  return t;
}

// "TE01 0.01"
inline std::pair<std::string, double> parse_leak(const std::string& v) {
  const std::size_t sp = v.find_last_of(" \t");
  if (sp == std::string::npos)
    throw ConfigError("config: [pump] leak: expected 'MODE fraction', got '" +
                      v + "'");
  const std::string label = trim(v.substr(0, sp));
  parse_mode_spec(label);  // reject before the number does
  return {label, parse_double("[pump] leak fraction", trim(v.substr(sp + 1)))};
}

// "HE21R + HE11L"
inline std::pair<std::string, std::string> parse_force(const std::string& v) {
  const std::size_t plus = v.find('+');
  if (plus == std::string::npos)
    throw ConfigError("config: [process] force: expected 'SIGNAL + IDLER', got '" +
                      v + "'");
  auto sig = trim(v.substr(0, plus));
  auto idl = trim(v.substr(plus + 1));
  parse_mode_spec(sig);
  parse_mode_spec(idl);
  return {sig, idl};
}

// shortest text that parses back to the same double
inline std::string fmt(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace cfgdetail

inline void RunConfig::validate() const {
  if (!(r1_um > 0.0 && r2_um > r1_um))
    throw ConfigError("config: [fiber] needs 0 < r1_um < r2_um");
  if (ring_material.empty() || clad_material.empty())
    throw ConfigError("config: [fiber] material names must be non-empty");
  if (!(length_m > 0.0)) throw ConfigError("config: [grating] length_m must be > 0");
  if (!(duty > 0.0 && duty < 1.0))
    throw ConfigError("config: [grating] duty must lie in (0, 1)");
  if (order < 1) throw ConfigError("config: [grating] order must be >= 1");
  if (!(chi_xyy_pm_per_v > 0.0))
    throw ConfigError("config: [grating] chi_xyy_pm_per_v must be > 0");
  if (period_um.has_value() == design_target.has_value())
    throw ConfigError(
        "config: [grating] needs exactly one of period_um / design_target");
  if (period_um && !(*period_um > 0.0))
    throw ConfigError("config: [grating] period_um must be > 0");
  if (!(pump_lambda_um > 0.0))
    throw ConfigError("config: [pump] lambda_um must be > 0");
  if (!(pump_power_w > 0.0))
    throw ConfigError("config: [pump] power_w must be > 0");
  parse_mode_spec(pump_mode);
  double leak_sum = 0.0;
  for (const auto& [label, frac] : pump_leakage) {
    parse_mode_spec(label);
    if (!(frac >= 0.0))
      throw ConfigError("config: [pump] leak fraction for " + label +
                        " must be >= 0");
    leak_sum += frac;
  }
  if (!(leak_sum < 1.0))
    throw ConfigError("config: [pump] leak fractions must sum below 1");
  if (!(lambda_hi_um > lambda_lo_um && lambda_lo_um > 0.0))
    throw ConfigError("config: [scan] needs 0 < lambda_lo_um < lambda_hi_um");
  if (points < 16) throw ConfigError("config: [scan] points must be >= 16");
  if (coarse_points < 8)
    throw ConfigError("config: [scan] coarse_points must be >= 8");
  if (branch_points < 16)
    throw ConfigError("config: [scan] branch_points must be >= 16");
  if (!(root_tol > 0.0))
    throw ConfigError("config: [tolerances] root_tol must be > 0");
  if (theta_points < 16)
    throw ConfigError("config: [tolerances] theta_points must be >= 16");
  if (radial_points < 101)
    throw ConfigError("config: [tolerances] radial_points must be >= 101");
  for (const auto& [sig, idl] : forced) {
    parse_mode_spec(sig);
    parse_mode_spec(idl);
  }
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.pump_leakage.clear();
  cfg.forced.clear();
  bool saw_period = false, saw_target = false;
  std::string block;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = cfgdetail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated block header");
      block = line.substr(1, line.size() - 2);
      if (block != "fiber" && block != "grating" && block != "pump" &&
          block != "scan" && block != "tolerances" && block != "process")
        throw ConfigError("config: unknown block [" + block + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = cfgdetail::trim(line.substr(0, eq));
    const std::string val = cfgdetail::trim(line.substr(eq + 1));
    if (block.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key '" + key + "' outside any block");
    const std::string where = "[" + block + "] " + key;
    auto num = [&] { return cfgdetail::parse_double(where, val); };
    auto inum = [&] { return cfgdetail::parse_int(where, val); };

    if (block == "fiber") {
      if (key == "r1_um") cfg.r1_um = num();
      else if (key == "r2_um") cfg.r2_um = num();
      else if (key == "ring_material") cfg.ring_material = val;
      else if (key == "clad_material") cfg.clad_material = val;
      else if (key == "materials") cfg.materials_file = val;
      else throw ConfigError("config: unknown key '" + key + "' in [fiber]");
    } else if (block == "grating") {
      if (key == "length_m") cfg.length_m = num();
      else if (key == "duty") cfg.duty = num();
      else if (key == "order") cfg.order = inum();
      else if (key == "chi_xyy_pm_per_v") cfg.chi_xyy_pm_per_v = num();
      else if (key == "chi_xxx_pm_per_v") cfg.chi_xxx_pm_per_v = num();
      else if (key == "period_um") { cfg.period_um = num(); saw_period = true; }
      else if (key == "design_target") {
        cfg.design_target = cfgdetail::parse_design_target(val);
        saw_target = true;
      } else throw ConfigError("config: unknown key '" + key + "' in [grating]");
    } else if (block == "pump") {
      if (key == "lambda_um") cfg.pump_lambda_um = num();
      else if (key == "power_w") cfg.pump_power_w = num();
      else if (key == "mode") cfg.pump_mode = val;
      else if (key == "leak") cfg.pump_leakage.push_back(cfgdetail::parse_leak(val));
      else throw ConfigError("config: unknown key '" + key + "' in [pump]");
    } else if (block == "scan") {
      if (key == "lambda_lo_um") cfg.lambda_lo_um = num();
      else if (key == "lambda_hi_um") cfg.lambda_hi_um = num();
      else if (key == "points") cfg.points = inum();
      else if (key == "coarse_points") cfg.coarse_points = inum();
      else if (key == "branch_points") cfg.branch_points = inum();
      else throw ConfigError("config: unknown key '" + key + "' in [scan]");
    } else if (block == "tolerances") {
      if (key == "root_tol") cfg.root_tol = num();
      else if (key == "theta_points") cfg.theta_points = inum();
      else if (key == "radial_points") cfg.radial_points = inum();
      else throw ConfigError("config: unknown key '" + key + "' in [tolerances]");
    } else {  // process
      if (key == "force") cfg.forced.push_back(cfgdetail::parse_force(val));
      else throw ConfigError("config: unknown key '" + key + "' in [process]");
    }
  }
  if (saw_period && saw_target)
    throw ConfigError(
        "config: [grating] needs exactly one of period_um / design_target");
  return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
  using cfgdetail::fmt;
  std::ostringstream os;
  os << "[fiber]\n";
  os << "r1_um = " << fmt(cfg.r1_um) << "\n";
  os << "r2_um = " << fmt(cfg.r2_um) << "\n";
  os << "ring_material = " << cfg.ring_material << "\n";
  os << "clad_material = " << cfg.clad_material << "\n";
  os << "materials = " << cfg.materials_file << "\n";
  os << "\n[grating]\n";
  os << "length_m = " << fmt(cfg.length_m) << "\n";
  os << "duty = " << fmt(cfg.duty) << "\n";
  os << "order = " << cfg.order << "\n";
  os << "chi_xyy_pm_per_v = " << fmt(cfg.chi_xyy_pm_per_v) << "\n";
  os << "chi_xxx_pm_per_v = " << fmt(cfg.chi_xxx_pm_per_v) << "\n";
  if (cfg.period_um) os << "period_um = " << fmt(*cfg.period_um) << "\n";
  if (cfg.design_target)
    os << "design_target = " << cfg.design_target->signal.str() << " + "
       << cfg.design_target->idler.str() << " @ "
       << fmt(cfg.design_target->lambda_s_um) << "\n";
  os << "\n[pump]\n";
  os << "lambda_um = " << fmt(cfg.pump_lambda_um) << "\n";
  os << "power_w = " << fmt(cfg.pump_power_w) << "\n";
  os << "mode = " << cfg.pump_mode << "\n";
  for (const auto& [label, frac] : cfg.pump_leakage)
    os << "leak = " << label << " " << fmt(frac) << "\n";
  os << "\n[scan]\n";
  os << "lambda_lo_um = " << fmt(cfg.lambda_lo_um) << "\n";
  os << "lambda_hi_um = " << fmt(cfg.lambda_hi_um) << "\n";
  os << "points = " << cfg.points << "\n";
  os << "coarse_points = " << cfg.coarse_points << "\n";
  os << "branch_points = " << cfg.branch_points << "\n";
  os << "\n[tolerances]\n";
  os << "root_tol = " << fmt(cfg.root_tol) << "\n";
  os << "theta_points = " << cfg.theta_points << "\n";
  os << "radial_points = " << cfg.radial_points << "\n";
  if (!cfg.forced.empty()) {
    os << "\n[process]\n";
    for (const auto& [sig, idl] : cfg.forced)
      os << "force = " << sig << " + " << idl << "\n";
  }
  return os.str();
}

// FNV-1a, 64 bit, over the canonical serialization.
inline std::string config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

// --- bindings into the computation types ---

inline ScanSpec make_scan_spec(const RunConfig& cfg) {
  ScanSpec s;
  s.lambda_lo_um = cfg.lambda_lo_um;
  s.lambda_hi_um = cfg.lambda_hi_um;
  s.points = cfg.points;
  s.coarse_points = cfg.coarse_points;
  s.branch_points = cfg.branch_points;
  s.theta_points = cfg.theta_points;
  s.radial_points = cfg.radial_points;
  return s;
}

inline Chi2Spec make_chi_spec(const RunConfig& cfg) {
  Chi2Spec chi;
  chi.chi1_um_per_v = cfg.chi_xyy_pm_per_v * 1e-6;
  chi.chi_xxx_um_per_v = cfg.chi_xxx_pm_per_v * 1e-6;
  return chi;
}

// The chi magnitude lives in Chi2Spec; the grating carries the unit
// longitudinal pattern.
inline GratingSpec make_grating_spec(const RunConfig& cfg, double period_um) {
  GratingSpec g;
  g.length_um = cfg.length_m * 1e6;
  g.period_um = period_um;
  g.duty = cfg.duty;
  g.chi0_um_per_v = 1.0;
  return g;
}

inline PumpSpec make_pump_spec(const RunConfig& cfg) {
  PumpSpec p;
  p.lambda_um = cfg.pump_lambda_um;
  p.power_w = cfg.pump_power_w;
  p.components.clear();
  double leak_sum = 0.0;
  for (const auto& [label, frac] : cfg.pump_leakage) leak_sum += frac;
  PumpComponent main;
  main.mode = parse_mode_spec(cfg.pump_mode);
  main.power_fraction = 1.0 - leak_sum;
  p.components.push_back(main);
  for (const auto& [label, frac] : cfg.pump_leakage) {
    if (frac == 0.0) continue;
    PumpComponent c;
    c.mode = parse_mode_spec(label);
    c.power_fraction = frac;
    p.components.push_back(c);
  }
  return p;
}

inline std::vector<ProcessSelection> make_forced(const RunConfig& cfg) {
  std::vector<ProcessSelection> out;
  for (const auto& [sig, idl] : cfg.forced)
    out.push_back({parse_mode_spec(sig), parse_mode_spec(idl)});
  return out;
}

inline SolverOptions make_solver_options(const RunConfig& cfg) {
  SolverOptions opt;
  opt.beta_tol = cfg.root_tol;
  opt.radial_points = cfg.radial_points;
  return opt;
}

// Materials path resolution: absolute stays, else relative to the config
// file's own directory; RINGSPDC_MATERIALS overrides everything.
inline std::string resolve_materials_path(const RunConfig& cfg,
                                          const std::string& config_dir) {
  if (const char* env = std::getenv("RINGSPDC_MATERIALS"))
    if (*env) return env;
  if (!cfg.materials_file.empty() && cfg.materials_file.front() == '/')
    return cfg.materials_file;
  if (config_dir.empty()) return cfg.materials_file;
  return config_dir + "/" + cfg.materials_file;
}

inline RadialProfile make_profile(const RunConfig& cfg,
                                  const MaterialLibrary& lib) {
  return ring_profile(lib, cfg.r1_um, cfg.r2_um, cfg.ring_material,
                      cfg.clad_material);
}

}  // namespace ringspdc
