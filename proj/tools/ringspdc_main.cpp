// ringspdc command line front end.
//
// Subcommands bind a run-configuration file to the computation pipeline:
//   modes     tabulate guided modes of the configured fiber
//   design    first-order grating period for the configured target process
//   spectrum  mismatch + density scans and the pair-rate report
//   validate  self-check battery; nonzero exit iff any check fails
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error,
// 3 runtime computation error. The RINGSPDC_MATERIALS environment variable
// overrides the material data file; RINGSPDC_BESSEL_TABLE points validate
// at an alternate reference table.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "ringspdc/artifacts.hpp"
#include "ringspdc/config.hpp"
#include "ringspdc/dispersion.hpp"
#include "ringspdc/oam.hpp"
#include "ringspdc/spdc.hpp"
#include "ringspdc/validate.hpp"

namespace {

using namespace ringspdc;
using nlohmann::json;

struct CliArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  int threads = 1;
};

std::string dir_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  cfg.validate();
  return cfg;
}

struct LoadedRun {
  RunConfig cfg;
  MaterialLibrary lib;
  RadialProfile prof;
  std::string materials_path;
};

LoadedRun load_run(const CliArgs& args) {
  LoadedRun run{load_config_file(args.config_path), MaterialLibrary{}, {}, {}};
  run.materials_path =
      resolve_materials_path(run.cfg, dir_of(args.config_path));
  run.lib = MaterialLibrary::load(run.materials_path);
  run.prof = make_profile(run.cfg, run.lib);
  std::filesystem::create_directories(args.out_dir);
  return run;
}

void emit(const std::string& path, const std::string& content) {
  write_file_atomic(path, content);
  std::cout << "wrote " << path << "\n";
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- modes

struct ModeRow {
  double lambda_um;
  std::string family;
  int n, m;
  std::string variant;
  int l;
  double n_eff, beta;
};

int cmd_modes(const CliArgs& args) {
  LoadedRun run = load_run(args);
  const RunConfig& cfg = run.cfg;
  const SolverOptions sopt = make_solver_options(cfg);

  std::vector<double> lams = {cfg.pump_lambda_um, cfg.lambda_lo_um,
                              cfg.lambda_hi_um};
  std::sort(lams.begin(), lams.end());
  lams.erase(std::unique(lams.begin(), lams.end()), lams.end());

  std::vector<ModeRow> rows;
  for (double lam : lams) {
    auto ep = build_profile(run.prof, lam);
    for (const auto& md : find_all_modes(ep, 3, sopt)) {
      const bool hybrid =
          md.family == ModeFamily::HE || md.family == ModeFamily::EH;
      if (hybrid) {
        for (int h : {+1, -1})
          rows.push_back({lam, family_name(md.family), md.n, md.m,
                          h > 0 ? "R" : "L", orbital_label(md.family, md.n, h),
                          md.n_eff, md.beta});
      } else {
        rows.push_back({lam, family_name(md.family), md.n, md.m, "-", 0,
                        md.n_eff, md.beta});
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const ModeRow& a, const ModeRow& b) {
    return std::tie(a.lambda_um, a.n, a.family, a.m, a.variant) <
           std::tie(b.lambda_um, b.n, b.family, b.m, b.variant);
  });

  std::vector<std::string> warnings;
  if (rows.empty())
    warnings.push_back("no guided modes at the configured wavelengths");

  if (args.format == "csv") {
    std::ostringstream os;
    os << artifact_comment(cfg);
    os << "lambda_um,family,n,m,variant,l,n_eff,beta_rad_per_um\n";
    for (const auto& r : rows)
      os << fmt_sci9(r.lambda_um) << "," << r.family << "," << r.n << ","
         << r.m << "," << r.variant << "," << r.l << "," << fmt_sci9(r.n_eff)
         << "," << fmt_sci9(r.beta) << "\n";
    emit(args.out_dir + "/modes.csv", os.str());
  } else {
    json tbl = json::array();
    for (const auto& r : rows)
      tbl.push_back({{"lambda_um", r.lambda_um},
                     {"family", r.family},
                     {"n", r.n},
                     {"m", r.m},
                     {"variant", r.variant},
                     {"l", r.l},
                     {"n_eff", r.n_eff},
                     {"beta_rad_per_um", r.beta}});
    json j = {{"config", config_hash(cfg)},
              {"tool_version", tool_version},
              {"modes", tbl}};
    emit(args.out_dir + "/modes.json", json_text(j));
  }

  json summary = {{"config", config_hash(cfg)},
                  {"tool_version", tool_version},
                  {"rows", rows.size()},
                  {"wavelengths_um", lams},
                  {"warnings", warnings}};
  emit(args.out_dir + "/modes_summary.json", json_text(summary));
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

// ---------------------------------------------------------------- design

struct Designed {
  PeriodDesign design;
  double lambda_i_um = 0.0;
};

Designed resolve_design(const RunConfig& cfg, const RadialProfile& prof,
                        const SolverOptions& sopt) {
  if (!cfg.design_target)
    throw ConfigError("config: [grating] design_target required here");
  const DesignTarget& t = *cfg.design_target;
  const double lp = cfg.pump_lambda_um;
  const double ls = t.lambda_s_um;
  const double wi = omega_rad_per_s(lp) - omega_rad_per_s(ls);
  if (!(wi > 0.0))
    throw ConfigError("config: design target signal must be redder than the pump");
  const double li = two_pi * c_um_per_s / wi;
  const OamModeSpec pspec = parse_mode_spec(cfg.pump_mode);

  auto branch = [&](const OamModeSpec& s, double lam) {
    auto br = track_branch(prof, s.family, s.n, s.m, lam - 0.01, lam + 0.01,
                           24, sopt);
    if (!br.covers_lambda(lam))
      throw ComputationError("dispersion table for " + br.label +
                             " does not cover lambda = " +
                             std::to_string(lam) + " um");
    return br;
  };
  auto pb = branch(pspec, lp);
  auto sb = branch(t.signal, ls);
  auto ib = branch(t.idler, li);
  Designed d;
  d.lambda_i_um = li;
  d.design = design_period(pb, sb, ib, omega_rad_per_s(lp),
                           omega_rad_per_s(ls), cfg.order);
  return d;
}

int cmd_design(const CliArgs& args) {
  LoadedRun run = load_run(args);
  const SolverOptions sopt = make_solver_options(run.cfg);
  const Designed d = resolve_design(run.cfg, run.prof, sopt);
  json j = {{"config", config_hash(run.cfg)},
            {"tool_version", tool_version},
            {"signal", run.cfg.design_target->signal.str()},
            {"idler", run.cfg.design_target->idler.str()},
            {"lambda_s_um", run.cfg.design_target->lambda_s_um},
            {"lambda_i_um", d.lambda_i_um},
            {"dbeta_rad_per_um", d.design.dbeta_rad_per_um},
            {"order", d.design.order},
            {"grating_needed", d.design.grating_needed},
            {"period_um", d.design.period_um}};
  emit(args.out_dir + "/design.json", json_text(j));
  if (d.design.grating_needed)
    std::cout << "period_um = " << fmt_sci9(d.design.period_um) << "\n";
  else
    std::cout << "process is phase matched without a grating\n";
  return 0;
}

// -------------------------------------------------------------- spectrum

int cmd_spectrum(const CliArgs& args) {
  LoadedRun run = load_run(args);
  const RunConfig& cfg = run.cfg;
  const SolverOptions sopt = make_solver_options(cfg);

  double period = 0.0;
  if (cfg.period_um) {
    period = *cfg.period_um;
  } else {
    const Designed d = resolve_design(cfg, run.prof, sopt);
    period = d.design.grating_needed ? d.design.period_um : 0.0;
  }

  const SpectrumResult res = compute_spectrum(
      run.prof, make_pump_spec(cfg), make_grating_spec(cfg, period),
      make_chi_spec(cfg), make_scan_spec(cfg), make_forced(cfg), sopt);

  // mismatch scan, one column per pair
  {
    std::ostringstream os;
    os << artifact_comment(cfg);
    os << "lambda_um";
    for (const auto& p : res.pairs) os << ",dbeta[" << p.label << "]";
    os << "\n";
    for (double lam : res.lambda_um) {
      const double w = omega_rad_per_s(lam);
      os << fmt_sci9(lam);
      for (std::size_t k = 0; k < res.pairs.size(); ++k) {
        double db;
        try {
          db = res.evals[k].dbeta_first(w);
        } catch (const std::exception&) {
          db = std::numeric_limits<double>::quiet_NaN();
        }
        os << "," << fmt_sci9(db);
      }
      os << "\n";
    }
    emit(args.out_dir + "/dbeta_scan.csv", os.str());
  }

  // density scan, one column per process group
  {
    std::ostringstream os;
    os << artifact_comment(cfg);
    os << "lambda_um";
    for (const auto& g : res.groups) os << ",density[" << g.label << "]";
    os << "\n";
    for (double lam : res.lambda_um) {
      const double w = omega_rad_per_s(lam);
      os << fmt_sci9(lam);
      for (const auto& g : res.groups) {
        double d = 0.0;
        for (std::size_t k : g.pair_index)
          if (res.evals[k].covers(w)) d += res.evals[k].density(w);
        os << "," << fmt_sci9(d);
      }
      os << "\n";
    }
    emit(args.out_dir + "/density_scan.csv", os.str());
  }

  // report
  json j = {{"config", config_hash(cfg)}, {"tool_version", tool_version}};
  json peaks = json::array();
  for (const auto& g : res.groups)
    peaks.push_back({{"process", g.label},
                     {"has_peak", g.has_peak},
                     {"peak_lambda_um", g.peak_lambda_um},
                     {"peak_density_per_rad_s", g.peak_density},
                     {"fwhm_nm", g.fwhm_nm}});
  j["peaks"] = peaks;
  json pairs = json::array();
  for (const auto& p : res.pairs)
    pairs.push_back({{"pair", p.label},
                     {"allowed", p.allowed},
                     {"rule_note", p.rule_note}});
  j["pairs"] = pairs;
  json warnings = res.warnings;

  const bool any_peak = res.dominant_group < res.groups.size();
  if (any_peak) {
    const RateReport rep = pair_rate_report(res);
    j["process"] = rep.process;
    j["peak_lambda_um"] = rep.peak_lambda_um;
    j["peak_density_per_rad_s"] = rep.peak_density;
    j["fwhm_nm"] = rep.fwhm_nm;
    j["band_um"] = {rep.band_lo_um, rep.band_hi_um};
    j["default_band"] = rep.default_band;
    j["pairs_per_s"] = rep.pairs_per_s;
    j["efficiency"] = rep.efficiency;
    j["correlation_fwhm_s"] = rep.correlation_fwhm_s;
    json sep = json::array();
    for (const auto& s : rep.separation)
      sep.push_back({{"process", s.process}, {"ratio", s.ratio}});
    j["separation"] = sep;
    for (const auto& w : rep.warnings) warnings.push_back(w);
  } else {
    j["process"] = nullptr;
    j["pairs_per_s"] = 0.0;
    warnings.push_back("no process developed a resolvable peak in the band");
  }
  j["warnings"] = warnings;
  emit(args.out_dir + "/report.json", json_text(j));

  if (any_peak)
    std::cout << "dominant process " << res.dominant().label << " peaks at "
              << fmt_sci9(res.dominant().peak_lambda_um) << " um\n";
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

// -------------------------------------------------------------- validate

int cmd_validate(const CliArgs& args) {
  LoadedRun run = load_run(args);
  std::string bessel_path;
  if (const char* env = std::getenv("RINGSPDC_BESSEL_TABLE"); env && *env) {
    bessel_path = env;
  } else {
    const std::string mdir = dir_of(run.materials_path);
    bessel_path = (mdir.empty() ? std::string(".") : mdir) +
                  "/bessel_reference.csv";
  }
  const auto checks = run_validation(run.cfg, run.lib, bessel_path);
  std::cout << format_validation_table(checks);
  bool all = true;
  for (const auto& c : checks) all = all && c.pass;
  std::cout << (all ? "all checks passed\n" : "validation FAILED\n");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ring-fiber photon-pair source designer"};
  app.require_subcommand(1);
  CliArgs args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "run configuration file")
        ->required();
    sub->add_option("--out-dir", args.out_dir,
                    "directory for emitted artifacts (default .)");
    sub->add_option("--threads", args.threads,
                    "accepted for compatibility; the pipeline is "
                    "deterministic and single threaded")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", args.format, "mode table format")
        ->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* modes = app.add_subcommand("modes", "tabulate guided modes");
  CLI::App* design =
      app.add_subcommand("design", "grating period for the target process");
  CLI::App* spectrum =
      app.add_subcommand("spectrum", "mismatch and density scans plus report");
  CLI::App* validate = app.add_subcommand("validate", "self-check battery");
  for (CLI::App* sub : {modes, design, spectrum, validate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a configuration error
  }

  try {
    if (modes->parsed()) return cmd_modes(args);
    if (design->parsed()) return cmd_design(args);
    if (spectrum->parsed()) return cmd_spectrum(args);
    return cmd_validate(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
