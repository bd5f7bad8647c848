#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// End-to-end checks of the installed binary. Each case gets a fresh scratch
// directory; the binary path and repo root come in from the build system.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kCli = RINGSPDC_CLI_PATH;
const std::string kRepo = RINGSPDC_REPO_ROOT;
const std::string kRefCfg = kRepo + "/data/reference_ring_fiber.cfg";
const std::string kMaterials = kRepo + "/data/materials.dat";

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("ringspdc_cli_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

RunResult run_cli(const std::string& args, const fs::path& scratch,
                  const std::string& env_prefix = "") {
  const std::string out_f = (scratch / "stdout.txt").string();
  const std::string err_f = (scratch / "stderr.txt").string();
  const std::string cmd =
      env_prefix + kCli + " " + args + " >" + out_f + " 2>" + err_f;
  const int status = std::system(cmd.c_str());
  RunResult r;
  REQUIRE(status >= 0);
  REQUIRE(WIFEXITED(status));
  r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

// reduced-resolution copy of the reference run; same physics, faster tables
std::string reduced_cfg_text(double length_m) {
  std::ostringstream os;
  os << "[fiber]\n"
     << "r1_um = 2.5\nr2_um = 3.25\n"
     << "ring_material = ring_doped\nclad_material = silica\n"
     << "materials = " << kMaterials << "\n"
     << "[grating]\n"
     << "length_m = " << length_m << "\nperiod_um = 44.384022\n"
     << "[pump]\nlambda_um = 0.775\npower_w = 1e-6\nmode = HE21R\n"
     << "[scan]\n"
     << "lambda_lo_um = 1.36\nlambda_hi_um = 1.66\n"
     << "points = 1200\ncoarse_points = 33\nbranch_points = 120\n"
     << "[tolerances]\ntheta_points = 64\nradial_points = 801\n";
  return os.str();
}

std::string write_cfg(const fs::path& scratch, const std::string& text) {
  const fs::path p = scratch / "run.cfg";
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("modes emits a deterministic table with split orbital labels",
          "[cli]") {
  auto d = scratch_dir("modes");
  auto r = run_cli("modes --config " + kRefCfg + " --out-dir " +
                       (d / "a").string(),
                   d);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp((d / "a/modes.csv").string());
  CHECK(csv.rfind("# config=", 0) == 0);
  CHECK(csv.find("lambda_um,family,n,m,variant,l,n_eff,beta_rad_per_um\n") !=
        std::string::npos);
  // the pump-band HE21 doublet carries the l = +1 / -1 split
  CHECK(csv.find("7.75000000e-01,HE,2,1,R,1,") != std::string::npos);
  CHECK(csv.find("7.75000000e-01,HE,2,1,L,-1,") != std::string::npos);
  CHECK(csv.find("7.75000000e-01,TE,0,1,-,0,") != std::string::npos);

  auto r2 = run_cli("modes --config " + kRefCfg + " --out-dir " +
                        (d / "b").string(),
                    d);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp((d / "b/modes.csv").string()) == csv);
  CHECK(slurp((d / "b/modes_summary.json").string()) ==
        slurp((d / "a/modes_summary.json").string()));
}

TEST_CASE("modes --format json swaps the table artifact", "[cli]") {
  auto d = scratch_dir("modesjson");
  auto r = run_cli("modes --config " + kRefCfg + " --format json --out-dir " +
                       d.string(),
                   d);
  REQUIRE(r.exit_code == 0);
  CHECK(!fs::exists(d / "modes.csv"));
  const json j = json::parse(slurp((d / "modes.json").string()));
  REQUIRE(j.contains("modes"));
  REQUIRE(!j["modes"].empty());
  CHECK(j["modes"][0].contains("family"));
  CHECK(j["modes"][0].contains("beta_rad_per_um"));
}

TEST_CASE("a fiber without index contrast reports an empty table", "[cli]") {
  auto d = scratch_dir("nocore");
  std::string text = reduced_cfg_text(1.0);
  const auto pos = text.find("ring_doped");
  text.replace(pos, std::string("ring_doped").size(), "silica");
  auto cfg = write_cfg(d, text);
  auto r = run_cli("modes --config " + cfg + " --out-dir " + d.string(), d);
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("no guided modes") != std::string::npos);
  const std::string csv = slurp((d / "modes.csv").string());
  // comment + header and nothing else
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const json summary = json::parse(slurp((d / "modes_summary.json").string()));
  CHECK(summary["rows"] == 0);
  CHECK(!summary["warnings"].empty());
}

TEST_CASE("configuration mistakes exit with code 2 and name the field",
          "[cli]") {
  auto d = scratch_dir("badcfg");
  auto bad_geom = write_cfg(
      d, "[fiber]\nr1_um = 3.0\nr2_um = 2.0\n[grating]\nperiod_um = 40\n");
  auto r = run_cli("modes --config " + bad_geom + " --out-dir " + d.string(),
                   d);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("r1_um < r2_um") != std::string::npos);

  auto unknown = write_cfg(d, "[fiber]\nradius = 2\n");
  r = run_cli("modes --config " + unknown + " --out-dir " + d.string(), d);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("radius") != std::string::npos);

  r = run_cli("modes --config " + (d / "missing.cfg").string(), d);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("cannot read") != std::string::npos);

  r = run_cli("modes", d);  // --config is required
  CHECK(r.exit_code == 2);

  r = run_cli("frobnicate --config " + kRefCfg, d);
  CHECK(r.exit_code == 2);

  r = run_cli("--help", d);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("modes") != std::string::npos);
}

TEST_CASE("design reproduces the pinned first-order period", "[cli]") {
  auto d = scratch_dir("design");
  auto cfg = write_cfg(d,
                       "[fiber]\nr1_um = 2.5\nr2_um = 3.25\n"
                       "ring_material = ring_doped\nclad_material = silica\n"
                       "materials = " + kMaterials + "\n"
                       "[grating]\ndesign_target = HE21R + HE11R @ 1.5\n");
  auto r = run_cli("design --config " + cfg + " --out-dir " + d.string(), d);
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(slurp((d / "design.json").string()));
  CHECK(j["grating_needed"] == true);
  CHECK(j["order"] == 1);
  CHECK_THAT(j["period_um"].get<double>(),
             Catch::Matchers::WithinRel(44.384022, 1e-6));
  CHECK_THAT(j["dbeta_rad_per_um"].get<double>(),
             Catch::Matchers::WithinRel(0.1415641263, 1e-6));
  CHECK_THAT(j["lambda_i_um"].get<double>(),
             Catch::Matchers::WithinRel(1.6034482759, 1e-8));
  CHECK(r.out.find("period_um") != std::string::npos);
}

TEST_CASE("design beyond the guided band exits 3", "[cli]") {
  auto d = scratch_dir("designfar");
  auto cfg = write_cfg(d,
                       "[fiber]\nr1_um = 2.5\nr2_um = 3.25\n"
                       "ring_material = ring_doped\nclad_material = silica\n"
                       "materials = " + kMaterials + "\n"
                       "[grating]\ndesign_target = HE21R + HE11R @ 2.5\n");
  auto r = run_cli("design --config " + cfg + " --out-dir " + d.string(), d);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("spectrum on a reduced scan reproduces the reference physics",
          "[cli]") {
  auto d = scratch_dir("spectrum");
  auto cfg = write_cfg(d, reduced_cfg_text(1.0));
  auto r = run_cli("spectrum --config " + cfg + " --out-dir " + d.string(), d);
  REQUIRE(r.exit_code == 0);

  const json rep = json::parse(slurp((d / "report.json").string()));
  CHECK(rep["process"] == "HE21R + HE11");
  CHECK_THAT(rep["peak_lambda_um"].get<double>(),
             Catch::Matchers::WithinAbs(1.5, 0.005));
  const double fwhm = rep["fwhm_nm"].get<double>();
  CHECK(fwhm > 0.4);
  CHECK(fwhm < 2.0);
  const double rate = rep["pairs_per_s"].get<double>();
  CHECK(rate > 60.0);
  CHECK(rate < 1500.0);
  const double eff = rep["efficiency"].get<double>();
  CHECK(eff > 1.5e-11);
  CHECK(eff < 4.0e-10);
  const double tc = rep["correlation_fwhm_s"].get<double>();
  CHECK(tc > 3e-12);
  CHECK(tc < 1.4e-11);
  for (const auto& s : rep["separation"])
    CHECK(s["ratio"].get<double>() < 0.01);

  bool saw_mirror = false;
  for (const auto& p : rep["peaks"])
    if (p["process"] == "HE11R + HE21" && p["has_peak"] == true) {
      saw_mirror = true;
      CHECK_THAT(p["peak_lambda_um"].get<double>(),
                 Catch::Matchers::WithinAbs(1.6034, 0.005));
    }
  CHECK(saw_mirror);

  // scan artifacts: comment + header + one row per grid point
  for (const char* name : {"density_scan.csv", "dbeta_scan.csv"}) {
    const std::string csv = slurp((d / name).string());
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1202);
    CHECK(csv.rfind("# config=", 0) == 0);
  }
  // mismatch columns go nan where a branch leaves the guided band
  CHECK(slurp((d / "dbeta_scan.csv").string()).find("nan") !=
        std::string::npos);
}

TEST_CASE("shortening the fiber scales rate and correlation window", "[cli]") {
  auto d1 = scratch_dir("len100");
  auto c1 = write_cfg(d1, reduced_cfg_text(1.0));
  auto r1 = run_cli("spectrum --config " + c1 + " --out-dir " + d1.string(),
                    d1);
  REQUIRE(r1.exit_code == 0);
  auto d2 = scratch_dir("len010");
  auto c2 = write_cfg(d2, reduced_cfg_text(0.1));
  auto r2 = run_cli("spectrum --config " + c2 + " --out-dir " + d2.string(),
                    d2);
  REQUIRE(r2.exit_code == 0);

  const json a = json::parse(slurp((d1 / "report.json").string()));
  const json b = json::parse(slurp((d2 / "report.json").string()));
  const double rate_ratio =
      a["pairs_per_s"].get<double>() / b["pairs_per_s"].get<double>();
  CHECK(rate_ratio > 6.0);
  CHECK(rate_ratio < 20.0);
  const double tc_ratio = a["correlation_fwhm_s"].get<double>() /
                          b["correlation_fwhm_s"].get<double>();
  CHECK(tc_ratio > 8.5);
  CHECK(tc_ratio < 11.5);
}

TEST_CASE("forcing a rule-violating process yields flagged zero density",
          "[cli]") {
  auto d = scratch_dir("forced");
  std::string text = reduced_cfg_text(1.0);
  text += "[process]\nforce = HE11R + HE11R\nforce = HE11R + HE11L\n";
  auto cfg = write_cfg(d, text);
  auto r = run_cli("spectrum --config " + cfg + " --out-dir " + d.string(), d);
  REQUIRE(r.exit_code == 0);

  const json rep = json::parse(slurp((d / "report.json").string()));
  REQUIRE(!rep["pairs"].empty());
  for (const auto& p : rep["pairs"]) {
    CHECK(p["allowed"] == false);
    CHECK(p["rule_note"].get<std::string>().find("charge balance") !=
          std::string::npos);
  }
  CHECK(rep["process"].is_null());
  CHECK(rep["pairs_per_s"] == 0.0);

  // every density sample of a disallowed process is exactly zero
  std::istringstream csv(slurp((d / "density_scan.csv").string()));
  std::string line;
  double mx = 0.0;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'l') continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // wavelength
    while (std::getline(row, cell, ','))
      mx = std::max(mx, std::abs(std::stod(cell)));
  }
  CHECK(mx == 0.0);
}

TEST_CASE("validate passes on the reference configuration", "[cli]") {
  auto d = scratch_dir("validate");
  auto r = run_cli("validate --config " + kRefCfg, d);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("PASS  bessel.reference") != std::string::npos);
  CHECK(r.out.find("all checks passed") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("a corrupted reference table fails validate with exit 1", "[cli]") {
  auto d = scratch_dir("corrupt");
  const fs::path table = d / "bessel_reference.csv";
  {
    std::ofstream out(table);
    out << "# deliberately wrong values\n";
    out << "func,order,x,value\n";
    for (int i = 0; i < 150; ++i)
      out << "J,0," << (0.5 + 0.05 * i) << ",1.0\n";
  }
  auto r = run_cli("validate --config " + kRefCfg, d,
                   "RINGSPDC_BESSEL_TABLE=" + table.string() + " ");
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("FAIL  bessel.reference") != std::string::npos);
  CHECK(r.out.find("validation FAILED") != std::string::npos);
}

TEST_CASE("the materials environment override redirects the lookup", "[cli]") {
  auto d = scratch_dir("matenv");
  std::string text = reduced_cfg_text(1.0);
  const auto pos = text.find(kMaterials);
  text.replace(pos, kMaterials.size(), "does_not_exist.dat");
  auto cfg = write_cfg(d, text);

  auto r = run_cli("modes --config " + cfg + " --out-dir " + d.string(), d);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("does_not_exist.dat") != std::string::npos);

  r = run_cli("modes --config " + cfg + " --out-dir " + d.string(), d,
              "RINGSPDC_MATERIALS=" + kMaterials + " ");
  CHECK(r.exit_code == 0);
}
