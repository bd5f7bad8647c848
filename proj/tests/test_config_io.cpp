#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ringspdc/artifacts.hpp"
#include "ringspdc/config.hpp"

using namespace ringspdc;

namespace {

const char* kFullText = R"(# reference-style run
[fiber]
r1_um = 2.5
r2_um = 3.25
ring_material = ring_doped
clad_material = silica
materials = materials.dat

[grating]
length_m = 0.5
duty = 0.4
order = 3
chi_xyy_pm_per_v = 0.021
chi_xxx_pm_per_v = 0.063
period_um = 44.384022   # trailing comment

[pump]
lambda_um = 0.775
power_w = 2e-6
mode = HE21R
leak = TE01 0.01
leak = HE11L 0.002

[scan]
lambda_lo_um = 1.4
lambda_hi_um = 1.65
points = 600
coarse_points = 17
branch_points = 90

[tolerances]
root_tol = 1e-11
theta_points = 64
radial_points = 401

[process]
force = HE21R + HE11R
force = HE11R + HE11L
)";

RunConfig full_config() { return parse_config(kFullText); }

}  // namespace

TEST_CASE("config text parses into the documented fields", "[config_io]") {
  RunConfig cfg = full_config();
  cfg.validate();
  CHECK(cfg.r1_um == 2.5);
  CHECK(cfg.r2_um == 3.25);
  CHECK(cfg.ring_material == "ring_doped");
  CHECK(cfg.materials_file == "materials.dat");
  CHECK(cfg.length_m == 0.5);
  CHECK(cfg.duty == 0.4);
  CHECK(cfg.order == 3);
  REQUIRE(cfg.period_um.has_value());
  CHECK(*cfg.period_um == 44.384022);
  CHECK(!cfg.design_target.has_value());
  CHECK(cfg.pump_power_w == 2e-6);
  CHECK(cfg.pump_mode == "HE21R");
  REQUIRE(cfg.pump_leakage.size() == 2);
  CHECK(cfg.pump_leakage[0].first == "TE01");
  CHECK(cfg.pump_leakage[0].second == 0.01);
  CHECK(cfg.pump_leakage[1].first == "HE11L");
  CHECK(cfg.points == 600);
  CHECK(cfg.root_tol == 1e-11);
  REQUIRE(cfg.forced.size() == 2);
  CHECK(cfg.forced[1] == std::pair<std::string, std::string>("HE11R", "HE11L"));
}

TEST_CASE("omitted keys keep their defaults", "[config_io]") {
  RunConfig cfg = parse_config("[grating]\nperiod_um = 40\n");
  cfg.validate();
  CHECK(cfg.r1_um == 2.5);
  CHECK(cfg.pump_lambda_um == 0.775);
  CHECK(cfg.points == 4000);
  CHECK(cfg.pump_leakage.empty());
  CHECK(cfg.forced.empty());
}

TEST_CASE("design target line parses both specs and the wavelength",
          "[config_io]") {
  RunConfig cfg =
      parse_config("[grating]\ndesign_target = HE21R + HE11R @ 1.5\n");
  cfg.validate();
  REQUIRE(cfg.design_target.has_value());
  CHECK(cfg.design_target->signal.str() == "HE21R");
  CHECK(cfg.design_target->idler.str() == "HE11R");
  CHECK(cfg.design_target->lambda_s_um == 1.5);
}

TEST_CASE("parse rejects malformed input with the offending location",
          "[config_io]") {
  CHECK_THROWS_WITH(parse_config("[nope]\n"),
                    Catch::Matchers::ContainsSubstring("[nope]"));
  CHECK_THROWS_WITH(parse_config("[fiber]\nbogus_key = 1\n"),
                    Catch::Matchers::ContainsSubstring("bogus_key"));
  CHECK_THROWS_WITH(parse_config("r1_um = 2\n"),
                    Catch::Matchers::ContainsSubstring("outside any block"));
  CHECK_THROWS_WITH(parse_config("[fiber]\nr1_um 2\n"),
                    Catch::Matchers::ContainsSubstring("key = value"));
  CHECK_THROWS_WITH(parse_config("[fiber]\nr1_um = abc\n"),
                    Catch::Matchers::ContainsSubstring("cannot parse"));
  CHECK_THROWS_WITH(parse_config("[scan]\npoints = 3.5\n"),
                    Catch::Matchers::ContainsSubstring("not an integer"));
  CHECK_THROWS_WITH(parse_config("[pump]\nleak = garbage\n"),
                    Catch::Matchers::ContainsSubstring("MODE fraction"));
  CHECK_THROWS_WITH(
      parse_config("[grating]\ndesign_target = HE21R and HE11R\n"),
      Catch::Matchers::ContainsSubstring("SIGNAL + IDLER"));
  CHECK_THROWS_WITH(
      parse_config(
          "[grating]\nperiod_um = 40\ndesign_target = HE21R + HE11R @ 1.5\n"),
      Catch::Matchers::ContainsSubstring("exactly one"));
}

TEST_CASE("validate() pins down out-of-range fields by name", "[config_io]") {
  auto expect_reject = [](const char* mutation, const char* needle) {
    std::string text(kFullText);
    text += std::string("\n") + mutation + "\n";
    // mutations re-open a block at the end; later keys win
    RunConfig bad = parse_config(text);
    CHECK_THROWS_WITH(bad.validate(),
                      Catch::Matchers::ContainsSubstring(needle));
  };
  expect_reject("[fiber]\nr2_um = 1.0", "r1_um < r2_um");
  expect_reject("[grating]\nduty = 1.5", "duty");
  expect_reject("[grating]\nlength_m = 0", "length_m");
  expect_reject("[pump]\nlambda_um = -1", "lambda_um");
  expect_reject("[pump]\nleak = HE11R 0.999", "sum below 1");
  expect_reject("[scan]\nlambda_hi_um = 1.0", "lambda_lo_um < lambda_hi_um");
  expect_reject("[scan]\npoints = 4", "points");
  expect_reject("[tolerances]\nradial_points = 50", "radial_points");

  // period/design exclusivity also holds when neither is given
  RunConfig neither = parse_config("[fiber]\nr1_um = 2.5\n");
  CHECK_THROWS_WITH(neither.validate(),
                    Catch::Matchers::ContainsSubstring("exactly one"));
}

TEST_CASE("serialization round-trips to the identical canonical text",
          "[config_io]") {
  RunConfig cfg = full_config();
  const std::string once = serialize_config(cfg);
  RunConfig back = parse_config(once);
  const std::string twice = serialize_config(back);
  CHECK(once == twice);
  CHECK(back.period_um == cfg.period_um);
  CHECK(back.pump_leakage == cfg.pump_leakage);
  CHECK(back.forced == cfg.forced);
  CHECK(back.root_tol == cfg.root_tol);

  // design-target configs round-trip too
  RunConfig dt = parse_config("[grating]\ndesign_target = HE21R + HE11R @ 1.5\n");
  RunConfig dt2 = parse_config(serialize_config(dt));
  REQUIRE(dt2.design_target.has_value());
  CHECK(dt2.design_target->lambda_s_um == 1.5);
  CHECK(serialize_config(dt2) == serialize_config(dt));
}

TEST_CASE("hash is stable under reparse and sensitive to any field",
          "[config_io]") {
  RunConfig cfg = full_config();
  const std::string h = config_hash(cfg);
  CHECK(h.size() == 16);
  CHECK(config_hash(parse_config(serialize_config(cfg))) == h);

  RunConfig tweaked = cfg;
  tweaked.r2_um = 3.26;
  CHECK(config_hash(tweaked) != h);
  tweaked = cfg;
  tweaked.points = 601;
  CHECK(config_hash(tweaked) != h);
  tweaked = cfg;
  tweaked.pump_leakage.push_back({"TM01", 0.001});
  CHECK(config_hash(tweaked) != h);
}

TEST_CASE("bindings translate config fields into engine specs", "[config_io]") {
  RunConfig cfg = full_config();

  const Chi2Spec chi = make_chi_spec(cfg);
  CHECK_THAT(chi.chi1_um_per_v, Catch::Matchers::WithinRel(0.021e-6, 1e-12));
  CHECK_THAT(chi.chi_xxx_um_per_v, Catch::Matchers::WithinRel(0.063e-6, 1e-12));

  const GratingSpec g = make_grating_spec(cfg, *cfg.period_um);
  CHECK(g.length_um == 0.5e6);
  CHECK(g.period_um == 44.384022);
  CHECK(g.duty == 0.4);
  CHECK(g.chi0_um_per_v == 1.0);  // magnitude lives in Chi2Spec

  const PumpSpec p = make_pump_spec(cfg);
  CHECK(p.lambda_um == 0.775);
  CHECK(p.power_w == 2e-6);
  REQUIRE(p.components.size() == 3);
  CHECK(p.components[0].mode.str() == "HE21R");
  CHECK_THAT(p.components[0].power_fraction,
             Catch::Matchers::WithinRel(1.0 - 0.012, 1e-12));
  CHECK(p.components[1].mode.str() == "TE01");
  CHECK(p.components[1].power_fraction == 0.01);

  // zero-fraction leaks are dropped from the component list
  RunConfig z = cfg;
  z.pump_leakage = {{"TE01", 0.0}};
  CHECK(make_pump_spec(z).components.size() == 1);

  const ScanSpec s = make_scan_spec(cfg);
  CHECK(s.lambda_lo_um == 1.4);
  CHECK(s.points == 600);
  CHECK(s.theta_points == 64);
  CHECK(s.radial_points == 401);

  const SolverOptions o = make_solver_options(cfg);
  CHECK(o.beta_tol == 1e-11);
  CHECK(o.radial_points == 401);

  const auto forced = make_forced(cfg);
  REQUIRE(forced.size() == 2);
  CHECK(forced[0].signal.str() == "HE21R");
  CHECK(forced[1].idler.str() == "HE11L");
}

TEST_CASE("materials path resolves relative to the config directory",
          "[config_io]") {
  RunConfig cfg;
  cfg.materials_file = "materials.dat";
  unsetenv("RINGSPDC_MATERIALS");
  CHECK(resolve_materials_path(cfg, "/some/dir") == "/some/dir/materials.dat");
  CHECK(resolve_materials_path(cfg, "") == "materials.dat");
  cfg.materials_file = "/abs/materials.dat";
  CHECK(resolve_materials_path(cfg, "/some/dir") == "/abs/materials.dat");

  setenv("RINGSPDC_MATERIALS", "/env/override.dat", 1);
  CHECK(resolve_materials_path(cfg, "/some/dir") == "/env/override.dat");
  unsetenv("RINGSPDC_MATERIALS");
}

TEST_CASE("artifact helpers format and write deterministically",
          "[config_io]") {
  CHECK(fmt_sci9(1.5) == "1.50000000e+00");
  CHECK(fmt_sci9(-0.0001234567891) == "-1.23456789e-04");

  RunConfig cfg = full_config();
  const std::string comment = artifact_comment(cfg);
  CHECK(comment.find(config_hash(cfg)) != std::string::npos);
  CHECK(comment.find(tool_version) != std::string::npos);
  CHECK(comment.front() == '#');
  CHECK(comment.back() == '\n');

  const std::string path =
      (std::filesystem::temp_directory_path() / "config_io_scratch.txt")
          .string();
  write_file_atomic(path, "alpha\n");
  write_file_atomic(path, "beta\n");  // overwrite goes through the same path
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "beta\n");
  std::ifstream tmp(path + ".tmp");
  CHECK(!tmp.good());  // no temp file left behind
  std::remove(path.c_str());
}
