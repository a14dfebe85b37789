// End-to-end tests of the lhsi binary: exit codes, file outputs, stdout
// lines, and run-to-run determinism. The binary path comes in through the
// LHSI_CLI_PATH compile definition.

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lhsi/io.hpp"
#include "lhsi/simkit.hpp"

#ifndef LHSI_CLI_PATH
#error "LHSI_CLI_PATH must point at the lhsi binary"
#endif

namespace {

const std::string kCli = LHSI_CLI_PATH;

std::string tmp(const std::string& name) { return testing::TempDir() + name; }

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = kCli + " " + args;
  cmd += capture.empty() ? " > /dev/null 2>&1" : " > " + capture + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  ASSERT_TRUE(out.good()) << path;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

// A small quad-filter configuration used by most pipeline tests.
nlohmann::json base_config() {
  return {
      {"tau1", 1e-4},
      {"tau2", 1e-4},
      {"max_iters", 30},
      {"filter",
       {{"grid", {2, 2}}, {"filter_px", 4}}},
      {"psf", {{"kind", "diffuser"}, {"seed", 7}, {"feature_px", 1.5}}},
  };
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("gen-psf --help"), 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli(""), 1);                    // missing subcommand
  EXPECT_EQ(run_cli("gen-psf --bogus x"), 1);   // unknown flag
  EXPECT_EQ(run_cli("gen-psf --kind diffuser"), 1);  // missing --out
  EXPECT_EQ(run_cli("gen-psf --kind nope --out " + tmp("x.img")), 1);
  EXPECT_EQ(run_cli("gen-psf --kind diffuser --out " + tmp("x.img") +
                    " --shape 64y64"),
            1);
}

TEST(Cli, HighNaPsfHasSubPixelAutocorr) {
  const std::string psf = tmp("cli_hna.img");
  const std::string log = tmp("cli_hna.txt");
  ASSERT_EQ(run_cli("gen-psf --kind high-na --out " + psf + " --shape 9x9"), 0);
  ASSERT_EQ(run_cli("analyze-autocorr --psf " + psf + " --superpixel-px 4", log), 0);
  double px = -1.0, spx = -1.0;
  ASSERT_EQ(std::sscanf(slurp(log).c_str(),
                        "half_width_px=%lf half_width_superpx=%lf", &px, &spx),
            2);
  EXPECT_GT(px, 0.0);
  EXPECT_LE(px, 1.0);
  // Both numbers were printed at 6 significant digits, so they can only be
  // expected to agree up to that rounding.
  EXPECT_NEAR(spx, px / 4.0, 1e-5);
}

TEST(Cli, PipelineRunsAndIsDeterministic) {
  const std::string cfg_path = tmp("cli_cfg.json");
  write_text(cfg_path, base_config().dump(2));

  // Scene wavelengths must match the generated filter's channel centers.
  lhsi::FilterArraySpec spec;
  spec.grid_rows = 2;
  spec.grid_cols = 2;
  const auto centers = lhsi::filter_center_wavelengths(spec);
  nlohmann::json scene = {
      {"shape", {32, 32}},
      {"wavelengths", centers},
      {"points",
       {{{"x", 10}, {"y", 16}, {"channel", 1}},
        {{"x", 22}, {"y", 16}, {"channel", 2}, {"amplitude", 2.0}}}},
  };
  const std::string scene_path = tmp("cli_scene.json");
  write_text(scene_path, scene.dump(2));

  const std::string psf = tmp("cli_p.img"), filter = tmp("cli_f.hsc");
  const std::string cube = tmp("cli_s.hsc"), meas = tmp("cli_b.img");
  const std::string recon = tmp("cli_v.hsc"), log = tmp("cli_log.csv");
  ASSERT_EQ(run_cli("gen-psf --kind diffuser --seed 7 --out " + psf +
                    " --shape 32x32"),
            0);
  ASSERT_EQ(run_cli("gen-filter --config " + cfg_path + " --out " + filter +
                    " --shape 32x32"),
            0);
  ASSERT_EQ(run_cli("gen-scene --kind points --spec " + scene_path + " --out " +
                    cube),
            0);
  ASSERT_EQ(run_cli("forward --psf " + psf + " --filter " + filter +
                    " --scene " + cube + " --out " + meas),
            0);
  const std::string rec_out = tmp("cli_rec.txt");
  ASSERT_EQ(run_cli("reconstruct --psf " + psf + " --filter " + filter +
                        " --meas " + meas + " --config " + cfg_path + " --out " +
                        recon + " --log " + log,
                    rec_out),
            0);
  EXPECT_NE(slurp(rec_out).find("iterations=30"), std::string::npos);
  EXPECT_EQ(first_line(slurp(log)), "iteration,objective,data_fidelity");

  const std::string spec_csv = tmp("cli_spec.csv");
  ASSERT_EQ(run_cli("spectra --cube " + recon + " --x 10 --y 16 --out " +
                    spec_csv),
            0);
  EXPECT_EQ(first_line(slurp(spec_csv)), "wavelength_nm,value");

  // Re-running the stochastic stages reproduces byte-identical outputs.
  const std::string psf2 = tmp("cli_p2.img"), meas2 = tmp("cli_b2.img");
  const std::string recon2 = tmp("cli_v2.hsc");
  ASSERT_EQ(run_cli("gen-psf --kind diffuser --seed 7 --out " + psf2 +
                    " --shape 32x32"),
            0);
  EXPECT_EQ(slurp(psf), slurp(psf2));
  ASSERT_EQ(run_cli("forward --psf " + psf + " --filter " + filter +
                    " --scene " + cube + " --out " + meas2 +
                    " --noise-var 1e-6 --seed 11"),
            0);
  const std::string meas3 = tmp("cli_b3.img");
  ASSERT_EQ(run_cli("forward --psf " + psf + " --filter " + filter +
                    " --scene " + cube + " --out " + meas3 +
                    " --noise-var 1e-6 --seed 11"),
            0);
  EXPECT_EQ(slurp(meas2), slurp(meas3));
  ASSERT_EQ(run_cli("reconstruct --psf " + psf + " --filter " + filter +
                    " --meas " + meas + " --config " + cfg_path + " --out " +
                    recon2),
            0);
  EXPECT_EQ(slurp(recon), slurp(recon2));
}

TEST(Cli, GenSceneBars) {
  lhsi::FilterArraySpec spec;
  spec.grid_rows = 2;
  spec.grid_cols = 2;
  nlohmann::json scene = {
      {"shape", {32, 32}},
      {"wavelengths", lhsi::filter_center_wavelengths(spec)},
      {"bars", {{{"x", 4}, {"y", 4}, {"bar_width_px", 2}, {"channel", -1}}}},
  };
  const std::string spec_path = tmp("cli_bars.json");
  write_text(spec_path, scene.dump());
  const std::string out = tmp("cli_bars.hsc");
  EXPECT_EQ(run_cli("gen-scene --kind res-target --spec " + spec_path +
                    " --out " + out),
            0);
  EXPECT_FALSE(slurp(out).empty());
}

TEST(Cli, AnalyzeCondWritesCsv) {
  nlohmann::json cfg = base_config();
  cfg["filter"]["filter_px"] = 2;  // superpixel edge 4 on a 16x16 sensor
  const std::string cfg_path = tmp("cli_cond_cfg.json");
  write_text(cfg_path, cfg.dump());
  const std::string out = tmp("cli_cond.csv");
  ASSERT_EQ(run_cli("analyze-cond --config " + cfg_path + " --out " + out +
                    " --shape 16x16 --mode 2d --max-points 4 "
                    "--separations-superpx 0.5,1.0"),
            0);
  const std::string csv = slurp(out);
  EXPECT_EQ(first_line(csv),
            "num_points,separation_px,separation_superpx,condition_number");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 4 rows
}

TEST(Cli, TwoPointCommandReportsNone) {
  nlohmann::json cfg = base_config();
  cfg["max_iters"] = 3;
  cfg["filter"] = {{"grid", {1, 1}}, {"filter_px", 1}};
  const std::string cfg_path = tmp("cli_tp_cfg.json");
  write_text(cfg_path, cfg.dump());
  const std::string out = tmp("cli_tp.csv");
  const std::string log = tmp("cli_tp.txt");
  ASSERT_EQ(run_cli("two-point --config " + cfg_path +
                        " --channel 0 --shape 16x16 --separations-px 1 --out " +
                        out,
                    log),
            0);
  EXPECT_EQ(first_line(slurp(out)), "separation_px,separation_superpx,resolved");
  EXPECT_NE(slurp(log).find("smallest_resolved_px=none"), std::string::npos);
}

TEST(Cli, ResTargetWritesComparisonCsv) {
  nlohmann::json cfg = base_config();
  cfg["max_iters"] = 5;
  cfg["filter"]["filter_px"] = 2;
  const std::string cfg_path = tmp("cli_rt_cfg.json");
  write_text(cfg_path, cfg.dump());
  const std::string out = tmp("cli_rt.csv");
  ASSERT_EQ(run_cli("res-target --config " + cfg_path + " --out " + out +
                    " --shape 16x16 --bar-width 2"),
            0);
  const std::string csv = slurp(out);
  EXPECT_EQ(first_line(csv), "kind,resolved,psnr_db");
  EXPECT_NE(csv.find("\ndiffuser,"), std::string::npos);
  EXPECT_NE(csv.find("\nlow-na,"), std::string::npos);
  EXPECT_NE(csv.find("\nhigh-na,"), std::string::npos);
}

TEST(Cli, ShapeMismatchExitsTwo) {
  // Scene with one channel against a four-channel filter.
  const std::string cfg_path = tmp("cli_mm_cfg.json");
  write_text(cfg_path, base_config().dump());
  nlohmann::json scene = {
      {"shape", {32, 32}},
      {"wavelengths", {500.0}},
      {"points", {{{"x", 10}, {"y", 16}, {"channel", 0}}}},
  };
  const std::string scene_path = tmp("cli_mm_scene.json");
  write_text(scene_path, scene.dump());
  const std::string psf = tmp("cli_mm.img"), filter = tmp("cli_mm.hsc");
  const std::string cube = tmp("cli_mm_s.hsc");
  ASSERT_EQ(run_cli("gen-psf --kind diffuser --out " + psf + " --shape 32x32"), 0);
  ASSERT_EQ(run_cli("gen-filter --config " + cfg_path + " --out " + filter +
                    " --shape 32x32"),
            0);
  ASSERT_EQ(run_cli("gen-scene --kind points --spec " + scene_path + " --out " +
                    cube),
            0);
  EXPECT_EQ(run_cli("forward --psf " + psf + " --filter " + filter +
                    " --scene " + cube + " --out " + tmp("cli_mm_b.img")),
            2);
}

TEST(Cli, MalformedInputsExitTwo) {
  const std::string not_an_image = tmp("cli_bad.img");
  write_text(not_an_image, "this is not an IMG1 file, padded well past header");
  EXPECT_EQ(run_cli("analyze-autocorr --psf " + not_an_image), 2);

  const std::string bad_cfg = tmp("cli_bad_cfg.json");
  write_text(bad_cfg, R"({"tau1": 1e-4, "bogus": 1})");
  EXPECT_EQ(run_cli("gen-filter --config " + bad_cfg + " --out " +
                    tmp("cli_bad_f.hsc") + " --shape 16x16"),
            2);

  write_text(bad_cfg, R"({"tau1": "high"})");
  EXPECT_EQ(run_cli("gen-filter --config " + bad_cfg + " --out " +
                    tmp("cli_bad_f.hsc") + " --shape 16x16"),
            2);

  EXPECT_EQ(run_cli("reconstruct --psf " + tmp("cli_missing.img") +
                    " --filter x --meas y --config z --out w"),
            2);
}

TEST(Cli, SpectraOutOfBoundsExitsOne) {
  lhsi::HyperspectralCube v(1, 4, 4);
  v.wavelengths_nm = {500.0};
  const std::string cube = tmp("cli_sp.hsc");
  lhsi::write_cube(cube, v);
  EXPECT_EQ(run_cli("spectra --cube " + cube + " --x 99 --y 0 --out " +
                    tmp("cli_sp.csv")),
            1);
}
