// Verification-report, sweep, config-parsing, and command-line tests. The
// numeric expectations for the benchmark stages were frozen from converged
// runs at the library's default resolution.
#include <catch2/catch_amalgamated.hpp>

#include <seqtunnel/config.hpp>
#include <seqtunnel/verify.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace seqtunnel;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

const geometry::Material kMat{20.0, 0.8, 20000.0, 0.3};

const verify::StageSolution& stage1_solution() {
  static const verify::StageSolution ss =
      verify::solve_stage(geometry::benchmark_stage(1), kMat, 10.0);
  return ss;
}

config::Json parse_json(const std::string& text) { return config::Json::parse(text); }

fs::path repo_root() { return fs::path(__FILE__).parent_path().parent_path(); }

// Scratch area for command-line artifacts, under the test working directory.
fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = "verify_cli_scratch";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs a shell command and returns its exit status.
int run_shell(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

int run_cli(const std::string& args) { return run_shell("./seqtunnel " + args); }

// Minimal single-stage configuration at reduced series order, for fast runs.
std::string fast_config_text() {
  return R"json({
  "material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
  "ground": {"x0": 10.0},
  "solver": {"M": 120},
  "stages": [{"builtin_stage": 1}]
})json";
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_CASE("stage one verification report matches the converged solution") {
  const verify::StageSolution& ss = stage1_solution();
  const verify::StageReport r = verify::verify_stage(ss, kMat, 10.0);

  REQUIRE(r.stage_index == 1);
  REQUIRE(r.epsilon_m == Approx(2.4835e-4).margin(5e-6));
  REQUIRE(r.alpha > 0.1);
  REQUIRE(r.alpha < 1.0);
  REQUIRE(r.iterations_used > 0);
  REQUIRE(r.iterations_used <= 40);
  REQUIRE(r.lsq_residual < 1e-4);
  REQUIRE(r.area_m2 == Approx(24.7240).margin(2e-3));
  // Crown depth is read off the collocation walk, which straddles the apex.
  REQUIRE(r.crown_depth_m == Approx(5.0).margin(1e-3));
  REQUIRE(r.peak_mises_kpa == Approx(961.14).margin(1.5));
  REQUIRE(r.max_wall_displacement_m == Approx(0.0653).margin(1e-3));
  REQUIRE_FALSE(r.concavity_flag);

  // Residual norms: the truncated-series wall residual exceeds the 1% load
  // reference (1 kPa), while the ground-surface gates sit far inside theirs.
  REQUIRE(r.residual_traction_max_kpa == Approx(1.3782).margin(0.05));
  REQUIRE(r.free_surface_traction_max_kpa == Approx(0.4562).margin(0.02));
  REQUIRE(r.constrained_displacement_max_m < 5e-6);
  REQUIRE(r.constrained_displacement_max_m > 1e-8);
  REQUIRE(r.equilibrium_rel_err < 1e-6);
  REQUIRE(r.window_resultant_rel_err < 0.05);
  REQUIRE(r.resultant_tail_allowance > 0.0);
  REQUIRE(r.resultant_tail_allowance < 0.15);

  REQUIRE_FALSE(r.cavity_ok);
  REQUIRE(r.free_ok);
  REQUIRE(r.constrained_ok);
  REQUIRE(r.equilibrium_ok);
  REQUIRE(r.resultant_ok);
  REQUIRE_FALSE(r.passed());

  // A relaxed wall gate flips only the cavity flag; the norms are unchanged.
  verify::Thresholds relaxed;
  relaxed.cavity_traction_scale = 0.06;
  const verify::StageReport r2 = verify::verify_stage(ss, kMat, 10.0, relaxed);
  REQUIRE(r2.cavity_ok);
  REQUIRE(r2.passed());
  REQUIRE(r2.residual_traction_max_kpa == Approx(r.residual_traction_max_kpa).epsilon(1e-12));
  REQUIRE(r2.peak_mises_kpa == Approx(r.peak_mises_kpa).epsilon(1e-12));
}

TEST_CASE("concave stage downgrades the wall gate to a warning") {
  const verify::StageSolution ss =
      verify::solve_stage(geometry::benchmark_stage(3), kMat, 10.0);
  const verify::StageReport r = verify::verify_stage(ss, kMat, 10.0);

  REQUIRE(r.stage_index == 3);
  REQUIRE(r.concavity_flag);
  // Gibbs overshoot at the re-entrant corner keeps the wall residual far
  // above any realistic gate; the concavity flag turns that into a warning.
  REQUIRE(r.residual_traction_max_kpa > 50.0);
  REQUIRE_FALSE(r.cavity_ok);
  REQUIRE(r.free_surface_traction_max_kpa == Approx(0.9141).margin(0.03));
  REQUIRE(r.free_ok);
  REQUIRE(r.constrained_ok);
  REQUIRE(r.equilibrium_ok);
  REQUIRE(r.resultant_ok);
  REQUIRE(r.passed());
  REQUIRE(r.area_m2 == Approx(68.9126).margin(5e-3));
  REQUIRE(r.peak_mises_kpa == Approx(1546.62).margin(2.0));
}

TEST_CASE("wall concavity classifier") {
  const std::vector<Complex> ccw_square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  REQUIRE_FALSE(verify::is_concave(ccw_square));

  const std::vector<Complex> cw_square{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  REQUIRE_FALSE(verify::is_concave(cw_square));

  // An L-shaped walk has one re-entrant corner regardless of orientation.
  const std::vector<Complex> ell{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  REQUIRE(verify::is_concave(ell));
  std::vector<Complex> ell_cw(ell.rbegin(), ell.rend());
  REQUIRE(verify::is_concave(ell_cw));

  const std::vector<Complex> triangle{{0, 0}, {1, 0}, {0, 1}};
  REQUIRE_FALSE(verify::is_concave(triangle));
}

TEST_CASE("zero gravity passes every gate with null norms") {
  const geometry::Material mat0{0.0, 0.8, 20000.0, 0.3};
  verify::SolverOptions opt;
  opt.M = 60;
  const verify::StageSolution ss =
      verify::solve_stage(geometry::benchmark_stage(1), mat0, 10.0, {}, opt);
  const verify::StageReport r = verify::verify_stage(ss, mat0, 10.0);

  REQUIRE(r.residual_traction_max_kpa == 0.0);
  REQUIRE(r.free_surface_traction_max_kpa == 0.0);
  REQUIRE(r.constrained_displacement_max_m == 0.0);
  REQUIRE(r.equilibrium_rel_err == 0.0);
  REQUIRE(r.window_resultant_rel_err == 0.0);
  REQUIRE(r.peak_mises_kpa == 0.0);
  REQUIRE(r.max_wall_displacement_m == 0.0);
  REQUIRE(r.cavity_ok);
  REQUIRE(r.free_ok);
  REQUIRE(r.constrained_ok);
  REQUIRE(r.equilibrium_ok);
  REQUIRE(r.resultant_ok);
  REQUIRE(r.passed());
}

TEST_CASE("sweep and threshold input validation") {
  const geometry::StageBoundary stage = geometry::benchmark_stage(1);

  REQUIRE_THROWS_AS(verify::x0_convergence(stage, kMat, {}), ConfigError);
  REQUIRE_THROWS_AS(verify::x0_convergence(stage, kMat, {10.0, 10.0}), ConfigError);
  REQUIRE_THROWS_AS(verify::kx_sweep(stage, kMat, {0.8, 0.6}, 10.0), ConfigError);

  // Invalid material values surface from the sweep worker as ConfigError.
  verify::SolverOptions fast;
  fast.M = 40;
  REQUIRE_THROWS_AS(verify::kx_sweep(stage, kMat, {-0.5, 0.8}, 10.0, {}, fast), ConfigError);

  // Geometry failures inside a corner sweep are tagged with the radius.
  REQUIRE_THROWS_AS(verify::corner_sweep(1, {5.0}, kMat, 10.0), SolveError);
  REQUIRE_THROWS_WITH(verify::corner_sweep(1, {5.0}, kMat, 10.0),
                      ContainsSubstring("corner_sweep at radius"));

  REQUIRE_THROWS_AS(verify::verify_stages({}, kMat, 10.0), ConfigError);

  verify::Thresholds bad;
  bad.cavity_traction_scale = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  verify::Thresholds wide;
  wide.joint_margin_rel = 0.6;
  REQUIRE_THROWS_AS(wide.validate(), ConfigError);
}

TEST_CASE("width convergence bookkeeping") {
  const geometry::StageBoundary stage = geometry::benchmark_stage(1);
  verify::SolverOptions opt;
  opt.M = 120;

  const verify::SweepResult single = verify::x0_convergence(stage, kMat, {10.0}, {}, opt);
  REQUIRE(single.parameter == "x0_m");
  REQUIRE(single.values.size() == 1);
  REQUIRE(single.profile_delta_rel.empty());
  REQUIRE(single.peak_mises_kpa[0] > 900.0);
  REQUIRE(single.max_deformation_m[0] > 0.05);

  const verify::SweepResult pair =
      verify::x0_convergence(stage, kMat, {10.0, 100.0}, {}, opt, 2);
  REQUIRE(pair.profile_delta_rel.size() == 1);
  REQUIRE(pair.profile_delta_rel[0] > 0.0);
  REQUIRE(pair.profile_delta_rel[0] < 0.2);
  // Absolute settlement grows with the clamped window width.
  REQUIRE(pair.max_deformation_m[1] > pair.max_deformation_m[0]);

  std::ostringstream csv;
  pair.write_csv(csv);
  const std::string text = csv.str();
  REQUIRE(text.rfind("x0_m,peak_mises_kpa,max_deformation_m,profile_delta_rel\n", 0) == 0);
}

TEST_CASE("lateral coefficient sweep reproduces the frozen trend") {
  const geometry::StageBoundary stage = geometry::benchmark_stage(1);
  const verify::SweepResult sr =
      verify::kx_sweep(stage, kMat, {0.6, 1.0, 1.6}, 10.0, {}, {}, 3);

  REQUIRE(sr.parameter == "kx");
  REQUIRE(sr.profile_delta_rel.empty());
  REQUIRE(sr.peak_mises_kpa[0] == Approx(933.50).margin(1.5));
  REQUIRE(sr.peak_mises_kpa[1] == Approx(1011.40).margin(1.5));
  REQUIRE(sr.peak_mises_kpa[2] == Approx(1292.78).margin(1.5));
  REQUIRE(sr.peak_mises_kpa[0] < sr.peak_mises_kpa[1]);
  REQUIRE(sr.peak_mises_kpa[1] < sr.peak_mises_kpa[2]);
  for (double d : sr.max_deformation_m) REQUIRE(d > 0.05);
}

TEST_CASE("corner radius sweep lowers the peak stress") {
  const verify::SweepResult sr = verify::corner_sweep(3, {0.5, 0.8}, kMat, 10.0, {}, {}, 2);

  REQUIRE(sr.parameter == "fillet_radius_m");
  REQUIRE(sr.peak_mises_kpa[0] == Approx(1546.62).margin(2.0));
  REQUIRE(sr.peak_mises_kpa[1] == Approx(1235.55).margin(2.0));
  REQUIRE(sr.peak_mises_kpa[1] < sr.peak_mises_kpa[0]);
}

TEST_CASE("bundled benchmark configuration parses with expected settings") {
  const config::RunConfig cfg = config::load((repo_root() / "configs" / "benchmark.json").string());

  REQUIRE(cfg.material.gamma == 20.0);
  REQUIRE(cfg.material.kx == 0.8);
  REQUIRE(cfg.material.E == 20000.0);
  REQUIRE(cfg.material.nu == 0.3);
  REQUIRE(cfg.x0 == 10.0);
  REQUIRE(cfg.solver.M == 250);
  REQUIRE(cfg.stages.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    REQUIRE(cfg.stages[i].stage_index == static_cast<int>(i) + 1);
  REQUIRE(cfg.thresholds.cavity_traction_scale == 0.06);
  REQUIRE(cfg.thresholds.free_surface_scale == 0.01);
  REQUIRE(cfg.stages_echo == config::Json(config::kBuiltinStages));
  REQUIRE_FALSE(cfg.sweep.has_value());
}

TEST_CASE("configuration validation rejects malformed input") {
  auto reject = [](const std::string& text) {
    REQUIRE_THROWS_AS(config::parse(parse_json(text)), ConfigError);
  };

  // Required blocks.
  reject(R"({"ground": {"x0": 10.0}, "stages": "benchmark-4stage"})");
  reject(R"({"material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
             "stages": "benchmark-4stage"})");
  reject(R"({"material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
             "ground": {"x0": 10.0}})");

  const std::string head =
      R"("material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3}, "ground": {"x0": 10.0})";
  auto with_head = [&](const std::string& rest) { return "{" + head + rest + "}"; };

  // Stage lists.
  reject(with_head(R"(, "stages": [])"));
  reject(with_head(R"(, "stages": "some-other-name")"));
  reject(with_head(R"(, "stages": [{"builtin_stage": 9}])"));
  reject(with_head(R"(, "stages": [{"unexpected": 1}])"));
  reject(with_head(R"(, "stages": [{"stage_index": 1, "polygon": [[0, -10], [2, -12]]}])"));
  // Oversized fillet and open contour are configuration errors at load time.
  reject(with_head(
      R"(, "stages": [{"stage_index": 1,
                       "polygon": [[-2, -12], [2, -12], [0, -8]],
                       "fillet_radii": [10.0]}])"));
  reject(with_head(
      R"(, "stages": [{"stage_index": 1,
                       "segments": [{"line": [[-2, -12], [2, -12]]},
                                    {"line": [[2, -12], [0, -8]]}]}])"));

  // Unknown keys and wrong types.
  reject(with_head(R"(, "stages": "benchmark-4stage", "materia": {})"));
  reject(R"({"material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3, "rho": 1.0},
             "ground": {"x0": 10.0}, "stages": "benchmark-4stage"})");
  reject(R"({"material": {"gamma": "20", "kx": 0.8, "E": 20000.0, "nu": 0.3},
             "ground": {"x0": 10.0}, "stages": "benchmark-4stage"})");
  reject(R"({"material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
             "ground": {"x0": -1.0}, "stages": "benchmark-4stage"})");

  const std::string tail = R"(, "stages": "benchmark-4stage")";

  // Solver, output, threshold, mapping, and sweep blocks.
  reject(with_head(tail + R"(, "solver": {"M": 0})"));
  reject(with_head(tail + R"(, "solver": {"sample_count": 100})"));
  reject(with_head(tail + R"(, "outputs": {"cavity_points": 4})"));
  reject(with_head(tail + R"(, "thresholds": {"cavity_traction_scale": -0.1})"));
  reject(with_head(tail + R"(, "thresholds": {"joint_margin_rel": 0.6})"));
  reject(with_head(tail + R"(, "mapping": {"w0_factor": 1.5})"));
  reject(with_head(tail + R"(, "mapping": {"z_c": [1.0]})"));
  reject(with_head(tail + R"(, "mapping": {"charge_depth": 2.0})"));
  reject(with_head(tail + R"(, "sweep": {"kind": "bogus", "values": [1.0, 2.0]})"));
  reject(with_head(tail + R"(, "sweep": {"kind": "kx", "values": [1.0, 0.5]})"));
  reject(with_head(tail + R"(, "sweep": {"kind": "kx"})"));
}

TEST_CASE("stage geometry accepts builtin, polygon, and segment forms") {
  const std::string head =
      R"("material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3}, "ground": {"x0": 10.0})";

  const config::RunConfig builtin = config::parse(parse_json(
      "{" + head + R"(, "stages": [{"builtin_stage": 2, "fillet_radius": 0.3}]})"));
  REQUIRE(builtin.stages.size() == 1);
  REQUIRE(builtin.stages[0].stage_index == 2);
  REQUIRE_FALSE(builtin.stages[0].segments.empty());

  // A counterclockwise square below the surface, filleted at all corners.
  const config::RunConfig poly = config::parse(parse_json("{" + head + R"(, "stages": [
      {"stage_index": 1,
       "polygon": [[-2.0, -14.0], [2.0, -14.0], [2.0, -10.0], [-2.0, -10.0]],
       "fillet_radii": [0.5]}]})"));
  REQUIRE(poly.stages.size() == 1);
  REQUIRE(poly.stages[0].segments.size() == 8);  // four lines, four corner arcs

  // A circle described as two explicit half-circle arcs.
  const config::RunConfig segs = config::parse(parse_json("{" + head + R"(, "stages": [
      {"stage_index": 1,
       "segments": [
         {"arc": {"center": [0.0, -10.0], "radius": 2.0, "start_angle": 0.0,
                  "sweep": 3.141592653589793}},
         {"arc": {"center": [0.0, -10.0], "radius": 2.0, "start_angle": 3.141592653589793,
                  "sweep": 3.141592653589793}}]}]})"));
  REQUIRE(segs.stages.size() == 1);
  REQUIRE(segs.stages[0].segments.size() == 2);
  REQUIRE(geometry::contains(segs.stages[0].segments, Complex(0.0, -10.0)));
}

TEST_CASE("effective configuration echo round-trips") {
  const std::string text = R"json({
    "material": {"gamma": 18.5, "kx": 1.1, "E": 15000.0, "nu": 0.25},
    "ground": {"x0": 12.0},
    "solver": {"M": 90, "lanczos": false},
    "mapping": {"beta": 6.0, "z_c": [-1.0, -8.0], "factor_ext": 2.5},
    "thresholds": {"cavity_traction_scale": 0.05},
    "outputs": {"directory": "results", "coefficients": false},
    "sweep": {"kind": "kx", "stage_index": 1, "values": [0.6, 1.0]},
    "stages": [{"builtin_stage": 1}]
  })json";

  const config::RunConfig cfg = config::parse(parse_json(text));
  REQUIRE(cfg.solver.M == 90);
  REQUIRE_FALSE(cfg.solver.lanczos);
  REQUIRE(cfg.mapping.beta == 6.0);
  REQUIRE(cfg.mapping.z_c.has_value());
  REQUIRE(cfg.mapping.z_c->real() == -1.0);
  REQUIRE(cfg.mapping.z_c->imag() == -8.0);
  REQUIRE(cfg.outputs.directory == "results");
  REQUIRE(cfg.sweep.has_value());
  REQUIRE(cfg.sweep->kind == "kx");

  // The echo parses back to an identical echo: a fixed point of the parser.
  const config::Json echo = cfg.effective();
  const config::RunConfig cfg2 = config::parse(echo);
  REQUIRE(cfg2.effective() == echo);
  REQUIRE(echo.at("material").at("gamma").get<double>() == 18.5);
  REQUIRE(echo.at("mapping").at("z_c")[0].get<double>() == -1.0);
}

TEST_CASE("command line rejects bad invocations") {
  REQUIRE(fs::exists("seqtunnel"));
  const fs::path dir = scratch_dir();

  spit(dir / "fast.json", fast_config_text());
  spit(dir / "broken.json", "{ not json");
  spit(dir / "empty_stages.json",
       R"({"material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
           "ground": {"x0": 10.0}, "stages": []})");

  REQUIRE(run_cli("") == 2);
  REQUIRE(run_cli("frobnicate") == 2);
  REQUIRE(run_cli("solve") == 2);
  REQUIRE(run_cli("solve --config " + (dir / "missing.json").string()) == 2);
  REQUIRE(run_cli("solve --config " + (dir / "broken.json").string()) == 2);
  REQUIRE(run_cli("solve --config " + (dir / "empty_stages.json").string()) == 2);
  REQUIRE(run_cli("solve --config " + (dir / "fast.json").string() + " --stage 9") == 2);
  // A sweep command needs a sweep block in the configuration.
  REQUIRE(run_cli("sweep --config " + (dir / "fast.json").string()) == 2);
  // Thread-count overrides are validated before any work starts.
  REQUIRE(run_shell("SEQTUNNEL_THREADS=abc ./seqtunnel verify --config " +
                    (dir / "fast.json").string()) == 2);
}

TEST_CASE("solve writes deterministic artifacts") {
  REQUIRE(fs::exists("seqtunnel"));
  const fs::path dir = scratch_dir();
  spit(dir / "fast.json", fast_config_text());

  const fs::path d1 = dir / "solve_a";
  const fs::path d2 = dir / "solve_b";
  REQUIRE(run_cli("solve --config " + (dir / "fast.json").string() + " --out " + d1.string()) == 0);
  REQUIRE(run_cli("solve --config " + (dir / "fast.json").string() + " --out " + d2.string()) == 0);

  for (const char* name : {"cavity_profile.csv", "ground_profile.csv", "coefficients.csv"}) {
    const fs::path a = d1 / "stage_1" / name;
    const fs::path b = d2 / "stage_1" / name;
    REQUIRE(fs::exists(a));
    REQUIRE(slurp(a) == slurp(b));
  }

  // The echoed configuration is valid JSON carrying the effective settings.
  const config::Json echo = parse_json(slurp(d1 / "effective_config.json"));
  REQUIRE(echo.at("material").at("gamma").get<double>() == 20.0);
  REQUIRE(echo.at("solver").at("M").get<int>() == 120);

  const std::string cavity = slurp(d1 / "stage_1" / "cavity_profile.csv");
  REQUIRE(cavity.rfind("theta,", 0) == 0);
  const std::string ground = slurp(d1 / "stage_1" / "ground_profile.csv");
  REQUIRE(ground.rfind("x,", 0) == 0);
}

TEST_CASE("map-only reports the boundary fit") {
  REQUIRE(fs::exists("seqtunnel"));
  const fs::path dir = scratch_dir();
  spit(dir / "fast.json", fast_config_text());

  const fs::path out = dir / "map_only";
  REQUIRE(run_cli("map-only --config " + (dir / "fast.json").string() + " --out " + out.string()) ==
          0);

  std::istringstream fit(slurp(out / "stage_1" / "map_fit.csv"));
  std::string line;
  REQUIRE(std::getline(fit, line));
  REQUIRE(line == "x,y,theta,recovered_x,recovered_y,err_m");
  double max_err = 0.0;
  int rows = 0;
  while (std::getline(fit, line)) {
    const auto cells = split_csv_row(line);
    REQUIRE(cells.size() == 6);
    max_err = std::max(max_err, std::stod(cells[5]));
    ++rows;
  }
  REQUIRE(rows > 100);
  REQUIRE(max_err < 1e-3);
  REQUIRE(max_err > 0.0);

  std::istringstream grid(slurp(out / "stage_1" / "map_grid.csv"));
  REQUIRE(std::getline(grid, line));
  REQUIRE(line == "rho,theta,x,y");
}

TEST_CASE("verify command gates the run") {
  REQUIRE(fs::exists("seqtunnel"));
  const fs::path dir = scratch_dir();
  spit(dir / "fast.json", fast_config_text());

  // Default thresholds: the wall-residual gate fails on a convex stage.
  const fs::path strict_out = dir / "verify_strict";
  REQUIRE(run_cli("verify --config " + (dir / "fast.json").string() + " --out " +
                  strict_out.string()) == 1);
  const config::Json strict = parse_json(slurp(strict_out / "verify_report.json"));
  REQUIRE(strict.at("passed").get<bool>() == false);
  REQUIRE(strict.at("stages").size() == 1);
  REQUIRE(strict.at("stages")[0].at("cavity_ok").get<bool>() == false);
  REQUIRE(strict.at("stages")[0].at("equilibrium_ok").get<bool>() == true);

  // The bundled benchmark configuration relaxes the wall gate and passes.
  const fs::path bench_out = dir / "verify_bench";
  REQUIRE(run_cli("verify --config " + (repo_root() / "configs" / "benchmark.json").string() +
                  " --stage 1 --out " + bench_out.string()) == 0);
  const config::Json bench = parse_json(slurp(bench_out / "verify_report.json"));
  REQUIRE(bench.at("passed").get<bool>() == true);
  REQUIRE(bench.at("stages").size() == 1);
  REQUIRE(bench.at("stages")[0].at("stage_index").get<int>() == 1);
  REQUIRE(bench.at("stages")[0].at("passed").get<bool>() == true);
}

TEST_CASE("sweep command writes the requested table") {
  REQUIRE(fs::exists("seqtunnel"));
  const fs::path dir = scratch_dir();

  spit(dir / "sweep.json", R"json({
  "material": {"gamma": 20.0, "kx": 0.8, "E": 20000.0, "nu": 0.3},
  "ground": {"x0": 10.0},
  "solver": {"M": 120},
  "stages": [{"builtin_stage": 1}],
  "sweep": {"kind": "kx", "stage_index": 1, "values": [0.6, 1.0]}
})json");

  const fs::path out = dir / "sweep_out";
  REQUIRE(run_cli("sweep --config " + (dir / "sweep.json").string() + " --out " + out.string()) ==
          0);

  std::istringstream csv(slurp(out / "sweep_kx.csv"));
  std::string line;
  REQUIRE(std::getline(csv, line));
  REQUIRE(line == "kx,peak_mises_kpa,max_deformation_m,profile_delta_rel");
  REQUIRE(std::getline(csv, line));
  auto row = split_csv_row(line);
  REQUIRE(std::stod(row[0]) == Approx(0.6));
  REQUIRE(std::stod(row[1]) == Approx(932.988).margin(0.5));
  REQUIRE(std::getline(csv, line));
  row = split_csv_row(line);
  REQUIRE(std::stod(row[0]) == Approx(1.0));
  REQUIRE(std::stod(row[1]) == Approx(1011.57).margin(0.5));
}
