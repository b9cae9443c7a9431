// Library walkthrough: solve the first benchmark excavation stage and print
// headline results. Build target: demo_single_stage.
#include <seqtunnel/fields.hpp>
#include <seqtunnel/verify.hpp>

#include <iostream>

using namespace seqtunnel;

int main() {
  // Gravitational geomaterial: unit weight 20 kN/m^3, lateral coefficient
  // 0.8, elasticity 20 MPa, Poisson ratio 0.3.
  const geometry::Material mat{20.0, 0.8, 20000.0, 0.3};

  // Stage geometry: the first benchmark cut (circle capped below the chord
  // y = -10.5), corners rounded at 0.5 m. The constrained ground surface
  // starts 10 m to each side of the tunnel axis.
  const geometry::StageBoundary stage = geometry::benchmark_stage(1);
  const double x0 = 10.0;

  // One call builds the conformal map onto the annulus, expands the branch
  // function and boundary data, and solves for the series coefficients.
  const verify::StageSolution ss = verify::solve_stage(stage, mat, x0);
  std::cout << "stage " << stage.stage_index << ": annulus radius " << ss.map.alpha
            << ", boundary fit " << format_sci(ss.map.epsilon) << " m, "
            << ss.sol.iterations << " solver sweeps\n";

  // Headline wall values from the smoothed series.
  const fields::CavityProfile wall = fields::cavity_profile(ss.sol, ss.map, mat, 720);
  std::cout << "peak wall stress " << wall.peak_mises << " kPa, max wall displacement "
            << wall.max_displacement << " m\n";

  // Spot sample of the total stress state inside the ground, midway between
  // the wall and the ground surface in the annulus frame.
  const double rho = 0.5 * (1.0 + ss.map.alpha);
  const auto samples = fields::total_at(ss.sol, ss.map, mat, rho, {kPi / 2.0});
  const fields::FieldSample s = fields::to_rectangular(samples[0], ss.map);
  std::cout << "at (" << s.z.real() << ", " << s.z.imag() << ") m: sigma_x " << s.sigma_x
            << " kPa, sigma_y " << s.sigma_y << " kPa, tau_xy " << s.tau_xy
            << " kPa, settlement " << s.v << " m\n";

  // Gate the run with the default verification thresholds.
  const verify::StageReport report = verify::verify_stage(ss, mat, x0);
  std::cout << "verification: " << (report.passed() ? "pass" : "wall gate exceeded")
            << " (wall residual " << format_sci(report.residual_traction_max_kpa)
            << " kPa)\n";
  return 0;
}
