#pragma once
// Verification harness: mapping accuracy, boundary-condition residuals,
// equilibrium identities, and parametric sweeps assembled into reports.

#include <seqtunnel/common.hpp>
#include <seqtunnel/conformal.hpp>
#include <seqtunnel/fields.hpp>
#include <seqtunnel/geometry.hpp>
#include <seqtunnel/rh_solver.hpp>

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace seqtunnel::verify {

// Engineering pass gates. The traction scales multiply the reference load
// gamma * crown_depth; the displacement scale multiplies the settlement
// reference gamma * crown_depth^2 / (2G). Changing a threshold changes pass
// flags only, never the computed norms.
struct Thresholds {
  double cavity_traction_scale = 0.01;
  double free_surface_scale = 0.01;
  double constrained_disp_scale = 0.01;
  double equilibrium_rel = 1e-3;
  double resultant_rel = 0.05;
  // Fraction of x0 excluded around each surface joint, where the mixed
  // boundary condition carries an integrable stress concentration.
  double joint_margin_rel = 0.05;

  void validate() const {
    if (!(cavity_traction_scale > 0.0) || !(free_surface_scale > 0.0) ||
        !(constrained_disp_scale > 0.0) || !(equilibrium_rel > 0.0) || !(resultant_rel > 0.0))
      throw ConfigError("thresholds must be positive");
    if (!(joint_margin_rel > 0.0 && joint_margin_rel < 0.5))
      throw ConfigError("joint_margin_rel must lie in (0, 0.5)");
  }
};

// One fully assembled per-stage pipeline.
struct StageSolution {
  geometry::StageBoundary stage;
  conformal::BidirectionalMap map;
  rh::BranchData branch;
  rh::BoundaryFourier bf;
  rh::SeriesSolution sol;
};

struct SolverOptions {
  int M = 250;
  double tol = 1e-12;
  int max_iter = 200;
  int sample_count = 0;  // 0 = automatic
  bool lanczos = true;
};

inline StageSolution solve_stage(const geometry::StageBoundary& stage,
                                 const geometry::Material& mat, double x0,
                                 const conformal::MappingParams& mp = {},
                                 const SolverOptions& opt = {}) {
  StageSolution ss{stage,
                   conformal::build_map(stage, geometry::GroundSplit{x0}, mp),
                   {}, {}, {}};
  ss.branch = rh::branch_data(mat.kappa(), ss.map.t1, ss.map.t2, 2 * opt.M + 64);
  ss.bf = opt.sample_count > 0
              ? rh::boundary_fourier(ss.map, mat, opt.sample_count)
              : rh::boundary_fourier_auto(ss.map, mat, opt.M);
  ss.sol = rh::solve_coeffs(ss.branch, ss.bf, ss.map.alpha, opt.M, opt.tol, opt.max_iter);
  return ss;
}

// Shallowest wall depth below the surface, the load reference length.
inline double crown_depth(const conformal::BidirectionalMap& map) {
  double d = std::numeric_limits<double>::infinity();
  for (const Complex& z : map.colloc_z) d = std::min(d, -z.imag());
  return d;
}

// A closed ccw walk is concave when some turn bends clockwise by more than
// numerical noise. Nearly collinear consecutive points are ignored.
inline bool is_concave(const std::vector<Complex>& walk, double tol = 1e-3) {
  const std::size_t n = walk.size();
  if (n < 4) return false;
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex& p = walk[i];
    const Complex& q = walk[(i + 1) % n];
    area2 += p.real() * q.imag() - q.real() * p.imag();
  }
  const double orient = area2 >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = walk[(i + 1) % n] - walk[i];
    const Complex b = walk[(i + 2) % n] - walk[(i + 1) % n];
    const double den = std::abs(a) * std::abs(b);
    if (den == 0.0) continue;
    const double cross = (a.real() * b.imag() - a.imag() * b.real()) / den;
    if (orient * cross < -tol) return true;
  }
  return false;
}

struct StageReport {
  int stage_index = 0;
  double epsilon_m = 0.0;       // mapping accuracy over contour midpoints
  double alpha = 0.0;
  int iterations_used = 0;
  double lsq_residual = 0.0;
  double area_m2 = 0.0;
  double crown_depth_m = 0.0;
  double peak_mises_kpa = 0.0;
  double max_wall_displacement_m = 0.0;
  double residual_traction_max_kpa = 0.0;      // cavity wall, filtered series
  double free_surface_traction_max_kpa = 0.0;  // |x| <= (1 - margin) x0
  double constrained_displacement_max_m = 0.0; // |x| >= (1 + margin) x0
  double equilibrium_rel_err = 0.0;
  double window_resultant_rel_err = 0.0;
  double resultant_tail_allowance = 0.0;  // decay-based truncation slack
  bool concavity_flag = false;

  bool cavity_ok = false;
  bool free_ok = false;
  bool constrained_ok = false;
  bool equilibrium_ok = false;
  bool resultant_ok = false;

  // A concave stage degrades the wall-traction gate to a warning; every other
  // gate still binds.
  bool passed() const {
    return free_ok && constrained_ok && equilibrium_ok && resultant_ok &&
           (cavity_ok || concavity_flag);
  }
};

namespace detail {

inline std::vector<double> log_spaced(double a, double b, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    xs[static_cast<std::size_t>(i)] = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
  return xs;
}

// Runs fn(0..n-1), possibly on a small thread pool. Results must be written
// into preallocated slots; the first exception is rethrown after join.
template <typename F>
void run_indexed(int n, int n_threads, F&& fn) {
  if (n_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(n_threads, n);
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int t = 0; t < workers - 1; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

inline StageReport verify_stage(const StageSolution& ss, const geometry::Material& mat,
                                double x0, const Thresholds& thr = {}) {
  thr.validate();
  StageReport r;
  r.stage_index = ss.stage.stage_index;
  r.epsilon_m = ss.map.epsilon;
  r.alpha = ss.map.alpha;
  r.iterations_used = ss.sol.iterations;
  r.lsq_residual = ss.sol.lsq_residual;
  r.area_m2 = std::abs(geometry::signed_area(ss.stage.segments));
  r.crown_depth_m = crown_depth(ss.map);
  r.concavity_flag = is_concave(ss.map.colloc_z);

  const double S0 = mat.gamma * r.crown_depth_m;  // load reference, kPa
  const double U0 = mat.gamma * r.crown_depth_m * r.crown_depth_m / (2.0 * mat.G());

  // Cavity wall residuals and headline profile values.
  const fields::CavityProfile cp = fields::cavity_profile(ss.sol, ss.map, mat, 2048);
  r.peak_mises_kpa = cp.peak_mises;
  r.max_wall_displacement_m = cp.max_displacement;
  r.residual_traction_max_kpa = std::max(cp.max_residual_sigma, cp.max_residual_tau);

  // Ground surface: free window and clamped rays outside the joint margin.
  const double margin = thr.joint_margin_rel * x0;
  std::vector<double> xs;
  const int n_window = 481;
  for (int i = 0; i < n_window; ++i)
    xs.push_back(-(x0 - margin) + 2.0 * (x0 - margin) * i / (n_window - 1));
  for (double x : detail::log_spaced(x0 + margin, 100.0 * x0, 160)) {
    xs.push_back(x);
    xs.push_back(-x);
  }
  const fields::GroundProfile gp = fields::ground_profile(ss.sol, ss.map, mat, x0, xs);
  r.free_surface_traction_max_kpa = gp.max_window_traction;
  r.constrained_displacement_max_m = gp.max_outer_displacement;

  // Equilibrium identity: the mean boundary load equals -i gamma Area / 2pi.
  const double ry = mat.gamma * r.area_m2;  // weight of the excavated region
  const Complex i0_exact(0.0, -ry / (2.0 * kPi));
  r.equilibrium_rel_err =
      ry > 0.0 ? std::abs(ss.sol.I0 - i0_exact) / std::abs(i0_exact) : std::abs(ss.sol.I0);

  // Resultant carried by the clamped surface: integrate the total traction
  // (t_x + i t_y) = (tau_xy + i sigma_y) over both outer rays.
  {
    std::vector<double> ray = detail::log_spaced(x0 * 1.001, 100.0 * x0, 600);
    std::vector<double> both;
    for (double x : ray) both.push_back(x);
    for (double x : ray) both.push_back(-x);
    const fields::GroundProfile rp = fields::ground_profile(ss.sol, ss.map, mat, x0, both);
    Complex force(0.0, 0.0);
    double tail = 0.0;
    // rows keep the sample order; integrate each ray separately.
    std::size_t start = 0;
    for (int side = 0; side < 2; ++side) {
      std::size_t end = start;
      while (end < rp.rows.size() && (side == 0 ? rp.rows[end].x > 0 : rp.rows[end].x < 0))
        ++end;
      for (std::size_t i = start; i + 1 < end; ++i) {
        const Complex ta(rp.rows[i].tau_xy, rp.rows[i].sigma_y);
        const Complex tb(rp.rows[i + 1].tau_xy, rp.rows[i + 1].sigma_y);
        force += 0.5 * (ta + tb) * std::abs(rp.rows[i + 1].x - rp.rows[i].x);
      }
      if (end > start) {
        const auto& last = rp.rows[end - 1];
        tail += std::hypot(last.tau_xy, last.sigma_y) * std::abs(last.x);
      }
      start = end;
    }
    if (ry > 0.0) {
      // The clamped surface reacts with -i R_y (it sheds the excavated weight).
      r.window_resultant_rel_err = std::abs(force - Complex(0.0, -ry)) / ry;
      r.resultant_tail_allowance = tail / ry;
    } else {
      r.window_resultant_rel_err = std::abs(force);
      r.resultant_tail_allowance = tail;
    }
  }

  r.cavity_ok = r.residual_traction_max_kpa <= thr.cavity_traction_scale * S0;
  r.free_ok = r.free_surface_traction_max_kpa <= thr.free_surface_scale * S0;
  r.constrained_ok = r.constrained_displacement_max_m <= thr.constrained_disp_scale * U0;
  r.equilibrium_ok = r.equilibrium_rel_err <= thr.equilibrium_rel;
  r.resultant_ok =
      r.window_resultant_rel_err <= thr.resultant_rel + r.resultant_tail_allowance;
  return r;
}

struct VerificationReport {
  Thresholds thresholds;
  std::vector<StageReport> stages;

  bool passed() const {
    if (stages.empty()) return false;
    for (const StageReport& s : stages)
      if (!s.passed()) return false;
    return true;
  }

  void write_text(std::ostream& os) const {
    os << "stage  eps_m       wall_kPa    free_kPa    clamp_m     equil       resultant   verdict\n";
    for (const StageReport& s : stages) {
      os << "  " << s.stage_index << "    " << format_sci(s.epsilon_m) << "  "
         << format_sci(s.residual_traction_max_kpa) << "  "
         << format_sci(s.free_surface_traction_max_kpa) << "  "
         << format_sci(s.constrained_displacement_max_m) << "  "
         << format_sci(s.equilibrium_rel_err) << "  "
         << format_sci(s.window_resultant_rel_err) << "  "
         << (s.passed() ? (s.cavity_ok ? "PASS" : "WARN") : "FAIL")
         << (s.concavity_flag ? " (concave)" : "") << "\n";
    }
    os << "overall: " << (passed() ? "PASS" : "FAIL") << "\n";
  }

  void write_json(std::ostream& os) const {
    auto b = [](bool v) { return v ? "true" : "false"; };
    os << "{\n  \"thresholds\": {\n"
       << "    \"cavity_traction_scale\": " << format_sci(thresholds.cavity_traction_scale)
       << ",\n    \"free_surface_scale\": " << format_sci(thresholds.free_surface_scale)
       << ",\n    \"constrained_disp_scale\": " << format_sci(thresholds.constrained_disp_scale)
       << ",\n    \"equilibrium_rel\": " << format_sci(thresholds.equilibrium_rel)
       << ",\n    \"resultant_rel\": " << format_sci(thresholds.resultant_rel)
       << ",\n    \"joint_margin_rel\": " << format_sci(thresholds.joint_margin_rel)
       << "\n  },\n  \"stages\": [\n";
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const StageReport& s = stages[i];
      os << "    {\n      \"stage_index\": " << s.stage_index
         << ",\n      \"epsilon_m\": " << format_sci(s.epsilon_m)
         << ",\n      \"alpha\": " << format_sci(s.alpha)
         << ",\n      \"iterations_used\": " << s.iterations_used
         << ",\n      \"lsq_residual\": " << format_sci(s.lsq_residual)
         << ",\n      \"area_m2\": " << format_sci(s.area_m2)
         << ",\n      \"crown_depth_m\": " << format_sci(s.crown_depth_m)
         << ",\n      \"peak_mises_kpa\": " << format_sci(s.peak_mises_kpa)
         << ",\n      \"max_wall_displacement_m\": " << format_sci(s.max_wall_displacement_m)
         << ",\n      \"residual_traction_max_kpa\": " << format_sci(s.residual_traction_max_kpa)
         << ",\n      \"free_surface_traction_max_kpa\": "
         << format_sci(s.free_surface_traction_max_kpa)
         << ",\n      \"constrained_displacement_max_m\": "
         << format_sci(s.constrained_displacement_max_m)
         << ",\n      \"equilibrium_rel_err\": " << format_sci(s.equilibrium_rel_err)
         << ",\n      \"window_resultant_rel_err\": " << format_sci(s.window_resultant_rel_err)
         << ",\n      \"resultant_tail_allowance\": " << format_sci(s.resultant_tail_allowance)
         << ",\n      \"concavity_flag\": " << b(s.concavity_flag)
         << ",\n      \"cavity_ok\": " << b(s.cavity_ok) << ",\n      \"free_ok\": " << b(s.free_ok)
         << ",\n      \"constrained_ok\": " << b(s.constrained_ok)
         << ",\n      \"equilibrium_ok\": " << b(s.equilibrium_ok)
         << ",\n      \"resultant_ok\": " << b(s.resultant_ok)
         << ",\n      \"passed\": " << b(s.passed()) << "\n    }" << (i + 1 < stages.size() ? "," : "")
         << "\n";
    }
    os << "  ],\n  \"passed\": " << b(passed()) << "\n}\n";
  }
};

inline VerificationReport verify_stages(const std::vector<geometry::StageBoundary>& stages,
                                        const geometry::Material& mat, double x0,
                                        const conformal::MappingParams& mp = {},
                                        const SolverOptions& opt = {}, const Thresholds& thr = {},
                                        int n_threads = 1) {
  if (stages.empty()) throw ConfigError("verify_stages: stage list is empty");
  thr.validate();
  VerificationReport rep;
  rep.thresholds = thr;
  rep.stages.resize(stages.size());
  detail::run_indexed(static_cast<int>(stages.size()), n_threads, [&](int i) {
    const StageSolution ss = solve_stage(stages[static_cast<std::size_t>(i)], mat, x0, mp, opt);
    rep.stages[static_cast<std::size_t>(i)] = verify_stage(ss, mat, x0, thr);
  });
  return rep;
}

// One row per swept parameter value.
struct SweepResult {
  std::string parameter;
  std::vector<double> values;
  std::vector<double> peak_mises_kpa;
  std::vector<double> max_deformation_m;
  // Successive mean-removed deformation-profile deltas, relative to the last
  // profile's max-norm; size values-1 (width sweeps only, else empty).
  std::vector<double> profile_delta_rel;

  void write_csv(std::ostream& os) const {
    os << parameter << ",peak_mises_kpa,max_deformation_m,profile_delta_rel\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      os << format_sci(values[i]) << ',' << format_sci(peak_mises_kpa[i]) << ','
         << format_sci(max_deformation_m[i]) << ',';
      if (i + 1 < values.size() && i < profile_delta_rel.size())
        os << format_sci(profile_delta_rel[i]);
      os << '\n';
    }
  }
};

namespace detail {

inline void require_strictly_increasing(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string(what) + ": empty value list");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1]))
      throw ConfigError(std::string(what) + ": values must be strictly increasing");
}

}  // namespace detail

// Half-plane width convergence: absolute settlement grows with the clamped
// window width (a plane-strain effect), so profiles are compared after
// removing each profile's mean displacement.
inline SweepResult x0_convergence(const geometry::StageBoundary& stage,
                                  const geometry::Material& mat,
                                  const std::vector<double>& x0_list,
                                  const conformal::MappingParams& mp = {},
                                  const SolverOptions& opt = {}, int n_threads = 1) {
  detail::require_strictly_increasing(x0_list, "x0_convergence");
  SweepResult sr;
  sr.parameter = "x0_m";
  sr.values = x0_list;
  const int n = static_cast<int>(x0_list.size());
  sr.peak_mises_kpa.resize(x0_list.size());
  sr.max_deformation_m.resize(x0_list.size());
  std::vector<std::vector<Complex>> profiles(x0_list.size());

  detail::run_indexed(n, n_threads, [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const StageSolution ss = solve_stage(stage, mat, x0_list[k], mp, opt);
    std::vector<double> thetas;
    thetas.reserve(ss.map.midpoints_z.size());
    for (const Complex& z : ss.map.midpoints_z) thetas.push_back(std::arg(ss.map.to_annulus(z)));
    const auto samples =
        fields::incremental_at(ss.sol, ss.map, mat, ss.map.alpha, thetas, opt.lanczos);
    std::vector<Complex>& u = profiles[k];
    u.reserve(samples.size());
    Complex mean(0.0, 0.0);
    double raw_max = 0.0;
    for (const auto& s : samples) {
      u.emplace_back(s.u, s.v);
      mean += u.back();
      raw_max = std::max(raw_max, std::abs(u.back()));
    }
    mean /= static_cast<double>(u.size());
    for (Complex& c : u) c -= mean;
    sr.max_deformation_m[k] = raw_max;
    const auto cp = fields::cavity_profile(ss.sol, ss.map, mat, 1024, opt.lanczos);
    sr.peak_mises_kpa[k] = cp.peak_mises;
  });

  double ref = 0.0;
  for (const Complex& c : profiles.back()) ref = std::max(ref, std::abs(c));
  for (std::size_t k = 0; k + 1 < profiles.size(); ++k) {
    double d = 0.0;
    for (std::size_t j = 0; j < profiles[k].size(); ++j)
      d = std::max(d, std::abs(profiles[k][j] - profiles[k + 1][j]));
    sr.profile_delta_rel.push_back(ref > 0.0 ? d / ref : 0.0);
  }
  return sr;
}

// Lateral-coefficient sweep on a fixed stage geometry; the map and branch data
// are material-independent and shared across the sweep.
inline SweepResult kx_sweep(const geometry::StageBoundary& stage, geometry::Material mat,
                            const std::vector<double>& kx_list, double x0,
                            const conformal::MappingParams& mp = {},
                            const SolverOptions& opt = {}, int n_threads = 1) {
  detail::require_strictly_increasing(kx_list, "kx_sweep");
  SweepResult sr;
  sr.parameter = "kx";
  sr.values = kx_list;
  sr.peak_mises_kpa.resize(kx_list.size());
  sr.max_deformation_m.resize(kx_list.size());

  const conformal::BidirectionalMap map = conformal::build_map(stage, geometry::GroundSplit{x0}, mp);
  const rh::BranchData branch = rh::branch_data(mat.kappa(), map.t1, map.t2, 2 * opt.M + 64);
  detail::run_indexed(static_cast<int>(kx_list.size()), n_threads, [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    geometry::Material m = mat;
    m.kx = kx_list[k];
    m.validate();
    const rh::BoundaryFourier bf = opt.sample_count > 0
                                       ? rh::boundary_fourier(map, m, opt.sample_count)
                                       : rh::boundary_fourier_auto(map, m, opt.M);
    const rh::SeriesSolution sol =
        rh::solve_coeffs(branch, bf, map.alpha, opt.M, opt.tol, opt.max_iter);
    const auto cp = fields::cavity_profile(sol, map, m, 1024, opt.lanczos);
    sr.peak_mises_kpa[k] = cp.peak_mises;
    sr.max_deformation_m[k] = cp.max_displacement;
  });
  return sr;
}

// Fillet-radius sweep: regenerates the stage geometry per radius.
inline SweepResult corner_sweep(int stage_index, const std::vector<double>& radii,
                                const geometry::Material& mat, double x0,
                                const conformal::MappingParams& mp = {},
                                const SolverOptions& opt = {}, int n_threads = 1,
                                const geometry::DensitySpec& density = {}) {
  detail::require_strictly_increasing(radii, "corner_sweep");
  SweepResult sr;
  sr.parameter = "fillet_radius_m";
  sr.values = radii;
  sr.peak_mises_kpa.resize(radii.size());
  sr.max_deformation_m.resize(radii.size());

  detail::run_indexed(static_cast<int>(radii.size()), n_threads, [&](int i) {
    const std::size_t k = static_cast<std::size_t>(i);
    try {
      const geometry::StageBoundary stage =
          geometry::benchmark_stage(stage_index, radii[k], density);
      const StageSolution ss = solve_stage(stage, mat, x0, mp, opt);
      const auto cp = fields::cavity_profile(ss.sol, ss.map, mat, 2048, opt.lanczos);
      sr.peak_mises_kpa[k] = cp.peak_mises;
      sr.max_deformation_m[k] = cp.max_displacement;
    } catch (const std::exception& e) {
      throw SolveError("corner_sweep at radius " + format_sci(radii[k]) + ": " + e.what());
    }
  });
  return sr;
}

}  // namespace seqtunnel::verify
