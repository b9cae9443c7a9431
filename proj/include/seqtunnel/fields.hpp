#pragma once

// Stress and displacement evaluation in the remaining geomaterial: the
// incremental field from the series solution, the gravitational initial
// field mapped into annulus coordinates, their superposition, and the
// cavity-wall / ground-surface profile tables.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "seqtunnel/common.hpp"
#include "seqtunnel/conformal.hpp"
#include "seqtunnel/fourier.hpp"
#include "seqtunnel/geometry.hpp"
#include "seqtunnel/rh_solver.hpp"

namespace seqtunnel::fields {

enum class Kind { incremental, initial, total };

// One evaluated point. Stresses are tension-positive kPa; displacement is in
// meters. Curvilinear components refer to the local (rho, theta) directions
// of the annulus image; rectangular components are filled by to_rectangular
// (initial samples carry them directly, exactly).
struct FieldSample {
  Complex z;                 // physical location
  double rho = 0.0;          // annulus radius
  double theta = 0.0;        // annulus angle
  double sigma_rho = 0.0;    // curvilinear radial stress
  double sigma_theta = 0.0;  // curvilinear hoop stress
  double tau_rhotheta = 0.0; // curvilinear shear stress
  double sigma_x = 0.0;      // rectangular components, see rect_filled
  double sigma_y = 0.0;
  double tau_xy = 0.0;
  double u = 0.0;            // horizontal displacement
  double v = 0.0;            // vertical displacement
  bool rect_filled = false;
  Kind kind = Kind::incremental;
};

// Fourier data of the window function (z - conj z)/conj(z') on the circle of
// radius rho. At rho = alpha these are the cavity boundary coefficients; at
// rho = 1 the function degenerates to the mapping error on the ground line.
struct RadialExpansion {
  double rho = 0.0;
  int sample_count = 0;
  fourier::Spectrum g;

  int band() const { return sample_count / 2 - 1; }
  Complex g_at(int l) const { return std::abs(l) <= band() ? g.coeff(l) : Complex(0.0, 0.0); }
};

// Largest cavity depth below ground, the reference length of the problem.
inline double depth_scale(const conformal::BidirectionalMap& map) {
  double d = 0.0;
  for (const Complex& z : map.colloc_z) d = std::max(d, -z.imag());
  return d;
}

// abs_floor short-circuits the decay gate: when the whole function is below
// it (the rho = 1 circle degenerates to the ground line, where the exact
// value is zero and only mapping noise remains), resolution is moot.
inline RadialExpansion g_coeffs(const conformal::BidirectionalMap& map, double rho,
                                int sample_count, double decay_tol = 1e-10,
                                double abs_floor = 0.0) {
  if (!(rho >= map.alpha * (1.0 - 1e-12) && rho <= 1.0 + 1e-12))
    throw ConfigError("g_coeffs: rho must lie in [alpha, 1]");
  if (sample_count < 16 || !is_pow2(static_cast<std::size_t>(sample_count)))
    throw ConfigError("g_coeffs: sample_count must be a power of two >= 16");

  const int n = sample_count;
  std::vector<Complex> gs(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const Complex zeta = std::polar(rho, 2.0 * kPi * s / n);
    const Complex w = conformal::cdsm_backward(map.charges, zeta, 0);
    const Complex z = map.mobius.backward(w);
    const Complex zp = map.mobius.dz_dw(w) * conformal::cdsm_backward(map.charges, zeta, 1);
    gs[s] = (z - std::conj(z)) / std::conj(zp);
  }
  RadialExpansion re;
  re.rho = rho;
  re.sample_count = n;
  re.g = fourier::Spectrum(std::move(gs));
  const double mx = re.g.max_abs();
  const double rel = mx > 0.0 ? re.g.tail_abs() / mx : 0.0;
  if (mx > abs_floor && rel > decay_tol)
    throw DecayFailure("window-function spectrum unresolved at " + std::to_string(n) +
                       " samples (band-edge/peak " + format_sci(rel) + " on rho=" +
                       format_sci(rho) + "); increase sample_count");
  return re;
}

inline RadialExpansion g_coeffs_auto(const conformal::BidirectionalMap& map, double rho, int M,
                                     double decay_tol = 1e-10, int max_samples = 1 << 17) {
  const double floor = 1e-8 * depth_scale(map);
  int n = rh::default_sample_count(M);
  for (;;) {
    try {
      return g_coeffs(map, rho, n, decay_tol, floor);
    } catch (const DecayFailure&) {
      if (2 * n > max_samples) throw;
      n *= 2;
    }
  }
}

namespace detail {

// Per-radius series data shared by every angle on the circle: the stabilized
// coefficient products and the window correlation sums.
struct CircleSeries {
  int M = 0;
  double rho = 0.0;
  double alpha = 0.0;
  std::vector<Complex> p1;  // A_k rho^k,      k = -M-1..M+1 (offset M+1)
  std::vector<Complex> p2;  // B_k rho^{-k-2}, k = -M-1..M+1
  std::vector<Complex> dt;  // correlation D_m = sum_l g_{m+l} conj(A_l rho^l), m = -M-1..M+2 (offset M+1)
  std::vector<double> lf;   // per-harmonic smoothing weight, indexed by |k|
  Complex log_term;         // (kappa A_{-1} - B_{-1}) ln rho + C_0
  double kappa = 0.0;
  double two_g = 0.0;       // 2G

  Complex p1_at(int k) const { return p1[static_cast<std::size_t>(k + M + 1)]; }
  Complex p2_at(int k) const { return p2[static_cast<std::size_t>(k + M + 1)]; }
  Complex dt_at(int m) const {
    return (m >= -M - 1 && m <= M + 2) ? dt[static_cast<std::size_t>(m + M + 1)] : Complex(0.0, 0.0);
  }
  double lf_at(int k) const {
    const std::size_t a = static_cast<std::size_t>(k < 0 ? -k : k);
    return a < lf.size() ? lf[a] : 0.0;
  }
};

inline CircleSeries build_circle_series(const rh::SeriesSolution& sol,
                                        const RadialExpansion& re, double rho, double two_g,
                                        bool lanczos) {
  CircleSeries cs;
  const int M = sol.M;
  cs.M = M;
  cs.rho = rho;
  cs.alpha = sol.alpha;
  cs.kappa = sol.kappa;
  cs.two_g = two_g;

  const double ar = sol.alpha / rho;  // <= 1 on the annulus
  std::vector<double> ar_pow(static_cast<std::size_t>(M) + 2, 1.0);
  std::vector<double> rho_pow(static_cast<std::size_t>(M) + 2, 1.0);
  for (int j = 1; j <= M + 1; ++j) {
    ar_pow[j] = ar_pow[j - 1] * ar;
    rho_pow[j] = rho_pow[j - 1] * rho;
  }
  // The smoothing weight applies to complete sigma^k harmonics at evaluation
  // time; the stored products and the correlation stay unfiltered so the
  // traction, trace, and displacement series keep their mutual balance.
  cs.lf.assign(static_cast<std::size_t>(M) + 3, 1.0);
  if (lanczos) cs.lf = sol.lanczos;  // L_M = 0 and lf_at is 0 past the band

  cs.p1.assign(static_cast<std::size_t>(2 * M + 3), Complex(0.0, 0.0));
  cs.p2.assign(static_cast<std::size_t>(2 * M + 3), Complex(0.0, 0.0));
  const double inv_rho2 = 1.0 / (rho * rho);
  for (int k = -M - 1; k <= M + 1; ++k) {
    // A_k rho^k: inward-scaled storage times (alpha/rho)^|k| below the axis.
    const Complex a_term = k < 0 ? sol.A_scaled(k) * ar_pow[static_cast<std::size_t>(-k)]
                                 : sol.A_scaled(k) * rho_pow[static_cast<std::size_t>(k)];
    // B_k rho^{-k}: mirrored scaling, then the extra rho^{-2}.
    const Complex b_term = k > 0 ? sol.B_scaled(k) * ar_pow[static_cast<std::size_t>(k)]
                                 : sol.B_scaled(k) * rho_pow[static_cast<std::size_t>(-k)];
    cs.p1[static_cast<std::size_t>(k + M + 1)] = a_term;
    cs.p2[static_cast<std::size_t>(k + M + 1)] = b_term * inv_rho2;
  }

  cs.dt.assign(static_cast<std::size_t>(2 * M + 4), Complex(0.0, 0.0));
  for (int m = -M - 1; m <= M + 2; ++m) {
    Complex acc(0.0, 0.0);
    for (int l = -M - 1; l <= M + 1; ++l) {
      const Complex e = std::conj(cs.p1_at(l));  // conj(A_l rho^l)
      if (e != Complex(0.0, 0.0)) acc += re.g_at(m + l) * e;
    }
    cs.dt[static_cast<std::size_t>(m + M + 1)] = acc;
  }

  cs.log_term = (sol.kappa * sol.A(-1) - sol.B(-1)) * std::log(rho) + sol.C0;
  return cs;
}

// Evaluates the three series of the incremental field at one angle.
inline void eval_incremental(const CircleSeries& cs, double theta, Complex zp, Complex* rt,
                             double* trace, Complex* disp) {
  const int M = cs.M;
  const Complex sigma = std::polar(1.0, theta);
  const Complex sig_step = sigma;
  // sigma^k running from k = -M-1.
  Complex sig = std::polar(1.0, -(M + 1) * theta);

  Complex s_trace(0.0, 0.0), s_rt(0.0, 0.0), s_disp(0.0, 0.0);
  const double inv_rho = 1.0 / cs.rho;
  for (int k = -M - 1; k <= M + 2; ++k) {
    const double w = cs.lf_at(k);
    if (w != 0.0) {
      const Complex wsig = w * sig;
      if (k <= M + 1) {
        const Complex p1 = cs.p1_at(k);
        s_trace += p1 * wsig;
        s_rt += (p1 - cs.p2_at(k) + double(k + 1) * inv_rho * cs.dt_at(k + 1)) * wsig;
        s_disp -= cs.dt_at(k) * wsig;
      }
      if (k != 0 && k >= -M) {
        // (1/k) (kappa A_{k-1} rho^k + B_{k-1} rho^{-k}) sigma^k via the stored
        // products A_{k-1} rho^{k-1} and B_{k-1} rho^{-k-1}.
        const Complex t = cs.kappa * cs.p1_at(k - 1) + cs.p2_at(k - 1);
        s_disp += (cs.rho / double(k)) * t * wsig;
      }
    }
    sig *= sig_step;
  }
  *trace = 4.0 * (s_trace / zp).real();
  *rt = s_rt / zp;
  *disp = (s_disp + cs.log_term) / cs.two_g;
}

inline void check_joint_zone(const conformal::BidirectionalMap& map, double rho, double theta) {
  if (rho < 1.0 - 1e-9) return;
  const double d1 = std::abs(wrap_angle(theta - std::arg(map.t1)));
  const double d2 = std::abs(wrap_angle(theta - std::arg(map.t2)));
  if (std::min(d1, d2) < 1e-3)
    throw JointSingularity("evaluation within 1e-3 rad of a joint image (theta=" +
                           format_sci(theta) + ")");
}

}  // namespace detail

// Incremental (excavation-induced) field on the circle of radius rho at the
// given angles. Lanczos smoothing of the truncated series is on by default
// and never affects the solved coefficients, only this evaluation.
inline std::vector<FieldSample> incremental_at(const rh::SeriesSolution& sol,
                                               const conformal::BidirectionalMap& map,
                                               const geometry::Material& mat, double rho,
                                               const std::vector<double>& theta_grid,
                                               bool lanczos = true) {
  if (!(rho >= sol.alpha * (1.0 - 1e-12) && rho <= 1.0 + 1e-12))
    throw ConfigError("incremental_at: rho must lie in [alpha, 1]");
  rho = std::min(std::max(rho, sol.alpha), 1.0);
  const RadialExpansion re = g_coeffs_auto(map, rho, sol.M);
  const detail::CircleSeries cs =
      detail::build_circle_series(sol, re, rho, 2.0 * mat.G(), lanczos);

  std::vector<FieldSample> out;
  out.reserve(theta_grid.size());
  for (double th : theta_grid) {
    detail::check_joint_zone(map, rho, th);
    const Complex zeta = std::polar(rho, th);
    const Complex zp = map.dz_dzeta(zeta);
    Complex rt, disp;
    double trace;
    detail::eval_incremental(cs, th, zp, &rt, &trace, &disp);

    FieldSample s;
    s.kind = Kind::incremental;
    s.z = map.from_annulus(zeta);
    s.rho = rho;
    s.theta = th;
    s.sigma_rho = rt.real();
    s.tau_rhotheta = rt.imag();
    s.sigma_theta = trace - rt.real();
    s.u = disp.real();
    s.v = disp.imag();
    out.push_back(s);
  }
  return out;
}

// Gravitational initial field mapped onto the annulus: trace is invariant,
// the deviator rotates by (z'/conj z') sigma^2. Rectangular components are
// exact and filled directly.
inline FieldSample initial_curvilinear_at(const conformal::BidirectionalMap& map,
                                          const geometry::Material& mat, double rho,
                                          double theta) {
  if (!(rho >= map.alpha * (1.0 - 1e-12) && rho <= 1.0 + 1e-12))
    throw ConfigError("initial_curvilinear_at: rho must lie in [alpha, 1]");
  const Complex zeta = std::polar(std::min(std::max(rho, map.alpha), 1.0), theta);
  const Complex z = map.from_annulus(zeta);
  const Complex zp = map.dz_dzeta(zeta);
  const double y = z.imag();
  const double sx = mat.kx * mat.gamma * y;
  const double sy = mat.gamma * y;

  const double trace = sx + sy;
  const Complex rot = (zp / std::conj(zp)) * (zeta * zeta) / std::norm(zeta);
  const Complex dev = (sy - sx) * rot;  // sigma_theta - sigma_rho + 2i tau

  FieldSample s;
  s.kind = Kind::initial;
  s.z = z;
  s.rho = rho;
  s.theta = theta;
  s.sigma_theta = 0.5 * (trace + dev.real());
  s.sigma_rho = 0.5 * (trace - dev.real());
  s.tau_rhotheta = 0.5 * dev.imag();
  s.sigma_x = sx;
  s.sigma_y = sy;
  s.tau_xy = 0.0;
  s.rect_filled = true;
  s.u = 0.0;
  s.v = 0.0;
  return s;
}

// Total field: componentwise curvilinear superposition; displacement is the
// incremental one (pre-excavation displacement is reset to zero).
inline std::vector<FieldSample> total_at(const rh::SeriesSolution& sol,
                                         const conformal::BidirectionalMap& map,
                                         const geometry::Material& mat, double rho,
                                         const std::vector<double>& theta_grid,
                                         bool lanczos = true) {
  std::vector<FieldSample> inc = incremental_at(sol, map, mat, rho, theta_grid, lanczos);
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const FieldSample ini = initial_curvilinear_at(map, mat, rho, theta_grid[i]);
    FieldSample& s = inc[i];
    s.kind = Kind::total;
    s.sigma_rho += ini.sigma_rho;
    s.sigma_theta += ini.sigma_theta;
    s.tau_rhotheta += ini.tau_rhotheta;
    s.rect_filled = false;
  }
  return inc;
}

// Fills the rectangular components from the curvilinear ones through the
// conformal rotation; displacement carries over unchanged.
inline FieldSample to_rectangular(FieldSample s, const conformal::BidirectionalMap& map) {
  const Complex zeta = std::polar(s.rho, s.theta);
  const Complex zp = map.dz_dzeta(zeta);
  if (std::abs(zp) < 1e-12)
    throw ConformalitySingularity("to_rectangular: vanishing map derivative at rho=" +
                                  format_sci(s.rho) + " theta=" + format_sci(s.theta));
  const double trace = s.sigma_theta + s.sigma_rho;
  const Complex dev_curv(s.sigma_theta - s.sigma_rho, 2.0 * s.tau_rhotheta);
  const Complex rot = (std::conj(zeta) / zeta) * (std::conj(zp) / zp);
  const Complex dev = dev_curv * rot;  // sigma_y - sigma_x + 2i tau_xy
  s.sigma_y = 0.5 * (trace + dev.real());
  s.sigma_x = 0.5 * (trace - dev.real());
  s.tau_xy = 0.5 * dev.imag();
  s.rect_filled = true;
  return s;
}

// Cavity-wall profile: Mises stress (absolute hoop stress: on a traction-free
// wall the radial and shear components vanish, so the plane in-plane measure
// reduces to |sigma_theta|; not the 3-D deviatoric formula), residual
// tractions, and deformation.
struct CavityProfile {
  struct Row {
    double theta, x, y, mises, sigma_rho, tau_rhotheta, u, v;
  };
  std::vector<Row> rows;
  double peak_mises = 0.0;
  double peak_mises_theta = 0.0;
  double max_residual_sigma = 0.0;  // max |sigma_rho|
  double max_residual_tau = 0.0;    // max |tau_rhotheta|
  double max_displacement = 0.0;    // max |u + iv|

  void write_csv(std::ostream& os) const {
    os << "theta,x,y,mises_kpa,sigma_rho_kpa,tau_rhotheta_kpa,u_m,v_m\n";
    for (const Row& r : rows)
      os << format_sci(r.theta) << ',' << format_sci(r.x) << ',' << format_sci(r.y) << ','
         << format_sci(r.mises) << ',' << format_sci(r.sigma_rho) << ','
         << format_sci(r.tau_rhotheta) << ',' << format_sci(r.u) << ',' << format_sci(r.v)
         << '\n';
  }
};

inline CavityProfile cavity_profile(const rh::SeriesSolution& sol,
                                    const conformal::BidirectionalMap& map,
                                    const geometry::Material& mat, int n_points,
                                    bool lanczos = true) {
  if (n_points < 8) throw ConfigError("cavity_profile: need at least 8 points");
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) grid[i] = 2.0 * kPi * i / n_points;
  const std::vector<FieldSample> tot = total_at(sol, map, mat, sol.alpha, grid, lanczos);

  CavityProfile cp;
  cp.rows.reserve(tot.size());
  for (const FieldSample& s : tot) {
    CavityProfile::Row r{s.theta, s.z.real(),        s.z.imag(), std::abs(s.sigma_theta),
                         s.sigma_rho, s.tau_rhotheta, s.u,        s.v};
    if (r.mises > cp.peak_mises) {
      cp.peak_mises = r.mises;
      cp.peak_mises_theta = r.theta;
    }
    cp.max_residual_sigma = std::max(cp.max_residual_sigma, std::abs(r.sigma_rho));
    cp.max_residual_tau = std::max(cp.max_residual_tau, std::abs(r.tau_rhotheta));
    cp.max_displacement = std::max(cp.max_displacement, std::hypot(r.u, r.v));
    cp.rows.push_back(r);
  }
  return cp;
}

// Ground-surface profile: total rectangular stress and incremental
// displacement along y = 0. Sample points falling inside a joint exclusion
// zone are skipped.
struct GroundProfile {
  struct Row {
    double x, sigma_x, sigma_y, tau_xy, u, v;
  };
  std::vector<Row> rows;
  double max_window_traction = 0.0;      // max traction magnitude where |x| < x0
  double max_outer_displacement = 0.0;   // max |u + iv| where |x| > x0

  void write_csv(std::ostream& os) const {
    os << "x,sigma_x_kpa,sigma_y_kpa,tau_xy_kpa,u_m,v_m\n";
    for (const Row& r : rows)
      os << format_sci(r.x) << ',' << format_sci(r.sigma_x) << ',' << format_sci(r.sigma_y)
         << ',' << format_sci(r.tau_xy) << ',' << format_sci(r.u) << ',' << format_sci(r.v)
         << '\n';
  }
};

inline GroundProfile ground_profile(const rh::SeriesSolution& sol,
                                    const conformal::BidirectionalMap& map,
                                    const geometry::Material& mat, double x0,
                                    const std::vector<double>& x_samples,
                                    bool lanczos = true) {
  // Thetas of the surface images, excluding the joint zones.
  std::vector<double> thetas;
  std::vector<double> xs;
  thetas.reserve(x_samples.size());
  const double th1 = std::arg(map.t1), th2 = std::arg(map.t2);
  for (double x : x_samples) {
    const Complex zeta = map.to_annulus(Complex(x, 0.0));
    const double th = std::arg(zeta);
    if (std::abs(wrap_angle(th - th1)) < 1e-3 || std::abs(wrap_angle(th - th2)) < 1e-3) continue;
    thetas.push_back(th);
    xs.push_back(x);
  }
  const std::vector<FieldSample> tot = total_at(sol, map, mat, 1.0, thetas, lanczos);

  GroundProfile gp;
  gp.rows.reserve(tot.size());
  for (std::size_t i = 0; i < tot.size(); ++i) {
    const FieldSample s = to_rectangular(tot[i], map);
    GroundProfile::Row r{xs[i], s.sigma_x, s.sigma_y, s.tau_xy, s.u, s.v};
    if (std::abs(r.x) < x0)
      gp.max_window_traction = std::max(gp.max_window_traction, std::hypot(r.sigma_y, r.tau_xy));
    else
      gp.max_outer_displacement = std::max(gp.max_outer_displacement, std::hypot(r.u, r.v));
    gp.rows.push_back(r);
  }
  return gp;
}

}  // namespace seqtunnel::fields
