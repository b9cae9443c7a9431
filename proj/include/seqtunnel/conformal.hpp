#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "seqtunnel/common.hpp"
#include "seqtunnel/geometry.hpp"

namespace seqtunnel::conformal {

// First mapping step: lower half-plane onto the interior of |w| = beta, with
// the cavity reference point z_c sent to w = 0 and the real axis to the circle.
struct MobiusMap {
  Complex z_c;
  double beta = 1.0;

  void validate() const {
    if (z_c.imag() >= 0.0) throw ConfigError("mobius: reference point must lie below ground");
    if (beta <= 0.0) throw ConfigError("mobius: beta must be > 0");
  }

  Complex forward(Complex z) const {
    const Complex den = z - std::conj(z_c);
    if (std::abs(den) < 1e-14) throw PoleHit("mobius forward at the mirror point of z_c");
    return beta * (z - z_c) / den;
  }

  Complex backward(Complex w) const {
    const Complex den = w - beta;
    if (std::abs(den) < 1e-14 * beta) throw PoleHit("mobius backward at w = beta (z = infinity)");
    return (w * std::conj(z_c) - beta * z_c) / den;
  }

  Complex dz_dw(Complex w) const {
    const Complex den = w - beta;
    if (std::abs(den) < 1e-14 * beta) throw PoleHit("mobius derivative at w = beta");
    const Complex D = beta * (z_c - std::conj(z_c));
    return D / (den * den);
  }

  Complex d2z_dw2(Complex w) const {
    const Complex den = w - beta;
    if (std::abs(den) < 1e-14 * beta) throw PoleHit("mobius derivative at w = beta");
    const Complex D = beta * (z_c - std::conj(z_c));
    return -2.0 * D / (den * den * den);
  }
};

// Charges and normalization data of the two simulation-method solves.
struct ChargeSet {
  // Forward map (charge simulation): real charges at w-plane points.
  std::vector<Complex> U, V;
  Eigen::VectorXd P, Q;
  double log_re = 0.0;
  double log_alpha = 0.0;
  // Backward map (complex dipole simulation): complex charges at zeta-plane points.
  std::vector<Complex> eta, mu;
  Eigen::VectorXcd p, q;
  // Normalization points.
  Complex w_c, w_beta, w_0;
  double beta = 1.0;
  // Cached log offsets of the single-valued forward form. The interior sum is
  // evaluated by parts (partial charge sums against consecutive-charge log
  // differences) so every branch cut stays inside the cavity image even for
  // concave cross sections; Q_partial(m) = Q(0) + ... + Q(m).
  std::vector<Complex> log_u_ref, log_v_ref;
  Eigen::VectorXd Q_partial;
  // Diagnostics.
  double forward_residual = 0.0, backward_residual = 0.0;
  double forward_cond = 0.0, backward_cond = 0.0;
  double mu_factor_used = 0.0;  // interior dipole depth factor after fallback

  double alpha() const { return std::exp(log_alpha); }
};

// Charge placement: each collocation point displaced along the outward normal
// implied by the traversal direction by factor times the mean adjacent spacing.
inline std::vector<Complex> place_charges(const std::vector<Complex>& colloc, double factor) {
  if (factor <= 0.0) throw ConfigError("assignment factor must be > 0");
  const std::size_t n = colloc.size();
  if (n < 3) throw ConfigError("charge placement needs >= 3 collocation points");
  std::vector<Complex> charges(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex prev = colloc[(k + n - 1) % n];
    const Complex next = colloc[(k + 1) % n];
    const double h1 = std::abs(colloc[k] - prev);
    const double h2 = std::abs(next - colloc[k]);
    if (h1 == 0.0 || h2 == 0.0 || std::abs(next - prev) == 0.0)
      throw DegenerateSpacing("coincident neighbors at collocation index " + std::to_string(k));
    const double H = 0.5 * (h1 + h2);
    const double theta = std::arg(next - prev) - kPi / 2.0;
    charges[k] = colloc[k] + factor * H * std::polar(1.0, theta);
  }
  return charges;
}

struct CsmSolution {
  Eigen::VectorXd P, Q;
  double log_re = 0.0;
  double log_alpha = 0.0;
  double residual = 0.0;
  double cond = 0.0;
};

// Fills the cached log offsets and charge partial sums used by eval_forward.
// Call after U, V, P, Q, w_c, w_beta, w_0 are set.
inline void finalize_forward_cache(ChargeSet& cs) {
  cs.log_u_ref.resize(cs.U.size());
  for (std::size_t k = 0; k < cs.U.size(); ++k) {
    cs.log_u_ref[k] = std::log((cs.w_beta - cs.U[k]) / (cs.w_0 - cs.U[k]));
  }
  const int nv = static_cast<int>(cs.V.size());
  cs.Q_partial.resize(nv);
  double running = 0.0;
  for (int k = 0; k < nv; ++k) {
    running += cs.Q(k);
    cs.Q_partial(k) = running;
  }
  cs.log_v_ref.resize(cs.V.size());
  for (int m = 0; m + 1 < nv; ++m) {
    cs.log_v_ref[m] = std::log((cs.w_beta - cs.V[m]) / (cs.w_beta - cs.V[m + 1]));
  }
  cs.log_v_ref[nv - 1] = std::log((cs.w_beta - cs.V[nv - 1]) / (cs.w_beta - cs.w_c));
}

// Dense real solve of the forward-map system: boundary moduli plus the two
// charge-sum constraints sum(P) = -1 and sum(Q) = 0.
inline CsmSolution solve_forward_map(const std::vector<Complex>& colloc_ext,
                                     const std::vector<Complex>& colloc_int,
                                     const std::vector<Complex>& U, const std::vector<Complex>& V,
                                     Complex w_c, Complex w_beta) {
  const int n0 = static_cast<int>(colloc_ext.size());
  const int nj = static_cast<int>(colloc_int.size());
  const int nu = static_cast<int>(U.size());
  const int nv = static_cast<int>(V.size());
  const int n = nu + nv + 2;
  if (n0 + nj + 2 != n) throw SingularSystem("forward system is not square");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  auto fill_row = [&](int row, Complex w, bool exterior) {
    for (int k = 0; k < nu; ++k) A(row, k) = std::log(std::abs((w - U[k]) / (w_beta - U[k])));
    for (int k = 0; k < nv; ++k)
      A(row, nu + k) = std::log(std::abs((w - V[k]) / (w_beta - V[k])));
    A(row, nu + nv + (exterior ? 0 : 1)) = -1.0;
    b(row) = -std::log(std::abs((w - w_c) / (w_beta - w_c)));
  };
  for (int i = 0; i < n0; ++i) fill_row(i, colloc_ext[i], true);
  for (int i = 0; i < nj; ++i) fill_row(n0 + i, colloc_int[i], false);
  for (int k = 0; k < nu; ++k) A(n - 2, k) = 1.0;
  b(n - 2) = -1.0;
  for (int k = 0; k < nv; ++k) A(n - 1, nu + k) = 1.0;
  b(n - 1) = 0.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd x = lu.solve(b);
  const double resid = (A * x - b).cwiseAbs().maxCoeff() / (b.cwiseAbs().maxCoeff() + 1.0);
  if (!x.allFinite() || resid > 1e-10) {
    throw SingularSystem("forward-map solve residual " + std::to_string(resid) +
                         " (rcond " + std::to_string(lu.rcond()) + ")");
  }
  CsmSolution s;
  s.P = x.segment(0, nu);
  s.Q = x.segment(nu, nv);
  s.log_re = x(nu + nv);
  s.log_alpha = x(nu + nv + 1);
  s.residual = resid;
  s.cond = 1.0 / std::max(lu.rcond(), 1e-300);
  return s;
}

// Single-valued forward evaluation. Exterior terms: each logarithm is a
// difference against the reference point w_0, whose branch cut is a ray that
// never meets the disk |w| <= beta. Interior terms: summation by parts turns
// the charge sum into partial sums times logs of consecutive-charge ratios,
// whose cuts are chords between neighboring charges deep inside the cavity
// image. The residual cut of the final term is weighted by the total interior
// charge, which the solve constrains to zero. No branch tracking anywhere.
inline Complex eval_forward(const ChargeSet& cs, Complex w) {
  if (std::abs(w) > 1.05 * cs.beta) {
    throw OutsideDomain("forward evaluation at |w| = " + std::to_string(std::abs(w)) +
                        " outside the interval annulus of radius " + std::to_string(cs.beta));
  }
  const Complex dc = w - cs.w_c;
  if (std::abs(dc) < 1e-13 * cs.beta) throw PoleHit("forward evaluation at w_c");
  Complex s(0.0, 0.0);
  for (std::size_t k = 0; k < cs.U.size(); ++k) {
    const Complex d = w - cs.U[k];
    if (std::abs(d) < 1e-13 * cs.beta) throw ChargePointHit("exterior charge hit");
    s += cs.P(static_cast<int>(k)) * (std::log(d / (cs.w_0 - cs.U[k])) - cs.log_u_ref[k]);
  }
  const int nv = static_cast<int>(cs.V.size());
  Complex d_cur = w - cs.V[0];
  if (std::abs(d_cur) < 1e-13 * cs.beta) throw ChargePointHit("interior charge hit");
  for (int m = 0; m + 1 < nv; ++m) {
    const Complex d_next = w - cs.V[m + 1];
    if (std::abs(d_next) < 1e-13 * cs.beta) throw ChargePointHit("interior charge hit");
    s += cs.Q_partial(m) * (std::log(d_cur / d_next) - cs.log_v_ref[m]);
    d_cur = d_next;
  }
  s += cs.Q_partial(nv - 1) * (std::log(d_cur / dc) - cs.log_v_ref[nv - 1]);
  return dc / (cs.w_beta - cs.w_c) * std::exp(s);
}

struct CdsmSolution {
  Eigen::VectorXcd p, q;
  double residual = 0.0;
  double cond = 0.0;
};

// Dense complex solve of the backward interpolation system.
inline CdsmSolution solve_backward_map(const std::vector<Complex>& zeta_colloc,
                                       const std::vector<Complex>& w_colloc,
                                       const std::vector<Complex>& eta,
                                       const std::vector<Complex>& mu) {
  const int n = static_cast<int>(zeta_colloc.size());
  const int ne = static_cast<int>(eta.size());
  const int nm = static_cast<int>(mu.size());
  if (n != ne + nm || n != static_cast<int>(w_colloc.size()))
    throw SingularSystem("backward system is not square");

  Eigen::MatrixXcd A(n, n);
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < ne; ++k) A(i, k) = 1.0 / (zeta_colloc[i] - eta[k]);
    for (int k = 0; k < nm; ++k) A(i, ne + k) = 1.0 / (zeta_colloc[i] - mu[k]);
    b(i) = w_colloc[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
  Eigen::VectorXcd x = qr.solve(b);
  // One sweep of iterative refinement recovers the interpolation residual on
  // the deeply placed (ill-conditioned but solvable) dipole rings.
  x += qr.solve(b - A * x);
  double bmax = 0.0, rmax = 0.0;
  const Eigen::VectorXcd r = A * x - b;
  for (int i = 0; i < n; ++i) {
    bmax = std::max(bmax, std::abs(b(i)));
    rmax = std::max(rmax, std::abs(r(i)));
  }
  const double resid = rmax / (bmax + 1.0);
  const double diag_ratio =
      std::abs(qr.matrixR()(n - 1, n - 1)) / (std::abs(qr.matrixR()(0, 0)) + 1e-300);
  if (!x.allFinite() || resid > 1e-10) {
    throw SingularSystem("backward-map solve residual " + format_sci(resid) +
                         " (pivot ratio " + format_sci(diag_ratio) + ")");
  }
  CdsmSolution s;
  s.p = x.segment(0, ne);
  s.q = x.segment(ne, nm);
  s.residual = resid;
  s.cond = 1.0 / std::max(diag_ratio, 1e-300);
  return s;
}

// Backward rational evaluation: w(zeta) or its first or second derivative.
inline Complex cdsm_backward(const ChargeSet& cs, Complex zeta, int order) {
  if (order < 0 || order > 2) throw ConfigError("cdsm_backward order must be 0, 1 or 2");
  Complex s(0.0, 0.0);
  auto accumulate = [&](const std::vector<Complex>& pts, const Eigen::VectorXcd& charge) {
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Complex d = zeta - pts[k];
      if (std::abs(d) < 1e-14) throw ChargePointHit("backward charge hit");
      const Complex c = charge(static_cast<int>(k));
      if (order == 0) {
        s += c / d;
      } else if (order == 1) {
        s -= c / (d * d);
      } else {
        s += 2.0 * c / (d * d * d);
      }
    }
  };
  accumulate(cs.eta, cs.p);
  accumulate(cs.mu, cs.q);
  return s;
}

// Composite bidirectional map: physical plane <-> unit annulus.
struct BidirectionalMap {
  MobiusMap mobius;
  ChargeSet charges;
  double alpha = 0.0;
  Complex t1, t2;       // joint images on the unit circle
  double epsilon = 0.0; // round-trip accuracy, meters
  double boundary_fit = 0.0;  // max | |zeta| - target | over boundary collocations
  std::vector<Complex> colloc_z;      // physical cavity collocations, ccw
  std::vector<Complex> midpoints_z;   // on-contour midpoints between collocations
  std::vector<Complex> colloc_w_ext;  // exterior circle collocations, ccw

  Complex to_annulus(Complex z) const { return eval_forward(charges, mobius.forward(z)); }

  Complex from_annulus(Complex zeta) const {
    return mobius.backward(cdsm_backward(charges, zeta, 0));
  }

  Complex dz_dzeta(Complex zeta) const {
    const Complex w = cdsm_backward(charges, zeta, 0);
    return mobius.dz_dw(w) * cdsm_backward(charges, zeta, 1);
  }

  Complex d2z_dzeta2(Complex zeta) const {
    const Complex w = cdsm_backward(charges, zeta, 0);
    const Complex dw = cdsm_backward(charges, zeta, 1);
    return mobius.d2z_dw2(w) * dw * dw + mobius.dz_dw(w) * cdsm_backward(charges, zeta, 2);
  }

  // Image of the ground-surface origin, on the free arc of the unit circle.
  Complex sigma_free() const {
    Complex s = to_annulus(Complex(0.0, 0.0));
    return s / std::abs(s);
  }
};

// Round-trip accuracy: forward-map each probe, project radially to the cavity
// circle preserving the polar angle, map back, take the largest deviation.
inline double map_accuracy(const BidirectionalMap& map, const std::vector<Complex>& probes) {
  double worst = 0.0;
  for (const Complex& z : probes) {
    const Complex zeta = map.to_annulus(z);
    const Complex back = map.from_annulus(map.alpha * zeta / std::abs(zeta));
    worst = std::max(worst, std::abs(back - z));
  }
  return worst;
}

inline std::pair<Complex, Complex> joint_images(const BidirectionalMap& map, Complex T1,
                                                Complex T2) {
  Complex t1 = map.to_annulus(T1);
  Complex t2 = map.to_annulus(T2);
  t1 /= std::abs(t1);
  t2 /= std::abs(t2);
  if (std::abs(t1 - t2) < 1e-8) {
    throw CoincidentJoints("joint images coincide at " + std::to_string(t1.real()) + " + " +
                           std::to_string(t1.imag()) + "i");
  }
  return {t1, t2};
}

struct MappingParams {
  double beta = 5.0;
  std::optional<Complex> z_c;  // default: cavity centroid
  std::optional<Complex> w_c;  // default: Moebius image of the centroid
  double w0_factor = 0.9;
  // Assignment factors (charge offset over mean collocation spacing). The
  // achievable boundary fit saturates near exp(-2*pi*K) regardless of the
  // point count, so 3.0/2.0 keeps the round-trip identity below 1e-6 across
  // the whole annulus while the systems stay well conditioned.
  double factor_ext = 3.0;  // forward exterior assignment factor
  double factor_int = 2.0;  // forward interior assignment factor
  double backward_factor_ext = 3.0;
  // The deep interior dipole ring pushes the backward map's singularities
  // well inside the cavity circle, which keeps the boundary-data spectrum
  // decaying fast enough for the truncated series; the square solve stays
  // within its residual budget at this depth.
  double backward_factor_int = 4.0;
  int exterior_points = 300;

  void validate() const {
    if (beta <= 0.0) throw ConfigError("mapping: beta must be > 0");
    if (w0_factor <= 0.0 || w0_factor >= 1.0)
      throw ConfigError("mapping: w0 factor must be in (0, 1)");
    if (factor_ext <= 0.0 || factor_int <= 0.0 || backward_factor_ext <= 0.0 ||
        backward_factor_int <= 0.0)
      throw ConfigError("mapping: assignment factors must be > 0");
    if (exterior_points < 16) throw ConfigError("mapping: need >= 16 exterior points");
  }
};

namespace detail {

inline double polygon_winding(const std::vector<Complex>& pts, Complex z) {
  double total = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    total += std::arg((pts[(i + 1) % n] - z) / (pts[i] - z));
  }
  return total / (2.0 * kPi);
}

inline double polygon_perimeter(const std::vector<Complex>& pts) {
  double p = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    p += std::abs(pts[(i + 1) % pts.size()] - pts[i]);
  }
  return p;
}

}  // namespace detail

// On-contour midpoints between consecutive collocation cells (the cell edges
// of the cell-centered collocation rule).
inline std::vector<Complex> contour_midpoints(const geometry::StageBoundary& b) {
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < b.segments.size(); ++i) {
    const int c = b.colloc_counts[i];
    for (int k = 0; k < c; ++k) {
      pts.push_back(geometry::segment_point(b.segments[i], static_cast<double>(k) / c));
    }
  }
  return pts;
}

// Builds the full bidirectional map for one stage.
inline BidirectionalMap build_map(const geometry::StageBoundary& stage,
                                  const geometry::GroundSplit& ground,
                                  const MappingParams& params) {
  params.validate();
  if (ground.x0 <= geometry::max_horizontal_extent(stage.segments)) {
    throw ConfigError("ground split x0 must exceed the cavity's horizontal extent");
  }

  BidirectionalMap map;
  const Complex zc = params.z_c ? *params.z_c : geometry::centroid(stage.segments);
  if (!geometry::contains(stage, zc)) {
    throw ConfigError("mapping reference point must lie strictly inside the cavity");
  }
  map.mobius = MobiusMap{zc, params.beta};
  map.mobius.validate();

  map.colloc_z = geometry::collocation_points(stage);
  geometry::validate_collocation(map.colloc_z, geometry::perimeter(stage.segments));
  map.midpoints_z = contour_midpoints(stage);

  // Interior boundary traversed clockwise around the hole so that charge
  // placement pushes the interior charges inside it.
  std::vector<Complex> w_int;
  w_int.reserve(map.colloc_z.size());
  for (auto it = map.colloc_z.rbegin(); it != map.colloc_z.rend(); ++it) {
    w_int.push_back(map.mobius.forward(*it));
  }
  geometry::validate_collocation(w_int, detail::polygon_perimeter(w_int));

  map.colloc_w_ext = geometry::circle_collocation(Complex(0, 0), params.beta,
                                                  params.exterior_points);

  ChargeSet& cs = map.charges;
  cs.beta = params.beta;
  cs.w_beta = Complex(params.beta, 0.0);
  cs.w_0 = Complex(params.w0_factor * params.beta, 0.0);
  cs.w_c = params.w_c ? *params.w_c : map.mobius.forward(geometry::centroid(stage.segments));
  if (std::abs(detail::polygon_winding(w_int, cs.w_c)) < 0.5) {
    throw ConfigError("w_c must lie inside the cavity image");
  }
  if (std::abs(detail::polygon_winding(w_int, cs.w_0)) > 0.5) {
    throw ConfigError("w_0 lies inside the cavity image; choose another w0 factor");
  }

  cs.U = place_charges(map.colloc_w_ext, params.factor_ext);
  for (const Complex& u : cs.U) {
    if (std::abs(u) <= params.beta)
      throw SolveError("exterior charge fell inside the interval annulus");
  }
  cs.V = place_charges(w_int, params.factor_int);
  for (const Complex& v : cs.V) {
    if (std::abs(detail::polygon_winding(w_int, v)) < 0.5)
      throw SolveError("interior charge fell outside the cavity image");
  }

  const CsmSolution fwd = solve_forward_map(map.colloc_w_ext, w_int, cs.U, cs.V, cs.w_c,
                                            cs.w_beta);
  cs.P = fwd.P;
  cs.Q = fwd.Q;
  cs.log_re = fwd.log_re;
  cs.log_alpha = fwd.log_alpha;
  cs.forward_residual = fwd.residual;
  cs.forward_cond = fwd.cond;
  if (!(cs.log_alpha < 0.0) || !std::isfinite(cs.log_alpha)) {
    throw SolveError("forward map produced alpha outside (0, 1)");
  }
  finalize_forward_cache(cs);
  map.alpha = cs.alpha();

  // Backward map: fit the rational dipole form at the forward images.
  std::vector<Complex> zeta_ext(map.colloc_w_ext.size()), zeta_int(w_int.size());
  double fit = 0.0;
  for (std::size_t i = 0; i < map.colloc_w_ext.size(); ++i) {
    zeta_ext[i] = eval_forward(cs, map.colloc_w_ext[i]);
    fit = std::max(fit, std::abs(std::abs(zeta_ext[i]) - 1.0));
  }
  for (std::size_t i = 0; i < w_int.size(); ++i) {
    zeta_int[i] = eval_forward(cs, w_int[i]);
    fit = std::max(fit, std::abs(std::abs(zeta_int[i]) - map.alpha));
  }
  map.boundary_fit = fit;

  cs.eta = place_charges(zeta_ext, params.backward_factor_ext);
  for (const Complex& e : cs.eta) {
    if (std::abs(e) <= 1.0) throw SolveError("backward exterior charge fell inside the annulus");
  }

  std::vector<Complex> zeta_all(zeta_ext);
  zeta_all.insert(zeta_all.end(), zeta_int.begin(), zeta_int.end());
  std::vector<Complex> w_all(map.colloc_w_ext);
  w_all.insert(w_all.end(), w_int.begin(), w_int.end());

  // The interior ring is placed as deep as the square solve tolerates: deeper
  // dipoles mean faster-decaying boundary spectra, but past a
  // geometry-dependent depth the interpolation residual exceeds its budget,
  // so shallow the ring geometrically until the solve passes.
  double mu_factor = params.backward_factor_int;
  const double mu_factor_floor = std::min(1.0, params.backward_factor_int);
  for (;;) {
    cs.mu = place_charges(zeta_int, mu_factor);
    for (const Complex& m : cs.mu) {
      if (std::abs(m) >= map.alpha)
        throw SolveError("backward interior charge fell outside the cavity circle");
    }
    try {
      const CdsmSolution bwd = solve_backward_map(zeta_all, w_all, cs.eta, cs.mu);
      cs.p = bwd.p;
      cs.q = bwd.q;
      cs.backward_residual = bwd.residual;
      cs.backward_cond = bwd.cond;
      cs.mu_factor_used = mu_factor;
      break;
    } catch (const SingularSystem&) {
      if (mu_factor <= mu_factor_floor) throw;
      mu_factor = std::max(mu_factor * 0.75, mu_factor_floor);
    }
  }

  std::tie(map.t1, map.t2) = joint_images(map, ground.T1(), ground.T2());
  map.epsilon = map_accuracy(map, map.midpoints_z);
  return map;
}

}  // namespace seqtunnel::conformal
