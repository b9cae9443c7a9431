#pragma once

// Series solution of the mixed boundary-value problem on the annulus image of
// the excavation: Taylor/Laurent expansions of the two-arc branch function,
// Fourier expansion of the cavity boundary data, and a lagged fixed-point
// iteration for the Laurent coefficients of the incremental potentials.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "seqtunnel/common.hpp"
#include "seqtunnel/conformal.hpp"
#include "seqtunnel/fourier.hpp"
#include "seqtunnel/geometry.hpp"

namespace seqtunnel::rh {

// Two-arc branch function on the unit circle. X is analytic across the
// ground-window arc (counterclockwise from t2 to t1, the image of the
// traction-free ground span between the joints) and jumps by the factor
// -kappa across the complementary arc through zeta = 1, the image of the
// far field. Interior representation, analytic in |zeta| < 1:
//   X(zeta) = alpha0 * (1 - zeta/t1)^a * (1 - zeta/t2)^b,
// exterior representation, analytic in |zeta| > 1 and ~ 1/zeta at infinity:
//   X(zeta) = zeta^{-1} * (1 - t1/zeta)^a * (1 - t2/zeta)^b,
// where a = -1/2 - i*lambda, b = conj(a), lambda = ln(kappa)/(2*pi).
// alpha0 is fixed by continuity across the window arc; the ratio of the two
// representations is constant along each arc (the exponents sum to -1), so
// matching at the window midpoint matches the whole arc.
struct BranchData {
  double kappa = 0.0;
  double lambda = 0.0;  // ln(kappa) / (2*pi)
  Complex t1, t2;       // joint images on the unit circle, window arc ccw t2 -> t1
  Complex a, b;         // branch exponents, b = conj(a)
  Complex alpha0;       // leading interior Taylor coefficient
  std::vector<Complex> c;             // binomial factors of (1-u)^a, c[0] = 1
  std::vector<Complex> alpha_coeffs;  // interior Taylor coefficients, k = 0..tail
  std::vector<Complex> beta_coeffs;   // exterior Laurent coefficients, k = 0..tail

  int tail() const { return static_cast<int>(alpha_coeffs.size()) - 1; }

  // Midpoint of the ground-window arc (the arc not containing zeta = 1).
  Complex window_midpoint() const {
    const double th2 = std::arg(t2);
    const double span = wrap_angle_signed(std::arg(t1) - th2, +1);
    return std::polar(1.0, th2 + 0.5 * span);
  }

  // Closed-form interior value, |zeta| < 1 (continuous up to the window arc).
  Complex interior_value(Complex zeta) const {
    return alpha0 * std::exp(a * std::log(1.0 - zeta / t1) + b * std::log(1.0 - zeta / t2));
  }

  // Closed-form exterior value, |zeta| > 1 (continuous down to the circle
  // away from the joints).
  Complex exterior_value(Complex zeta) const {
    return std::exp(a * std::log(1.0 - t1 / zeta) + b * std::log(1.0 - t2 / zeta)) / zeta;
  }
};

// Builds the branch data: binomial factors by the product recurrence, then
// the interior/exterior expansion coefficients by Cauchy products of the two
// binomial series. tail is the highest retained index.
inline BranchData branch_data(double kappa, Complex t1, Complex t2, int tail) {
  if (!(kappa > 1.0)) throw ConfigError("branch_data: kappa must exceed 1");
  if (tail < 1) throw ConfigError("branch_data: tail must be >= 1");
  if (std::abs(std::abs(t1) - 1.0) > 1e-8 || std::abs(std::abs(t2) - 1.0) > 1e-8)
    throw ConfigError("branch_data: joint images must lie on the unit circle");
  if (std::abs(t1 - t2) < 1e-8) throw CoincidentJoints("branch_data: joint images coincide");

  BranchData bd;
  bd.kappa = kappa;
  bd.lambda = std::log(kappa) / (2.0 * kPi);
  bd.t1 = t1 / std::abs(t1);
  bd.t2 = t2 / std::abs(t2);
  bd.a = Complex(-0.5, -bd.lambda);
  bd.b = std::conj(bd.a);

  // Binomial factors of (1-u)^a = sum c_k (-u)^k; conj(c_k) serve as the
  // factors of (1-u)^b because b = conj(a).
  bd.c.assign(static_cast<std::size_t>(tail) + 1, Complex(0.0, 0.0));
  bd.c[0] = Complex(1.0, 0.0);
  for (int k = 1; k <= tail; ++k) {
    bd.c[k] = bd.c[k - 1] * ((bd.a - double(k - 1)) / double(k));
    if (!std::isfinite(bd.c[k].real()) || !std::isfinite(bd.c[k].imag()))
      throw Overflow("branch_data: binomial factor diverged at index " + std::to_string(k) +
                     "; use a smaller tail");
  }

  // alpha0 from continuity across the window arc at its midpoint.
  const Complex sm = bd.window_midpoint();
  const Complex ext_mid = bd.exterior_value(sm);
  const Complex int_shape = std::exp(bd.a * std::log(1.0 - sm / bd.t1) +
                                     bd.b * std::log(1.0 - sm / bd.t2));
  bd.alpha0 = ext_mid / int_shape;

  // Powers of the unit-modulus joints, stable via polar form.
  const double th1 = std::arg(bd.t1), th2 = std::arg(bd.t2);
  auto t1_pow = [&](int p) { return std::polar(1.0, th1 * p); };
  auto t2_pow = [&](int p) { return std::polar(1.0, th2 * p); };

  bd.alpha_coeffs.assign(static_cast<std::size_t>(tail) + 1, Complex(0.0, 0.0));
  bd.beta_coeffs.assign(static_cast<std::size_t>(tail) + 1, Complex(0.0, 0.0));
  for (int k = 0; k <= tail; ++k) {
    Complex sa(0.0, 0.0);
    for (int l = 0; l <= k; ++l) sa += bd.c[l] * std::conj(bd.c[k - l]) * t1_pow(-l) * t2_pow(l - k);
    bd.alpha_coeffs[k] = bd.alpha0 * ((k % 2 == 0) ? sa : -sa);

    if (k >= 1) {
      Complex sb(0.0, 0.0);
      for (int l = 0; l <= k - 1; ++l)
        sb += bd.c[l] * std::conj(bd.c[k - 1 - l]) * t1_pow(l) * t2_pow(k - 1 - l);
      bd.beta_coeffs[k] = ((k - 1) % 2 == 0) ? sb : -sb;
    }
    const Complex& ak = bd.alpha_coeffs[k];
    const Complex& bk = bd.beta_coeffs[k];
    if (!std::isfinite(ak.real()) || !std::isfinite(ak.imag()) ||
        !std::isfinite(bk.real()) || !std::isfinite(bk.imag()))
      throw Overflow("branch_data: expansion coefficient diverged at index " + std::to_string(k) +
                     "; use a smaller tail");
  }
  return bd;
}

// Fourier data of the two cavity-circle boundary functions: the window
// function d(sigma) = (z - conj z)/conj(z') and the initial-load potential
// h(sigma) = y*(alpha/2)*[(kx+1) z' + (kx-1) conj(sigma)^2 conj(z')], both
// sampled on rho = alpha. I_k are the load coefficients driving the series.
struct BoundaryFourier {
  int sample_count = 0;
  double gamma = 0.0;
  double kx = 0.0;
  fourier::Spectrum d;
  fourier::Spectrum h;
  Complex I0;

  // Highest alias-free harmonic.
  int band() const { return sample_count / 2 - 1; }

  Complex d_at(int k) const { return std::abs(k) <= band() ? d.coeff(k) : Complex(0.0, 0.0); }
  Complex h_at(int k) const { return std::abs(k) <= band() ? h.coeff(k) : Complex(0.0, 0.0); }

  Complex I_at(int k) const {
    if (k == 0) return I0;
    return -gamma * h_at(k - 1) / double(k);
  }
};

// Samples d and h on the cavity circle and transforms them. Throws
// DecayFailure when either spectrum has not decayed below decay_tol times its
// peak at the band edge, i.e. when sample_count cannot resolve the data.
inline BoundaryFourier boundary_fourier(const conformal::BidirectionalMap& map,
                                        const geometry::Material& mat, int sample_count,
                                        double decay_tol = 1e-10) {
  if (sample_count < 16 || !is_pow2(static_cast<std::size_t>(sample_count)))
    throw ConfigError("boundary_fourier: sample_count must be a power of two >= 16");
  if (decay_tol <= 0.0) throw ConfigError("boundary_fourier: decay tolerance must be > 0");

  const int n = sample_count;
  const double alpha = map.alpha;
  const double kx = mat.kx;
  std::vector<Complex> ds(static_cast<std::size_t>(n));
  std::vector<Complex> hs(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const Complex sigma = std::polar(1.0, 2.0 * kPi * s / n);
    const Complex zeta = alpha * sigma;
    const Complex w = conformal::cdsm_backward(map.charges, zeta, 0);
    const Complex z = map.mobius.backward(w);
    const Complex zp = map.mobius.dz_dw(w) * conformal::cdsm_backward(map.charges, zeta, 1);
    const double y = z.imag();
    ds[s] = (z - std::conj(z)) / std::conj(zp);
    hs[s] = y * (0.5 * alpha) *
            ((kx + 1.0) * zp + (kx - 1.0) * std::conj(sigma * sigma) * std::conj(zp));
  }

  BoundaryFourier bf;
  bf.sample_count = n;
  bf.gamma = mat.gamma;
  bf.kx = kx;
  bf.d = fourier::Spectrum(std::move(ds));
  bf.h = fourier::Spectrum(std::move(hs));

  const double d_rel = bf.d.max_abs() > 0.0 ? bf.d.tail_abs() / bf.d.max_abs() : 0.0;
  const double h_rel = bf.h.max_abs() > 0.0 ? bf.h.tail_abs() / bf.h.max_abs() : 0.0;
  if (d_rel > decay_tol || h_rel > decay_tol)
    throw DecayFailure("boundary spectra unresolved at " + std::to_string(n) +
                       " samples: band-edge/peak d=" + format_sci(d_rel) + " h=" +
                       format_sci(h_rel) + ", need <= " + format_sci(decay_tol) +
                       "; increase sample_count");

  bf.I0 = -mat.gamma * bf.h.coeff(-1);
  return bf;
}

// Smallest sample count the solver accepts for truncation order M.
inline int default_sample_count(int M) {
  return static_cast<int>(next_pow2(static_cast<std::size_t>(std::max({1024, 8 * M, 4 * M + 4}))));
}

// Doubles the sample count from the default until the decay gate passes.
// Boundaries with spectral crowding (sharp curvature concentrations) need far
// more samples than smooth ones; the cost stays FFT-dominated and small.
inline BoundaryFourier boundary_fourier_auto(const conformal::BidirectionalMap& map,
                                             const geometry::Material& mat, int M,
                                             double decay_tol = 1e-10,
                                             int max_samples = 1 << 17) {
  int n = default_sample_count(M);
  for (;;) {
    try {
      return boundary_fourier(map, mat, n, decay_tol);
    } catch (const DecayFailure&) {
      if (2 * n > max_samples) throw;
      n *= 2;
    }
  }
}

// Smoothing factors for the truncated series, applied only when evaluating
// fields, never inside the solve. L_0 = 1, L_k = sin(k*pi/M)/(k*pi/M), and
// the endpoint L_M is exactly zero.
inline std::vector<double> lanczos_factors(int M) {
  if (M < 1) throw ConfigError("lanczos_factors: M must be >= 1");
  std::vector<double> L(static_cast<std::size_t>(M) + 1, 0.0);
  L[0] = 1.0;
  for (int k = 1; k < M; ++k) {
    const double x = k * kPi / M;
    L[k] = std::sin(x) / x;
  }
  L[M] = 0.0;
  return L;
}

// Solution of the truncated series problem. The potential coefficient f_n and
// the assembled products A_k (window-side) and B_k (far-side) are stored in
// inward-scaled form so that every stored number is O(1):
//   stored f:  f_n / alpha^|n|,
//   stored A:  A_m / alpha^|m| for m < 0, A_m for m >= 0,
//   stored B:  B_m / alpha^m  for m > 0, B_m for m <= 0.
// Raw accessors undo the scaling (harmlessly underflowing to zero where the
// true values are below the representable range).
struct SeriesSolution {
  int M = 0;
  double alpha = 0.0;
  double kappa = 0.0;
  BranchData branch;
  std::vector<Complex> f_hat;  // index n + M, n = -M..M
  std::vector<Complex> A_hat;  // index m + M + 1, m = -M-1..M+1
  std::vector<Complex> B_hat;  // index m + M + 1
  std::vector<double> pow_a;   // alpha^j
  std::vector<double> lanczos; // L_k, k = 0..M
  Complex I0;
  Complex C0;                  // displacement constant, zero far-field motion
  Complex C_a{0.0, 0.0};       // traction-integral constant, fixed to zero
  double lsq_residual = 0.0;   // relative residual of the redundant row set
  int iterations = 0;
  std::vector<double> history; // relative f-change per sweep

  Complex f_scaled(int n) const {
    return std::abs(n) <= M ? f_hat[static_cast<std::size_t>(n + M)] : Complex(0.0, 0.0);
  }
  Complex f(int n) const { return f_scaled(n) * pow_a[static_cast<std::size_t>(std::abs(n))]; }

  Complex A_scaled(int m) const {
    return std::abs(m) <= M + 1 ? A_hat[static_cast<std::size_t>(m + M + 1)] : Complex(0.0, 0.0);
  }
  Complex B_scaled(int m) const {
    return std::abs(m) <= M + 1 ? B_hat[static_cast<std::size_t>(m + M + 1)] : Complex(0.0, 0.0);
  }
  Complex A(int m) const {
    const Complex v = A_scaled(m);
    return m < 0 ? v * pow_a[static_cast<std::size_t>(-m)] : v;
  }
  Complex B(int m) const {
    const Complex v = B_scaled(m);
    return m > 0 ? v * pow_a[static_cast<std::size_t>(m)] : v;
  }
};

// Solves the truncated coefficient system by a lagged fixed-point iteration.
// The two index-zero rows pin A_{-1} = I0/(1+kappa), B_{-1} = -kappa*I0/(1+kappa)
// exactly (null-space elimination); the remaining 2M rows are solved in least
// squares, and the conjugate-coupling sums are lagged one sweep. All rows are
// assembled in the inward-scaled unknowns so no matrix entry carries a
// negative power of alpha.
inline SeriesSolution solve_coeffs(const BranchData& branch, const BoundaryFourier& bf,
                                   double alpha, int M, double tol = 1e-12,
                                   int max_iter = 200) {
  if (M < 1) throw ConfigError("solve_coeffs: M must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("solve_coeffs: alpha must be in (0,1)");
  if (branch.tail() < 2 * M + 1)
    throw ConfigError("solve_coeffs: branch tail " + std::to_string(branch.tail()) +
                      " too short for M=" + std::to_string(M) + "; need >= 2M+1");
  if (bf.sample_count < 4 * M + 4)
    throw ConfigError("solve_coeffs: sample_count " + std::to_string(bf.sample_count) +
                      " below 4M+4");
  if (tol <= 0.0 || max_iter < 1) throw ConfigError("solve_coeffs: bad tolerance or sweep cap");

  const int nf = 2 * M + 1;
  const double kappa = branch.kappa;
  const Complex I0 = bf.I0;
  auto idx = [M](int n) { return n + M; };

  std::vector<double> pow_a(static_cast<std::size_t>(2 * M + 7), 0.0);
  pow_a[0] = 1.0;
  for (std::size_t j = 1; j < pow_a.size(); ++j) pow_a[j] = pow_a[j - 1] * alpha;

  std::vector<Complex> ahat(static_cast<std::size_t>(2 * M + 2));
  std::vector<Complex> bhat(static_cast<std::size_t>(2 * M + 2));
  for (int q = 0; q <= 2 * M + 1; ++q) {
    ahat[q] = branch.alpha_coeffs[q] * pow_a[q];
    bhat[q] = branch.beta_coeffs[q] * pow_a[q];
  }

  // Exact rows: the two index-zero projections of the boundary condition.
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(2, nf);
  for (int q = 0; q <= M - 1; ++q) C(0, idx(-1 - q)) = ahat[q];
  for (int n = 0; n <= M; ++n) C(1, idx(n)) = bhat[n + 1];
  Eigen::Vector2cd c2;
  c2(0) = I0 / (alpha * (1.0 + kappa));
  c2(1) = -alpha * kappa * I0 / (1.0 + kappa);

  // Least-squares rows, k = 1..M for each projection family.
  Eigen::MatrixXcd A_ls = Eigen::MatrixXcd::Zero(2 * M, nf);
  for (int k = 1; k <= M; ++k) {
    auto row = A_ls.row(k - 1);
    for (int q = 0; q + k + 1 <= M; ++q) row(idx(-k - 1 - q)) += ahat[q];
    for (int n = std::max(-k - 1, -M); n <= M; ++n)
      row(idx(n)) -= branch.beta_coeffs[n + k + 1] * pow_a[static_cast<std::size_t>(std::abs(n) + k - 1)];
  }
  for (int k = 1; k <= M; ++k) {
    auto row = A_ls.row(M + k - 1);
    for (int n = k; n <= M; ++n) row(idx(n)) += bhat[n - k + 1];
    for (int n = -M; n <= k - 1; ++n)
      row(idx(n)) -= branch.alpha_coeffs[k - 1 - n] * pow_a[static_cast<std::size_t>(std::abs(n) + k + 1)];
  }

  // Null-space split of the exact constraints: unknowns = particular solution
  // plus the orthonormal null-space basis Z times free parameters.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr_ct(C.adjoint());
  const Eigen::MatrixXcd Qfull = qr_ct.householderQ();
  const Eigen::MatrixXcd Q1 = Qfull.leftCols(2);
  const Eigen::MatrixXcd Z = Qfull.rightCols(nf - 2);
  Eigen::Matrix2cd R2 = qr_ct.matrixQR().topLeftCorner(2, 2).triangularView<Eigen::Upper>();
  if (std::abs(R2(0, 0)) < 1e-14 || std::abs(R2(1, 1)) < 1e-14)
    throw SingularSystem("solve_coeffs: constraint rows rank-deficient");
  const Eigen::Vector2cd u = R2.adjoint().triangularView<Eigen::Lower>().solve(c2);
  const Eigen::VectorXcd g_part = Q1 * u;

  const Eigen::MatrixXcd E = A_ls * Z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr_e(E);
  if (qr_e.rank() < nf - 2)
    throw SingularSystem("solve_coeffs: reduced system rank " + std::to_string(qr_e.rank()) +
                         " of " + std::to_string(nf - 2));
  const Eigen::VectorXcd apart = A_ls * g_part;

  // Window-side products of the current iterate, inward-scaled storage.
  std::vector<Complex> Ahat_arr(static_cast<std::size_t>(2 * M + 3), Complex(0.0, 0.0));
  auto assemble_A = [&](const Eigen::VectorXcd& g, std::vector<Complex>& out) {
    for (int m = -M - 1; m <= M + 1; ++m) {
      Complex acc(0.0, 0.0);
      if (m < 0) {
        for (int q = 0; q <= m + M; ++q) acc += ahat[q] * g(idx(m - q));
      } else {
        for (int n = -M; n <= std::min(m, M); ++n)
          acc += branch.alpha_coeffs[m - n] * pow_a[static_cast<std::size_t>(std::abs(n))] * g(idx(n));
      }
      out[static_cast<std::size_t>(m + M + 1)] = acc;
    }
  };

  // Conjugate-coupling weight: conj(A_m) * alpha^m, O(1) or smaller for all m.
  auto weight = [&](int m) {
    const Complex v = std::conj(Ahat_arr[static_cast<std::size_t>(m + M + 1)]);
    return m >= 0 ? v * pow_a[static_cast<std::size_t>(m)] : v;
  };

  Eigen::VectorXcd ghat = Eigen::VectorXcd::Zero(nf);
  Eigen::VectorXcd rhs(2 * M), r, y;
  std::vector<double> history;
  bool converged = false;
  int sweeps = 0;
  double raw_residual = 0.0;

  for (int it = 1; it <= max_iter; ++it) {
    sweeps = it;
    for (int k = 1; k <= M; ++k) {
      Complex ta(0.0, 0.0), tb(0.0, 0.0);
      for (int m = -M - 1; m <= M + 1; ++m) {
        const Complex wm = weight(m);
        ta += wm * bf.d_at(m - k);
        tb += wm * bf.d_at(m + k);
      }
      rhs(k - 1) = (double(k) / alpha) * (ta - bf.I_at(-k));
      rhs(M + k - 1) = double(k) * alpha * (tb - bf.I_at(k));
    }
    r = rhs - apart;
    y = qr_e.solve(r);
    const Eigen::VectorXcd g_new = g_part + Z * y;

    const double num = (g_new - ghat).lpNorm<Eigen::Infinity>();
    const double den = g_new.lpNorm<Eigen::Infinity>();
    const double rel = den > 0.0 ? num / den
                                 : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    history.push_back(rel);
    ghat = g_new;
    assemble_A(ghat, Ahat_arr);
    raw_residual = (E * y - r).norm();
    if (rel <= tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::string tail_msg;
    const std::size_t nh = history.size();
    for (std::size_t i = nh >= 3 ? nh - 3 : 0; i < nh; ++i)
      tail_msg += " " + format_sci(history[i]);
    throw NonConvergence("solve_coeffs: no convergence in " + std::to_string(max_iter) +
                         " sweeps; last relative changes:" + tail_msg);
  }

  SeriesSolution sol;
  sol.M = M;
  sol.alpha = alpha;
  sol.kappa = kappa;
  sol.branch = branch;
  sol.I0 = I0;
  sol.pow_a = pow_a;
  sol.lanczos = lanczos_factors(M);
  sol.iterations = sweeps;
  sol.history = history;
  sol.f_hat.assign(ghat.data(), ghat.data() + nf);
  sol.A_hat = Ahat_arr;

  sol.B_hat.assign(static_cast<std::size_t>(2 * M + 3), Complex(0.0, 0.0));
  for (int m = -M - 1; m <= M + 1; ++m) {
    Complex acc(0.0, 0.0);
    if (m > 0) {
      for (int n = m; n <= M; ++n) acc += bhat[n - m] * ghat(idx(n));
    } else {
      for (int n = std::max(m, -M); n <= M; ++n)
        acc += branch.beta_coeffs[n - m] * pow_a[static_cast<std::size_t>(std::abs(n))] * ghat(idx(n));
    }
    sol.B_hat[static_cast<std::size_t>(m + M + 1)] = acc;
  }

  sol.lsq_residual = raw_residual / (rhs.norm() + c2.norm() + 1e-300);

  Complex c0(0.0, 0.0);
  for (int k = -M; k <= M + 2; ++k) {
    if (k == 0) continue;
    c0 -= (kappa * sol.A(k - 1) + sol.B(k - 1)) / double(k);
  }
  sol.C0 = c0;
  return sol;
}

}  // namespace seqtunnel::rh
