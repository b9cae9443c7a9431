#pragma once

#include <vector>

#include "seqtunnel/common.hpp"

namespace seqtunnel::fourier {

// Iterative radix-2 FFT. Sample count must be a power of two.
inline void fft_inplace(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw SolveError("fft_inplace: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const Complex wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        Complex u = a[i + k];
        Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

// Fourier-series coefficients of a function sampled uniformly on a circle:
// samples[s] = f(theta_s), theta_s = 2*pi*s/n, coeff(k) = (1/n) sum f e^{-ik theta}.
class Spectrum {
public:
  Spectrum() = default;

  explicit Spectrum(std::vector<Complex> samples) : bins_(std::move(samples)) {
    fft_inplace(bins_, false);
    const double inv = 1.0 / static_cast<double>(bins_.size());
    for (auto& b : bins_) b *= inv;
  }

  int size() const { return static_cast<int>(bins_.size()); }

  // Signed harmonic index; meaningful for |k| <= size/2.
  Complex coeff(int k) const {
    const int n = size();
    int i = k % n;
    if (i < 0) i += n;
    return bins_[static_cast<std::size_t>(i)];
  }

  // Largest |coeff| over all bins.
  double max_abs() const {
    double m = 0.0;
    for (const auto& b : bins_) m = std::max(m, std::abs(b));
    return m;
  }

  // Largest |coeff| among the highest-frequency pair of bins, used for
  // sampling-sufficiency (decay) checks.
  double tail_abs() const {
    const int h = size() / 2;
    return std::max(std::abs(coeff(h)), std::abs(coeff(h - 1)));
  }

  // sum over all bins of |coeff|^2; equals the mean square of the samples.
  double power() const {
    double p = 0.0;
    for (const auto& b : bins_) p += std::norm(b);
    return p;
  }

private:
  std::vector<Complex> bins_;
};

}  // namespace seqtunnel::fourier
