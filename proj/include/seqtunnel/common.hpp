#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace seqtunnel {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Configuration and input validation problems (CLI exit code 2).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& m) : Error("ConfigError: " + m) {}
};

// Numerical or domain failures while solving (CLI exit code 3).
class SolveError : public Error {
public:
  using Error::Error;
};

#define SEQTUNNEL_DEFINE_ERROR(NAME)                                       \
  class NAME : public SolveError {                                         \
  public:                                                                  \
    explicit NAME(const std::string& m) : SolveError(#NAME ": " + m) {}    \
  }

SEQTUNNEL_DEFINE_ERROR(OpenContour);
SEQTUNNEL_DEFINE_ERROR(FilletTooLarge);
SEQTUNNEL_DEFINE_ERROR(DensityTooLow);
SEQTUNNEL_DEFINE_ERROR(AboveGround);
SEQTUNNEL_DEFINE_ERROR(PoleHit);
SEQTUNNEL_DEFINE_ERROR(DegenerateSpacing);
SEQTUNNEL_DEFINE_ERROR(SingularSystem);
SEQTUNNEL_DEFINE_ERROR(OutsideDomain);
SEQTUNNEL_DEFINE_ERROR(ChargePointHit);
SEQTUNNEL_DEFINE_ERROR(CoincidentJoints);
SEQTUNNEL_DEFINE_ERROR(Overflow);
SEQTUNNEL_DEFINE_ERROR(DecayFailure);
SEQTUNNEL_DEFINE_ERROR(NonConvergence);
SEQTUNNEL_DEFINE_ERROR(JointSingularity);
SEQTUNNEL_DEFINE_ERROR(ConformalitySingularity);

#undef SEQTUNNEL_DEFINE_ERROR

inline double sq(double x) { return x * x; }

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

// Wraps an angle into [0, 2*pi) or (-2*pi, 0] depending on the wanted sign.
inline double wrap_angle_signed(double a, int sign) {
  a = std::fmod(a, 2.0 * kPi);
  if (sign >= 0) {
    if (a < 0.0) a += 2.0 * kPi;
  } else {
    if (a > 0.0) a -= 2.0 * kPi;
  }
  return a;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Locale-independent full-precision scientific formatting for CSV output.
inline std::string format_sci(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

}  // namespace seqtunnel
