#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <variant>
#include <vector>

#include "seqtunnel/common.hpp"

namespace seqtunnel::geometry {

inline constexpr double kClosureTol = 1e-9;      // m
inline constexpr double kTangencyTol = 1e-6;     // rad
inline constexpr double kMaxTurningDeg = 10.0;   // collocation chord turning limit
inline constexpr double kMaxChordShare = 1e-2;   // collocation chord / perimeter limit

struct Material {
  double gamma = 0.0;  // unit weight, kN/m^3
  double kx = 1.0;     // lateral stress coefficient
  double E = 1.0;      // elasticity, kPa
  double nu = 0.25;    // Poisson ratio

  double G() const { return E / (2.0 * (1.0 + nu)); }
  double kappa() const { return 3.0 - 4.0 * nu; }  // plane strain

  void validate() const {
    if (gamma < 0.0) throw ConfigError("material: unit weight must be >= 0");
    if (kx <= 0.0) throw ConfigError("material: lateral coefficient must be > 0");
    if (E <= 0.0) throw ConfigError("material: elasticity must be > 0");
    if (nu <= 0.0 || nu >= 0.5) throw ConfigError("material: Poisson ratio must be in (0, 0.5)");
  }
};

struct LineSeg {
  Complex start;
  Complex end;
};

// Circular arc, parameterized as center + radius*exp(i*(start_angle + t*sweep)),
// t in [0,1]. sweep > 0 is counterclockwise.
struct ArcSeg {
  Complex center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;
};

using BoundarySegment = std::variant<LineSeg, ArcSeg>;

inline ArcSeg make_arc(Complex center, double radius, double start_angle, double end_angle,
                       int sweep_sign) {
  if (radius <= 0.0) throw ConfigError("arc: radius must be > 0");
  double sweep = wrap_angle_signed(end_angle - start_angle, sweep_sign);
  if (sweep == 0.0) sweep = sweep_sign >= 0 ? 2.0 * kPi : -2.0 * kPi;  // full circle
  return ArcSeg{center, radius, start_angle, sweep};
}

inline Complex segment_start(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) return l->start;
  const auto& a = std::get<ArcSeg>(s);
  return a.center + a.radius * std::polar(1.0, a.start_angle);
}

inline Complex segment_end(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) return l->end;
  const auto& a = std::get<ArcSeg>(s);
  return a.center + a.radius * std::polar(1.0, a.start_angle + a.sweep);
}

inline double segment_length(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) return std::abs(l->end - l->start);
  const auto& a = std::get<ArcSeg>(s);
  return a.radius * std::abs(a.sweep);
}

inline Complex segment_point(const BoundarySegment& s, double t) {
  if (const auto* l = std::get_if<LineSeg>(&s)) return l->start + t * (l->end - l->start);
  const auto& a = std::get<ArcSeg>(s);
  return a.center + a.radius * std::polar(1.0, a.start_angle + t * a.sweep);
}

// Unit tangent in traversal direction.
inline Complex segment_tangent(const BoundarySegment& s, double t) {
  if (const auto* l = std::get_if<LineSeg>(&s)) {
    Complex d = l->end - l->start;
    double n = std::abs(d);
    if (n == 0.0) throw ConfigError("line segment: zero length");
    return d / n;
  }
  const auto& a = std::get<ArcSeg>(s);
  Complex radial = std::polar(1.0, a.start_angle + t * a.sweep);
  return (a.sweep >= 0.0 ? Complex(0.0, 1.0) : Complex(0.0, -1.0)) * radial;
}

inline BoundarySegment segment_reversed(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) return LineSeg{l->end, l->start};
  const auto& a = std::get<ArcSeg>(s);
  return ArcSeg{a.center, a.radius, a.start_angle + a.sweep, -a.sweep};
}

// Restricts a segment to the parameter interval [t0, t1] of the original.
inline BoundarySegment segment_trimmed(const BoundarySegment& s, double t0, double t1) {
  if (const auto* l = std::get_if<LineSeg>(&s)) {
    return LineSeg{segment_point(s, t0), segment_point(s, t1)};
  }
  const auto& a = std::get<ArcSeg>(s);
  return ArcSeg{a.center, a.radius, a.start_angle + t0 * a.sweep, (t1 - t0) * a.sweep};
}

// Exact contribution of one segment to the Green's-theorem area integral
// (1/2) * integral of (x dy - y dx).
inline double segment_area_term(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) {
    return 0.5 * (l->start.real() * l->end.imag() - l->end.real() * l->start.imag());
  }
  const auto& a = std::get<ArcSeg>(s);
  const double th0 = a.start_angle;
  const double th1 = a.start_angle + a.sweep;
  const double term = a.radius * a.radius * a.sweep +
                      a.radius * (a.center.real() * (std::sin(th1) - std::sin(th0)) -
                                  a.center.imag() * (std::cos(th1) - std::cos(th0)));
  return 0.5 * term;
}

struct DensitySpec {
  // Collocation spacing controls the charge offsets of both simulation maps:
  // denser points mean shallower charges and a slower-decaying boundary
  // spectrum. The small-arc count stays near the 10-degree turning limit so
  // fillet-local charges sit deep enough not to pollute the high harmonics.
  int line_points = 60;       // per straight segment
  int small_arc_points = 10;  // per 90 degrees of arc below the radius split
  int large_arc_points = 90;  // per 90 degrees of arc at or above the radius split
  double arc_radius_split = 1.0;  // m

  void validate() const {
    if (line_points < 3 || small_arc_points < 3 || large_arc_points < 3)
      throw ConfigError("density: all collocation counts must be >= 3");
    if (arc_radius_split <= 0.0) throw ConfigError("density: arc radius split must be > 0");
  }

  int count_for(const BoundarySegment& s) const {
    if (std::holds_alternative<LineSeg>(s)) return line_points;
    const auto& a = std::get<ArcSeg>(s);
    const int per90 = a.radius < arc_radius_split ? small_arc_points : large_arc_points;
    const double quarter_turns = std::abs(a.sweep) / (kPi / 2.0);
    return std::max(3, static_cast<int>(std::lround(per90 * quarter_turns)));
  }
};

// Closed, counterclockwise, tangent-continuous cavity contour below ground.
struct StageBoundary {
  int stage_index = 1;
  std::vector<BoundarySegment> segments;
  std::vector<int> colloc_counts;  // resolved per segment
};

struct GroundSplit {
  double x0 = 0.0;
  Complex T1() const { return Complex(-x0, 0.0); }
  Complex T2() const { return Complex(x0, 0.0); }
};

inline double signed_area(const std::vector<BoundarySegment>& segments) {
  double a = 0.0;
  for (const auto& s : segments) a += segment_area_term(s);
  return a;
}

inline double perimeter(const std::vector<BoundarySegment>& segments) {
  double p = 0.0;
  for (const auto& s : segments) p += segment_length(s);
  return p;
}

inline double region_area(const std::vector<BoundarySegment>& segments) {
  return std::abs(signed_area(segments));
}

inline double region_area(const StageBoundary& b) { return region_area(b.segments); }

inline std::vector<Complex> sample_polyline(const std::vector<BoundarySegment>& segments,
                                            int per_segment) {
  std::vector<Complex> pts;
  pts.reserve(segments.size() * static_cast<std::size_t>(per_segment));
  for (const auto& s : segments) {
    for (int i = 0; i < per_segment; ++i) {
      pts.push_back(segment_point(s, static_cast<double>(i) / per_segment));
    }
  }
  return pts;
}

inline Complex centroid(const std::vector<BoundarySegment>& segments) {
  const auto pts = sample_polyline(segments, 256);
  double a = 0.0, cx = 0.0, cy = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex& p = pts[i];
    const Complex& q = pts[(i + 1) % n];
    const double cross = p.real() * q.imag() - q.real() * p.imag();
    a += cross;
    cx += (p.real() + q.real()) * cross;
    cy += (p.imag() + q.imag()) * cross;
  }
  if (a == 0.0) throw ConfigError("centroid: degenerate contour");
  return Complex(cx / (3.0 * a), cy / (3.0 * a));
}

// Winding-number containment test on a dense polyline approximation.
inline bool contains(const std::vector<BoundarySegment>& segments, Complex z) {
  const auto pts = sample_polyline(segments, 256);
  double total = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    total += std::arg((pts[(i + 1) % n] - z) / (pts[i] - z));
  }
  return std::abs(total) > kPi;  // winding +-1 vs 0
}

inline bool contains(const StageBoundary& b, Complex z) { return contains(b.segments, z); }

// Highest boundary point; its depth below ground is the crown depth.
inline double max_boundary_y(const std::vector<BoundarySegment>& segments) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : segments) {
    best = std::max(best, segment_start(s).imag());
    best = std::max(best, segment_end(s).imag());
    if (const auto* a = std::get_if<ArcSeg>(&s)) {
      // Interior extremum at polar angle pi/2 if swept.
      const double t = wrap_angle_signed(kPi / 2.0 - a->start_angle,
                                         a->sweep >= 0.0 ? 1 : -1) /
                       a->sweep;
      if (t > 0.0 && t < 1.0) best = std::max(best, a->center.imag() + a->radius);
    }
  }
  return best;
}

inline double crown_depth(const StageBoundary& b) { return -max_boundary_y(b.segments); }

inline double max_horizontal_extent(const std::vector<BoundarySegment>& segments) {
  double best = 0.0;
  for (const auto& s : segments) {
    best = std::max({best, std::abs(segment_start(s).real()), std::abs(segment_end(s).real())});
    if (const auto* a = std::get_if<ArcSeg>(&s)) {
      for (double side : {0.0, kPi}) {
        const double t =
            wrap_angle_signed(side - a->start_angle, a->sweep >= 0.0 ? 1 : -1) / a->sweep;
        if (t > 0.0 && t < 1.0) {
          best = std::max(best, std::abs(a->center.real() + a->radius * std::cos(side)));
        }
      }
    }
  }
  return best;
}

inline bool has_concave_corner(const StageBoundary& b) {
  for (const auto& s : b.segments) {
    if (const auto* a = std::get_if<ArcSeg>(&s)) {
      if (a->sweep < 0.0) return true;
    }
  }
  return false;
}

namespace detail {

inline bool proper_cross(Complex a0, Complex a1, Complex b0, Complex b1) {
  auto cross = [](Complex u, Complex v) { return u.real() * v.imag() - u.imag() * v.real(); };
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
         ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
}

inline void validate_boundary(const std::vector<BoundarySegment>& segments) {
  if (segments.empty()) throw OpenContour("no segments");
  const std::size_t n = segments.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex e = segment_end(segments[i]);
    const Complex s = segment_start(segments[(i + 1) % n]);
    if (std::abs(e - s) > kClosureTol) {
      throw OpenContour("gap of " + std::to_string(std::abs(e - s)) + " m after segment " +
                        std::to_string(i));
    }
    if (segment_length(segments[i]) <= 0.0)
      throw ConfigError("segment " + std::to_string(i) + " has zero length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Complex t_end = segment_tangent(segments[i], 1.0);
    const Complex t_next = segment_tangent(segments[(i + 1) % n], 0.0);
    const double turn = std::abs(std::arg(t_next / t_end));
    if (turn > kTangencyTol) {
      throw ConfigError("sharp corner (turn " + std::to_string(turn) + " rad) after segment " +
                        std::to_string(i) + "; apply fillet_corners first");
    }
  }
  // Strictly below ground.
  for (const auto& s : segments) {
    const int probes = 64;
    for (int i = 0; i <= probes; ++i) {
      if (segment_point(s, static_cast<double>(i) / probes).imag() >= 0.0)
        throw ConfigError("boundary reaches or crosses the ground surface");
    }
  }
  // Simplicity on a sampled polyline; only proper crossings count.
  const auto pts = sample_polyline(segments, 64);
  const std::size_t m = pts.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (proper_cross(pts[i], pts[i + 1], pts[j], pts[(j + 1) % m])) {
        throw ConfigError("self-intersecting contour");
      }
    }
  }
}

}  // namespace detail

// Normalizes to counterclockwise storage, validates all contour invariants,
// and resolves per-segment collocation counts.
inline StageBoundary build_boundary(int stage_index, std::vector<BoundarySegment> segments,
                                    const DensitySpec& density) {
  density.validate();
  if (signed_area(segments) < 0.0) {
    std::reverse(segments.begin(), segments.end());
    for (auto& s : segments) s = segment_reversed(s);
  }
  detail::validate_boundary(segments);
  StageBoundary b;
  b.stage_index = stage_index;
  b.segments = std::move(segments);
  b.colloc_counts.reserve(b.segments.size());
  for (const auto& s : b.segments) b.colloc_counts.push_back(density.count_for(s));
  return b;
}

namespace detail {

struct CurveGeom {
  // Signed distance data for the fillet-center search.
  bool is_line;
  Complex p0;       // line point / circle center
  Complex dir;      // unit direction (line only)
  double radius;    // circle only
};

inline CurveGeom curve_of(const BoundarySegment& s) {
  if (const auto* l = std::get_if<LineSeg>(&s)) {
    Complex d = l->end - l->start;
    return CurveGeom{true, l->start, d / std::abs(d), 0.0};
  }
  const auto& a = std::get<ArcSeg>(s);
  return CurveGeom{false, a.center, Complex(0, 0), a.radius};
}

// Closest point on the (unbounded) carrier curve.
inline Complex project_to_curve(const CurveGeom& c, Complex z) {
  if (c.is_line) {
    const double t = ((z - c.p0) * std::conj(c.dir)).real();
    return c.p0 + t * c.dir;
  }
  const Complex d = z - c.p0;
  const double n = std::abs(d);
  if (n == 0.0) throw ConfigError("fillet: center search degenerate");
  return c.p0 + c.radius * (d / n);
}

// Parameter of a point known to lie on the segment's carrier; may be outside [0,1].
inline double param_on_segment(const BoundarySegment& s, Complex z) {
  if (const auto* l = std::get_if<LineSeg>(&s)) {
    const Complex d = l->end - l->start;
    return ((z - l->start) * std::conj(d)).real() / std::norm(d);
  }
  const auto& a = std::get<ArcSeg>(s);
  const double ang = std::arg(z - a.center);
  const double rel = wrap_angle_signed(ang - a.start_angle, a.sweep >= 0.0 ? 1 : -1);
  double t = rel / a.sweep;
  // Points slightly "behind" the start wrap to ~2*pi/|sweep|; map them near 0.
  const double full = 2.0 * kPi / std::abs(a.sweep);
  if (t > 0.5 * (1.0 + full)) t -= full;
  return t;
}

// Candidate fillet centers: intersections of the two offset carriers.
inline std::vector<Complex> offset_intersections(const CurveGeom& a, const CurveGeom& b,
                                                 double r) {
  std::vector<Complex> out;
  auto cross = [](Complex u, Complex v) { return u.real() * v.imag() - u.imag() * v.real(); };
  auto add_line_line = [&](Complex p, Complex d, Complex q, Complex e) {
    const double denom = cross(d, e);
    if (std::abs(denom) < 1e-14) return;
    // Solve p + t d = q + s e.
    const double t = cross(q - p, e) / denom;
    out.push_back(p + t * d);
  };
  auto add_line_circle = [&](Complex p, Complex d, Complex c, double R) {
    if (R <= 0.0) return;
    const Complex w = c - p;
    const double along = (w * std::conj(d)).real();
    const double perp2 = std::norm(w) - along * along;
    const double h2 = R * R - perp2;
    if (h2 < 0.0) return;
    const double h = std::sqrt(h2);
    out.push_back(p + (along - h) * d);
    out.push_back(p + (along + h) * d);
  };
  auto add_circle_circle = [&](Complex c1, double r1, Complex c2, double r2) {
    if (r1 <= 0.0 || r2 <= 0.0) return;
    const Complex d = c2 - c1;
    const double dist = std::abs(d);
    if (dist < 1e-14) return;
    const double x = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    const double h2 = r1 * r1 - x * x;
    if (h2 < 0.0) return;
    const double h = std::sqrt(h2);
    const Complex u = d / dist;
    const Complex perp = u * Complex(0.0, 1.0);
    out.push_back(c1 + x * u + h * perp);
    out.push_back(c1 + x * u - h * perp);
  };

  if (a.is_line && b.is_line) {
    const Complex na = a.dir * Complex(0.0, 1.0);
    const Complex nb = b.dir * Complex(0.0, 1.0);
    for (double sa : {-1.0, 1.0})
      for (double sb : {-1.0, 1.0})
        add_line_line(a.p0 + sa * r * na, a.dir, b.p0 + sb * r * nb, b.dir);
  } else if (a.is_line && !b.is_line) {
    const Complex na = a.dir * Complex(0.0, 1.0);
    for (double sa : {-1.0, 1.0})
      for (double sb : {-1.0, 1.0})
        add_line_circle(a.p0 + sa * r * na, a.dir, b.p0, b.radius + sb * r);
  } else if (!a.is_line && b.is_line) {
    const Complex nb = b.dir * Complex(0.0, 1.0);
    for (double sb : {-1.0, 1.0})
      for (double sa : {-1.0, 1.0})
        add_line_circle(b.p0 + sb * r * nb, b.dir, a.p0, a.radius + sa * r);
  } else {
    for (double sa : {-1.0, 1.0})
      for (double sb : {-1.0, 1.0})
        add_circle_circle(a.p0, a.radius + sa * r, b.p0, b.radius + sb * r);
  }
  return out;
}

struct FilletArc {
  double trim_end_a;    // new end parameter of the incoming segment
  double trim_start_b;  // new start parameter of the outgoing segment
  ArcSeg arc;
};

// Tangent arc of radius r replacing the corner between segment a (ending at
// the corner) and segment b (starting there).
inline FilletArc solve_fillet(const BoundarySegment& sa, const BoundarySegment& sb, double r) {
  const Complex q = segment_end(sa);
  const CurveGeom ca = curve_of(sa);
  const CurveGeom cb = curve_of(sb);

  std::optional<FilletArc> best;
  double best_dist = std::numeric_limits<double>::infinity();

  for (Complex c : offset_intersections(ca, cb, r)) {
    const Complex ta = project_to_curve(ca, c);
    const Complex tb = project_to_curve(cb, c);
    if (std::abs(std::abs(ta - c) - r) > 1e-7 * std::max(1.0, r)) continue;
    if (std::abs(std::abs(tb - c) - r) > 1e-7 * std::max(1.0, r)) continue;
    const double pa = param_on_segment(sa, ta);
    const double pb = param_on_segment(sb, tb);
    if (!(pa > 1e-9 && pa < 1.0 - 1e-9)) continue;
    if (!(pb > 1e-9 && pb < 1.0 - 1e-9)) continue;

    const Complex tan_a = segment_tangent(sa, pa);
    const double phi_a = std::arg(ta - c);
    const double phi_b = std::arg(tb - c);
    const Complex ccw_tan = Complex(0.0, 1.0) * std::polar(1.0, phi_a);
    const double align = (ccw_tan * std::conj(tan_a)).real();
    int sign;
    if (align > 1.0 - 1e-9) {
      sign = 1;
    } else if (align < -1.0 + 1e-9) {
      sign = -1;
    } else {
      continue;
    }
    const double sweep = wrap_angle_signed(phi_b - phi_a, sign);
    ArcSeg arc{c, r, phi_a, sweep};
    const Complex end_tan = segment_tangent(BoundarySegment(arc), 1.0);
    const Complex tan_b = segment_tangent(sb, pb);
    if (std::abs(std::arg(tan_b / end_tan)) > kTangencyTol) continue;

    const double dist = std::abs(c - q);
    if (dist < best_dist) {
      best_dist = dist;
      best = FilletArc{pa, pb, arc};
    }
  }
  if (!best) {
    throw FilletTooLarge("no tangent arc of radius " + std::to_string(r) +
                         " fits the corner at (" + std::to_string(q.real()) + ", " +
                         std::to_string(q.imag()) + ")");
  }
  return *best;
}

}  // namespace detail

// Replaces every sharp junction of a closed raw contour with a tangent arc.
// radii holds one radius per junction (junction i follows segment i; 0 skips),
// or a single radius applied to every sharp junction.
inline StageBoundary fillet_corners(int stage_index, std::vector<BoundarySegment> raw,
                                    std::vector<double> radii, const DensitySpec& density) {
  if (raw.empty()) throw OpenContour("no segments");
  if (signed_area(raw) < 0.0) {
    std::reverse(raw.begin(), raw.end());
    for (auto& s : raw) s = segment_reversed(s);
  }
  const std::size_t n = raw.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(segment_end(raw[i]) - segment_start(raw[(i + 1) % n])) > kClosureTol)
      throw OpenContour("raw contour gap after segment " + std::to_string(i));
  }
  if (radii.size() == 1) radii.assign(n, radii[0]);
  if (radii.size() != n && !radii.empty())
    throw ConfigError("fillet_corners: need one radius per junction, a single radius, or none");

  std::vector<std::optional<detail::FilletArc>> fillets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1) % n;
    const Complex t_end = segment_tangent(raw[i], 1.0);
    const Complex t_next = segment_tangent(raw[next], 0.0);
    const bool smooth = std::abs(std::arg(t_next / t_end)) <= kTangencyTol;
    const double r = radii.empty() ? 0.0 : radii[i];
    if (smooth || r == 0.0) continue;
    if (r < 0.0) throw ConfigError("fillet radius must be >= 0");
    const double cap = 0.5 * std::min(segment_length(raw[i]), segment_length(raw[next]));
    if (r >= cap) {
      throw FilletTooLarge("radius " + std::to_string(r) + " exceeds half the shorter adjacent " +
                           "segment length " + std::to_string(cap) + " at junction " +
                           std::to_string(i));
    }
    fillets[i] = detail::solve_fillet(raw[i], raw[next], r);
  }

  std::vector<BoundarySegment> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    const double t0 = fillets[prev] ? fillets[prev]->trim_start_b : 0.0;
    const double t1 = fillets[i] ? fillets[i]->trim_end_a : 1.0;
    if (!(t0 < t1)) {
      throw FilletTooLarge("fillets consume segment " + std::to_string(i) + " entirely");
    }
    out.push_back(segment_trimmed(raw[i], t0, t1));
    if (fillets[i]) out.push_back(fillets[i]->arc);
  }
  return build_boundary(stage_index, std::move(out), density);
}

// Ordered collocation points, cell-centered within each segment.
inline std::vector<Complex> collocation_points(const StageBoundary& b) {
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < b.segments.size(); ++i) {
    const int c = b.colloc_counts[i];
    for (int k = 0; k < c; ++k) {
      pts.push_back(segment_point(b.segments[i], (k + 0.5) / c));
    }
  }
  return pts;
}

// Uniform collocation on a circle |z - center| = R, counterclockwise,
// phase-shifted off the positive real axis by half a step.
inline std::vector<Complex> circle_collocation(Complex center, double R, int n) {
  if (n < 3) throw ConfigError("circle collocation needs >= 3 points");
  std::vector<Complex> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    pts.push_back(center + R * std::polar(1.0, 2.0 * kPi * (k + 0.5) / n));
  }
  return pts;
}

// Validates the collocation-quality principles: consecutive-chord turning
// angle <= 10 degrees and chord length <= 1% of the contour perimeter.
inline void validate_collocation(const std::vector<Complex>& pts, double contour_perimeter) {
  const std::size_t n = pts.size();
  if (n < 3) throw DensityTooLow("need at least 3 collocation points");
  double max_turn = 0.0, max_chord = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = pts[i];
    const Complex b = pts[(i + 1) % n];
    const Complex c = pts[(i + 2) % n];
    if (std::abs(b - a) == 0.0) throw DegenerateSpacing("coincident collocation points");
    max_chord = std::max(max_chord, std::abs(b - a));
    max_turn = std::max(max_turn, std::abs(std::arg((c - b) / (b - a))));
  }
  if (max_turn > kMaxTurningDeg * kPi / 180.0) {
    throw DensityTooLow("max chord turning angle " + std::to_string(max_turn * 180.0 / kPi) +
                        " deg exceeds " + std::to_string(kMaxTurningDeg) + " deg");
  }
  if (max_chord / contour_perimeter > kMaxChordShare) {
    throw DensityTooLow("max chord share " + std::to_string(max_chord / contour_perimeter) +
                        " of perimeter exceeds " + std::to_string(kMaxChordShare));
  }
}

// Initial gravitational stress, tension positive: sigma_x, sigma_y, tau_xy (kPa).
inline std::array<double, 3> initial_stress_at(Complex z, const Material& mat) {
  if (z.imag() > 1e-12) throw AboveGround("initial stress requested above ground surface");
  const double y = z.imag();
  return {mat.kx * mat.gamma * y, mat.gamma * y, 0.0};
}

// Point and unit (counterclockwise) tangent at arclength s along the contour.
inline std::pair<Complex, Complex> point_at_arclength(const StageBoundary& b, double s) {
  double total = perimeter(b.segments);
  s = std::fmod(s, total);
  if (s < 0.0) s += total;
  for (const auto& seg : b.segments) {
    const double len = segment_length(seg);
    if (s <= len) {
      const double t = s / len;
      return {segment_point(seg, t), segment_tangent(seg, t)};
    }
    s -= len;
  }
  const auto& last = b.segments.back();
  return {segment_point(last, 1.0), segment_tangent(last, 1.0)};
}

// Traction (Xb, Yb) of the initial field on the contour at arclength s, using
// the clockwise-traversal direction cosines cos<n,x> = dy/dS, cos<n,y> = -dx/dS.
// Integrated over the closed contour this yields (0, -gamma * area).
inline Complex initial_traction(const StageBoundary& b, double s, const Material& mat) {
  const auto [z, tan_ccw] = point_at_arclength(b, s);
  const auto st = initial_stress_at(z, mat);
  const double cnx = -tan_ccw.imag();  // dy/dS along clockwise traversal
  const double cny = tan_ccw.real();   // -dx/dS along clockwise traversal
  return Complex(st[0] * cnx + st[2] * cny, st[2] * cnx + st[1] * cny);
}

// Four-stage benchmark cavity sequence: a 5 m radius circle centered at
// (0, -10) cut by vertical and horizontal faces, every sharp corner rounded.
inline StageBoundary benchmark_stage(int stage, double fillet_radius = 0.5,
                                     const DensitySpec& density = DensitySpec{}) {
  const Complex c(0.0, -10.0);
  const double R = 5.0;
  const double xq = std::sqrt(R * R - 0.25);             // bottom face half-span at y = -10.5
  const double yq = -10.0 + std::sqrt(R * R - 0.25);     // x = 0.5 face top at the circle

  auto arc_between = [&](Complex a, Complex b) {
    return make_arc(c, R, std::arg(a - c), std::arg(b - c), +1);
  };

  std::vector<BoundarySegment> raw;
  switch (stage) {
    case 1:
      raw = {
          LineSeg{Complex(-xq, -10.5), Complex(0.5, -10.5)},
          LineSeg{Complex(0.5, -10.5), Complex(0.5, yq)},
          arc_between(Complex(0.5, yq), Complex(-xq, -10.5)),
      };
      break;
    case 2:
      raw = {
          LineSeg{Complex(-xq, -10.5), Complex(xq, -10.5)},
          arc_between(Complex(xq, -10.5), Complex(-xq, -10.5)),
      };
      break;
    case 3:
      raw = {
          LineSeg{Complex(-5.0, -10.0), Complex(-5.0, -15.0)},
          LineSeg{Complex(-5.0, -15.0), Complex(0.5, -15.0)},
          LineSeg{Complex(0.5, -15.0), Complex(0.5, -10.5)},
          LineSeg{Complex(0.5, -10.5), Complex(xq, -10.5)},
          arc_between(Complex(xq, -10.5), Complex(-5.0, -10.0)),
      };
      break;
    case 4:
      raw = {
          LineSeg{Complex(-5.0, -10.0), Complex(-5.0, -15.0)},
          LineSeg{Complex(-5.0, -15.0), Complex(5.0, -15.0)},
          LineSeg{Complex(5.0, -15.0), Complex(5.0, -10.0)},
          arc_between(Complex(5.0, -10.0), Complex(-5.0, -10.0)),
      };
      break;
    default:
      throw ConfigError("benchmark stage must be 1..4");
  }
  return fillet_corners(stage, std::move(raw), {fillet_radius}, density);
}

}  // namespace seqtunnel::geometry
