#pragma once

// Piecewise smooth Jordan curves built from circular arcs and line segments,
// with exact interior tests, point distances and quadrature rules for
// contour integrals  \oint F(z) dz  ~  sum_j w_j F(z_j).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"

namespace hypinv {

/// z(theta) = center + radius e^{i theta}, theta from theta_begin to
/// theta_end (counterclockwise when theta_end > theta_begin).
struct CircleArc {
  Complex center;
  double radius = 1.0;
  double theta_begin = 0.0;
  double theta_end = 2.0 * std::numbers::pi;

  double sweep() const { return theta_end - theta_begin; }
  bool full_turn() const { return std::abs(sweep()) >= 2.0 * std::numbers::pi * (1.0 - 1e-15); }
  Complex at(double theta) const { return center + std::polar(radius, theta); }
  Complex start() const { return at(theta_begin); }
  Complex end() const { return full_turn() ? start() : at(theta_end); }
  double length() const { return radius * std::abs(sweep()); }
};

struct LineSegment {
  Complex start;
  Complex end;

  double length() const { return std::abs(end - start); }
};

using Segment = std::variant<CircleArc, LineSegment>;

namespace detail {
struct SegmentStart {
  Complex operator()(const CircleArc& a) const { return a.start(); }
  Complex operator()(const LineSegment& l) const { return l.start; }
};
struct SegmentEnd {
  Complex operator()(const CircleArc& a) const { return a.end(); }
  Complex operator()(const LineSegment& l) const { return l.end; }
};
}  // namespace detail

class Contour {
 public:
  explicit Contour(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw InvalidArgument("Contour: no segments");
    for (const auto& s : segments_) {
      if (const auto* arc = std::get_if<CircleArc>(&s)) {
        if (!(arc->radius > 0.0)) throw InvalidArgument("Contour: arc radius must be positive");
        if (arc->sweep() == 0.0) throw InvalidArgument("Contour: arc with zero sweep");
      } else if (std::get<LineSegment>(s).length() == 0.0) {
        throw InvalidArgument("Contour: degenerate line segment");
      }
    }
    scale_ = 1.0;
    for (const auto& s : segments_) {
      scale_ = std::max({scale_, std::abs(start_of(s)), std::abs(end_of(s))});
      if (const auto* arc = std::get_if<CircleArc>(&s)) {
        scale_ = std::max(scale_, std::abs(arc->center) + arc->radius);
      }
    }
    const double tol = 1e-12 * scale_;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const Complex e = end_of(segments_[k]);
      const Complex b = start_of(segments_[(k + 1) % segments_.size()]);
      if (std::abs(e - b) > tol) {
        throw InvalidArgument("Contour: segment " + std::to_string(k) +
                              " does not chain into the next one");
      }
    }
    counterclockwise_ = signed_area() > 0.0;
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  bool counterclockwise() const noexcept { return counterclockwise_; }
  /// max(1, largest modulus on the curve); reference length for tolerances.
  double scale() const noexcept { return scale_; }

  double length() const {
    double acc = 0.0;
    for (const auto& s : segments_) acc += std::visit([](const auto& x) { return x.length(); }, s);
    return acc;
  }

  /// (1/2) \oint Im(conj(z) dz); positive for counterclockwise curves.
  double signed_area() const {
    double acc = 0.0;
    for (const auto& s : segments_) {
      if (const auto* arc = std::get_if<CircleArc>(&s)) {
        const Complex c = arc->center;
        const double r = arc->radius;
        const Complex de = std::polar(1.0, arc->theta_end) - std::polar(1.0, arc->theta_begin);
        acc += r * (std::conj(c) * de / Complex(0.0, 1.0)).real() + r * r * arc->sweep();
      } else {
        const auto& l = std::get<LineSegment>(s);
        acc += (std::conj(l.start) * l.end).imag();
      }
    }
    return 0.5 * acc;
  }

  static Complex start_of(const Segment& s) { return std::visit(detail::SegmentStart{}, s); }
  static Complex end_of(const Segment& s) { return std::visit(detail::SegmentEnd{}, s); }

 private:
  std::vector<Segment> segments_;
  bool counterclockwise_ = true;
  double scale_ = 1.0;
};

/// Counterclockwise circle |z - center| = radius, parametrized from
/// theta = 0 (first quadrature node at center + radius).
inline Contour circle(Complex center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("circle: radius must be positive");
  }
  return Contour({CircleArc{center, radius, 0.0, 2.0 * std::numbers::pi}});
}

/// Rectangle with right side s0 = {x0 + iy : |y| <= rho + 1}, top side at
/// height rho + 1 back to x0 - rho - 1, left side at x0 - rho - 1 and bottom
/// side at -(rho + 1). Counterclockwise, segments in the order s0, s1, s2, s3.
inline Contour rectangle_contour(double x0, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho) || !std::isfinite(x0)) {
    throw InvalidArgument("rectangle_contour: need finite x0 and rho >= 0");
  }
  const double h = rho + 1.0;
  const Complex lower_right{x0, -h}, upper_right{x0, h};
  const Complex upper_left{x0 - h, h}, lower_left{x0 - h, -h};
  return Contour({LineSegment{lower_right, upper_right}, LineSegment{upper_right, upper_left},
                  LineSegment{upper_left, lower_left}, LineSegment{lower_left, lower_right}});
}

/// Closed polygon through the given vertices (in order).
inline Contour polygon(const std::vector<Complex>& vertices) {
  if (vertices.size() < 3) throw InvalidArgument("polygon: need at least 3 vertices");
  std::vector<Segment> segs;
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    segs.push_back(LineSegment{vertices[k], vertices[(k + 1) % vertices.size()]});
  }
  return Contour(std::move(segs));
}

inline double distance_to(const LineSegment& l, Complex w) {
  const Complex d = l.end - l.start;
  const double len2 = std::norm(d);
  double t = ((w - l.start) * std::conj(d)).real() / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(w - (l.start + t * d));
}

namespace detail {
// Whether angle phi lies on the arc's angular range.
inline bool angle_on_arc(const CircleArc& a, double phi) {
  if (a.full_turn()) return true;
  const double lo = std::min(a.theta_begin, a.theta_end);
  const double hi = std::max(a.theta_begin, a.theta_end);
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(phi - lo, two_pi);
  if (t < 0.0) t += two_pi;
  return lo + t <= hi;
}
}  // namespace detail

inline double distance_to(const CircleArc& a, Complex w) {
  const Complex d = w - a.center;
  const double rho = std::abs(d);
  if (rho == 0.0) return a.radius;
  if (detail::angle_on_arc(a, std::arg(d))) return std::abs(rho - a.radius);
  return std::min(std::abs(w - a.start()), std::abs(w - a.end()));
}

/// Exact Euclidean distance from w to the curve.
inline double distance_to(const Contour& g, Complex w) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : g.segments()) {
    best = std::min(best, std::visit([&](const auto& x) { return distance_to(x, w); }, s));
  }
  return best;
}

namespace detail {

// Change of arg(z - w) along a straight segment; w must not lie on it.
inline double line_angle(Complex a, Complex b, Complex w) { return std::arg((b - w) / (a - w)); }

// Change of arg(z - w) along an arc: the chord contribution plus a full turn
// when w sits in the circular segment bounded by the arc and its chord.
inline double arc_angle(const CircleArc& arc, Complex w, int depth = 0) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double sign = arc.sweep() > 0.0 ? 1.0 : -1.0;
  if (arc.full_turn()) {
    return std::abs(w - arc.center) < arc.radius ? sign * two_pi : 0.0;
  }
  const Complex a = arc.start(), b = arc.end();
  const Complex mid = arc.at(0.5 * (arc.theta_begin + arc.theta_end));
  const double side_w = ((b - a) * std::conj(w - a)).imag();
  const double side_mid = ((b - a) * std::conj(mid - a)).imag();
  const double chord_scale = std::abs(b - a) * std::max(std::abs(w - a), 1e-300);
  const bool in_disk = std::abs(w - arc.center) < arc.radius;
  if (in_disk && std::abs(side_w) <= 1e-14 * chord_scale && depth < 8) {
    // w on (or numerically at) the chord: split the arc.
    const double m = 0.5 * (arc.theta_begin + arc.theta_end);
    return arc_angle(CircleArc{arc.center, arc.radius, arc.theta_begin, m}, w, depth + 1) +
           arc_angle(CircleArc{arc.center, arc.radius, m, arc.theta_end}, w, depth + 1);
  }
  double angle = line_angle(a, b, w);
  if (in_disk && (side_w > 0.0) == (side_mid > 0.0)) angle += sign * two_pi;
  return angle;
}

}  // namespace detail

/// Winding number of the curve about w (w must be off the curve).
inline int winding_number(const Contour& g, Complex w) {
  double total = 0.0;
  for (const auto& s : g.segments()) {
    if (const auto* arc = std::get_if<CircleArc>(&s)) {
      total += detail::arc_angle(*arc, w);
    } else {
      const auto& l = std::get<LineSegment>(s);
      total += detail::line_angle(l.start, l.end, w);
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

inline constexpr double kOnCurveRelative = 1e-12;

/// True iff the winding number about w is 1. Throws OnCurve when w is within
/// 1e-12 * scale of the curve.
inline bool contains(const Contour& g, Complex w) {
  const double d = distance_to(g, w);
  if (d < kOnCurveRelative * g.scale()) {
    throw OnCurve("contains: point (" + std::to_string(w.real()) + ", " + std::to_string(w.imag()) +
                      ") lies on the contour",
                  w, d);
  }
  return winding_number(g, w) == 1;
}

struct GaussLegendre {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule via Newton iteration on P_n.
inline GaussLegendre gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidArgument("gauss_legendre: n must be positive");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const auto kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = nd * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const auto kd = static_cast<double>(k);
      const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
      p0 = p1;
      p1 = p2;
    }
    dp = nd * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

struct QuadratureRule {
  std::vector<Complex> nodes;
  std::vector<Complex> weights;  // include dz
  std::vector<std::size_t> segment_of_node;
  std::size_t nodes_per_segment = 0;

  std::size_t size() const noexcept { return nodes.size(); }

  template <class F>
  Complex integrate(F&& f) const {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < nodes.size(); ++j) acc += weights[j] * f(nodes[j]);
    return acc;
  }
};

inline constexpr std::size_t kDefaultNodesPerSegment = 64;

/// Trapezoid in the angle on arcs (periodic for full circles), Gauss-Legendre
/// on line segments.
inline QuadratureRule quadrature(const Contour& g,
                                 std::size_t nodes_per_segment = kDefaultNodesPerSegment) {
  if (nodes_per_segment < 2) throw InvalidArgument("quadrature: need at least 2 nodes per segment");
  QuadratureRule rule;
  rule.nodes_per_segment = nodes_per_segment;
  const auto n = static_cast<double>(nodes_per_segment);
  const Complex i_unit{0.0, 1.0};
  std::optional<GaussLegendre> gl;
  for (std::size_t k = 0; k < g.segments().size(); ++k) {
    const auto& s = g.segments()[k];
    if (const auto* arc = std::get_if<CircleArc>(&s)) {
      const double sweep = arc->sweep();
      if (arc->full_turn()) {
        const double h = sweep / n;
        for (std::size_t j = 0; j < nodes_per_segment; ++j) {
          const double th = arc->theta_begin + h * static_cast<double>(j);
          const Complex e = std::polar(1.0, th);
          rule.nodes.push_back(arc->center + arc->radius * e);
          rule.weights.push_back(i_unit * arc->radius * e * h);
          rule.segment_of_node.push_back(k);
        }
      } else {
        const double h = sweep / (n - 1.0);
        for (std::size_t j = 0; j < nodes_per_segment; ++j) {
          const double th = arc->theta_begin + h * static_cast<double>(j);
          const Complex e = std::polar(1.0, th);
          const double end_factor = (j == 0 || j + 1 == nodes_per_segment) ? 0.5 : 1.0;
          rule.nodes.push_back(arc->center + arc->radius * e);
          rule.weights.push_back(i_unit * arc->radius * e * h * end_factor);
          rule.segment_of_node.push_back(k);
        }
      }
    } else {
      if (!gl) gl = gauss_legendre(nodes_per_segment);
      const auto& l = std::get<LineSegment>(s);
      const Complex mid = 0.5 * (l.start + l.end);
      const Complex half = 0.5 * (l.end - l.start);
      for (std::size_t j = 0; j < nodes_per_segment; ++j) {
        rule.nodes.push_back(mid + half * gl->nodes[j]);
        rule.weights.push_back(half * gl->weights[j]);
        rule.segment_of_node.push_back(k);
      }
    }
  }
  return rule;
}

}  // namespace hypinv
