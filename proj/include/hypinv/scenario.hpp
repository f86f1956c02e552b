#pragma once

// Scenario: operator, contour, coefficients and numerical settings for one
// run, plus generators for the two disk examples and random admissible
// instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypinv/commutant.hpp"
#include "hypinv/contour.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/hypotheses.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/random.hpp"
#include "hypinv/resolvent.hpp"

namespace hypinv {

enum class ContourKind { circle, rectangle, automatic };

struct ContourSpec {
  ContourKind kind = ContourKind::circle;
  Complex center{0.0, 0.0};
  double radius = 1.0;
  double x0 = 0.0;
  double rho = 0.0;
};

struct Tolerances {
  double oracle = 1e-8;          // times (1 + ||T||)
  double idempotency = 1e-8;     // times (1 + ||P + L||)^2
  double eigenvalue = 1e-8;      // distance of eig(P + L) to {0, 1}
  double commutation = 1e-8;     // ||S X - X S|| / (||S|| (1 + ||X||))
  double invariance = 1e-8;      // ||(I - Q) S Q|| / ||S||
  double right_inverse = 1e-10;
  double sweep_floor = 1e-12;    // times (1 + ||T||)
};

struct Numerics {
  std::uint64_t seed = 0;
  std::size_t nodes = 128;  // per segment
  std::vector<std::size_t> node_ladder;
  std::vector<std::size_t> truncation_ladder;
  double delta = 1e-6;
  double cluster_eps = 0.0;
  double cluster_min_mass = 0.0;
  double near_singular = kDefaultNearSingular;
  double range_guard = kDefaultRangeGuard;
  double summability_cap = kDefaultSummabilityCap;
  double plateau_tol = kDefaultPlateauTol;
  std::size_t x0_candidates = 64;
  double x0_guard = 1e-3;
  std::size_t workers = 1;
  Tolerances tolerances;
};

struct Scenario {
  std::string name;
  PerturbedOperator op;
  ContourSpec contour;
  Numerics numerics;
  std::optional<FactoredCoefficients> coefficients;  // default: symmetric

  FactoredCoefficients coeffs() const {
    return coefficients ? *coefficients : FactoredCoefficients::symmetric(op.perturbation());
  }
};

inline ResolventSettings resolvent_settings(const Numerics& n) {
  return {n.range_guard, n.near_singular, ResolventMethod::structured};
}

inline ProjectionSettings projection_settings(const Numerics& n) {
  return {resolvent_settings(n), n.delta, n.workers};
}

inline HypothesisSettings hypothesis_settings(const Scenario& s, bool rectangle) {
  HypothesisSettings h;
  h.cluster_eps = s.numerics.cluster_eps;
  h.cluster_min_mass = s.numerics.cluster_min_mass;
  h.delta = s.numerics.delta;
  h.resolvent = resolvent_settings(s.numerics);
  h.nodes_per_segment = s.numerics.nodes;
  h.require_summability = rectangle && s.op.space().kind() == MeasureKind::atomic;
  h.summability_cap = s.numerics.summability_cap;
  h.plateau_tol = s.numerics.plateau_tol;
  return h;
}

struct ResolvedContour {
  Contour contour;
  bool rectangle = false;
  std::optional<X0Choice> x0;
};

/// Circle and rectangle specs map directly. "auto" takes the leftmost and
/// rightmost clusters a, b of f, picks x0 in (Re a, Re b) by choose_x0 and
/// builds the rectangle with rho = ||f||_inf.
inline ResolvedContour resolve_contour(const Scenario& s) {
  switch (s.contour.kind) {
    case ContourKind::circle:
      return {circle(s.contour.center, s.contour.radius), false, std::nullopt};
    case ContourKind::rectangle:
      return {rectangle_contour(s.contour.x0, s.contour.rho), true, std::nullopt};
    case ContourKind::automatic: break;
  }
  const MultiplicationOperator& m = s.op.base();
  const double eps = s.numerics.cluster_eps > 0.0 ? s.numerics.cluster_eps : default_cluster_eps(m);
  const double min_mass = s.numerics.cluster_min_mass > 0.0
                              ? s.numerics.cluster_min_mass
                              : default_cluster_min_mass(m.space(), eps);
  const std::vector<Complex> clusters = accumulation_points(m, eps, min_mass);
  if (clusters.size() < 2) {
    throw InvalidArgument("auto contour: fewer than two clusters in the spectrum of M_f");
  }
  const auto [lo, hi] = std::minmax_element(clusters.begin(), clusters.end(),
                                            [](Complex a, Complex b) { return a.real() < b.real(); });
  if (!(lo->real() < hi->real())) {
    throw InvalidArgument("auto contour: clusters share the same real part");
  }
  const X0Choice choice = choose_x0(s.op, s.coeffs(), lo->real(), hi->real(), s.numerics.x0_candidates,
                                    s.numerics.x0_guard, derive_seed(s.numerics.seed, 0x70));
  return {rectangle_contour(choice.x0, m.sup_norm()), true, choice};
}

struct DiskGrid {
  MeasureSpace space;
  ComplexVector centroids;
  RealVector radii;  // |centroid|
};

/// Polar grid on the disk |xi| <= radius with cell-area weights and
/// area-centroid sample points. `breaks` are interior ring radii that must
/// be cell boundaries; `radial` rings are shared evenly between the pieces.
inline DiskGrid disk_grid(double radius, std::vector<double> breaks, std::size_t radial,
                          std::size_t angular) {
  if (!(radius > 0.0)) throw InvalidArgument("disk_grid: radius must be positive");
  if (angular < 1) throw InvalidArgument("disk_grid: need at least one sector");
  std::vector<double> edges{0.0};
  std::sort(breaks.begin(), breaks.end());
  for (double b : breaks) {
    if (!(b > edges.back() && b < radius)) throw InvalidArgument("disk_grid: breaks must lie in (0, radius)");
    edges.push_back(b);
  }
  edges.push_back(radius);
  const std::size_t pieces = edges.size() - 1;
  if (radial < pieces) {
    throw InvalidArgument("disk_grid: need at least " + std::to_string(pieces) + " rings");
  }
  std::vector<double> rings{0.0};
  for (std::size_t p = 0; p < pieces; ++p) {
    const std::size_t count = radial / pieces + (p < radial % pieces ? 1 : 0);
    for (std::size_t k = 1; k <= count; ++k) {
      rings.push_back(edges[p] + (edges[p + 1] - edges[p]) * static_cast<double>(k) / static_cast<double>(count));
    }
  }
  const std::size_t n = radial * angular;
  std::vector<double> weights;
  weights.reserve(n);
  ComplexVector c(static_cast<Eigen::Index>(n));
  RealVector r(static_cast<Eigen::Index>(n));
  const double dth = 2.0 * std::numbers::pi / static_cast<double>(angular);
  const double sinc = dth >= 2.0 * std::numbers::pi ? 0.0 : std::sin(0.5 * dth) / (0.5 * dth);
  Eigen::Index idx = 0;
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
    const double r0 = rings[k], r1 = rings[k + 1];
    const double area = 0.5 * (r1 * r1 - r0 * r0) * dth;
    const double rc = (2.0 / 3.0) * (r1 * r1 * r1 - r0 * r0 * r0) / (r1 * r1 - r0 * r0) * sinc;
    for (std::size_t a = 0; a < angular; ++a) {
      const double th = dth * (static_cast<double>(a) + 0.5);
      weights.push_back(area);
      c(idx) = std::polar(rc, th);
      r(idx) = rc;
      ++idx;
    }
  }
  return {MeasureSpace(std::move(weights), MeasureKind::continuous), std::move(c), std::move(r)};
}

namespace detail {

inline ComplexVector seeded_vector(Rng& rng, Eigen::Index n) {
  ComplexVector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.complex_normal();
  return x;
}

inline ComplexVector unit(const ComplexVector& x, const MeasureSpace& space) {
  const double nx = vector_norm(x, space);
  if (nx == 0.0) throw InvalidArgument("generator: zero vector");
  return x / nx;
}

inline double spectrum_distance(const PerturbedOperator& t, const Contour& g) {
  const EigenDecomposition dec = eig(materialize(t));
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) d = std::min(d, distance_to(g, dec.eigenvalues(k)));
  return d;
}

}  // namespace detail

/// u = (1 - 1_A) g, v = (1 - 1_A) h with A = {inner <= |xi| <= outer} and
/// seeded g, h; u and v normalized, K = s u (x) v.
inline CompactPerturbation masked_annulus_perturbation(const MultiplicationOperator& m, double s,
                                                       double inner, double outer, std::uint64_t seed) {
  if (!(s > 0.0)) throw InvalidArgument("masked annulus: s must be positive");
  const auto n = static_cast<Eigen::Index>(m.atom_count());
  Rng rng(seed);
  ComplexVector g = detail::seeded_vector(rng, n), h = detail::seeded_vector(rng, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::abs(m.symbol()(i));
    if (r >= inner && r <= outer) {
      g(i) = 0.0;
      h(i) = 0.0;
    }
  }
  return CompactPerturbation({{s, detail::unit(g, m.space()), detail::unit(h, m.space())}});
}

/// u_n = (1 - |xi|) g_n, v_n = (1 - |xi|) h_n with seeded unit g_n, h_n and
/// s_n = ratio^n, n = 1..count.
inline CompactPerturbation damped_series_perturbation(const MultiplicationOperator& m, std::size_t count,
                                                      double ratio, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("damped series: need at least one term");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("damped series: ratio must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(m.atom_count());
  Rng rng(seed);
  std::vector<RankOneTerm> terms;
  for (std::size_t k = 1; k <= count; ++k) {
    ComplexVector g = detail::unit(detail::seeded_vector(rng, n), m.space());
    ComplexVector h = detail::unit(detail::seeded_vector(rng, n), m.space());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double damp = 1.0 - std::abs(m.symbol()(i));
      g(i) *= damp;
      h(i) *= damp;
    }
    terms.push_back({std::pow(ratio, static_cast<double>(k)), std::move(g), std::move(h)});
  }
  return CompactPerturbation(std::move(terms));
}

/// s_n = scale * decay^n (n = 0..count-1) with seeded unit u_n, v_n.
inline CompactPerturbation gaussian_perturbation(const MultiplicationOperator& m, std::size_t count,
                                                 double scale, double decay, std::uint64_t seed) {
  if (!(scale > 0.0) || !(decay > 0.0)) throw InvalidArgument("gaussian terms: scale and decay must be positive");
  const auto n = static_cast<Eigen::Index>(m.atom_count());
  Rng rng(seed);
  std::vector<RankOneTerm> terms;
  for (std::size_t k = 0; k < count; ++k) {
    ComplexVector u = detail::unit(detail::seeded_vector(rng, n), m.space());
    ComplexVector v = detail::unit(detail::seeded_vector(rng, n), m.space());
    terms.push_back({scale * std::pow(decay, static_cast<double>(k)), std::move(u), std::move(v)});
  }
  return CompactPerturbation(std::move(terms));
}

/// Calls make(seed'), with seed' = seed first and then derived seeds, until
/// the spectrum of M_f + K keeps min_distance from the contour.
template <class Make>
CompactPerturbation redraw_until_clear(const MultiplicationOperator& m, const Contour& g, double min_distance,
                                       std::uint64_t seed, std::size_t max_attempts, Make&& make) {
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    CompactPerturbation k = make(attempt == 0 ? seed : derive_seed(seed, attempt));
    if (!(min_distance > 0.0)) return k;
    if (detail::spectrum_distance(PerturbedOperator(m, k), g) >= min_distance) return k;
  }
  throw InvalidArgument("generator: no draw kept the spectrum " + std::to_string(min_distance) +
                        " away from the contour after " + std::to_string(max_attempts) + " attempts");
}

struct Example1Params {
  std::size_t radial = 8;
  std::size_t angular = 16;
  double s = 0.1;
  std::uint64_t seed = 1;
};

/// Unit disk, f(xi) = xi, u = (1 - 1_A) g, v = (1 - 1_A) h with
/// A = {1/3 <= |xi| <= 2/3}, K = s u (x) v, Gamma = {|z| = 1/2}.
inline Scenario example1_scenario(const Example1Params& p) {
  if (p.radial < 8 || p.angular < 16) throw InvalidArgument("example1: grid must be at least (8, 16)");
  const DiskGrid grid = disk_grid(1.0, {0.5}, p.radial, p.angular);
  MultiplicationOperator m(grid.space, grid.centroids);
  CompactPerturbation k = masked_annulus_perturbation(m, p.s, 1.0 / 3.0, 2.0 / 3.0, p.seed);
  Scenario s{"example1", PerturbedOperator(std::move(m), std::move(k)),
             ContourSpec{ContourKind::circle, {0.0, 0.0}, 0.5, 0.0, 0.0}, Numerics{}, std::nullopt};
  s.numerics.seed = p.seed;
  s.numerics.nodes = 256;
  s.numerics.node_ladder = {32, 64, 128, 256};
  s.numerics.truncation_ladder = {0, 1};
  return s;
}

struct Example2Params {
  std::size_t radial = 8;
  std::size_t angular = 16;
  std::size_t term_count = 8;
  double ratio = 0.5;
  std::uint64_t seed = 2;
  double min_spectrum_distance = 0.1;
  std::size_t max_attempts = 32;
};

/// Disk of radius 2, f(xi) = xi, u_n = (1 - |xi|) g_n, v_n = (1 - |xi|) h_n
/// with ||g_n|| = ||h_n|| = 1, s_n = 2^{-n} (n = 1..term_count),
/// Gamma = {|z| = 1}. Draws are repeated with derived seeds until the
/// spectrum of T keeps min_spectrum_distance from Gamma.
inline Scenario example2_scenario(const Example2Params& p) {
  const DiskGrid grid = disk_grid(2.0, {1.0}, p.radial, p.angular);
  MultiplicationOperator m(grid.space, grid.centroids);
  const Contour gamma = circle(0.0, 1.0);
  CompactPerturbation k = redraw_until_clear(m, gamma, p.min_spectrum_distance, p.seed, p.max_attempts,
                                             [&](std::uint64_t seed) {
                                               return damped_series_perturbation(m, p.term_count, p.ratio, seed);
                                             });
  Scenario s{"example2", PerturbedOperator(std::move(m), std::move(k)),
             ContourSpec{ContourKind::circle, {0.0, 0.0}, 1.0, 0.0, 0.0}, Numerics{}, std::nullopt};
  s.numerics.seed = p.seed;
  s.numerics.nodes = 256;
  s.numerics.node_ladder = {32, 64, 128, 256};
  for (std::size_t k2 = 0; k2 <= p.term_count; ++k2) s.numerics.truncation_ladder.push_back(k2);
  return s;
}

struct RandomInstanceParams {
  std::size_t min_atoms = 8;
  std::size_t max_atoms = 64;
  std::size_t max_terms = 8;
  double cluster_offset = 0.6;
  double cluster_spread = 0.25;
  double min_spectrum_distance = 0.1;
  std::size_t max_attempts = 64;
};

/// Atoms in two clusters around -0.6 and +0.6, seeded weights and terms,
/// a circle around the left cluster or an automatic rectangle. Draws whose
/// atoms or eigenvalues come within min_spectrum_distance of the contour
/// are redrawn from derived seeds.
inline Scenario random_scenario(std::uint64_t seed, const RandomInstanceParams& p = {}) {
  for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    const std::size_t n = p.min_atoms + static_cast<std::size_t>(rng.uniform() * static_cast<double>(p.max_atoms - p.min_atoms + 1));
    const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(p.max_terms));
    const bool weighted = rng.uniform() < 0.5;
    const bool use_circle = rng.uniform() < 0.5;
    std::vector<double> w(n, 1.0);
    if (weighted) {
      for (auto& wi : w) wi = rng.uniform(0.5, 2.0);
    }
    MeasureSpace space(w, MeasureKind::atomic);
    ComplexVector f(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double centre = i % 2 == 0 ? -p.cluster_offset : p.cluster_offset;
      const double rad = p.cluster_spread * std::sqrt(rng.uniform());
      const double ang = 2.0 * std::numbers::pi * rng.uniform();
      f(static_cast<Eigen::Index>(i)) = Complex(centre, 0.0) + std::polar(rad, ang);
    }
    std::vector<RankOneTerm> terms;
    for (std::size_t k = 0; k < r; ++k) {
      ComplexVector u = detail::unit(detail::seeded_vector(rng, static_cast<Eigen::Index>(n)), space);
      ComplexVector v = detail::unit(detail::seeded_vector(rng, static_cast<Eigen::Index>(n)), space);
      const double s = 0.1 * std::ldexp(1.0, -static_cast<int>(k)) * rng.uniform(0.5, 1.0);
      terms.push_back({s, std::move(u), std::move(v)});
    }
    Scenario sc{"random-" + std::to_string(seed),
                PerturbedOperator(MultiplicationOperator(space, f), CompactPerturbation(std::move(terms))),
                use_circle ? ContourSpec{ContourKind::circle, {-p.cluster_offset, 0.0}, p.cluster_offset, 0.0, 0.0}
                           : ContourSpec{ContourKind::automatic, {0.0, 0.0}, 1.0, 0.0, 0.0},
                Numerics{},
                std::nullopt};
    sc.numerics.seed = seed;
    sc.numerics.nodes = 128;
    sc.numerics.x0_guard = p.min_spectrum_distance;
    ResolvedContour rc = [&]() -> ResolvedContour {
      try {
        return resolve_contour(sc);
      } catch (const Error&) {
        return {circle(0.0, 1.0), false, std::nullopt};
      }
    }();
    if (sc.contour.kind == ContourKind::automatic && !rc.rectangle) continue;
    double atom_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < f.size(); ++i) atom_gap = std::min(atom_gap, distance_to(rc.contour, f(i)));
    if (atom_gap < p.min_spectrum_distance) continue;
    if (detail::spectrum_distance(sc.op, rc.contour) < p.min_spectrum_distance) continue;
    return sc;
  }
  throw InvalidArgument("random_scenario: no admissible draw for seed " + std::to_string(seed));
}

}  // namespace hypinv
