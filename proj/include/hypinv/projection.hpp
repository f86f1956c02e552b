#pragma once

// P (indicator of f^{-1}(interior)), L = (1/2 pi i) \oint B(z) dz, their sum,
// the eigen-decomposition Riesz projection of T used as an oracle, and the
// range of P + L as an orthonormal basis.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hypinv/contour.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/parallel.hpp"
#include "hypinv/resolvent.hpp"

namespace hypinv {

inline constexpr double kDefaultDelta = 1e-6;

struct ProjectionSettings {
  ResolventSettings resolvent;
  double delta = kDefaultDelta;  // minimal distance of atoms / eigenvalues to the contour
  std::size_t workers = 1;
};

inline ComplexMatrix analytic_P(const MultiplicationOperator& m, const Contour& g,
                                double delta = kDefaultDelta) {
  const auto n = static_cast<Eigen::Index>(m.atom_count());
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex fi = m.symbol()(i);
    const double d = distance_to(g, fi);
    if (d < delta) {
      throw OnCurve("analytic_P: f_" + std::to_string(i) + " lies within " + std::to_string(delta) +
                        " of the contour",
                    fi, d);
    }
    if (contains(g, fi)) p(i, i) = 1.0;
  }
  return p;
}

/// -(1/2 pi i) sum_j w_j (f - z_j)^{-1}, the quadrature form of analytic_P's diagonal.
inline ComplexVector quadrature_indicator(const MultiplicationOperator& m, const QuadratureRule& rule) {
  const Complex two_pi_i{0.0, 2.0 * std::numbers::pi};
  ComplexVector out(static_cast<Eigen::Index>(m.atom_count()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < rule.size(); ++j) acc += rule.weights[j] / (m.symbol()(i) - rule.nodes[j]);
    out(i) = -acc / two_pi_i;
  }
  return out;
}

struct IntegrationResult {
  ComplexMatrix L;
  double min_certificate = std::numeric_limits<double>::infinity();
  std::size_t min_certificate_node = 0;
  double sup_norm_B = 0.0;
  std::size_t nodes = 0;
};

namespace detail {

struct NodeTerm {
  ComplexMatrix left;   // B = left right^H, or
  ComplexMatrix right;
  ComplexMatrix dense;  // dense B when the factors are unavailable
  double certificate = 1.0;
  double norm_B = 0.0;
};

inline NodeTerm evaluate_node(const PerturbedOperator& t, const QuadratureRule& rule, std::size_t j,
                              const ResolventSettings& settings) {
  try {
    ResolventOperatorAt b = build_B(t, rule.nodes[j], settings, false);
    NodeTerm out;
    out.certificate = b.invertibility_sigma_min;
    out.norm_B = resolvent_B_norm(t, b);
    if (b.B_left.cols() > 0 || b.B.size() == 0) {
      out.left = std::move(b.B_left);
      out.right = std::move(b.B_right);
    } else {
      out.dense = std::move(b.B);
    }
    return out;
  } catch (const NearSingular& e) {
    throw NearSingular("node " + std::to_string(j) + ": " + e.what(), j, e.z(), e.sigma_min());
  }
}

}  // namespace detail

/// L = (1/2 pi i) sum_j w_j B(z_j), accumulated in node order.
inline IntegrationResult integrate_B(const PerturbedOperator& t, const QuadratureRule& rule,
                                     const ProjectionSettings& settings = {}) {
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  IntegrationResult out;
  out.nodes = rule.size();
  if (t.term_count() == 0) {
    out.L = ComplexMatrix::Zero(n, n);
    out.min_certificate = 1.0;
    return out;
  }
  const auto terms = ordered_map(rule.size(), settings.workers, [&](std::size_t j) {
    return detail::evaluate_node(t, rule, j, settings.resolvent);
  });
  const Complex two_pi_i{0.0, 2.0 * std::numbers::pi};
  CompensatedSum sum(n, n);
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& term = terms[j];
    const Complex c = rule.weights[j] / two_pi_i;
    if (term.dense.size() > 0) {
      sum.add(c * term.dense);
    } else {
      sum.add((c * term.left) * term.right.adjoint());
    }
    if (term.certificate < out.min_certificate) {
      out.min_certificate = term.certificate;
      out.min_certificate_node = j;
    }
    out.sup_norm_B = std::max(out.sup_norm_B, term.norm_B);
  }
  out.L = sum.value();
  return out;
}

struct ProjectionBundle {
  ComplexMatrix P;
  ComplexMatrix L;
  ComplexMatrix PplusL;
  std::size_t quadrature_nodes_used = 0;
  double min_certificate = 1.0;
  std::size_t min_certificate_node = 0;
  double sup_norm_B = 0.0;
};

inline ProjectionBundle assemble(const PerturbedOperator& t, const Contour& g,
                                 std::size_t nodes_per_segment = kDefaultNodesPerSegment,
                                 const ProjectionSettings& settings = {}) {
  ProjectionBundle out;
  out.P = analytic_P(t.base(), g, settings.delta);
  const QuadratureRule rule = quadrature(g, nodes_per_segment);
  IntegrationResult integral = integrate_B(t, rule, settings);
  out.L = std::move(integral.L);
  out.PplusL = out.P + out.L;
  out.quadrature_nodes_used = integral.nodes;
  out.min_certificate = integral.min_certificate;
  out.min_certificate_node = integral.min_certificate_node;
  out.sup_norm_B = integral.sup_norm_B;
  return out;
}

struct RieszResult {
  ComplexMatrix projector;
  bool used_quadrature = false;  // eigenvectors too ill-conditioned
  double condition_estimate = 0.0;
  std::size_t eigenvalues_inside = 0;
};

/// (1/2 pi i) sum_j w_j (z_j - M)^{-1}.
inline ComplexMatrix riesz_by_quadrature(const ComplexMatrix& m, const QuadratureRule& rule) {
  const auto n = m.rows();
  const Complex two_pi_i{0.0, 2.0 * std::numbers::pi};
  CompensatedSum sum(n, n);
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const ComplexMatrix shifted = rule.nodes[j] * ComplexMatrix::Identity(n, n) - m;
    sum.add((rule.weights[j] / two_pi_i) * shifted.partialPivLu().inverse());
  }
  return sum.value();
}

/// Riesz projection of a dense matrix for the eigenvalues inside the contour.
inline RieszResult riesz_projection(const ComplexMatrix& m, const Contour& g,
                                    double delta = kDefaultDelta,
                                    std::size_t fallback_nodes = 2 * kDefaultNodesPerSegment) {
  const EigenDecomposition dec = eig(m);
  RieszResult out;
  out.condition_estimate = dec.condition_estimate;
  std::vector<bool> inside(static_cast<std::size_t>(dec.eigenvalues.size()));
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    const Complex mu = dec.eigenvalues(k);
    const double d = distance_to(g, mu);
    if (d < delta) {
      throw OnCurve("riesz projection: eigenvalue (" + std::to_string(mu.real()) + ", " +
                        std::to_string(mu.imag()) + ") lies within " + std::to_string(delta) +
                        " of the contour",
                    mu, d);
    }
    inside[static_cast<std::size_t>(k)] = contains(g, mu);
    if (inside[static_cast<std::size_t>(k)]) ++out.eigenvalues_inside;
  }
  if (dec.defective_suspect()) {
    out.used_quadrature = true;
    out.projector = riesz_by_quadrature(m, quadrature(g, fallback_nodes));
    return out;
  }
  const auto n = m.rows();
  ComplexVector indicator(n);
  for (Eigen::Index k = 0; k < n; ++k) indicator(k) = inside[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
  const ComplexMatrix& x = dec.right_eigenvectors;
  out.projector = x * indicator.asDiagonal() * x.partialPivLu().inverse();
  return out;
}

inline RieszResult riesz_of_T(const PerturbedOperator& t, const Contour& g,
                              double delta = kDefaultDelta) {
  return riesz_projection(materialize(t), g, delta);
}

struct SubspaceBasis {
  ComplexMatrix basis;  // columns orthonormal in the weighted pairing
  std::size_t dimension = 0;
  RealVector singular_values;  // of P + L in weighted coordinates

  /// Orthogonal projection onto the span: basis basis^H W.
  ComplexMatrix projector(const MeasureSpace& space) const {
    return basis * basis.adjoint() * space.weight_vector().cast<Complex>().asDiagonal();
  }
};

inline constexpr double kRankCut = 0.5;

/// Range of an idempotent; rank = number of singular values above 0.5.
inline SubspaceBasis extract_subspace(const ComplexMatrix& pplusl, const MeasureSpace& space) {
  detail::require_square(pplusl, "extract_subspace");
  detail::require_length(pplusl.rows(), space.atom_count(), "extract_subspace");
  const RealVector sw = space.sqrt_weights();
  const ComplexMatrix scaled =
      sw.cast<Complex>().asDiagonal() * pplusl * sw.cwiseInverse().cast<Complex>().asDiagonal();
  const SingularDecomposition dec = svd(scaled, "P + L");
  SubspaceBasis out;
  out.singular_values = dec.singular_values;
  for (Eigen::Index k = 0; k < dec.singular_values.size(); ++k) {
    if (dec.singular_values(k) > kRankCut) ++out.dimension;
  }
  const std::size_t n = space.atom_count();
  if (out.dimension == 0 || out.dimension == n) {
    throw TrivialSubspace("extract_subspace: range of P + L has dimension " +
                              std::to_string(out.dimension) + " of " + std::to_string(n),
                          out.dimension, n);
  }
  const auto dim = static_cast<Eigen::Index>(out.dimension);
  out.basis = sw.cwiseInverse().cast<Complex>().asDiagonal() * dec.left_vectors.leftCols(dim);
  return out;
}

inline SubspaceBasis extract_subspace(const ProjectionBundle& bundle, const MeasureSpace& space) {
  return extract_subspace(bundle.PplusL, space);
}

}  // namespace hypinv
