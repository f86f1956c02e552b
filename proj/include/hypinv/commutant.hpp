#pragma once

// Members of Com(T) built as holomorphic functions of T: T itself, seeded
// polynomials, resolvents at points far from the spectrum and an auxiliary
// Riesz projection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hypinv/contour.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/random.hpp"

namespace hypinv {

enum class CommutantKind { polynomial, resolvent, riesz_projection };

inline const char* to_string(CommutantKind k) {
  switch (k) {
    case CommutantKind::polynomial: return "polynomial";
    case CommutantKind::resolvent: return "resolvent";
    case CommutantKind::riesz_projection: return "riesz-projection";
  }
  return "unknown";
}

struct CommutantSample {
  CommutantKind kind = CommutantKind::polynomial;
  std::string label;
  ComplexMatrix matrix;
  double construction_residual = 0.0;  // ||S T - T S|| / (||S|| ||T||)
};

struct CommutantRejection {
  std::string label;
  std::string reason;
  double witness = 0.0;  // distance to the spectrum, or residual
};

struct CommutantSpec {
  std::uint64_t seed = 0;
  std::size_t max_degree = 5;  // polynomials of degree 1..max_degree
  std::size_t resolvents = 3;
  bool riesz = true;
  double min_spectrum_distance = 1e-6;
  double construction_tol = 1e-10;
};

struct CommutantSet {
  std::vector<CommutantSample> samples;
  std::vector<CommutantRejection> rejected;
};

namespace detail {

inline double commutator_residual(const ComplexMatrix& s, const ComplexMatrix& t) {
  const double ns = spectral_norm(s), nt = spectral_norm(t);
  if (ns == 0.0 || nt == 0.0) return 0.0;
  return spectral_norm(s * t - t * s) / (ns * nt);
}

}  // namespace detail

/// Builds the samples; any candidate failing ||S T - T S|| <= tol ||S|| ||T||
/// or lying too close to the spectrum is rejected with a witness.
inline CommutantSet sample_commutant(const ComplexMatrix& t, const CommutantSpec& spec = {}) {
  detail::require_square(t, "sample_commutant");
  const auto n = t.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const double norm_t = spectral_norm(t);
  const double scale = norm_t > 0.0 ? norm_t : 1.0;
  const EigenDecomposition dec = eig(t);
  Rng rng(spec.seed);
  CommutantSet out;

  auto admit = [&](CommutantKind kind, std::string label, ComplexMatrix s) {
    const double res = detail::commutator_residual(s, t);
    if (!(res <= spec.construction_tol)) {
      out.rejected.push_back({std::move(label), "construction residual above tolerance", res});
      return;
    }
    out.samples.push_back({kind, std::move(label), std::move(s), res});
  };

  admit(CommutantKind::polynomial, "T", t);
  const ComplexMatrix ts = t / scale;
  for (std::size_t d = 1; d <= spec.max_degree; ++d) {
    std::vector<Complex> c(d + 1);
    for (auto& ck : c) ck = rng.complex_normal();
    ComplexMatrix p = c[d] * id;  // Horner in T / ||T||
    for (std::size_t k = d; k-- > 0;) p = ts * p + c[k] * id;
    admit(CommutantKind::polynomial, "poly-deg" + std::to_string(d), std::move(p));
  }

  const double radius = norm_t + 1.0;
  for (std::size_t j = 0; j < spec.resolvents; ++j) {
    const Complex mu = std::polar(radius, 2.0 * std::numbers::pi * rng.uniform());
    double dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
      dist = std::min(dist, std::abs(dec.eigenvalues(k) - mu));
    }
    const std::string label = "resolvent-" + std::to_string(j);
    if (dist < spec.min_spectrum_distance) {
      out.rejected.push_back({label, "mu too close to the spectrum", dist});
      continue;
    }
    admit(CommutantKind::resolvent, label, (t - mu * id).partialPivLu().inverse());
  }

  if (spec.riesz && n >= 2) {
    Eigen::Index top = 0;
    for (Eigen::Index k = 1; k < dec.eigenvalues.size(); ++k) {
      if (dec.eigenvalues(k).real() > dec.eigenvalues(top).real()) top = k;
    }
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
      if (k != top) gap = std::min(gap, std::abs(dec.eigenvalues(k) - dec.eigenvalues(top)));
    }
    if (!(gap > spec.min_spectrum_distance * 2.0)) {
      out.rejected.push_back({"riesz", "eigenvalue of largest real part is not isolated", gap});
    } else {
      try {
        const RieszResult r = riesz_projection(t, circle(dec.eigenvalues(top), 0.5 * gap),
                                               std::min(spec.min_spectrum_distance, 0.25 * gap));
        admit(CommutantKind::riesz_projection, "riesz", r.projector);
      } catch (const OnCurve& e) {
        out.rejected.push_back({"riesz", e.what(), e.distance()});
      }
    }
  }
  return out;
}

}  // namespace hypinv
