#pragma once

// A(z) = sum_n s_n ((f - z)^{-1} u_n) (x) ((conj f - conj z)^{-1} v_n),
// B(z) = (I + A(z)(M_f - z))^{-1} A(z) and R(z) = (M_f - z)^{-1} - B(z),
// plus the factorization A = A1 A2 and the norm / tail bounds on A1, A2.
//
// With X = (D - z)^{-1} U and W the weight matrix,
//   A(z)(D - z) = X S V^H W = F G^H,  F = X S,  G = W V,
// so I + A(D - z) is the identity plus a rank <= r matrix. The structured
// route works on an orthonormal basis Q of span[F, G] (k <= 2r columns):
// I + F G^H acts as I_k + (Q^H F)(Q^H G)^H on range(Q) and as the identity
// on its complement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"

namespace hypinv {

inline constexpr double kDefaultRangeGuard = 1e-10;
inline constexpr double kDefaultNearSingular = 1e-8;

enum class ResolventMethod { structured, dense };

struct ResolventSettings {
  double range_guard = kDefaultRangeGuard;      // relative to ||f||_inf
  double near_singular = kDefaultNearSingular;  // relative to ||I + A(D - z)||
  ResolventMethod method = ResolventMethod::structured;
};

/// a_n b_n = s_n for every term.
class FactoredCoefficients {
 public:
  FactoredCoefficients() = default;
  FactoredCoefficients(std::vector<double> a, std::vector<double> b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.size() != b_.size()) throw DimensionError("FactoredCoefficients: a and b differ in length");
    for (std::size_t n = 0; n < a_.size(); ++n) {
      if (!(a_[n] > 0.0) || !(b_[n] > 0.0) || !std::isfinite(a_[n]) || !std::isfinite(b_[n])) {
        throw InvalidArgument("FactoredCoefficients: a_" + std::to_string(n) + ", b_" +
                              std::to_string(n) + " must be positive and finite");
      }
    }
  }

  /// a_n = b_n = sqrt(s_n).
  static FactoredCoefficients symmetric(const CompactPerturbation& k) {
    std::vector<double> a(k.size());
    for (std::size_t n = 0; n < k.size(); ++n) a[n] = std::sqrt(k[n].s);
    return FactoredCoefficients(a, a);
  }

  /// Throws unless |a_n b_n - s_n| <= 1e-14 s_n for every term of k.
  void require_matches(const CompactPerturbation& k) const {
    if (a_.size() != k.size()) {
      throw DimensionError("FactoredCoefficients: " + std::to_string(a_.size()) +
                           " coefficients for " + std::to_string(k.size()) + " terms");
    }
    for (std::size_t n = 0; n < a_.size(); ++n) {
      if (std::abs(a_[n] * b_[n] - k[n].s) > 1e-14 * k[n].s) {
        throw InvalidArgument("FactoredCoefficients: a_" + std::to_string(n) + " b_" +
                              std::to_string(n) + " != s_" + std::to_string(n));
      }
    }
  }

  const std::vector<double>& a() const noexcept { return a_; }
  const std::vector<double>& b() const noexcept { return b_; }
  std::size_t size() const noexcept { return a_.size(); }

 private:
  std::vector<double> a_, b_;
};

/// Columns x_n = (f - z)^{-1} u_n and y_n = (conj f - conj z)^{-1} v_n,
/// set to zero off the supports of u_n and v_n. A = X S Y^H W.
struct AFactors {
  ComplexMatrix x;
  ComplexMatrix y;
  RealVector s;
};

/// Range-membership surrogate: |f_i - z| >= guard ||f||_inf wherever some u_n or
/// v_n is nonzero. Throws RangeMembership naming the term and atom.
inline AFactors a_factors(const PerturbedOperator& t, Complex z,
                          double range_guard = kDefaultRangeGuard) {
  const std::size_t n_atoms = t.atom_count();
  const auto n = static_cast<Eigen::Index>(n_atoms);
  const auto r = static_cast<Eigen::Index>(t.term_count());
  const ComplexVector& f = t.symbol();
  const double floor = range_guard * t.base().sup_norm();
  AFactors out{ComplexMatrix::Zero(n, r), ComplexMatrix::Zero(n, r), t.perturbation().s_vector()};
  for (Eigen::Index k = 0; k < r; ++k) {
    const RankOneTerm& term = t.perturbation()[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool touches = term.u(i) != 0.0 || term.v(i) != 0.0;
      if (!touches) continue;
      const Complex d = f(i) - z;
      const double ad = std::abs(d);
      if (!(ad >= floor) || ad == 0.0) {
        throw RangeMembership("range membership: term " + std::to_string(k) + " touches atom " +
                                  std::to_string(i) + " where |f_i - z| = " + std::to_string(ad),
                              static_cast<std::size_t>(k), static_cast<std::size_t>(i));
      }
      if (term.u(i) != 0.0) out.x(i, k) = term.u(i) / d;
      if (term.v(i) != 0.0) out.y(i, k) = term.v(i) / std::conj(d);
    }
  }
  return out;
}

inline ComplexMatrix build_A(const PerturbedOperator& t, Complex z,
                             double range_guard = kDefaultRangeGuard) {
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  if (t.term_count() == 0) return ComplexMatrix::Zero(n, n);
  const AFactors fac = a_factors(t, z, range_guard);
  return fac.x * fac.s.cast<Complex>().asDiagonal() * fac.y.adjoint() *
         t.space().weight_vector().cast<Complex>().asDiagonal();
}

struct AFactorization {
  ComplexMatrix a1;  // N x N, column n = a_n sqrt(w_n) x_n (columns >= r are zero)
  ComplexMatrix a2;  // N x N, row n = b_n / sqrt(w_n) y_n^H W
};

/// A1 = sum_n a_n x_n (x) e_n and A2 = sum_n b_n e_n (x) y_n with e_n the
/// normalized indicator of atom n. Term n is indexed by atom n, so the
/// number of terms may not exceed the atom count.
inline AFactorization build_A1_A2(const PerturbedOperator& t, const FactoredCoefficients& coeffs,
                                  Complex z, double range_guard = kDefaultRangeGuard) {
  coeffs.require_matches(t.perturbation());
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  const auto r = static_cast<Eigen::Index>(t.term_count());
  if (r > n) {
    throw DimensionError("build_A1_A2: " + std::to_string(r) + " terms exceed " +
                         std::to_string(n) + " atoms");
  }
  AFactorization out{ComplexMatrix::Zero(n, n), ComplexMatrix::Zero(n, n)};
  if (r == 0) return out;
  const AFactors fac = a_factors(t, z, range_guard);
  const RealVector w = t.space().weight_vector();
  for (Eigen::Index k = 0; k < r; ++k) {
    const double sw = std::sqrt(w(k));
    out.a1.col(k) = coeffs.a()[static_cast<std::size_t>(k)] * sw * fac.x.col(k);
    out.a2.row(k) = (coeffs.b()[static_cast<std::size_t>(k)] / sw) *
                    (fac.y.col(k).adjoint() * w.cast<Complex>().asDiagonal());
  }
  return out;
}

/// sigma_min(I + A (M_f - z)), computed densely.
inline double invertibility_certificate(const PerturbedOperator& t, Complex z,
                                        const ComplexMatrix& a) {
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  if (a.rows() != n || a.cols() != n) throw DimensionError("invertibility_certificate: shape");
  const ComplexVector d = t.symbol().array() - z;
  const ComplexMatrix m = ComplexMatrix::Identity(n, n) + a * d.asDiagonal();
  return smallest_singular_value(m);
}

struct ResolventOperatorAt {
  Complex z;
  ComplexMatrix A;
  ComplexMatrix B;
  double invertibility_sigma_min = 1.0;
  double system_norm = 1.0;  // ||I + A(M_f - z)||
  // B = B_left * B_right^H (structured route; empty for the dense route)
  ComplexMatrix B_left;
  ComplexMatrix B_right;

  /// B(z) X without forming B when the factors are available.
  ComplexMatrix apply_B(const ComplexMatrix& x) const {
    const Eigen::Index cols = B.size() > 0 ? B.cols() : B_left.rows() > 0 ? B_right.rows() : 0;
    if (cols != x.rows()) {
      throw InvalidArgument("apply_B: operand has " + std::to_string(x.rows()) + " rows, B has " +
                            std::to_string(cols) + " columns");
    }
    if (B.size() > 0 || B_left.rows() == 0) return B * x;
    return B_left * (B_right.adjoint() * x);
  }
};

namespace detail {

inline NearSingular near_singular_error(Complex z, double sigma_min, double norm,
                                        std::size_t node = 0) {
  return NearSingular("I + A(z)(M_f - z) is numerically singular at z = (" +
                          std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                          "): sigma_min = " + std::to_string(sigma_min) + ", norm " +
                          std::to_string(norm),
                      node, z, sigma_min);
}

inline ResolventOperatorAt build_B_dense(const PerturbedOperator& t, Complex z,
                                         const ResolventSettings& settings) {
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  ResolventOperatorAt out;
  out.z = z;
  out.A = build_A(t, z, settings.range_guard);
  const ComplexVector d = t.symbol().array() - z;
  const ComplexMatrix m = ComplexMatrix::Identity(n, n) + out.A * d.asDiagonal();
  const SingularDecomposition dec = svd(m, "I + A(z)(M_f - z)");
  out.system_norm = dec.singular_values(0);
  out.invertibility_sigma_min = dec.singular_values(dec.singular_values.size() - 1);
  if (!(out.invertibility_sigma_min > settings.near_singular * out.system_norm)) {
    throw near_singular_error(z, out.invertibility_sigma_min, out.system_norm);
  }
  out.B = dec.right_vectors *
          (dec.singular_values.cwiseInverse().cast<Complex>().asDiagonal() *
           (dec.left_vectors.adjoint() * out.A));
  return out;
}

inline ResolventOperatorAt build_B_structured(const PerturbedOperator& t, Complex z,
                                              const ResolventSettings& settings, bool dense_output) {
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  ResolventOperatorAt out;
  out.z = z;
  if (t.term_count() == 0) {
    out.A = ComplexMatrix::Zero(n, n);
    out.B = ComplexMatrix::Zero(n, n);
    out.B_left = ComplexMatrix(n, 0);
    out.B_right = ComplexMatrix(n, 0);
    return out;
  }
  const AFactors fac = a_factors(t, z, settings.range_guard);
  const RealVector w = t.space().weight_vector();
  const ComplexMatrix f_mat = fac.x * fac.s.cast<Complex>().asDiagonal();
  const ComplexMatrix g_mat = w.cast<Complex>().asDiagonal() * t.perturbation().v_matrix(t.atom_count());
  const ComplexMatrix h_mat = w.cast<Complex>().asDiagonal() * fac.y;  // A = F H^H
  if (dense_output) out.A = f_mat * h_mat.adjoint();

  const auto r = f_mat.cols();
  ComplexMatrix stacked(n, 2 * r);
  stacked << f_mat, g_mat;
  const ComplexMatrix q = orthonormal_columns(stacked);
  const auto k = q.cols();
  const ComplexMatrix small =
      ComplexMatrix::Identity(k, k) + (q.adjoint() * f_mat) * (q.adjoint() * g_mat).adjoint();
  const SingularDecomposition dec = svd(small, "I + A(z)(M_f - z) on span[F, G]");
  double norm = dec.singular_values(0);
  double smin = dec.singular_values(dec.singular_values.size() - 1);
  if (n > k) {
    norm = std::max(norm, 1.0);
    smin = std::min(smin, 1.0);
  }
  out.system_norm = norm;
  out.invertibility_sigma_min = smin;
  if (!(smin > settings.near_singular * norm)) throw near_singular_error(z, smin, norm);

  // M^{-1} F = F + Q (small^{-1} - I) Q^H F
  const ComplexMatrix qf = q.adjoint() * f_mat;
  const ComplexMatrix small_inv_qf =
      dec.right_vectors * (dec.singular_values.cwiseInverse().cast<Complex>().asDiagonal() *
                           (dec.left_vectors.adjoint() * qf));
  out.B_left = f_mat + q * (small_inv_qf - qf);
  out.B_right = h_mat;
  if (dense_output) out.B = out.B_left * out.B_right.adjoint();
  return out;
}

}  // namespace detail

/// B(z) = (I + A(z)(M_f - z))^{-1} A(z). Throws NearSingular when the system
/// is numerically singular (z on or near the point spectrum of T).
/// With dense_output = false the structured route keeps only B_left, B_right.
inline ResolventOperatorAt build_B(const PerturbedOperator& t, Complex z,
                                   const ResolventSettings& settings = {},
                                   bool dense_output = true) {
  return settings.method == ResolventMethod::dense
             ? detail::build_B_dense(t, z, settings)
             : detail::build_B_structured(t, z, settings, dense_output);
}

/// ||B(z)|| on L^2(mu).
inline double resolvent_B_norm(const PerturbedOperator& t, const ResolventOperatorAt& b) {
  if (b.B.size() > 0) return operator_norm(b.B, t.space());
  if (b.B_left.cols() == 0) return 0.0;
  const RealVector sw = t.space().sqrt_weights();
  return low_rank_norm(sw.cast<Complex>().asDiagonal() * b.B_left,
                       sw.cwiseInverse().cast<Complex>().asDiagonal() * b.B_right);
}

/// R(z) = (M_f - z)^{-1} - B(z); needs f_i != z at every atom.
inline ComplexMatrix resolvent_R(const PerturbedOperator& t, const ResolventOperatorAt& b) {
  const ComplexVector d = t.symbol().array() - b.z;
  if ((d.array() == Complex(0.0, 0.0)).any()) {
    throw InvalidArgument("resolvent_R: z coincides with a value of f");
  }
  ComplexMatrix r = -b.B;
  r.diagonal() += d.cwiseInverse();
  return r;
}

/// ||(T - z)((M_f - z)^{-1} w - B(z) w) - w|| / ||w|| in the weighted norm.
/// w must vanish on atoms with |f_i - z| < delta.
inline double right_inverse_residual(const PerturbedOperator& t, Complex z, const ComplexVector& w,
                                     const ResolventOperatorAt& b, double delta) {
  detail::require_length(w.size(), t.atom_count(), "right_inverse_residual");
  const ComplexVector d = t.symbol().array() - z;
  ComplexVector r0 = ComplexVector::Zero(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) == 0.0) continue;
    if (!(std::abs(d(i)) >= delta)) {
      throw LatticeViolation("right_inverse_residual: w is supported on atom " + std::to_string(i) +
                                 " with |f_i - z| < delta",
                             static_cast<std::size_t>(i));
    }
    r0(i) = w(i) / d(i);
  }
  const ComplexVector rw = r0 - b.apply_B(w);
  ComplexVector image = d.cwiseProduct(rw);
  if (t.term_count() > 0) {
    const std::size_t n = t.atom_count();
    const ComplexMatrix u = t.perturbation().u_matrix(n);
    const ComplexMatrix v = t.perturbation().v_matrix(n);
    const ComplexVector s = t.perturbation().s_vector().cast<Complex>();
    const ComplexVector wr = t.space().weight_vector().cast<Complex>().cwiseProduct(rw);
    image += u * s.cwiseProduct(v.adjoint() * wr);
  }
  const double wn = vector_norm(w, t.space());
  if (wn == 0.0) throw InvalidArgument("right_inverse_residual: w is zero");
  return vector_norm(image - w, t.space()) / wn;
}

inline double right_inverse_residual(const PerturbedOperator& t, Complex z, const ComplexVector& w,
                                     double delta, const ResolventSettings& settings = {}) {
  return right_inverse_residual(t, z, w, build_B(t, z, settings), delta);
}

/// alpha_{n,k} = a_n <u_n, e_k> = a_n sqrt(w_k) u_{n,k}   (r x N)
inline ComplexMatrix alpha_matrix(const PerturbedOperator& t, const FactoredCoefficients& coeffs) {
  coeffs.require_matches(t.perturbation());
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  const auto r = static_cast<Eigen::Index>(t.term_count());
  const RealVector sw = t.space().sqrt_weights();
  ComplexMatrix out(r, n);
  for (Eigen::Index k = 0; k < r; ++k) {
    out.row(k) = coeffs.a()[static_cast<std::size_t>(k)] *
                 sw.cast<Complex>().cwiseProduct(t.perturbation()[static_cast<std::size_t>(k)].u).transpose();
  }
  return out;
}

/// beta_{n,j} = b_n <e_j, v_n> = b_n sqrt(w_j) conj(v_{n,j})   (r x N)
inline ComplexMatrix beta_matrix(const PerturbedOperator& t, const FactoredCoefficients& coeffs) {
  coeffs.require_matches(t.perturbation());
  const auto n = static_cast<Eigen::Index>(t.atom_count());
  const auto r = static_cast<Eigen::Index>(t.term_count());
  const RealVector sw = t.space().sqrt_weights();
  ComplexMatrix out(r, n);
  for (Eigen::Index k = 0; k < r; ++k) {
    out.row(k) = coeffs.b()[static_cast<std::size_t>(k)] *
                 sw.cast<Complex>()
                     .cwiseProduct(t.perturbation()[static_cast<std::size_t>(k)].v.conjugate())
                     .transpose();
  }
  return out;
}

namespace detail {

inline RealVector real_line_gaps(const PerturbedOperator& t, double x, double range_guard) {
  const ComplexVector& f = t.symbol();
  const double floor = range_guard * t.base().sup_norm();
  RealVector gaps(f.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    gaps(k) = std::abs(f(k).real() - x);
    if (!(gaps(k) >= floor) || gaps(k) == 0.0) {
      throw RealLineCollision("Re z = " + std::to_string(x) + " collides with Re f_" +
                                  std::to_string(k),
                              static_cast<std::size_t>(k));
    }
  }
  return gaps;
}

// sum over columns k >= first of sum_n |c_{n,k}|^2 / gap_k^2
inline double weighted_column_sum(const ComplexMatrix& c, const RealVector& gaps, Eigen::Index first) {
  double acc = 0.0;
  for (Eigen::Index k = std::max<Eigen::Index>(first, 0); k < c.cols(); ++k) {
    acc += c.col(k).squaredNorm() / (gaps(k) * gaps(k));
  }
  return acc;
}

}  // namespace detail

/// sum_k sum_n |alpha_{n,k}|^2 / |Re f_k - Re z|^2, a bound on ||A1(z)||^2.
inline double norm_bound_A1(const PerturbedOperator& t, const FactoredCoefficients& coeffs, Complex z,
                            double range_guard = kDefaultRangeGuard) {
  const ComplexMatrix alpha = alpha_matrix(t, coeffs);
  return detail::weighted_column_sum(alpha, detail::real_line_gaps(t, z.real(), range_guard), 0);
}

/// sum_j sum_n |beta_{n,j}|^2 / |Re f_j - Re z|^2, a bound on ||A2(z)||^2.
inline double norm_bound_A2(const PerturbedOperator& t, const FactoredCoefficients& coeffs, Complex z,
                            double range_guard = kDefaultRangeGuard) {
  const ComplexMatrix beta = beta_matrix(t, coeffs);
  return detail::weighted_column_sum(beta, detail::real_line_gaps(t, z.real(), range_guard), 0);
}

/// Same sum restricted to atoms k >= count (0-based): a bound on
/// ||A1(z) - E_count A1(z)||^2, E_count the projection onto the first
/// `count` atoms.
inline double tail_bound(const PerturbedOperator& t, const FactoredCoefficients& coeffs, Complex z,
                         std::size_t count, double range_guard = kDefaultRangeGuard) {
  const ComplexMatrix alpha = alpha_matrix(t, coeffs);
  const RealVector gaps = detail::real_line_gaps(t, z.real(), range_guard);
  if (count >= t.atom_count()) return 0.0;
  return detail::weighted_column_sum(alpha, gaps, static_cast<Eigen::Index>(count));
}

/// E_count A: rows at atoms >= count set to zero.
inline ComplexMatrix project_first_atoms(const ComplexMatrix& a, std::size_t count) {
  ComplexMatrix out = a;
  const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(count), a.rows());
  out.bottomRows(a.rows() - keep).setZero();
  return out;
}

}  // namespace hypinv
