#pragma once

// Dense complex linear algebra used by every other module: SVD, eigen
// decomposition, certified solves and norms. Everything here is a pure
// function of its arguments.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "hypinv/errors.hpp"

namespace hypinv {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Default relative threshold on sigma_min for `solve`.
inline constexpr double kSolveThreshold = 1e-12;
/// Eigenvector-matrix condition number above which an eigen decomposition is
/// treated as (numerically) defective.
inline constexpr double kDefectiveCondition = 1e6;

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

/// Lexicographic (Re, Im) order used for every reported eigenvalue list.
inline bool complex_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

namespace detail {

inline void require_square(const ComplexMatrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

// Index of the entry of largest modulus; first one wins on ties.
inline Eigen::Index dominant_index(const ComplexVector& x) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x(i));
    if (a > best_abs * (1.0 + 1e-12)) {
      best = i;
      best_abs = a;
    }
  }
  return best;
}

// Unit phase that rotates the dominant entry of x onto the positive real axis.
inline Complex canonical_phase(const ComplexVector& x) {
  if (x.size() == 0) return {1.0, 0.0};
  const Complex d = x(dominant_index(x));
  const double a = std::abs(d);
  return a > 0.0 ? std::conj(d) / a : Complex{1.0, 0.0};
}

}  // namespace detail

struct SingularDecomposition {
  RealVector singular_values;   // nonincreasing
  ComplexMatrix left_vectors;   // columns u_n
  ComplexMatrix right_vectors;  // columns v_n

  /// sum_n sigma_n u_n v_n^H
  ComplexMatrix reconstruct() const {
    return left_vectors * singular_values.cast<Complex>().asDiagonal() * right_vectors.adjoint();
  }
};

/// Thin SVD. Each pair (u_n, v_n) is phase-normalized so the dominant entry
/// of v_n is real and positive.
inline SingularDecomposition svd(const ComplexMatrix& m, std::string_view name = "matrix") {
  if (!all_finite(m)) {
    throw InvalidArgument("svd: matrix '" + std::string(name) + "' has non-finite entries");
  }
  SingularDecomposition out;
  if (m.size() == 0) {
    out.left_vectors = ComplexMatrix(m.rows(), 0);
    out.right_vectors = ComplexMatrix(m.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<ComplexMatrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw ConvergenceError("svd: no convergence for matrix '" + std::string(name) + "' (" +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
  }
  out.singular_values = dec.singularValues();
  out.left_vectors = dec.matrixU();
  out.right_vectors = dec.matrixV();
  for (Eigen::Index n = 0; n < out.right_vectors.cols(); ++n) {
    const Complex phase = detail::canonical_phase(out.right_vectors.col(n));
    out.right_vectors.col(n) *= phase;
    out.left_vectors.col(n) *= phase;
  }
  return out;
}

inline RealVector singular_values(const ComplexMatrix& m) {
  if (m.size() == 0) return RealVector();
  Eigen::BDCSVD<ComplexMatrix> dec(m);
  if (dec.info() != Eigen::Success) {
    throw ConvergenceError("singular_values: no convergence");
  }
  return dec.singularValues();
}

inline double spectral_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline double smallest_singular_value(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  const RealVector s = singular_values(m);
  return s(s.size() - 1);
}

struct EigenDecomposition {
  ComplexVector eigenvalues;         // sorted by (Re, Im)
  ComplexMatrix right_eigenvectors;  // unit columns
  double condition_estimate = 0.0;   // cond_2 of the eigenvector matrix

  bool defective_suspect(double threshold = kDefectiveCondition) const {
    return !(condition_estimate <= threshold);
  }
};

inline EigenDecomposition eig(const ComplexMatrix& m) {
  detail::require_square(m, "eig");
  if (!all_finite(m)) throw InvalidArgument("eig: matrix has non-finite entries");
  EigenDecomposition out;
  const Eigen::Index n = m.rows();
  if (n == 0) return out;

  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig: no convergence");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const ComplexVector values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return complex_less(values(a), values(b));
  });

  out.eigenvalues.resize(n);
  out.right_eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = values(src);
    ComplexVector x = solver.eigenvectors().col(src);
    const double norm = x.norm();
    if (norm > 0.0) x /= norm;
    x *= detail::canonical_phase(x);
    out.right_eigenvectors.col(k) = x;
  }
  const RealVector s = singular_values(out.right_eigenvectors);
  const double smin = s(s.size() - 1);
  out.condition_estimate =
      smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  return out;
}

struct SolveResult {
  ComplexMatrix solution;
  double sigma_min = 0.0;
  double norm = 0.0;  // ||M||_2
};

/// Solves M X = B through an SVD of M and reports sigma_min(M). Throws
/// SingularSystem when sigma_min <= relative_threshold * ||M||.
inline SolveResult certified_solve(const ComplexMatrix& m, const ComplexMatrix& b,
                                   double relative_threshold = kSolveThreshold) {
  detail::require_square(m, "solve");
  if (b.rows() != m.rows()) {
    throw DimensionError("solve: right-hand side has " + std::to_string(b.rows()) +
                         " rows, expected " + std::to_string(m.rows()));
  }
  SolveResult out;
  if (m.rows() == 0) {
    out.solution = ComplexMatrix(0, b.cols());
    return out;
  }
  const SingularDecomposition dec = svd(m, "solve");
  out.norm = dec.singular_values(0);
  out.sigma_min = dec.singular_values(dec.singular_values.size() - 1);
  if (!(out.sigma_min > relative_threshold * out.norm) || out.norm == 0.0) {
    throw SingularSystem("solve: sigma_min = " + std::to_string(out.sigma_min) +
                             " is below threshold " +
                             std::to_string(relative_threshold * out.norm),
                         out.sigma_min);
  }
  const RealVector inv = dec.singular_values.cwiseInverse();
  out.solution =
      dec.right_vectors * (inv.cast<Complex>().asDiagonal() * (dec.left_vectors.adjoint() * b));
  return out;
}

inline ComplexMatrix solve(const ComplexMatrix& m, const ComplexMatrix& b,
                           double relative_threshold = kSolveThreshold) {
  return certified_solve(m, b, relative_threshold).solution;
}

/// Orthonormal basis (thin Householder Q) of a space containing range(m).
/// Always returns min(rows, cols) columns; rank deficiency is harmless.
inline ComplexMatrix orthonormal_columns(const ComplexMatrix& m) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  if (k == 0) return ComplexMatrix(m.rows(), 0);
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  return qr.householderQ() * ComplexMatrix::Identity(m.rows(), k);
}

/// ||left * right^H||_2 without forming the product.
inline double low_rank_norm(const ComplexMatrix& left, const ComplexMatrix& right) {
  if (left.cols() != right.cols()) {
    throw DimensionError("low_rank_norm: factor ranks differ");
  }
  const Eigen::Index r = left.cols();
  if (r == 0 || left.rows() == 0 || right.rows() == 0) return 0.0;
  if (left.rows() <= r || right.rows() <= r) {
    return spectral_norm(left * right.adjoint());
  }
  Eigen::HouseholderQR<ComplexMatrix> ql(left);
  Eigen::HouseholderQR<ComplexMatrix> qrr(right);
  const ComplexMatrix rl = ql.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const ComplexMatrix rr = qrr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return spectral_norm(rl * rr.adjoint());
}

/// Neumaier-compensated running sum of equally shaped complex matrices.
class CompensatedSum {
 public:
  CompensatedSum(Eigen::Index rows, Eigen::Index cols)
      : re_(Eigen::MatrixXd::Zero(rows, cols)),
        im_(Eigen::MatrixXd::Zero(rows, cols)),
        re_c_(Eigen::MatrixXd::Zero(rows, cols)),
        im_c_(Eigen::MatrixXd::Zero(rows, cols)) {}

  void add(const ComplexMatrix& x) {
    if (x.rows() != re_.rows() || x.cols() != re_.cols()) {
      throw DimensionError("CompensatedSum: shape mismatch");
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        accumulate(re_(i, j), re_c_(i, j), x(i, j).real());
        accumulate(im_(i, j), im_c_(i, j), x(i, j).imag());
      }
    }
  }

  ComplexMatrix value() const {
    ComplexMatrix out(re_.rows(), re_.cols());
    out.real() = re_ + re_c_;
    out.imag() = im_ + im_c_;
    return out;
  }

 private:
  static void accumulate(double& sum, double& comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  Eigen::MatrixXd re_, im_, re_c_, im_c_;
};

}  // namespace hypinv
