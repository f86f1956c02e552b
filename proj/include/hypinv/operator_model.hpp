#pragma once

// Discretized measure space, multiplication operator M_f, compact
// perturbation K = sum_n s_n u_n (x) v_n and their sum T = M_f + K.
//
// Vectors are stored as function values at atoms. The weights never enter the
// stored vectors; they only enter through the pairing
//   <x, v> = sum_i w_i x_i conj(v_i),
// so (u (x) v)(x) = <x, v> u has matrix entries u_i conj(v_j) w_j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"

namespace hypinv {

enum class MeasureKind {
  atomic,      // purely atomic: cluster mass is an atom count
  continuous,  // cells of a continuum: cluster mass is total weight
};

class MeasureSpace {
 public:
  MeasureSpace(std::vector<double> weights, MeasureKind kind = MeasureKind::atomic,
               double p = 2.0)
      : weights_(std::move(weights)), kind_(kind), p_(p) {
    if (weights_.empty()) throw InvalidArgument("MeasureSpace: need at least one atom");
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
        throw InvalidArgument("MeasureSpace: weight " + std::to_string(i) +
                              " must be positive and finite");
      }
    }
    if (!(p_ > 1.0) || !std::isfinite(p_)) {
      throw InvalidArgument("MeasureSpace: exponent p must lie in (1, inf)");
    }
  }

  static MeasureSpace unit_atoms(std::size_t n) {
    return MeasureSpace(std::vector<double>(n, 1.0), MeasureKind::atomic);
  }

  std::size_t atom_count() const noexcept { return weights_.size(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_.at(i); }
  MeasureKind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  /// Conjugate exponent, 1/p + 1/q = 1. Carried for completeness only.
  double q() const noexcept { return p_ / (p_ - 1.0); }

  double total_weight() const {
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
  }
  /// Mass used for cluster detection: weight, or 1 per atom when atomic.
  double mass(std::size_t i) const { return kind_ == MeasureKind::atomic ? 1.0 : weights_.at(i); }

  RealVector weight_vector() const {
    return Eigen::Map<const RealVector>(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
  }
  RealVector sqrt_weights() const { return weight_vector().cwiseSqrt(); }

  bool unit_weights() const {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 1.0; });
  }

  friend bool operator==(const MeasureSpace& a, const MeasureSpace& b) {
    return a.weights_ == b.weights_ && a.kind_ == b.kind_ && a.p_ == b.p_;
  }

 private:
  std::vector<double> weights_;
  MeasureKind kind_;
  double p_;
};

namespace detail {
inline void require_length(Eigen::Index got, std::size_t want, const char* what) {
  if (got != static_cast<Eigen::Index>(want)) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(got) +
                         " does not match atom count " + std::to_string(want));
  }
}
}  // namespace detail

/// <x, v> = sum_i w_i x_i conj(v_i)
inline Complex pairing(const ComplexVector& x, const ComplexVector& v, const MeasureSpace& space) {
  if (x.size() != v.size()) {
    throw DimensionError("pairing: vector lengths differ (" + std::to_string(x.size()) + " vs " +
                         std::to_string(v.size()) + ")");
  }
  detail::require_length(x.size(), space.atom_count(), "pairing");
  Complex acc{0.0, 0.0};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    acc += space.weight(static_cast<std::size_t>(i)) * x(i) * std::conj(v(i));
  }
  return acc;
}

inline double vector_norm(const ComplexVector& x, const MeasureSpace& space) {
  return std::sqrt(std::max(0.0, pairing(x, x, space).real()));
}

/// Operator norm on L^2(mu): || W^{1/2} M W^{-1/2} ||_2.
inline double operator_norm(const ComplexMatrix& m, const MeasureSpace& space) {
  if (space.unit_weights()) return spectral_norm(m);
  const RealVector sw = space.sqrt_weights();
  const ComplexMatrix scaled =
      sw.cast<Complex>().asDiagonal() * m * sw.cwiseInverse().cast<Complex>().asDiagonal();
  return spectral_norm(scaled);
}

/// Operator norm on L^2(mu) of left * (right^H W), the matrix of
/// sum_k left_k (x) right_k.
inline double tensor_sum_norm(const ComplexMatrix& left, const ComplexMatrix& right,
                              const MeasureSpace& space) {
  const RealVector sw = space.sqrt_weights();
  return low_rank_norm(sw.cast<Complex>().asDiagonal() * left,
                       sw.cast<Complex>().asDiagonal() * right);
}

class MultiplicationOperator {
 public:
  MultiplicationOperator(MeasureSpace space, ComplexVector symbol)
      : space_(std::move(space)), symbol_(std::move(symbol)) {
    detail::require_length(symbol_.size(), space_.atom_count(), "MultiplicationOperator");
    if (!symbol_.allFinite()) throw InvalidArgument("MultiplicationOperator: non-finite symbol");
  }

  const MeasureSpace& space() const noexcept { return space_; }
  const ComplexVector& symbol() const noexcept { return symbol_; }
  Complex value(std::size_t i) const { return symbol_(static_cast<Eigen::Index>(i)); }
  std::size_t atom_count() const noexcept { return space_.atom_count(); }

  double sup_norm() const { return symbol_.size() ? symbol_.cwiseAbs().maxCoeff() : 0.0; }

  ComplexMatrix matrix() const { return symbol_.asDiagonal(); }

 private:
  MeasureSpace space_;
  ComplexVector symbol_;
};

struct RankOneTerm {
  double s = 0.0;
  ComplexVector u;
  ComplexVector v;
};

class CompactPerturbation {
 public:
  CompactPerturbation() = default;
  explicit CompactPerturbation(std::vector<RankOneTerm> terms) : terms_(std::move(terms)) {
    for (std::size_t n = 0; n < terms_.size(); ++n) {
      const auto& t = terms_[n];
      if (!(t.s > 0.0) || !std::isfinite(t.s)) {
        throw InvalidArgument("CompactPerturbation: s_" + std::to_string(n) +
                              " must be positive and finite");
      }
      if (t.u.size() != t.v.size()) {
        throw DimensionError("CompactPerturbation: u_" + std::to_string(n) + " and v_" +
                             std::to_string(n) + " differ in length");
      }
      if (n > 0 && t.u.size() != terms_[0].u.size()) {
        throw DimensionError("CompactPerturbation: term " + std::to_string(n) +
                             " length differs from term 0");
      }
      if (!t.u.allFinite() || !t.v.allFinite()) {
        throw InvalidArgument("CompactPerturbation: term " + std::to_string(n) +
                              " has non-finite entries");
      }
    }
  }

  const std::vector<RankOneTerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const RankOneTerm& operator[](std::size_t n) const { return terms_.at(n); }

  /// First `count` terms (K_N in a truncation sweep).
  CompactPerturbation truncated(std::size_t count) const {
    const std::size_t keep = std::min(count, terms_.size());
    return CompactPerturbation(std::vector<RankOneTerm>(terms_.begin(), terms_.begin() + keep));
  }

  /// Rescales every term to unit-norm u_n, v_n (weighted) and sorts s_n
  /// nonincreasing. Terms with a zero vector are dropped.
  CompactPerturbation normalized(const MeasureSpace& space) const {
    std::vector<RankOneTerm> out;
    for (const auto& t : terms_) {
      const double nu = vector_norm(t.u, space);
      const double nv = vector_norm(t.v, space);
      if (nu == 0.0 || nv == 0.0) continue;
      out.push_back({t.s * nu * nv, t.u / nu, t.v / nv});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RankOneTerm& a, const RankOneTerm& b) { return a.s > b.s; });
    return CompactPerturbation(std::move(out));
  }

  double sum_s() const {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.s;
    return acc;
  }

  /// Columns u_n (N x r).
  ComplexMatrix u_matrix(std::size_t atoms) const {
    ComplexMatrix m(static_cast<Eigen::Index>(atoms), static_cast<Eigen::Index>(terms_.size()));
    for (std::size_t n = 0; n < terms_.size(); ++n) m.col(static_cast<Eigen::Index>(n)) = terms_[n].u;
    return m;
  }
  ComplexMatrix v_matrix(std::size_t atoms) const {
    ComplexMatrix m(static_cast<Eigen::Index>(atoms), static_cast<Eigen::Index>(terms_.size()));
    for (std::size_t n = 0; n < terms_.size(); ++n) m.col(static_cast<Eigen::Index>(n)) = terms_[n].v;
    return m;
  }
  RealVector s_vector() const {
    RealVector s(static_cast<Eigen::Index>(terms_.size()));
    for (std::size_t n = 0; n < terms_.size(); ++n) s(static_cast<Eigen::Index>(n)) = terms_[n].s;
    return s;
  }

 private:
  std::vector<RankOneTerm> terms_;
};

class PerturbedOperator {
 public:
  PerturbedOperator(MultiplicationOperator base, CompactPerturbation perturbation)
      : base_(std::move(base)), perturbation_(std::move(perturbation)) {
    for (std::size_t n = 0; n < perturbation_.size(); ++n) {
      detail::require_length(perturbation_[n].u.size(), base_.atom_count(), "PerturbedOperator");
    }
  }

  const MultiplicationOperator& base() const noexcept { return base_; }
  const CompactPerturbation& perturbation() const noexcept { return perturbation_; }
  const MeasureSpace& space() const noexcept { return base_.space(); }
  const ComplexVector& symbol() const noexcept { return base_.symbol(); }
  std::size_t atom_count() const noexcept { return base_.atom_count(); }
  std::size_t term_count() const noexcept { return perturbation_.size(); }

  PerturbedOperator with_perturbation(CompactPerturbation k) const {
    return PerturbedOperator(base_, std::move(k));
  }

 private:
  MultiplicationOperator base_;
  CompactPerturbation perturbation_;
};

/// Dense matrix of sum_n s_n u_n (x) v_n on `space`.
inline ComplexMatrix materialize(const CompactPerturbation& k, const MeasureSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.atom_count());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  if (k.empty()) return out;
  for (std::size_t t = 0; t < k.size(); ++t) {
    detail::require_length(k[t].u.size(), space.atom_count(), "materialize");
  }
  const ComplexMatrix u = k.u_matrix(space.atom_count());
  const ComplexMatrix v = k.v_matrix(space.atom_count());
  const RealVector s = k.s_vector();
  out = u * s.cast<Complex>().asDiagonal() * v.adjoint() *
        space.weight_vector().cast<Complex>().asDiagonal();
  return out;
}

/// Entry (i, j) = f_i delta_ij + sum_n s_n u_{n,i} conj(v_{n,j}) w_j.
inline ComplexMatrix materialize(const PerturbedOperator& t) {
  ComplexMatrix m = materialize(t.perturbation(), t.space());
  m.diagonal() += t.symbol();
  return m;
}

/// Singular-value drop threshold relative to s_0.
inline constexpr double kSingularDrop = 1e-14;

/// Expansion K = sum_n s_n u_n (x) v_n with u_n, v_n orthonormal in the
/// weighted pairing and s_n descending; s_n <= 1e-14 s_0 are dropped.
inline CompactPerturbation svd_of_K(const ComplexMatrix& k, const MeasureSpace& space) {
  detail::require_square(k, "svd_of_K");
  detail::require_length(k.rows(), space.atom_count(), "svd_of_K");
  const RealVector sw = space.sqrt_weights();
  const ComplexMatrix scaled =
      sw.cast<Complex>().asDiagonal() * k * sw.cwiseInverse().cast<Complex>().asDiagonal();
  const SingularDecomposition dec = svd(scaled, "K");
  std::vector<RankOneTerm> terms;
  if (dec.singular_values.size() == 0 || dec.singular_values(0) == 0.0) {
    return CompactPerturbation{};
  }
  const double cut = kSingularDrop * dec.singular_values(0);
  const ComplexVector inv_sw = sw.cwiseInverse().cast<Complex>();
  for (Eigen::Index n = 0; n < dec.singular_values.size(); ++n) {
    const double s = dec.singular_values(n);
    if (!(s > cut)) break;
    terms.push_back({s, inv_sw.cwiseProduct(dec.left_vectors.col(n)),
                     inv_sw.cwiseProduct(dec.right_vectors.col(n))});
  }
  return CompactPerturbation(std::move(terms));
}

struct DiagonalForm {
  MultiplicationOperator op;
  ComplexMatrix unitary;  // W with W N W^H = diag(f), i.e. M_f W = W N
};

/// Unitary diagonalization of a normal matrix. Diagonal input is returned as
/// is (W = I); otherwise the diagonal is sorted by (Re, Im).
inline DiagonalForm normal_to_diagonal(const ComplexMatrix& n, double tol = 1e-10) {
  detail::require_square(n, "normal_to_diagonal");
  if (!all_finite(n)) throw InvalidArgument("normal_to_diagonal: non-finite entries");
  const Eigen::Index dim = n.rows();
  if (dim == 0) throw InvalidArgument("normal_to_diagonal: empty matrix");
  const double norm = spectral_norm(n);
  const double defect = spectral_norm(n * n.adjoint() - n.adjoint() * n);
  if (defect > tol * std::max(norm * norm, std::numeric_limits<double>::min())) {
    throw NotNormal("normal_to_diagonal: ||N N^H - N^H N|| = " + std::to_string(defect), defect);
  }
  MeasureSpace space = MeasureSpace::unit_atoms(static_cast<std::size_t>(dim));

  const ComplexMatrix off = n - ComplexMatrix(n.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    return {MultiplicationOperator(space, n.diagonal()), ComplexMatrix::Identity(dim, dim)};
  }

  Eigen::ComplexSchur<ComplexMatrix> schur(n, true);
  if (schur.info() != Eigen::Success) throw ConvergenceError("normal_to_diagonal: Schur failed");
  const ComplexMatrix& q = schur.matrixU();
  const ComplexVector d = schur.matrixT().diagonal();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return complex_less(d(a), d(b)); });
  ComplexVector f(dim);
  ComplexMatrix w(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    f(k) = d(src);
    ComplexVector col = q.col(src);
    col *= detail::canonical_phase(col);
    w.row(k) = col.adjoint();
  }
  return {MultiplicationOperator(std::move(space), std::move(f)), std::move(w)};
}

}  // namespace hypinv
