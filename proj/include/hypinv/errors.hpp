#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypinv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterative factorization did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Smallest singular value of a system matrix fell below the solve threshold.
class SingularSystem : public Error {
 public:
  SingularSystem(const std::string& what, double sigma_min)
      : Error(what), sigma_min_(sigma_min) {}
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

class NotNormal : public Error {
 public:
  NotNormal(const std::string& what, double defect) : Error(what), defect_(defect) {}
  /// ||N N^H - N^H N||
  double defect() const noexcept { return defect_; }

 private:
  double defect_;
};

/// u_n (or v_n) touches an atom where f_i - z is numerically zero.
class RangeMembership : public Error {
 public:
  RangeMembership(const std::string& what, std::size_t term, std::size_t atom)
      : Error(what), term_(term), atom_(atom) {}
  std::size_t term() const noexcept { return term_; }
  std::size_t atom() const noexcept { return atom_; }

 private:
  std::size_t term_;
  std::size_t atom_;
};

class OnCurve : public Error {
 public:
  OnCurve(const std::string& what, std::complex<double> point, double distance)
      : Error(what), point_(point), distance_(distance) {}
  std::complex<double> point() const noexcept { return point_; }
  double distance() const noexcept { return distance_; }

 private:
  std::complex<double> point_;
  double distance_;
};

/// I + A(z)(M_f - z) is numerically singular at a contour node: the contour
/// runs through (or very near) point spectrum of T.
class NearSingular : public Error {
 public:
  NearSingular(const std::string& what, std::size_t node, std::complex<double> z,
               double sigma_min)
      : Error(what), node_(node), z_(z), sigma_min_(sigma_min) {}
  std::size_t node() const noexcept { return node_; }
  std::complex<double> z() const noexcept { return z_; }
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  std::size_t node_;
  std::complex<double> z_;
  double sigma_min_;
};

class LatticeViolation : public Error {
 public:
  LatticeViolation(const std::string& what, std::size_t atom) : Error(what), atom_(atom) {}
  std::size_t atom() const noexcept { return atom_; }

 private:
  std::size_t atom_;
};

class TrivialSubspace : public Error {
 public:
  TrivialSubspace(const std::string& what, std::size_t rank, std::size_t dimension)
      : Error(what), rank_(rank), dimension_(dimension) {}
  std::size_t rank() const noexcept { return rank_; }
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t rank_;
  std::size_t dimension_;
};

class NoAdmissibleX0 : public Error {
 public:
  using Error::Error;
};

class RealLineCollision : public Error {
 public:
  RealLineCollision(const std::string& what, std::size_t atom) : Error(what), atom_(atom) {}
  std::size_t atom() const noexcept { return atom_; }

 private:
  std::size_t atom_;
};

/// Scenario configuration failed schema validation. `location` is a JSON
/// pointer-like path such as `$.numerics.nodes`.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& location, const std::string& message)
      : Error(location + ": " + message), location_(location) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

}  // namespace hypinv
