#pragma once

// Shared aliases, the bilinear pairing, deterministic summation and the
// error types used across the toolkit.

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aniso {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Bilinear pairing <z,w> = sum_i z_i w_i.  No conjugation on either slot.
inline Complex pairing(const CVector& z, const CVector& w) {
  return (z.array() * w.array()).sum();
}
inline double pairing(const Vector& z, const Vector& w) { return z.dot(w); }

inline CVector to_complex(const Vector& v) { return v.cast<Complex>(); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two eigenvalue clusters too close to separate at the requested tolerance.
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

/// A computed decomposition failed its own consistency residuals.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Quasi-norm bracket expansion left the representable range.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature exhausted its node budget.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double achieved_accuracy, long nodes)
      : Error(what), achieved_(achieved_accuracy), nodes_(nodes) {}
  double achieved_accuracy() const { return achieved_; }
  long nodes() const { return nodes_; }

 private:
  double achieved_;
  long nodes_;
};

/// Level-set truncation dropped more mass than allowed.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double tail_mass)
      : Error(what), tail_(tail_mass) {}
  double tail_mass() const { return tail_; }

 private:
  double tail_;
};

class PathologicalPhaseError : public Error {
 public:
  using Error::Error;
};

class ExponentSlackError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// Config / input-schema violations (CLI exit code 2).
class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {
template <class T>
T pairwise_sum_impl(const T* v, std::size_t n) {
  if (n <= 8) {
    T acc{};
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc;
  }
  std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}
}  // namespace detail

/// Pairwise reduction; deterministic and accuracy-friendly for long sums.
template <class T>
T pairwise_sum(std::span<const T> v) {
  return detail::pairwise_sum_impl(v.data(), v.size());
}
template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return detail::pairwise_sum_impl(v.data(), v.size());
}

using Rng = std::mt19937_64;

/// Uniform direction on the Euclidean unit sphere.
inline Vector random_direction(Rng& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    norm2 = v.squaredNorm();
  } while (norm2 < 1e-24);
  return v / std::sqrt(norm2);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Spectral (2-) norm of a small dense matrix.
inline double operator_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}
inline double operator_norm(const CMatrix& m) {
  return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

}  // namespace aniso
