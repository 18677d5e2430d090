#pragma once

// Exact-formula matrix calculus for one-parameter dilation groups:
// minimal polynomial by eigenvalue clustering and rank tests, spectral
// projections P_i(A) by partial fractions of 1/phi_A, and evaluation of
// t^A as the finite sum
//
//   t^A = sum_i t^{gamma_i} [ sum_{j<m_i} (log t)^j / j! (A - gamma_i E)^j ] P_i(A).
//
// Everything is done in complex arithmetic; realness of final answers is
// asserted by the callers that need it, never assumed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "aniso/core.hpp"

namespace aniso {

struct MinimalPolynomial {
  struct Cluster {
    Complex gamma;  // clustered eigenvalue
    int block = 1;  // largest Jordan block size m_i
    int algebraic = 1;
  };
  std::vector<Cluster> clusters;
  int degree = 0;  // N = sum of block sizes

  int count() const { return static_cast<int>(clusters.size()); }

  /// Monic coefficients of phi_A, ascending powers.
  std::vector<Complex> coefficients() const;
};

struct SpectralDecomposition {
  Matrix A;  // the real matrix the decomposition belongs to
  MinimalPolynomial poly;
  std::vector<CMatrix> projections;  // P_i(A)
  // nilpotent[i][j] = (A - gamma_i E)^j P_i(A), j = 0 .. m_i - 1
  std::vector<std::vector<CMatrix>> nilpotent;
  // partial fractions 1/phi_A = sum b_i / a_i, coefficient lists ascending
  std::vector<std::vector<Complex>> numerators;    // b_i, deg < m_i
  std::vector<std::vector<Complex>> denominators;  // a_i = (t - gamma_i)^{m_i}
  double partial_fraction_condition = 0.0;

  double residual_identity = 0.0;    // ||sum P_i - E||
  double residual_idempotent = 0.0;  // max ||P_i P_j - delta_ij P_i||
  double residual_nilpotent = 0.0;   // max ||(A-gamma_i E)^{m_i} P_i||
  double residual_commute = 0.0;     // max ||A P_i - P_i A||

  double max_residual() const {
    return std::max({residual_identity, residual_idempotent,
                     residual_nilpotent, residual_commute});
  }
};

namespace poly {

inline std::vector<Complex> mul(const std::vector<Complex>& p,
                                const std::vector<Complex>& q) {
  std::vector<Complex> r(p.size() + q.size() - 1, Complex(0.0));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

/// (t - gamma)^m, ascending coefficients.
inline std::vector<Complex> linear_power(Complex gamma, int m) {
  std::vector<Complex> r{Complex(1.0)};
  std::vector<Complex> lin{-gamma, Complex(1.0)};
  for (int i = 0; i < m; ++i) r = mul(r, lin);
  return r;
}

inline CMatrix eval_at(const std::vector<Complex>& coeff, const CMatrix& A) {
  const auto n = A.rows();
  CMatrix acc = CMatrix::Zero(n, n);
  for (auto it = coeff.rbegin(); it != coeff.rend(); ++it)
    acc = acc * A + *it * CMatrix::Identity(n, n);
  return acc;
}

}  // namespace poly

inline std::vector<Complex> MinimalPolynomial::coefficients() const {
  std::vector<Complex> c{Complex(1.0)};
  for (const auto& cl : clusters)
    c = poly::mul(c, poly::linear_power(cl.gamma, cl.block));
  return c;
}

namespace detail {

inline int numerical_rank(const CMatrix& m, double cutoff) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

}  // namespace detail

/// Cluster the eigenvalues of A at absolute gap tol*max(1,||A||) and find
/// the largest Jordan block per cluster by numerical rank of (A-gamma E)^j.
inline MinimalPolynomial minimal_polynomial(const Matrix& A, double tol) {
  const int n = static_cast<int>(A.rows());
  if (n < 2 || A.cols() != n)
    throw SchemaError("minimal_polynomial: matrix must be square with n >= 2");
  if (!all_finite(A))
    throw SchemaError("minimal_polynomial: matrix has non-finite entries");
  if (!(tol > 0.0 && tol <= 1e-4))
    throw std::domain_error("minimal_polynomial: tol must lie in (0, 1e-4]");

  const double scale = std::max(1.0, operator_norm(A));
  const double gap = tol * scale;

  Eigen::ComplexEigenSolver<CMatrix> es(A.cast<Complex>());
  if (es.info() != Eigen::Success)
    throw DegeneracyError("minimal_polynomial: eigensolver failed", 0.0);
  const CVector lam = es.eigenvalues();

  // Transitive-closure clustering on the absolute gap.
  std::vector<int> owner(n);
  std::iota(owner.begin(), owner.end(), 0);
  std::function<int(int)> find = [&](int i) {
    while (owner[i] != i) i = owner[i] = owner[owner[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(lam(i) - lam(j)) <= gap) owner[find(i)] = find(j);

  std::vector<std::vector<int>> groups;
  {
    std::vector<int> root_of(n, -1);
    for (int i = 0; i < n; ++i) {
      int r = find(i);
      if (root_of[r] < 0) {
        root_of[r] = static_cast<int>(groups.size());
        groups.emplace_back();
      }
      groups[root_of[r]].push_back(i);
    }
  }

  MinimalPolynomial mp;
  for (const auto& g : groups) {
    Complex mean(0.0);
    for (int idx : g) mean += lam(idx);
    mean /= static_cast<double>(g.size());
    mp.clusters.push_back({mean, 1, static_cast<int>(g.size())});
  }
  std::sort(mp.clusters.begin(), mp.clusters.end(),
            [](const auto& a, const auto& b) {
              if (a.gamma.real() != b.gamma.real())
                return a.gamma.real() < b.gamma.real();
              return a.gamma.imag() < b.gamma.imag();
            });

  // Refuse to proceed when two clusters are within 10*tol of each other.
  for (std::size_t i = 0; i < mp.clusters.size(); ++i)
    for (std::size_t j = i + 1; j < mp.clusters.size(); ++j) {
      double dist = std::abs(mp.clusters[i].gamma - mp.clusters[j].gamma);
      if (dist < 10.0 * gap) {
        std::ostringstream os;
        os << "minimal_polynomial: eigenvalue clusters ("
           << mp.clusters[i].gamma.real() << (mp.clusters[i].gamma.imag() < 0 ? "" : "+")
           << mp.clusters[i].gamma.imag() << "i) and ("
           << mp.clusters[j].gamma.real() << (mp.clusters[j].gamma.imag() < 0 ? "" : "+")
           << mp.clusters[j].gamma.imag() << "i) are within 10*tol of each other";
        throw AmbiguityError(os.str());
      }
    }

  // Largest Jordan block: smallest j with rank (A - gamma E)^j == n - mult.
  const CMatrix Ac = A.cast<Complex>();
  for (auto& cl : mp.clusters) {
    const CMatrix shifted = Ac - cl.gamma * CMatrix::Identity(n, n);
    CMatrix power = CMatrix::Identity(n, n);
    int block = cl.algebraic;  // fallback; the loop always resolves earlier
    double norm_pow = 1.0;
    for (int j = 1; j <= cl.algebraic; ++j) {
      power = power * shifted;
      norm_pow *= scale;
      // keep the cutoff above the noise floor of the computed power
      double cutoff = std::max(tol * norm_pow,
                               16.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(1.0, operator_norm(power)));
      if (detail::numerical_rank(power, cutoff) <= n - cl.algebraic) {
        block = j;
        break;
      }
    }
    cl.block = block;
  }

  mp.degree = 0;
  for (const auto& cl : mp.clusters) mp.degree += cl.block;

  // phi_A(A) must vanish.
  CMatrix phi = CMatrix::Identity(n, n);
  for (const auto& cl : mp.clusters) {
    const CMatrix shifted = Ac - cl.gamma * CMatrix::Identity(n, n);
    for (int j = 0; j < cl.block; ++j) phi = phi * shifted;
  }
  const double phi_scale = std::pow(scale, mp.degree);
  const double phi_res = operator_norm(phi) / phi_scale;
  if (phi_res > std::max(100.0 * tol, 1e-8))
    throw DegeneracyError(
        "minimal_polynomial: phi_A(A) does not vanish at the detected "
        "cluster structure (residual " + std::to_string(phi_res) + ")",
        phi_res);

  return mp;
}

/// Partial-fraction spectral projections: solve the linear system for the
/// b_i in 1/phi_A = sum b_i/a_i, then P_i(A) = (b_i * phi_A / a_i)(A).
inline SpectralDecomposition spectral_projections(const Matrix& A,
                                                  const MinimalPolynomial& mp,
                                                  double check_tol = 1e-6) {
  const int n = static_cast<int>(A.rows());
  const int k = mp.count();
  const int N = mp.degree;

  // q_i = phi_A / a_i
  std::vector<std::vector<Complex>> q(k);
  for (int i = 0; i < k; ++i) {
    std::vector<Complex> acc{Complex(1.0)};
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      acc = poly::mul(acc, poly::linear_power(mp.clusters[j].gamma,
                                              mp.clusters[j].block));
    }
    q[i] = acc;
  }

  // Columns of the system: coefficients of t^l q_i(t), l < m_i; RHS = 1.
  CMatrix system = CMatrix::Zero(N, N);
  int col = 0;
  for (int i = 0; i < k; ++i) {
    for (int l = 0; l < mp.clusters[i].block; ++l) {
      for (std::size_t c = 0; c < q[i].size(); ++c) {
        int row = static_cast<int>(c) + l;
        if (row < N) system(row, col) = q[i][c];
      }
      ++col;
    }
  }
  CVector rhs = CVector::Zero(N);
  rhs(0) = Complex(1.0);

  Eigen::JacobiSVD<CMatrix> svd(system,
                                Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
  CVector coeffs = svd.solve(rhs);

  SpectralDecomposition sd;
  sd.A = A;
  sd.poly = mp;
  sd.partial_fraction_condition = cond;

  const CMatrix Ac = A.cast<Complex>();
  col = 0;
  for (int i = 0; i < k; ++i) {
    const int m = mp.clusters[i].block;
    std::vector<Complex> b(m);
    for (int l = 0; l < m; ++l) b[l] = coeffs(col++);
    sd.numerators.push_back(b);
    sd.denominators.push_back(poly::linear_power(mp.clusters[i].gamma, m));
    sd.projections.push_back(poly::eval_at(poly::mul(b, q[i]), Ac));
  }

  for (int i = 0; i < k; ++i) {
    const CMatrix shifted =
        Ac - mp.clusters[i].gamma * CMatrix::Identity(n, n);
    std::vector<CMatrix> pow{sd.projections[i]};
    for (int j = 1; j < mp.clusters[i].block; ++j)
      pow.push_back(shifted * pow.back());
    sd.nilpotent.push_back(std::move(pow));
  }

  // Consistency residuals, all relative to ||A||-derived scales.
  const double scale = std::max(1.0, operator_norm(A));
  CMatrix sum = CMatrix::Zero(n, n);
  for (const auto& p : sd.projections) sum += p;
  sd.residual_identity = operator_norm(CMatrix(sum - CMatrix::Identity(n, n)));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      CMatrix prod = sd.projections[i] * sd.projections[j];
      if (i == j) prod -= sd.projections[i];
      sd.residual_idempotent =
          std::max(sd.residual_idempotent, operator_norm(prod));
    }
    const CMatrix shifted =
        Ac - mp.clusters[i].gamma * CMatrix::Identity(n, n);
    const CMatrix annihilated = shifted * sd.nilpotent[i].back();
    sd.residual_nilpotent =
        std::max(sd.residual_nilpotent,
                 operator_norm(annihilated) /
                     std::pow(scale, mp.clusters[i].block));
    sd.residual_commute =
        std::max(sd.residual_commute,
                 operator_norm(CMatrix(Ac * sd.projections[i] -
                                       sd.projections[i] * Ac)) /
                     scale);
  }

  if (sd.residual_identity > check_tol)
    throw DegeneracyError(
        "spectral_projections: ||sum P_i - E|| = " +
            std::to_string(sd.residual_identity) + " exceeds tolerance",
        sd.residual_identity);
  return sd;
}

/// t^A by the finite spectral sum.  Complex result; real inputs give a
/// result whose imaginary part is at rounding level.
inline CMatrix dilation(const SpectralDecomposition& sd, double t) {
  if (!(t > 0.0)) throw std::domain_error("dilation: t must be positive");
  const int n = static_cast<int>(sd.A.rows());
  const double logt = std::log(t);
  CMatrix out = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < sd.projections.size(); ++i) {
    const Complex tg = std::exp(sd.poly.clusters[i].gamma * logt);
    double factorial = 1.0;
    double logp = 1.0;
    for (std::size_t j = 0; j < sd.nilpotent[i].size(); ++j) {
      if (j > 0) {
        factorial *= static_cast<double>(j);
        logp *= logt;
      }
      out += (tg * logp / factorial) * sd.nilpotent[i][j];
    }
  }
  return out;
}

/// Real-matrix view of dilation(); rejects results with a significant
/// imaginary part instead of silently dropping it.
inline Matrix dilation_real(const SpectralDecomposition& sd, double t,
                            double imag_tol = 1e-8) {
  CMatrix m = dilation(sd, t);
  double re = m.real().norm();
  double im = m.imag().norm();
  if (im > imag_tol * std::max(1.0, re))
    throw DegeneracyError(
        "dilation_real: imaginary part " + std::to_string(im) +
            " is not negligible",
        im);
  return m.real();
}

}  // namespace aniso
