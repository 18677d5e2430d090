#pragma once

// The homogeneous quasi-norm r attached to a dilation group A_t = t^P,
// its adjoint partner s from B_t = A_t^*, polar decomposition on the
// ellipsoid Sigma = { <B theta, theta> = 1 }, and the growth-exponent
// budget (alpha_i, beta_i, a_i, b_i, c_i, d_i, d, epsilon_0).
//
// B is fixed as the Lyapunov solution of P^T B + B P = E, which makes
// t -> <B A_{1/t} x, A_{1/t} x> strictly decreasing along every ray, so
// r(x) is the unique level-1 crossing.

#include <cmath>
#include <sstream>

#include "aniso/spectral.hpp"

namespace aniso {

struct DilationGroup {
  Matrix generator;  // P
  double gamma = 0.0;  // trace P
  SpectralDecomposition sd;      // of P
  SpectralDecomposition sd_adj;  // of P^T
  int minimal_degree = 0;        // L = deg phi_P
  double min_real = 0.0, max_real = 0.0;
};

struct ExponentBudget {
  // r(x): c1 |x|^{alpha1} < r < c2 |x|^{alpha2}  (r >= 1)
  //       c3 |x|^{beta1}  < r < c4 |x|^{beta2}   (r <= 1)
  double alpha1 = 0, alpha2 = 0, beta1 = 0, beta2 = 0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  // s(xi): d1 |xi|^{a1} < s < d2 |xi|^{a2}  (s >= 1)
  //        d3 |xi|^{b1} < s < d4 |xi|^{b2}  (s <= 1)
  double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;
  double d = 0;         // b1 / alpha1
  double epsilon0 = 0;  // 0.5 * a2^{-1} min(1/2, q'/L)
  double q_dual = 0;
  double delta = 0;        // slack subtracted/added to eigenvalue real parts
  double scale_max = 0;    // sampled range: r, s within [1/scale_max, scale_max]
  int sample_count = 0;
};

struct QuasiNormContext {
  DilationGroup group;
  Matrix B;      // Lyapunov solution for P
  Matrix B_adj;  // Lyapunov solution for P^T
  double lyapunov_residual = 0.0;
  double bracket_limit = 1e60;
};

namespace detail {

/// Solve M^T X + X M = E for symmetric positive definite X.
inline Matrix lyapunov_identity(const Matrix& M) {
  const int n = static_cast<int>(M.rows());
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(M^T X) = (I kron M^T) vec X, vec(X M) = (M^T kron I) vec X,
  // column-major vec.
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      int row = c * n + r;
      for (int j = 0; j < n; ++j) {
        K(row, c * n + j) += M(j, r);  // (I kron M^T)
        K(row, j * n + r) += M(j, c);  // (M^T kron I)
      }
    }
  Vector e = Vector::Zero(n * n);
  for (int i = 0; i < n; ++i) e(i * n + i) = 1.0;
  Vector x = K.fullPivLu().solve(e);
  Matrix X(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = x(c * n + r);
  return 0.5 * (X + X.transpose());
}

}  // namespace detail

inline DilationGroup make_group(const Matrix& P, double tol = 1e-6) {
  DilationGroup g;
  g.generator = P;
  auto mp = minimal_polynomial(P, tol);
  double lo = 1e300, hi = -1e300;
  for (const auto& cl : mp.clusters) {
    lo = std::min(lo, cl.gamma.real());
    hi = std::max(hi, cl.gamma.real());
  }
  if (lo <= 1e-8) {
    std::ostringstream os;
    os << "dilation group rejected: eigenvalue with real part " << lo
       << " is not strictly positive";
    throw SchemaError(os.str());
  }
  g.min_real = lo;
  g.max_real = hi;
  g.gamma = P.trace();
  double re_sum = 0.0;
  for (const auto& cl : mp.clusters)
    re_sum += cl.gamma.real() * cl.algebraic;
  if (std::abs(re_sum - g.gamma) > 1e-10 * std::max(1.0, std::abs(g.gamma)))
    throw DegeneracyError("trace(P) disagrees with the eigenvalue sum",
                          std::abs(re_sum - g.gamma));
  g.sd = spectral_projections(P, mp);
  g.sd_adj = spectral_projections(P.transpose(),
                                  minimal_polynomial(P.transpose(), tol));
  g.minimal_degree = mp.degree;
  return g;
}

inline QuasiNormContext build_context(const Matrix& P, double tol = 1e-6) {
  QuasiNormContext ctx;
  ctx.group = make_group(P, tol);
  ctx.B = detail::lyapunov_identity(P);
  ctx.B_adj = detail::lyapunov_identity(P.transpose());
  const int n = static_cast<int>(P.rows());
  Matrix res = P.transpose() * ctx.B + ctx.B * P - Matrix::Identity(n, n);
  Matrix res_adj =
      P * ctx.B_adj + ctx.B_adj * P.transpose() - Matrix::Identity(n, n);
  ctx.lyapunov_residual = std::max(res.norm(), res_adj.norm());
  if (ctx.lyapunov_residual > 1e-10)
    throw DegeneracyError("Lyapunov residual above 1e-10",
                          ctx.lyapunov_residual);
  Eigen::LLT<Matrix> llt(ctx.B);
  Eigen::LLT<Matrix> llt_adj(ctx.B_adj);
  if (llt.info() != Eigen::Success || llt_adj.info() != Eigen::Success)
    throw DegeneracyError("Lyapunov solution is not positive definite", 0.0);
  return ctx;
}

namespace detail {

/// <B A_{1/t} x, A_{1/t} x>; strictly decreasing in t by the Lyapunov choice.
inline double level_functional(const SpectralDecomposition& sd,
                               const Matrix& B, const Vector& x, double t) {
  CVector y = dilation(sd, 1.0 / t) * to_complex(x);
  Vector yr = y.real();
  return yr.dot(B * yr);
}

inline double gauge(const SpectralDecomposition& sd, const Matrix& B,
                    const Vector& x, double bracket_limit) {
  if (x.norm() == 0.0) return 0.0;
  double lo = 1.0, hi = 1.0;
  if (level_functional(sd, B, x, 1.0) > 1.0) {
    while (level_functional(sd, B, x, hi) > 1.0) {
      hi *= 4.0;
      if (hi > bracket_limit)
        throw BracketError("quasi_norm: bracket expansion beyond 1e60");
    }
    lo = hi / 4.0;
  } else {
    while (level_functional(sd, B, x, lo) <= 1.0) {
      lo /= 4.0;
      if (lo < 1.0 / bracket_limit)
        throw BracketError("quasi_norm: bracket expansion below 1e-60");
    }
    hi = lo * 4.0;
  }
  // bisection on log t to relative tolerance 1e-12
  double ulo = std::log(lo), uhi = std::log(hi);
  while (uhi - ulo > 1e-12) {
    double umid = 0.5 * (ulo + uhi);
    (level_functional(sd, B, x, std::exp(umid)) > 1.0 ? ulo : uhi) = umid;
  }
  return std::exp(0.5 * (ulo + uhi));
}

}  // namespace detail

inline double quasi_norm(const QuasiNormContext& ctx, const Vector& x) {
  return detail::gauge(ctx.group.sd, ctx.B, x, ctx.bracket_limit);
}

inline double adjoint_norm(const QuasiNormContext& ctx, const Vector& xi) {
  return detail::gauge(ctx.group.sd_adj, ctx.B_adj, xi, ctx.bracket_limit);
}

struct PolarPoint {
  double t = 0.0;  // r(x)
  Vector theta;    // A_{1/t} x on Sigma
};

inline PolarPoint polar_decompose(const QuasiNormContext& ctx,
                                  const Vector& x) {
  if (x.norm() == 0.0)
    throw std::domain_error("polar_decompose: x must be nonzero");
  PolarPoint p;
  p.t = quasi_norm(ctx, x);
  p.theta = (dilation(ctx.group.sd, 1.0 / p.t) * to_complex(x)).real();
  return p;
}

/// Adjoint-side polar decomposition (s(xi), theta on Sigma_adj).
inline PolarPoint adjoint_polar_decompose(const QuasiNormContext& ctx,
                                          const Vector& xi) {
  if (xi.norm() == 0.0)
    throw std::domain_error("adjoint_polar_decompose: xi must be nonzero");
  PolarPoint p;
  p.t = adjoint_norm(ctx, xi);
  p.theta = (dilation(ctx.group.sd_adj, 1.0 / p.t) * to_complex(xi)).real();
  return p;
}

/// Growth exponents seeded from the eigenvalue real parts, constants fitted
/// as sampled extremes with a 10% margin, then re-validated on fresh samples.
inline ExponentBudget exponent_budget(const QuasiNormContext& ctx,
                                      double q_dual, int sample_count,
                                      unsigned long long seed = 0x5eed5eedULL,
                                      double scale_max = 1e3) {
  if (!(q_dual > 1.0))
    throw std::domain_error("exponent_budget: q' must exceed 1");
  const int n = static_cast<int>(ctx.B.rows());
  ExponentBudget b;
  b.q_dual = q_dual;
  b.sample_count = sample_count;
  b.scale_max = scale_max;
  const double lmin = ctx.group.min_real, lmax = ctx.group.max_real;
  b.delta = 0.01 * lmin;
  b.alpha1 = 1.0 / (lmax + b.delta);
  b.alpha2 = 1.0 / (lmin - b.delta);
  b.beta1 = b.alpha2;
  b.beta2 = b.alpha1;
  b.a1 = b.alpha1;
  b.a2 = b.alpha2;
  b.b1 = b.beta1;
  b.b2 = b.beta2;
  b.d = b.b1 / b.alpha1;
  const double L = static_cast<double>(ctx.group.minimal_degree);
  b.epsilon0 = 0.5 * (1.0 / b.a2) * std::min(0.5, q_dual / L);

  struct Fit {
    double lo_big = 1e300, hi_big = -1e300;    // ratios on the >= 1 side
    double lo_small = 1e300, hi_small = -1e300;
  };
  auto sample = [&](Rng& rng, const SpectralDecomposition& sd,
                    const Matrix& B, double e_lo_big, double e_hi_big,
                    double e_lo_small, double e_hi_small, Fit& f,
                    bool fit_pass, const char* side) {
    std::uniform_real_distribution<double> logs(0.0, std::log(scale_max));
    for (int i = 0; i < sample_count; ++i) {
      Vector dir = random_direction(rng, n);
      // place the sample exactly at gauge value t via homogeneity
      double g0 = detail::gauge(sd, B, dir, 1e60);
      bool big = (i % 2 == 0);
      double t = std::exp(big ? logs(rng) : -logs(rng));
      Vector x = (dilation(sd, t / g0) * to_complex(dir)).real();
      double r = t;  // by homogeneity r(x) = t * r(dir)/r(dir)
      double nrm = x.norm();
      double rl = r / std::pow(nrm, big ? e_lo_big : e_lo_small);
      double rh = r / std::pow(nrm, big ? e_hi_big : e_hi_small);
      if (fit_pass) {
        if (big) {
          f.lo_big = std::min(f.lo_big, rl);
          f.hi_big = std::max(f.hi_big, rh);
        } else {
          f.lo_small = std::min(f.lo_small, rl);
          f.hi_small = std::max(f.hi_small, rh);
        }
      } else {
        double lo = big ? 0.9 * f.lo_big : 0.9 * f.lo_small;
        double hi = big ? 1.1 * f.hi_big : 1.1 * f.hi_small;
        if (!(lo < rl && rh < hi)) {
          std::ostringstream os;
          os << "exponent_budget: validation failed on the " << side
             << " side at r = " << r
             << "; consider a larger delta slack";
          throw ExponentSlackError(os.str());
        }
      }
    }
  };

  Rng rng(seed);
  Fit fr, fs;
  sample(rng, ctx.group.sd, ctx.B, b.alpha1, b.alpha2, b.beta1, b.beta2, fr,
         true, "r");
  sample(rng, ctx.group.sd_adj, ctx.B_adj, b.a1, b.a2, b.b1, b.b2, fs, true,
         "s");
  b.c1 = 0.9 * fr.lo_big;
  b.c2 = 1.1 * fr.hi_big;
  b.c3 = 0.9 * fr.lo_small;
  b.c4 = 1.1 * fr.hi_small;
  b.d1 = 0.9 * fs.lo_big;
  b.d2 = 1.1 * fs.hi_big;
  b.d3 = 0.9 * fs.lo_small;
  b.d4 = 1.1 * fs.hi_small;
  // fresh-sample validation at the fitted constants
  sample(rng, ctx.group.sd, ctx.B, b.alpha1, b.alpha2, b.beta1, b.beta2, fr,
         false, "r");
  sample(rng, ctx.group.sd_adj, ctx.B_adj, b.a1, b.a2, b.b1, b.b2, fs, false,
         "s");
  return b;
}

}  // namespace aniso
