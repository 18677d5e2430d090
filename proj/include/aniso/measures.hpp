#pragma once

// Rough-kernel measures on dyadic shells E_k = { beta^k < r(x) <= beta^{k+1} }:
// Delta_s block norms, Zygmund functionals, the sphere transform tau, the
// dyadic transforms sigma_hat_k / mu_hat_k in their factorized radial form
//
//   sigma_hat_k(xi, eta) = int_{beta^k}^{beta^{k+1}}
//       e^{-2 pi i <Gamma(r), eta>} h(r) tau(B_r xi) dr/r,
//
// the square integral of Lemma 1, Littlewood-Paley windows with
// sum_k psi_k^2 = 1, and the decay sweeps for estimates (2.2)-(2.5).
//
// sigma_hat is evaluated by expanding tau into surface nodes and running an
// oscillation-aware radial rule per node; the raw n-dimensional polar form
// is kept as a cross-check (sigma_hat_direct).

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

#include "aniso/oscillatory.hpp"
#include "aniso/polar.hpp"
#include "aniso/report.hpp"

namespace aniso {

// ---------------------------------------------------------------------------
// Radial profiles h and the surface curve Gamma.

struct RadialProfile {
  enum class Kind { constant, dyadic_steps, callable };
  Kind kind = Kind::constant;
  double value = 1.0;                   // constant
  int j0 = 0;                           // first dyadic block of `steps`
  std::vector<double> steps;            // value on [2^{j0+i}, 2^{j0+i+1})
  std::function<double(double)> fn;     // callable
  bool smooth = true;                   // quadrature hint for callables

  static RadialProfile one() { return RadialProfile{}; }
  static RadialProfile constant(double c) {
    RadialProfile p;
    p.value = c;
    return p;
  }
  static RadialProfile dyadic(int j0, std::vector<double> values) {
    RadialProfile p;
    p.kind = Kind::dyadic_steps;
    p.j0 = j0;
    p.steps = std::move(values);
    return p;
  }
  static RadialProfile callable(std::function<double(double)> f,
                                bool is_smooth) {
    RadialProfile p;
    p.kind = Kind::callable;
    p.fn = std::move(f);
    p.smooth = is_smooth;
    return p;
  }

  double operator()(double r) const {
    switch (kind) {
      case Kind::constant:
        return value;
      case Kind::dyadic_steps: {
        if (r <= 0.0) return 0.0;
        int j = static_cast<int>(std::floor(std::log2(r)));
        if (j < j0 || j >= j0 + static_cast<int>(steps.size())) return 0.0;
        return steps[j - j0];
      }
      case Kind::callable:
        return fn(r);
    }
    return 0.0;
  }

  /// Interior discontinuities inside (r0, r1); quadrature panels split here.
  std::vector<double> breakpoints(double r0, double r1) const {
    std::vector<double> cuts;
    if (kind == Kind::dyadic_steps) {
      int jlo = static_cast<int>(std::floor(std::log2(r0))) - 1;
      int jhi = static_cast<int>(std::ceil(std::log2(r1))) + 1;
      for (int j = jlo; j <= jhi; ++j) {
        double c = std::ldexp(1.0, j);
        if (c > r0 * (1 + 1e-14) && c < r1 * (1 - 1e-14)) cuts.push_back(c);
      }
    }
    return cuts;
  }

  bool rough() const {
    return kind == Kind::dyadic_steps ||
           (kind == Kind::callable && !smooth);
  }
};

/// Gamma(t) = (t^{p_1}, ..., t^{p_m}); an empty exponent list is the zero
/// curve.  Gamma(0) = 0 holds since all exponents are positive.
struct PowerCurve {
  std::vector<double> exponents;

  int dim() const { return static_cast<int>(exponents.size()); }
  double phase(const Vector& eta, double r) const {  // <Gamma(r), eta>
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i)
      acc += eta[i] * std::pow(r, exponents[i]);
    return acc;
  }
  double phase_deriv(const Vector& eta, double r) const {
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i)
      acc += eta[i] * exponents[i] * std::pow(r, exponents[i] - 1.0);
    return acc;
  }
};

struct RoughKernel {
  std::function<double(const Vector&)> omega;
  RadialProfile h;
  PowerCurve curve;
  double beta = 2.0;
};

/// A kernel sampled on a surface measure with its angular part projected to
/// mean zero (the standing cancellation hypothesis).
struct BoundKernel {
  RoughKernel kernel;
  std::vector<double> omega;  // mean-zero samples at sm nodes
  double omega_l1 = 0.0;      // ||Omega||_1 under d sigma
  double mean_residual = 0.0;
};

inline BoundKernel bind_kernel(const RoughKernel& k, const SurfaceMeasure& sm,
                               bool project = true) {
  if (!(k.beta >= 2.0))
    throw std::domain_error("bind_kernel: beta must be >= 2");
  for (double p : k.curve.exponents)
    if (!(p > 0.0))
      throw std::domain_error("bind_kernel: curve exponents must be positive");
  BoundKernel b;
  b.kernel = k;
  std::vector<double> raw(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i) raw[i] = k.omega(sm.nodes[i]);
  b.omega = project ? mean_zero_project(sm, raw) : std::move(raw);
  std::vector<double> l1(b.omega.size()), m1(b.omega.size());
  for (std::size_t i = 0; i < b.omega.size(); ++i) {
    l1[i] = sm.weights[i] * std::abs(b.omega[i]);
    m1[i] = sm.weights[i] * b.omega[i];
  }
  b.omega_l1 = pairwise_sum(l1);
  b.mean_residual = std::abs(pairwise_sum(m1));
  return b;
}

// ---------------------------------------------------------------------------
// Block norms and Zygmund functionals.

struct BlockRange {
  int lo = -8, hi = 8;  // dyadic blocks [2^j, 2^{j+1}], j = lo..hi
};

namespace detail {

/// int_{2^j}^{2^{j+1}} f(t) dt/t, by Gauss panels in log t for smooth data
/// or dense midpoint sampling for rough data.
inline double block_integral(const std::function<double(double)>& f, int j,
                             bool rough, int rough_samples) {
  const double u0 = j * std::numbers::ln2;
  if (!rough) {
    static std::vector<double> gx, gw;
    if (gx.empty()) gauss_legendre(8, gx, gw);
    const int panels = 8;
    const double h = std::numbers::ln2 / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p)
      for (int g = 0; g < 8; ++g) {
        double u = u0 + p * h + 0.5 * h * (gx[g] + 1.0);
        acc += 0.5 * h * gw[g] * f(std::exp(u));
      }
    return acc;
  }
  std::vector<double> vals(rough_samples);
  const double h = std::numbers::ln2 / rough_samples;
  for (int i = 0; i < rough_samples; ++i)
    vals[i] = f(std::exp(u0 + (i + 0.5) * h));
  return pairwise_sum(vals) * h;
}

}  // namespace detail

/// || h ||_{Delta_s} truncated to the given dyadic block range.
inline double delta_norm(const RadialProfile& h, double s, BlockRange range,
                         int rough_samples = 4096) {
  if (!(s >= 1.0)) throw std::domain_error("delta_norm: s must be >= 1");
  double sup = 0.0;
  for (int j = range.lo; j <= range.hi; ++j) {
    double block = detail::block_integral(
        [&](double t) { return std::pow(std::abs(h(t)), s); }, j, h.rough(),
        rough_samples);
    sup = std::max(sup, std::pow(block, 1.0 / s));
  }
  return sup;
}

struct ZygmundReport {
  double La = 0.0;     // sup_j int |h| log(2+|h|)^a dt/t
  double LlogL = 0.0;  // int |Omega| log(2+|Omega|) d sigma
  double Na = 0.0;     // sum_m m^a 2^m d_m
  std::vector<double> d_m;
};

/// L_a(h) over the block range.
inline double zygmund_La(const RadialProfile& h, double a, BlockRange range,
                         int rough_samples = 4096) {
  if (!(a > 0.0)) throw std::domain_error("zygmund_La: a must be positive");
  double sup = 0.0;
  for (int j = range.lo; j <= range.hi; ++j) {
    double block = detail::block_integral(
        [&](double t) {
          double v = std::abs(h(t));
          return v * std::pow(std::log(2.0 + v), a);
        },
        j, h.rough(), rough_samples);
    sup = std::max(sup, block);
  }
  return sup;
}

inline double zygmund_LlogL(const SurfaceMeasure& sm,
                            const std::vector<double>& omega) {
  std::vector<double> vals(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    double v = std::abs(omega[i]);
    vals[i] = sm.weights[i] * v * std::log(2.0 + v);
  }
  return pairwise_sum(vals);
}

/// d_m(h) = sup_k 2^{-k} |E(k,m)| and N_a = sum m^a 2^m d_m, with level-set
/// measures estimated by uniform sampling in r on each block.
inline std::pair<double, std::vector<double>> zygmund_Na(
    const RadialProfile& h, double a, BlockRange range, int m_max = 48,
    int samples_per_block = 10000) {
  if (!(a > 0.0)) throw std::domain_error("zygmund_Na: a must be positive");
  std::vector<double> dm(m_max + 1, 0.0);
  for (int k = range.lo; k <= range.hi; ++k) {
    const double r0 = std::ldexp(1.0, k);
    std::vector<int> hits(m_max + 1, 0);
    for (int i = 0; i < samples_per_block; ++i) {
      double r = r0 * (1.0 + (i + 0.5) / samples_per_block);
      double v = std::abs(h(r));
      if (v <= 0.0) continue;
      int m = (v <= 2.0)
                  ? 1
                  : 1 + static_cast<int>(std::ceil(std::log2(v) - 1.0));
      if (m >= 1 && m <= m_max) ++hits[m];
    }
    for (int m = 1; m <= m_max; ++m)
      dm[m] = std::max(dm[m],
                       static_cast<double>(hits[m]) / samples_per_block);
  }
  double na = 0.0;
  for (int m = 1; m <= m_max; ++m)
    na += std::pow(static_cast<double>(m), a) * std::ldexp(1.0, m) * dm[m];
  return {na, std::vector<double>(dm.begin() + 1, dm.end())};
}

inline ZygmundReport zygmund_functionals(const RadialProfile& h, double a,
                                         BlockRange range,
                                         const SurfaceMeasure& sm,
                                         const std::vector<double>& omega) {
  ZygmundReport z;
  z.La = zygmund_La(h, a, range);
  z.LlogL = zygmund_LlogL(sm, omega);
  auto [na, dm] = zygmund_Na(h, a, range);
  z.Na = na;
  z.d_m = std::move(dm);
  return z;
}

// ---------------------------------------------------------------------------
// The sphere transform tau and the dyadic measure transforms.

struct TauValue {
  Complex value{0.0, 0.0};
  bool resolved = true;
};

/// tau(xi) = int_Sigma Omega(theta) e^{-2 pi i <xi, theta>} d sigma(theta).
inline TauValue tau_hat(const SurfaceMeasure& sm,
                        const std::vector<double>& omega, const Vector& xi) {
  TauValue out;
  std::vector<Complex> vals(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i)
    vals[i] = sm.weights[i] * omega[i] *
              std::polar(1.0, -2.0 * M_PI * xi.dot(sm.nodes[i]));
  out.value = pairwise_sum(vals);
  out.resolved = 2.0 * M_PI * xi.norm() * sm.max_node_gap <= 0.5 * M_PI;
  return out;
}

struct MeasureValue {
  Complex value{0.0, 0.0};
  long nodes = 0;
  int resolution_warnings = 0;
};

namespace detail {

/// int_{r0}^{r1} amp(r) e^{-2 pi i phase(r)} dr, with panels capped at a
/// fixed phase variation and splits at the amplitude's discontinuities.
/// `dphase` is an upper-envelope sample of |phase'|.
inline Complex fourier_radial(const std::function<double(double)>& amp,
                              const std::function<double(double)>& phase,
                              const std::function<double(double)>& dphase,
                              double r0, double r1,
                              const std::vector<double>& cuts, long& nodes,
                              long node_budget) {
  static std::vector<double> gx, gw;
  if (gx.empty()) gauss_legendre(12, gx, gw);
  std::vector<double> edges{r0};
  for (double c : cuts) edges.push_back(c);
  edges.push_back(r1);
  std::sort(edges.begin(), edges.end());

  std::vector<Complex> parts;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    // subdivide [a,b] so each panel sees at most ~3 pi of phase
    std::vector<std::pair<double, double>> stack{{edges[e], edges[e + 1]}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      double m = 0.5 * (a + b);
      double rate = std::max({std::abs(dphase(a)), std::abs(dphase(m)),
                              std::abs(dphase(b))});
      if (2.0 * M_PI * rate * (b - a) > 3.0 * M_PI && (b - a) > 1e-13 * r1) {
        stack.push_back({m, b});
        stack.push_back({a, m});
        continue;
      }
      Complex acc = 0.0;
      double half = 0.5 * (b - a), mid = 0.5 * (a + b);
      for (int g = 0; g < 12; ++g) {
        double r = mid + half * gx[g];
        acc += gw[g] * amp(r) * std::polar(1.0, -2.0 * M_PI * phase(r));
      }
      nodes += 12;
      if (nodes > node_budget)
        throw BudgetError("fourier_radial: node budget exceeded", 0.0, nodes);
      parts.push_back(acc * half);
    }
  }
  return pairwise_sum(parts);
}

}  // namespace detail

/// sigma_hat_k via the factorized radial form, expanded over surface nodes:
/// each node theta contributes  w Omega(theta) int h(r)
/// e^{-2 pi i (<xi, A_r theta> + <Gamma(r), eta>)} dr/r  with the pairing
/// phase evaluated through the spectral expansion of r^P.
inline MeasureValue sigma_hat(int k, const BoundKernel& bk,
                              const QuasiNormContext& ctx,
                              const SurfaceMeasure& sm, const Vector& xi,
                              const Vector& eta, bool absolute = false,
                              long node_budget = 400'000'000) {
  const double beta = bk.kernel.beta;
  const double r0 = std::pow(beta, k), r1 = std::pow(beta, k + 1);
  const auto& curve = bk.kernel.curve;
  if (curve.dim() > 0 && eta.size() != curve.dim())
    throw std::domain_error("sigma_hat: eta dimension mismatch with Gamma");

  MeasureValue out;
  const auto& h = bk.kernel.h;
  auto cuts = h.breakpoints(r0, r1);
  const Matrix& P = ctx.group.generator;

  // resolution check at the most oscillatory end of the block
  double freq_end =
      operator_norm(dilation_real(ctx.group.sd, r1)) * xi.norm();
  if (2.0 * M_PI * freq_end * sm.max_node_gap > 0.5 * M_PI)
    ++out.resolution_warnings;

  std::vector<Complex> vals(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i) {
    if (bk.omega[i] == 0.0 && !absolute) {
      vals[i] = 0.0;
      continue;
    }
    PhaseProfile pair = phase_profile(ctx.group.sd, sm.nodes[i], xi);
    PhaseProfile pair_rate =
        phase_profile(ctx.group.sd, Vector(P * sm.nodes[i]), xi);
    auto amp = [&](double r) {
      double hv = h(r);
      return (absolute ? std::abs(hv) : hv) / r;
    };
    auto phase = [&](double r) {
      return pair(r) + curve.phase(eta, r);
    };
    auto dphase = [&](double r) {
      return pair_rate(r) / r + curve.phase_deriv(eta, r);
    };
    Complex I = detail::fourier_radial(amp, phase, dphase, r0, r1, cuts,
                                       out.nodes, node_budget);
    double w = absolute ? std::abs(bk.omega[i]) : bk.omega[i];
    vals[i] = sm.weights[i] * w * I;
  }
  out.value = pairwise_sum(vals);
  return out;
}

inline MeasureValue mu_hat(int k, const BoundKernel& bk,
                           const QuasiNormContext& ctx,
                           const SurfaceMeasure& sm, const Vector& xi,
                           const Vector& eta,
                           long node_budget = 400'000'000) {
  return sigma_hat(k, bk, ctx, sm, xi, eta, /*absolute=*/true, node_budget);
}

/// Direct n-dimensional polar quadrature of the defining integral; the
/// cross-check route for sigma_hat.
inline Complex sigma_hat_direct(int k, const BoundKernel& bk,
                                const QuasiNormContext& ctx,
                                const SurfaceMeasure& sm, const Vector& xi,
                                const Vector& eta, int radial_nodes = 2048) {
  const double beta = bk.kernel.beta;
  const double r0 = std::pow(beta, k), r1 = std::pow(beta, k + 1);
  const auto& curve = bk.kernel.curve;
  // K(y) = h(r) Omega(theta) r^{-gamma}; the polar density supplies
  // t^{gamma-1}, so the full integrand in (t, theta) is
  // e^{-i(...)} h(t) Omega(theta) / t.
  const int order = 8;
  const int panels = std::max(1, radial_nodes / order);
  std::vector<double> gx, gw;
  detail::gauss_legendre(order, gx, gw);
  const double s0 = std::log(r0), s1 = std::log(r1);
  const double hstep = (s1 - s0) / panels;
  std::vector<Complex> parts;
  for (int p = 0; p < panels; ++p)
    for (int g = 0; g < order; ++g) {
      double s = s0 + p * hstep + 0.5 * hstep * (gx[g] + 1.0);
      double t = std::exp(s);
      Matrix At = dilation_real(ctx.group.sd, t);
      double curve_ph = curve.phase(eta, t);
      std::vector<Complex> ring(sm.nodes.size());
      for (std::size_t i = 0; i < sm.nodes.size(); ++i) {
        Vector y = At * sm.nodes[i];
        double ph = -2.0 * M_PI * (xi.dot(y) + curve_ph);
        ring[i] = sm.weights[i] * bk.omega[i] * bk.kernel.h(t) *
                  std::polar(1.0, ph);
      }
      parts.push_back(pairwise_sum(ring) * 0.5 * hstep * gw[g]);
    }
  return pairwise_sum(parts);
}

// ---------------------------------------------------------------------------
// Isotropic fast path.  For P = lambda E the pairing phase is
// <B_r xi, theta> = r^lambda <xi, theta>, so with u = r^lambda every surface
// node sees the same radial transform
//
//   W(c) = int_{u0}^{u1} h(u^{1/lambda}) e^{-2 pi i <Gamma(u^{1/lambda}), eta>}
//          e^{-2 pi i u c} du / (lambda u),
//
// evaluated at c = <xi, theta_i>.  W is precomputed on a uniform c-grid by
// FFT (demodulated by the carrier e^{-2 pi i u0 c}) and interpolated.

/// lambda with P = lambda E, or nothing.
inline std::optional<double> isotropic_exponent(const Matrix& P) {
  double lambda = P(0, 0);
  if ((P - lambda * Matrix::Identity(P.rows(), P.cols())).norm() <=
      1e-12 * std::max(1.0, P.norm()))
    return lambda;
  return std::nullopt;
}

struct IsotropicRadialTable {
  double lambda = 1.0;
  double u0 = 1.0, u1 = 2.0;
  double c_max = 0.0;
  double dc = 0.0;
  double du = 0.0;
  Complex g_lo{0.0, 0.0}, g_hi{0.0, 0.0};  // amplitude at the endpoints
  std::vector<Complex> values;  // demodulated W on c = -c_max + q*dc

  /// W(c): cubic interpolation times the carrier, plus the leading
  /// Euler-Maclaurin endpoint correction of the trapezoid sampling.
  Complex eval(double c) const {
    double pos = (c + c_max) / dc;
    long i1 = std::lround(std::floor(pos));
    long lo = std::clamp<long>(i1 - 1, 0,
                               static_cast<long>(values.size()) - 4);
    double x = pos - lo;
    // 4-point Lagrange on equally spaced samples
    double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
    double l1 = x * (x - 2) * (x - 3) / 2.0;
    double l2 = -x * (x - 1) * (x - 3) / 2.0;
    double l3 = x * (x - 1) * (x - 2) / 6.0;
    Complex w = l0 * values[lo] + l1 * values[lo + 1] + l2 * values[lo + 2] +
                l3 * values[lo + 3];
    w *= std::polar(1.0, -2.0 * M_PI * u0 * c);
    // f' = -2 pi i c g at the ends, the frequency-dominant part
    const Complex corr = (du * du / 12.0) * Complex(0.0, -2.0 * M_PI * c) *
                         (g_lo * std::polar(1.0, -2.0 * M_PI * u0 * c) -
                          g_hi * std::polar(1.0, -2.0 * M_PI * u1 * c));
    return w + corr;
  }
};

inline IsotropicRadialTable build_isotropic_table(
    const RoughKernel& kernel, int k, double lambda, const Vector& eta,
    double c_max, bool absolute) {
  IsotropicRadialTable tab;
  tab.lambda = lambda;
  tab.c_max = 1.05 * c_max + 1.0;
  const double r0 = std::pow(kernel.beta, k),
               r1 = std::pow(kernel.beta, k + 1);
  tab.u0 = std::pow(r0, lambda);
  tab.u1 = std::pow(r1, lambda);
  const double span = tab.u1 - tab.u0;

  // sampling fine enough that the uniform trapezoid stays accurate at the
  // largest |c|, and bins dense enough for cubic interpolation of the
  // demodulated transform
  const double du = 0.25 / (2.0 * M_PI * tab.c_max);
  long n_samples = static_cast<long>(std::ceil(span / du)) + 1;
  long n_fft = 1;
  double target_bins = 16.0 * std::max(span, 1.0) * 2.0 * M_PI * tab.c_max /
                       0.25;
  while (n_fft < std::max<double>(n_samples + 1, target_bins)) n_fft *= 2;
  const double du_eff = span / (n_samples - 1);
  tab.du = du_eff;

  auto amplitude = [&](double u) {
    double r = std::pow(u, 1.0 / lambda);
    double hv = kernel.h(r);
    if (absolute) hv = std::abs(hv);
    return hv / (lambda * u) *
           std::polar(1.0, -2.0 * M_PI * kernel.curve.phase(eta, r));
  };
  tab.g_lo = amplitude(tab.u0);
  tab.g_hi = amplitude(tab.u1);

  std::vector<Complex> in(n_fft, Complex(0.0));
  for (long m = 0; m < n_samples; ++m) {
    double w = (m == 0 || m == n_samples - 1) ? 0.5 : 1.0;
    in[m] = w * du_eff * amplitude(tab.u0 + m * du_eff);
  }
  Eigen::FFT<double> fft;
  std::vector<Complex> out(n_fft);
  fft.fwd(out, in);

  tab.dc = 1.0 / (n_fft * du_eff);
  long q_max = static_cast<long>(std::ceil(tab.c_max / tab.dc));
  tab.c_max = q_max * tab.dc;
  tab.values.resize(2 * q_max + 1);
  for (long q = -q_max; q <= q_max; ++q) {
    long bin = (q >= 0) ? q : n_fft + q;
    tab.values[q + q_max] = out[bin];
  }
  return tab;
}

/// sigma_hat (or mu_hat) through the precomputed isotropic radial table.
inline Complex sigma_hat_isotropic(const IsotropicRadialTable& tab,
                                   const BoundKernel& bk,
                                   const SurfaceMeasure& sm, const Vector& xi,
                                   bool absolute = false) {
  std::vector<Complex> vals(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i) {
    double w = absolute ? std::abs(bk.omega[i]) : bk.omega[i];
    vals[i] = sm.weights[i] * w * tab.eval(xi.dot(sm.nodes[i]));
  }
  return pairwise_sum(vals);
}

/// Lemma 1 left-hand side: int_{beta^k}^{beta^{k+1}} |tau(B_r xi)|^2 dr/r.
inline double lemma1_lhs(int k, const BoundKernel& bk,
                         const QuasiNormContext& ctx,
                         const SurfaceMeasure& sm, const Vector& xi) {
  const double beta = bk.kernel.beta;
  const double s0 = k * std::log(beta), s1 = (k + 1) * std::log(beta);
  // |tau(B_r xi)|^2 oscillates at roughly twice the node phase rate; sample
  // densely enough to resolve it.
  double freq = operator_norm(dilation_real(ctx.group.sd_adj,
                                            std::pow(beta, k + 1))) *
                xi.norm();
  double max_theta = 0.0;
  for (const auto& th : sm.nodes) max_theta = std::max(max_theta, th.norm());
  int nodes = std::max(256, static_cast<int>(16.0 * freq * max_theta *
                                             (s1 - s0)));
  std::vector<double> vals(nodes);
  for (int i = 0; i < nodes; ++i) {
    double s = s0 + (s1 - s0) * (i + 0.5) / nodes;
    Vector br_xi =
        (dilation(ctx.group.sd_adj, std::exp(s)) * to_complex(xi)).real();
    vals[i] = std::norm(tau_hat(sm, bk.omega, br_xi).value);
  }
  return pairwise_sum(vals) * (s1 - s0) / nodes;
}

/// ||sigma_k|| = int |h| dr/r * ||Omega||_1 together with its (2.1)-style
/// bound (nu+1) ||h||_{Delta_1} ||Omega||_1, 2^nu < beta <= 2^{nu+1}.
struct MassReport {
  double mass = 0.0;
  double bound = 0.0;
  bool holds = false;
};

inline MassReport sigma_mass(int k, const BoundKernel& bk, BlockRange range) {
  const double beta = bk.kernel.beta;
  MassReport m;
  const double s0 = k * std::log(beta), s1 = (k + 1) * std::log(beta);
  const int nodes = 1 << 14;
  std::vector<double> vals(nodes);
  for (int i = 0; i < nodes; ++i)
    vals[i] = std::abs(bk.kernel.h(std::exp(s0 + (s1 - s0) * (i + 0.5) / nodes)));
  double hint = pairwise_sum(vals) * (s1 - s0) / nodes;
  m.mass = hint * bk.omega_l1;
  int nu = 0;
  while (std::ldexp(1.0, nu + 1) < beta) ++nu;  // 2^nu < beta <= 2^{nu+1}
  m.bound = (nu + 1) * delta_norm(bk.kernel.h, 1.0, range) * bk.omega_l1;
  m.holds = m.mass <= m.bound * (1.0 + 1e-10);
  return m;
}

// ---------------------------------------------------------------------------
// Littlewood-Paley windows: psi_k(t)^2 = Phi(beta^k t) - Phi(beta^{k+1} t)
// with a fixed C^inf transition Phi (1 on (0,1], 0 on [2,inf)).  The sum of
// squares telescopes to 1, supports are exactly [beta^{-k-1}, beta^{-k+1}],
// and t |psi_k'(t)| is a fixed edge profile independent of beta >= 2.

struct WindowFamily {
  double beta = 2.0;

  static double zeta(double v) { return v > 0.0 ? std::exp(-1.0 / v) : 0.0; }
  static double zeta_deriv(double v) {
    return v > 0.0 ? std::exp(-1.0 / v) / (v * v) : 0.0;
  }
  static double transition(double u) {  // Phi
    if (u <= 1.0) return 1.0;
    if (u >= 2.0) return 0.0;
    double p = zeta(2.0 - u), q = zeta(u - 1.0);
    return p / (p + q);
  }
  static double transition_deriv(double u) {
    if (u <= 1.0 || u >= 2.0) return 0.0;
    double p = zeta(2.0 - u), q = zeta(u - 1.0);
    double dp = -zeta_deriv(2.0 - u), dq = zeta_deriv(u - 1.0);
    double denom = (p + q) * (p + q);
    return (dp * q - p * dq) / denom;
  }

  double squared(int k, double t) const {  // psi_k(t)^2
    double lo = std::pow(beta, k) * t, hi = std::pow(beta, k + 1) * t;
    return std::max(0.0, transition(lo) - transition(hi));
  }
  double psi(int k, double t) const { return std::sqrt(squared(k, t)); }
  double dpsi(int k, double t) const {
    double f = squared(k, t);
    if (f <= 1e-300) return 0.0;
    double bk = std::pow(beta, k), bk1 = std::pow(beta, k + 1);
    double df = bk * transition_deriv(bk * t) -
                bk1 * transition_deriv(bk1 * t);
    return df / (2.0 * std::sqrt(f));
  }
  /// Indices k with t possibly inside supp psi_k.
  std::pair<int, int> index_range(double t) const {
    double lb = -std::log(t) / std::log(beta);
    int lo = static_cast<int>(std::floor(lb - 1.0));
    int hi = static_cast<int>(std::ceil(lb + 1.0));
    return {lo, hi};
  }
};

inline WindowFamily build_windows(double beta) {
  if (!(beta >= 2.0))
    throw std::domain_error("build_windows: beta must be >= 2");
  WindowFamily wf;
  wf.beta = beta;
  return wf;
}

/// sup_t t |psi_k'(t)| over the support of window k = 0, by dense log grid.
inline double window_derivative_sup(const WindowFamily& wf,
                                    int grid = 1 << 14) {
  double s0 = -std::log(wf.beta), s1 = std::log(wf.beta);
  double sup = 0.0;
  for (int i = 0; i <= grid; ++i) {
    double t = std::exp(s0 + (s1 - s0) * i / grid);
    sup = std::max(sup, t * std::abs(wf.dpsi(0, t)));
  }
  return sup;
}

// ---------------------------------------------------------------------------
// Decay sweeps for (2.2)-(2.5) and Lemma 1.

enum class MeasureMode { eq2_2, eq2_3, eq2_4, eq2_5, lemma1 };

struct MeasureSweepConfig {
  int k = 0;
  Vector xi_direction;  // Euclidean direction, rescaled to hit the x grid
  Vector eta_freq;      // paired with Gamma (empty for the zero curve)
  double x_min = 1e-3, x_max = 1e3;  // x = beta^k s(xi)
  int points = 49;
  double q = 2.0, s = 2.0;  // report exponents
  int base_resolution = 256;
  int max_warnings = 0;
  long node_budget = 400'000'000;
};

namespace detail {

/// Scale c so that s(c * dir) equals the target adjoint-norm value.
inline double place_on_ray(const QuasiNormContext& ctx, const Vector& dir,
                           double s_target) {
  double c_lo = 1.0, c_hi = 1.0;
  auto s_of = [&](double c) { return adjoint_norm(ctx, Vector(c * dir)); };
  if (s_of(1.0) < s_target) {
    while (s_of(c_hi) < s_target) c_hi *= 4.0;
    c_lo = c_hi / 4.0;
  } else {
    while (s_of(c_lo) > s_target) c_lo /= 4.0;
    c_hi = c_lo * 4.0;
  }
  for (int it = 0; it < 60; ++it) {
    double m = std::sqrt(c_lo * c_hi);
    (s_of(m) < s_target ? c_lo : c_hi) = m;
  }
  return std::sqrt(c_lo * c_hi);
}

/// Resolution so that the node gap stays under 1/8 of the shortest phase
/// wavelength seen on the block (gap scales like 1/resolution).
inline int required_resolution(const SurfaceMeasure& base_sm,
                               const QuasiNormContext& ctx, double beta,
                               int k, const Vector& xi) {
  double amax = operator_norm(dilation_real(ctx.group.sd,
                                            std::pow(beta, k + 1)));
  double gap_needed = 1.0 / std::max(8.0 * amax * xi.norm(), 1e-12);
  double target = base_sm.resolution * base_sm.max_node_gap / gap_needed;
  int res = base_sm.resolution;
  while (res < target && res < (1 << 21)) res *= 2;
  return res;
}

}  // namespace detail

/// Sweep x = beta^k s(xi) along a fixed direction and compare the measured
/// modulus with the mode's envelope.  Small-xi modes (2.2)/(2.5) report the
/// grid in u = 1/x so the decade bookkeeping runs toward the limit x -> 0;
/// tail modes (2.3)/(2.4)/lemma1 run toward x -> infinity and also fit the
/// tail exponent.
inline DecayReport verify_sigma_decay(const RoughKernel& kernel,
                                      const QuasiNormContext& ctx,
                                      const ExponentBudget& budget,
                                      MeasureMode mode,
                                      const MeasureSweepConfig& cfg) {
  const double beta = kernel.beta;
  const double qd = cfg.q / (cfg.q - 1.0), sd = cfg.s / (cfg.s - 1.0);
  const bool small_mode =
      (mode == MeasureMode::eq2_2 || mode == MeasureMode::eq2_5);
  const double x_lo = small_mode ? cfg.x_min : 1.0;
  const double x_hi = small_mode ? 1.0 : cfg.x_max;

  DecayReport rep;
  switch (mode) {
    case MeasureMode::eq2_2: rep.mode = "eq2_2"; break;
    case MeasureMode::eq2_3: rep.mode = "eq2_3"; break;
    case MeasureMode::eq2_4: rep.mode = "eq2_4"; break;
    case MeasureMode::eq2_5: rep.mode = "eq2_5"; break;
    case MeasureMode::lemma1: rep.mode = "lemma1"; break;
  }

  // norm factors for the envelopes
  BlockRange hrange{static_cast<int>(std::floor(cfg.k * std::log2(beta))) - 1,
                    static_cast<int>(std::ceil((cfg.k + 1) * std::log2(beta))) +
                        1};
  double hnorm = delta_norm(kernel.h, cfg.s, hrange);
  double logb = std::log(beta);

  std::map<int, SurfaceMeasure> sm_cache;
  std::map<int, BoundKernel> bk_cache;
  auto with_resolution = [&](int res) -> std::pair<const SurfaceMeasure*,
                                                   const BoundKernel*> {
    auto it = sm_cache.find(res);
    if (it == sm_cache.end()) {
      it = sm_cache.emplace(res, build_surface_measure(ctx, res)).first;
      bk_cache.emplace(res, bind_kernel(kernel, it->second));
    }
    return {&it->second, &bk_cache.at(res)};
  };
  auto [sm0, bk0] = with_resolution(cfg.base_resolution);
  double omega_q = 0.0;
  {
    std::vector<double> vals(sm0->nodes.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = sm0->weights[i] * std::pow(std::abs(bk0->omega[i]), cfg.q);
    omega_q = std::pow(pairwise_sum(vals), 1.0 / cfg.q);
  }

  auto envelope = [&](double x) -> double {
    switch (mode) {
      case MeasureMode::eq2_2:
      case MeasureMode::eq2_5:
        return std::pow(std::pow(beta, budget.d) * x, 1.0 / budget.b1) *
               omega_q * hnorm;
      case MeasureMode::eq2_3:
      case MeasureMode::eq2_4:
        return logb * std::pow(x, -budget.epsilon0 / (qd * sd)) * omega_q *
               hnorm;
      case MeasureMode::lemma1:
        return logb * std::pow(x, -budget.epsilon0 / qd) * omega_q * omega_q;
    }
    return 0.0;
  };

  // sweep points along the fixed direction, placed on the x grid
  std::vector<Vector> xis;
  for (int i = 0; i < cfg.points; ++i) {
    double x = x_lo * std::pow(x_hi / x_lo,
                               cfg.points == 1
                                   ? 0.0
                                   : static_cast<double>(i) /
                                         (cfg.points - 1));
    double s_target = x / std::pow(beta, cfg.k);
    xis.push_back(
        Vector(detail::place_on_ray(ctx, cfg.xi_direction, s_target) *
               cfg.xi_direction));
  }

  // isotropic generators share one radial transform across all nodes
  std::optional<double> iso = isotropic_exponent(ctx.group.generator);
  const bool fast = iso.has_value() && mode != MeasureMode::lemma1;
  const bool absolute =
      (mode == MeasureMode::eq2_4 || mode == MeasureMode::eq2_5);
  double rho = 0.0;
  for (const auto& th : sm0->nodes) rho = std::max(rho, th.norm());
  IsotropicRadialTable table;
  if (fast) {
    double c_max = 0.0;
    for (const auto& xi : xis) c_max = std::max(c_max, xi.norm() * rho);
    table = build_isotropic_table(kernel, cfg.k, *iso, cfg.eta_freq, c_max,
                                  absolute);
  }

  // mu_hat(0, eta) baseline for (2.5); independent of the sweep point
  Complex mu_base{0.0, 0.0};
  if (mode == MeasureMode::eq2_5)
    mu_base = mu_hat(cfg.k, *bk0, ctx, *sm0,
                     Vector(Vector::Zero(ctx.B.rows())), cfg.eta_freq,
                     cfg.node_budget)
                  .value;

  for (int i = 0; i < cfg.points; ++i) {
    double x = x_lo * std::pow(x_hi / x_lo,
                               cfg.points == 1
                                   ? 0.0
                                   : static_cast<double>(i) /
                                         (cfg.points - 1));
    const Vector& xi = xis[i];

    double measured = 0.0;
    int warnings = 0;
    if (fast) {
      double band = 2.1 * 2.0 * M_PI * table.u1 * xi.norm() * rho + 512.0;
      int res = cfg.base_resolution;
      while (res < band && res < (1 << 21)) res *= 2;
      if (res < band) ++warnings;
      auto [sm, bk] = with_resolution(res);
      Complex v = sigma_hat_isotropic(table, *bk, *sm, xi, absolute);
      measured = (mode == MeasureMode::eq2_5) ? std::abs(v - mu_base)
                                              : std::abs(v);
    } else {
      int res = detail::required_resolution(*sm0, ctx, beta, cfg.k, xi);
      auto [sm, bk] = with_resolution(res);
      switch (mode) {
        case MeasureMode::eq2_2:
        case MeasureMode::eq2_3: {
          auto v = sigma_hat(cfg.k, *bk, ctx, *sm, xi, cfg.eta_freq, false,
                             cfg.node_budget);
          measured = std::abs(v.value);
          warnings = v.resolution_warnings;
          break;
        }
        case MeasureMode::eq2_4:
        case MeasureMode::eq2_5: {
          auto v = mu_hat(cfg.k, *bk, ctx, *sm, xi, cfg.eta_freq,
                          cfg.node_budget);
          measured = (mode == MeasureMode::eq2_5)
                         ? std::abs(v.value - mu_base)
                         : std::abs(v.value);
          warnings = v.resolution_warnings;
          break;
        }
        case MeasureMode::lemma1:
          measured = lemma1_lhs(cfg.k, *bk, ctx, *sm, xi);
          break;
      }
    }
    rep.resolution_warnings += warnings;
    double grid_x = small_mode ? 1.0 / x : x;  // order toward the limit
    rep.grid.push_back(grid_x);
    rep.moduli.push_back(measured);
    rep.envelope.push_back(envelope(x));
    rep.ratio.push_back(measured / envelope(x));
  }
  // points were generated x-ascending; for small modes the u = 1/x grid is
  // descending, so reverse into increasing order
  if (small_mode) {
    std::reverse(rep.grid.begin(), rep.grid.end());
    std::reverse(rep.moduli.begin(), rep.moduli.end());
    std::reverse(rep.envelope.begin(), rep.envelope.end());
    std::reverse(rep.ratio.begin(), rep.ratio.end());
  }

  if (small_mode) {
    finalize_report(rep, 1.5, std::nan(""), GrowthRule::at_limit);
  } else {
    double theory = (mode == MeasureMode::lemma1)
                        ? -budget.epsilon0 / qd
                        : -budget.epsilon0 / (qd * sd);
    finalize_report(rep, 1.5, theory + 0.05, GrowthRule::at_limit);
  }
  if (rep.resolution_warnings > cfg.max_warnings) rep.pass = false;
  return rep;
}

}  // namespace aniso
