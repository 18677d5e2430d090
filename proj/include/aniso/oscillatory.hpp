#pragma once

// Oscillatory integrals  int_a^b exp(i <t^A eta, zeta>) dt  (or dt/t) and
// the decay machinery around them: the controlling quantity
//
//   J(A,eta,zeta) = sum_i sum_{j<m_i} |<(A-gamma_i E)^j P_i(A) eta, A^* zeta>|,
//
// phase-derivative coefficients c_ij = <(A-gamma_i E)^j P_i(A) eta, A^* zeta>/j!,
// decay sweeps against the J^{-1/N} / |<A eta, zeta>|^{-1/N} / |<eta, P zeta>|^{-1/L}
// envelopes, and the constructive interval partition behind the van der
// Corput bound (dominant derivative order + monotone phase derivative).

#include <cmath>
#include <deque>
#include <functional>
#include <optional>

#include "aniso/report.hpp"
#include "aniso/spectral.hpp"

namespace aniso {

enum class RadialWeight { dt, dt_over_t };
enum class SweepMode { theorem5, corollary, lemma2 };

/// J(A, eta, zeta); bilinear pairing, no conjugation.
inline double compute_J(const SpectralDecomposition& sd, const Vector& eta,
                        const Vector& zeta) {
  if (eta.norm() == 0.0 || zeta.norm() == 0.0)
    throw std::domain_error("compute_J: eta and zeta must be nonzero");
  const CVector etac = to_complex(eta);
  const CVector wc = to_complex(Vector(sd.A.transpose() * zeta));
  double total = 0.0;
  for (std::size_t i = 0; i < sd.nilpotent.size(); ++i)
    for (std::size_t j = 0; j < sd.nilpotent[i].size(); ++j)
      total += std::abs(pairing(CVector(sd.nilpotent[i][j] * etac), wc));
  return total;
}

/// |<A eta, zeta>|; always a lower bound for J by the projection identity.
inline double lower_bound_pairing(const Matrix& A, const Vector& eta,
                                  const Vector& zeta) {
  return std::abs((A * eta).dot(zeta));
}

struct PhaseExpansion {
  // c[i][j] = <(A-gamma_i E)^j P_i(A) eta, A^* zeta> / j!
  std::vector<std::vector<Complex>> c;
  std::vector<Complex> gamma;
  int degree = 0;  // N

  double coefficient_sum() const {  // sum |c_ij|, comparable to J
    double s = 0.0;
    for (const auto& row : c)
      for (const auto& v : row) s += std::abs(v);
    return s;
  }
  bool degenerate(double tol = 0.0) const { return coefficient_sum() <= tol; }

  /// psi'(s) = sum c_ij s^j e^{gamma_i s}  (the t = e^s substitution form)
  Complex derivative_exp_form(double s) const {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      Complex eg = std::exp(gamma[i] * s);
      double sj = 1.0;
      for (std::size_t j = 0; j < c[i].size(); ++j) {
        acc += c[i][j] * sj * eg;
        sj *= s;
      }
    }
    return acc;
  }
};

inline PhaseExpansion phase_coefficients(const SpectralDecomposition& sd,
                                         const Vector& eta,
                                         const Vector& zeta) {
  if (eta.norm() == 0.0 || zeta.norm() == 0.0)
    throw std::domain_error("phase_coefficients: eta and zeta must be nonzero");
  PhaseExpansion pe;
  pe.degree = sd.poly.degree;
  const CVector etac = to_complex(eta);
  const CVector wc = to_complex(Vector(sd.A.transpose() * zeta));
  for (std::size_t i = 0; i < sd.nilpotent.size(); ++i) {
    pe.gamma.push_back(sd.poly.clusters[i].gamma);
    std::vector<Complex> row;
    double factorial = 1.0;
    for (std::size_t j = 0; j < sd.nilpotent[i].size(); ++j) {
      if (j > 0) factorial *= static_cast<double>(j);
      row.push_back(pairing(CVector(sd.nilpotent[i][j] * etac), wc) /
                    factorial);
    }
    pe.c.push_back(std::move(row));
  }
  return pe;
}

/// Scalar expansion of psi(t) = <t^A eta, zeta>: cheap to evaluate inside
/// quadrature loops (no matrix work per node).
struct PhaseProfile {
  struct Term {
    Complex gamma;
    std::vector<Complex> coeff;  // multiplies (log t)^j / j!
  };
  std::vector<Term> terms;

  double operator()(double t) const {
    const double s = std::log(t);
    Complex acc = 0.0;
    for (const auto& term : terms) {
      Complex eg = std::exp(term.gamma * s);
      double p = 1.0, factorial = 1.0;
      for (std::size_t j = 0; j < term.coeff.size(); ++j) {
        if (j > 0) {
          p *= s;
          factorial *= static_cast<double>(j);
        }
        acc += term.coeff[j] * eg * (p / factorial);
      }
    }
    return acc.real();
  }
};

inline PhaseProfile phase_profile(const SpectralDecomposition& sd,
                                  const Vector& eta, const Vector& zeta) {
  PhaseProfile prof;
  const CVector etac = to_complex(eta);
  const CVector zc = to_complex(zeta);
  for (std::size_t i = 0; i < sd.nilpotent.size(); ++i) {
    PhaseProfile::Term term;
    term.gamma = sd.poly.clusters[i].gamma;
    for (const auto& nil : sd.nilpotent[i])
      term.coeff.push_back(pairing(CVector(nil * etac), zc));
    prof.terms.push_back(std::move(term));
  }
  return prof;
}

struct OscillatoryProblem {
  const SpectralDecomposition* sd = nullptr;
  Vector eta, zeta;
  double a = 0.0, b = 0.0;
  RadialWeight weight = RadialWeight::dt;
  // declared compact window W containing [a,b]
  double window_lo = 0.25, window_hi = 4.0;
};

struct OscResult {
  Complex value{0.0, 0.0};
  double error_estimate = 0.0;
  long nodes = 0;
};

namespace detail {

struct GaussRule {
  std::vector<double> x, w;
};

inline const GaussRule& gauss_rule(int order) {
  static const auto make = [](int q) {
    GaussRule r;
    Matrix J = Matrix::Zero(q, q);
    for (int i = 1; i < q; ++i) {
      double beta = i / std::sqrt(4.0 * i * i - 1.0);
      J(i, i - 1) = beta;
      J(i - 1, i) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    for (int i = 0; i < q; ++i) {
      r.x.push_back(es.eigenvalues()(i));
      r.w.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
    return r;
  };
  static const GaussRule g7 = make(7);
  static const GaussRule g15 = make(15);
  return order == 7 ? g7 : g15;
}

inline Complex panel_integral(const std::function<double(double)>& phase,
                              RadialWeight weight, double a, double b,
                              int order, long& nodes) {
  const GaussRule& g = gauss_rule(order);
  Complex acc = 0.0;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    double t = mid + half * g.x[i];
    double w = (weight == RadialWeight::dt) ? 1.0 : 1.0 / t;
    acc += g.w[i] * std::polar(w, phase(t));
    ++nodes;
  }
  return acc * half;
}

}  // namespace detail

/// Adaptive oscillation-aware quadrature: panels split until the sampled
/// phase variation per panel is at most pi/2 and the embedded G7/G15 error
/// is within the panel's share of `tol`.
inline OscResult oscillatory_integral_profile(
    const std::function<double(double)>& phase, double a, double b,
    RadialWeight weight, double tol, long node_budget = 10'000'000) {
  if (!(tol >= 1e-12))
    throw std::domain_error("oscillatory_integral: tol must be >= 1e-12");
  if (!(0.0 < a && a < b))
    throw std::domain_error("oscillatory_integral: need 0 < a < b");

  struct Segment {
    double a, b;
    int depth;
  };
  std::deque<Segment> work{{a, b, 0}};
  OscResult res;
  std::vector<Complex> accepted;
  const double total_len = b - a;

  while (!work.empty()) {
    Segment s = work.front();
    work.pop_front();
    double mid = 0.5 * (s.a + s.b);
    double pa = phase(s.a), pm = phase(mid), pb = phase(s.b);
    res.nodes += 3;
    double variation = std::abs(pm - pa) + std::abs(pb - pm);
    bool splittable = s.depth < 60 && (s.b - s.a) > 1e-14 * total_len;
    if (variation > 0.5 * M_PI && splittable) {
      work.push_front({mid, s.b, s.depth + 1});
      work.push_front({s.a, mid, s.depth + 1});
    } else {
      Complex fine =
          detail::panel_integral(phase, weight, s.a, s.b, 15, res.nodes);
      Complex coarse =
          detail::panel_integral(phase, weight, s.a, s.b, 7, res.nodes);
      double err = std::abs(fine - coarse);
      double share = tol * (s.b - s.a) / total_len;
      if (err > share && splittable) {
        work.push_front({mid, s.b, s.depth + 1});
        work.push_front({s.a, mid, s.depth + 1});
      } else {
        accepted.push_back(fine);
        res.error_estimate += err;
      }
    }
    if (res.nodes > node_budget) {
      for (const auto& seg : work) {
        long dummy = 0;
        accepted.push_back(detail::panel_integral(phase, weight, seg.a,
                                                  seg.b, 15, dummy));
      }
      res.value = pairwise_sum(accepted);
      throw BudgetError(
          "oscillatory_integral: node budget exceeded; achieved error "
          "estimate " + std::to_string(res.error_estimate),
          res.error_estimate, res.nodes);
    }
  }
  res.value = pairwise_sum(accepted);
  return res;
}

inline OscResult oscillatory_integral(const OscillatoryProblem& prob,
                                      double tol) {
  if (!(prob.window_lo <= prob.a && prob.b <= prob.window_hi))
    throw std::domain_error(
        "oscillatory_integral: [a,b] must lie in the declared window");
  PhaseProfile prof = phase_profile(*prob.sd, prob.eta, prob.zeta);
  return oscillatory_integral_profile(prof, prob.a, prob.b, prob.weight, tol);
}

/// Decay sweep against the mode's envelope.  theorem5/corollary scale zeta,
/// lemma2 scales eta and integrates exp(i <B_t eta, zeta>) dt/t, which by
/// bilinearity equals the phase <t^P zeta', eta'> with the roles swapped.
inline DecayReport decay_sweep(const Matrix& A,
                               const SpectralDecomposition& sd,
                               const Vector& eta, const Vector& zeta_dir,
                               const std::vector<double>& lambda_grid,
                               double a, double b, RadialWeight weight,
                               SweepMode mode, double tol = 1e-10) {
  DecayReport rep;
  rep.decay_order = static_cast<double>(sd.poly.degree);
  rep.window = "[" + std::to_string(a) + ", " + std::to_string(b) + "]";
  switch (mode) {
    case SweepMode::theorem5:
      rep.mode = "theorem5";
      break;
    case SweepMode::corollary:
      rep.mode = "corollary";
      break;
    case SweepMode::lemma2:
      rep.mode = "lemma2";
      break;
  }

  auto envelope_at = [&](double lambda) -> double {
    Vector z = lambda * zeta_dir;
    switch (mode) {
      case SweepMode::theorem5:
        return compute_J(sd, eta, z);
      case SweepMode::corollary:
        return lower_bound_pairing(A, eta, z);
      case SweepMode::lemma2:
        // envelope |<eta, P zeta>| with eta scaled
        return std::abs((lambda * eta).dot(A * zeta_dir));
    }
    return 0.0;
  };
  if (envelope_at(1.0) <= 0.0)
    throw std::domain_error(
        "decay_sweep: envelope vanishes at lambda = 1 (degenerate direction)");

  for (double lambda : lambda_grid) {
    PhaseProfile prof =
        (mode == SweepMode::lemma2)
            // <B_t (lambda eta), zeta> = lambda <t^P zeta, eta>
            ? phase_profile(sd, zeta_dir, Vector(lambda * eta))
            : phase_profile(sd, eta, Vector(lambda * zeta_dir));
    OscResult I = oscillatory_integral_profile(prof, a, b, weight, tol);
    double env = envelope_at(lambda);
    rep.grid.push_back(lambda);
    rep.moduli.push_back(std::abs(I.value));
    rep.envelope.push_back(env);
    rep.ratio.push_back(std::abs(I.value) *
                        std::pow(env, 1.0 / rep.decay_order));
  }
  finalize_report(rep, 1.5, -1.0 / rep.decay_order + 0.05);
  return rep;
}

// ---------------------------------------------------------------------------
// Constructive van der Corput partition.

/// f(s) = sum_i poly_i(s) e^{gamma_i s} with exact differentiation.
struct ExpPoly {
  struct Part {
    Complex gamma;
    std::vector<Complex> coeff;  // ascending powers of s
  };
  std::vector<Part> parts;

  ExpPoly derivative() const {
    ExpPoly d;
    for (const auto& p : parts) {
      Part q;
      q.gamma = p.gamma;
      q.coeff.assign(p.coeff.size(), Complex(0.0));
      for (std::size_t j = 0; j < p.coeff.size(); ++j) {
        q.coeff[j] += p.gamma * p.coeff[j];
        if (j + 1 < p.coeff.size())
          q.coeff[j] += static_cast<double>(j + 1) * p.coeff[j + 1];
      }
      d.parts.push_back(std::move(q));
    }
    return d;
  }

  Complex eval(double s) const {
    Complex acc = 0.0;
    for (const auto& p : parts) {
      Complex poly = 0.0;
      for (auto it = p.coeff.rbegin(); it != p.coeff.rend(); ++it)
        poly = poly * s + *it;
      acc += poly * std::exp(p.gamma * s);
    }
    return acc;
  }
};

/// phi'(s) as an ExpPoly from the c_ij of a PhaseExpansion.
inline ExpPoly phase_derivative(const PhaseExpansion& pe) {
  ExpPoly f;
  for (std::size_t i = 0; i < pe.c.size(); ++i) {
    ExpPoly::Part p;
    p.gamma = pe.gamma[i];
    p.coeff = pe.c[i];
    f.parts.push_back(std::move(p));
  }
  return f;
}

struct VdcInterval {
  double lo = 0.0, hi = 0.0;
  int order = 1;          // dominant derivative order l_m (1-based)
  double min_dominant = 0.0;  // min |phi^{(l_m)}| over the interval samples
};

struct VdcPartition {
  std::vector<VdcInterval> intervals;
  double n1 = 0.0;         // N_1(phi') = sum |c_ij|
  double dominance_c = 0.0;  // measured c with |phi^{(l_m)}| >= c N_1
};

/// Decompose [lo, hi] into subintervals on which one derivative order
/// dominates all orders 1..k and phi' is monotone; boundaries located by
/// bisection on the corresponding sign changes.
inline VdcPartition vdc_partition(const PhaseExpansion& pe, double lo,
                                  double hi, int grid_density = 4096,
                                  int h_max = 64) {
  if (pe.degenerate())
    throw std::domain_error("vdc_partition: all c_ij vanish (constant phase)");
  const int k = pe.degree;
  std::vector<ExpPoly> deriv;  // deriv[l-1] = phi^{(l)}, l = 1..k, plus one
  deriv.push_back(phase_derivative(pe));
  for (int l = 1; l < k + 1; ++l) deriv.push_back(deriv.back().derivative());

  auto absval = [&](int l, double s) {  // |phi^{(l)}(s)|, l is 1-based
    return std::abs(deriv[l - 1].eval(s));
  };
  auto second = [&](double s) {  // real phi''(s)
    return deriv[1].eval(s).real();
  };
  auto argmax_order = [&](double s) {
    int best = 1;
    double bv = absval(1, s);
    for (int l = 2; l <= k; ++l) {
      double v = absval(l, s);
      if (v > bv) {
        bv = v;
        best = l;
      }
    }
    return best;
  };

  auto bisect = [&](auto&& g, double a, double b) {
    double ga = g(a);
    for (int it = 0; it < 80; ++it) {
      double m = 0.5 * (a + b);
      double gm = g(m);
      if ((ga <= 0.0) == (gm <= 0.0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };

  std::vector<double> cuts{lo};
  double prev_s = lo;
  int prev_order = argmax_order(lo);
  double prev_sign = second(lo);
  for (int i = 1; i <= grid_density; ++i) {
    double s = lo + (hi - lo) * i / grid_density;
    int ord = argmax_order(s);
    if (ord != prev_order) {
      int po = prev_order, no = ord;
      cuts.push_back(bisect(
          [&](double u) { return absval(no, u) - absval(po, u); }, prev_s,
          s));
      prev_order = ord;
    }
    double sgn = second(s);
    if ((sgn <= 0.0) != (prev_sign <= 0.0)) {
      cuts.push_back(bisect([&](double u) { return second(u); }, prev_s, s));
      prev_sign = sgn;
    }
    prev_s = s;
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double a, double b) {
                           return std::abs(a - b) <= 1e-13 * (hi - lo);
                         }),
             cuts.end());

  VdcPartition part;
  part.n1 = pe.coefficient_sum();
  if (static_cast<int>(cuts.size()) - 1 > h_max)
    throw PathologicalPhaseError(
        "vdc_partition: more than H_max = " + std::to_string(h_max) +
        " subintervals");
  double cmin = 1e300;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    VdcInterval iv;
    iv.lo = cuts[i];
    iv.hi = cuts[i + 1];
    iv.order = argmax_order(0.5 * (iv.lo + iv.hi));
    iv.min_dominant = 1e300;
    for (int q = 0; q < 64; ++q) {
      double s = iv.lo + (iv.hi - iv.lo) * (q + 0.5) / 64.0;
      iv.min_dominant = std::min(iv.min_dominant, absval(iv.order, s));
    }
    cmin = std::min(cmin, iv.min_dominant / part.n1);
    part.intervals.push_back(iv);
  }
  part.dominance_c = cmin;
  return part;
}

/// Check dominance and monotonicity of a partition on a sample grid;
/// returns true when every interval verifies.
inline bool validate_partition(const PhaseExpansion& pe,
                               const VdcPartition& part,
                               int samples_per_interval = 1000,
                               double slack = 1e-9) {
  const int k = pe.degree;
  std::vector<ExpPoly> deriv;
  deriv.push_back(phase_derivative(pe));
  for (int l = 1; l < k + 1; ++l) deriv.push_back(deriv.back().derivative());
  for (const auto& iv : part.intervals) {
    double span = iv.hi - iv.lo;
    double ref2 = 0.0;
    for (int q = 0; q < samples_per_interval; ++q) {
      double s = iv.lo + span * (q + 0.5) / samples_per_interval;
      ref2 = std::max(ref2, std::abs(deriv[1].eval(s).real()));
    }
    double lo_sign = 0.0, hi_sign = 0.0;
    for (int q = 0; q < samples_per_interval; ++q) {
      double s = iv.lo + span * (q + 0.5) / samples_per_interval;
      double dom = std::abs(deriv[iv.order - 1].eval(s));
      for (int l = 1; l <= k; ++l)
        if (std::abs(deriv[l - 1].eval(s)) > dom * (1.0 + slack) +
                                                 slack * part.n1)
          return false;
      double dd = deriv[1].eval(s).real();
      lo_sign = std::min(lo_sign, dd);
      hi_sign = std::max(hi_sign, dd);
    }
    // phi'' may not change sign beyond rounding slack
    if (lo_sign < -slack * std::max(ref2, part.n1) &&
        hi_sign > slack * std::max(ref2, part.n1))
      return false;
  }
  return true;
}

}  // namespace aniso
