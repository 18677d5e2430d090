#pragma once

// Level-set machinery behind the extrapolation argument: dyadic value
// blocks E_m = { 2^{m-1} < |h| <= 2^m } (E_1 takes everything up to 2),
// surface sets F_m with masses e_m = sigma(F_m), mean-corrected pieces
//
//   Omega_m = Omega chi_{F_m} - sigma(Sigma)^{-1} int_{F_m} Omega d sigma,
//
// the block norms of (3.3)/(3.4) and the double sum
//
//   sum_{m,j} base_bound(1+1/j, 1+1/m) ||h chi_{E_m}||_{Delta_{1+1/m}}
//                                       ||Omega_j||_{1+1/j}
//
// together with its m-/j-series and the e_j < 3^{-j} split.

#include <cmath>
#include <functional>

#include "aniso/measures.hpp"

namespace aniso {

namespace detail {

/// 1 for |v| <= 2, else the m with 2^{m-1} < |v| <= 2^m.
inline int value_level(double v) {
  double av = std::abs(v);
  if (av <= 2.0) return 1;
  return static_cast<int>(std::ceil(std::log2(av)));
}

}  // namespace detail

struct LevelSetDecomposition {
  RadialProfile h;
  BlockRange range;
  int m_max = 50;
  std::vector<double> omega;       // mean-zero samples on the nodes
  std::vector<double> weights;     // d sigma weights
  std::vector<int> node_level;     // F_m membership per node
  std::vector<double> e;           // e[m-1] = sigma(F_m)
  std::vector<double> correction;  // c_m = sigma^{-1} int_{F_m} omega
  double sigma_total = 0.0;
  double h_tail_mass = 0.0;     // relative |h| mass above 2^{m_max}
  double omega_tail_mass = 0.0;

  /// h chi_{E_m}; steps and discontinuity hints are preserved.
  RadialProfile restricted(int m) const {
    auto base = h;
    return RadialProfile::callable(
        [base, m](double t) {
          double v = base(t);
          return detail::value_level(v) == m ? v : 0.0;
        },
        false);
  }

  /// Omega_m sample at a node.
  double omega_piece(int m, std::size_t node) const {
    double on = (node_level[node] == m) ? omega[node] : 0.0;
    return on - correction[m - 1];
  }
};

inline LevelSetDecomposition decompose(const RadialProfile& h,
                                       const std::vector<double>& omega,
                                       const SurfaceMeasure& sm,
                                       BlockRange range, int m_max = 50,
                                       int samples_per_block = 10000) {
  LevelSetDecomposition dec;
  dec.h = h;
  dec.range = range;
  dec.m_max = m_max;
  dec.omega = omega;
  dec.weights = sm.weights;
  dec.sigma_total = sm.total_mass;

  // tail check for h: |h| mass above 2^{m_max} relative to the total
  double total = 0.0, tail = 0.0;
  for (int j = range.lo; j <= range.hi; ++j) {
    const double u0 = j * std::numbers::ln2;
    const double step = std::numbers::ln2 / samples_per_block;
    for (int i = 0; i < samples_per_block; ++i) {
      double v = std::abs(h(std::exp(u0 + (i + 0.5) * step)));
      total += v * step;
      if (detail::value_level(v) > m_max) tail += v * step;
    }
  }
  dec.h_tail_mass = (total > 0.0) ? tail / total : 0.0;
  if (dec.h_tail_mass > 1e-10)
    throw TruncationError(
        "decompose: |h| mass above 2^M is not negligible at M = " +
            std::to_string(m_max),
        dec.h_tail_mass);

  double omass = 0.0, otail = 0.0;
  dec.node_level.resize(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    dec.node_level[i] = detail::value_level(omega[i]);
    omass += sm.weights[i] * std::abs(omega[i]);
    if (dec.node_level[i] > m_max) otail += sm.weights[i] * std::abs(omega[i]);
  }
  dec.omega_tail_mass = (omass > 0.0) ? otail / omass : 0.0;
  if (dec.omega_tail_mass > 1e-10)
    throw TruncationError(
        "decompose: |Omega| mass above 2^M is not negligible at M = " +
            std::to_string(m_max),
        dec.omega_tail_mass);

  dec.e.assign(m_max, 0.0);
  dec.correction.assign(m_max, 0.0);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    int m = dec.node_level[i];
    if (m <= m_max) {
      dec.e[m - 1] += sm.weights[i];
      dec.correction[m - 1] += sm.weights[i] * omega[i];
    }
  }
  for (auto& c : dec.correction) c /= dec.sigma_total;
  return dec;
}

struct BlockNorms {
  std::vector<double> h_block;      // ||h chi_{E_m}||_{Delta_{1+1/m}}
  std::vector<double> omega_block;  // ||Omega_j||_{1+1/j}
  std::vector<double> e;            // sigma(F_j)
  std::vector<double> ratio_33;     // against m^{-am/(m+1)} L_a^{m/(m+1)}
  std::vector<double> ratio_34;     // against 2^j e_j^{j/(j+1)}
};

inline BlockNorms block_norms(const LevelSetDecomposition& dec, double a,
                              int rough_samples = 4096) {
  BlockNorms out;
  out.e = dec.e;
  double la = zygmund_La(dec.h, a, dec.range, rough_samples);
  for (int m = 1; m <= dec.m_max; ++m) {
    double s = 1.0 + 1.0 / m;
    double nm = delta_norm(dec.restricted(m), s, dec.range, rough_samples);
    out.h_block.push_back(nm);
    double envelope = std::pow(static_cast<double>(m),
                               -a * m / (m + 1.0)) *
                      std::pow(std::max(la, 1e-300), m / (m + 1.0));
    out.ratio_33.push_back(nm > 0.0 ? nm / envelope : 0.0);
  }
  for (int j = 1; j <= dec.m_max; ++j) {
    double q = 1.0 + 1.0 / j;
    std::vector<double> vals(dec.omega.size());
    for (std::size_t i = 0; i < dec.omega.size(); ++i)
      vals[i] =
          dec.weights[i] * std::pow(std::abs(dec.omega_piece(j, i)), q);
    double nj = std::pow(pairwise_sum(vals), 1.0 / q);
    out.omega_block.push_back(nj);
    double ej = dec.e[j - 1];
    out.ratio_34.push_back(
        ej > 0.0 ? nj / (std::ldexp(1.0, j) * std::pow(ej, j / (j + 1.0)))
                 : 0.0);
  }
  return out;
}

struct ExtrapolationReport {
  std::vector<std::vector<double>> terms;  // terms[m-1][j-1]
  double total = 0.0;
  std::vector<double> m_series;  // m^{1 - a m/(m+1)}
  double m_series_sum = 0.0;
  std::vector<double> j_series;  // j 2^j e_j^{j/(j+1)}
  double j_series_sum = 0.0;
  double j_split_small = 0.0;  // sum over e_j < 3^{-j}
  double j_split_large = 0.0;  // sum over e_j >= 3^{-j}
  bool converged = false;      // tail term < 1e-8 of the partial sum
  bool divergence_warning = false;  // fired when a <= 2
};

/// The aggregated bound: base_bound(q, s) carries the per-exponent blow-up,
/// defaulting to (q-1)^{-1}(s-1)^{-1} so that q = 1+1/j, s = 1+1/m gives jm.
inline ExtrapolationReport extrapolation_sum(
    const LevelSetDecomposition& dec, double a,
    const std::function<double(double, double)>& base_bound = nullptr,
    int rough_samples = 4096) {
  std::function<double(double, double)> bound = base_bound;
  if (!bound)
    bound = [](double q, double s) { return 1.0 / ((q - 1.0) * (s - 1.0)); };
  ExtrapolationReport rep;
  rep.divergence_warning = (a <= 2.0);

  BlockNorms norms = block_norms(dec, a > 0 ? a : 1.0, rough_samples);
  std::vector<double> flat;
  for (int m = 1; m <= dec.m_max; ++m) {
    std::vector<double> row;
    for (int j = 1; j <= dec.m_max; ++j) {
      double q = 1.0 + 1.0 / j, s = 1.0 + 1.0 / m;
      double term = bound(q, s) * norms.h_block[m - 1] *
                    norms.omega_block[j - 1];
      row.push_back(term);
      flat.push_back(term);
    }
    rep.terms.push_back(std::move(row));
  }
  rep.total = pairwise_sum(flat);

  // The m-series is a pure number series: extend it past the decomposition
  // cutoff until its tail term is negligible (or give up and warn).
  bool m_series_converged = false;
  {
    double partial = 0.0;
    const long cap = 200000;
    for (long m = 1; m <= cap; ++m) {
      double term = std::pow(static_cast<double>(m),
                             1.0 - a * m / (m + 1.0));
      partial += term;
      if (m <= dec.m_max) rep.m_series.push_back(term);
      if (m >= dec.m_max && term < 1e-8 * partial) {
        m_series_converged = true;
        break;
      }
    }
    rep.m_series_sum = partial;
  }
  if (!m_series_converged) rep.divergence_warning = true;

  for (int j = 1; j <= dec.m_max; ++j) {
    double ej = dec.e[j - 1];
    double term = j * std::ldexp(1.0, j) * std::pow(ej, j / (j + 1.0));
    rep.j_series.push_back(term);
    if (ej < std::pow(3.0, -j))
      rep.j_split_small += term;
    else
      rep.j_split_large += term;
  }
  rep.j_series_sum = pairwise_sum(rep.j_series);

  // convergence: the m-series settled and the last double-sum row is tiny
  double term_tail = 0.0;
  for (double v : rep.terms.back()) term_tail += v;
  rep.converged = m_series_converged &&
                  term_tail <= 1e-8 * std::max(rep.total, 1e-300);
  return rep;
}

}  // namespace aniso
