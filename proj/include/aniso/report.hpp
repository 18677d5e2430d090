#pragma once

// Sweep bookkeeping shared by the oscillatory-decay and measure-decay
// verifiers: per-point records, per-decade maxima, the envelope slope
// fitted over the top decade, and the growth-factor pass rule.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aniso/core.hpp"

namespace aniso {

struct DecayReport {
  std::string mode;
  std::vector<double> grid;      // strictly increasing scale factors
  std::vector<double> moduli;    // measured |integral| or |sigma_hat|
  std::vector<double> envelope;  // theoretical envelope quantity
  std::vector<double> ratio;     // moduli * envelope-compensation
  double decay_order = 1.0;      // N or L in the envelope exponent 1/N
  double sup_ratio = 0.0;
  double slope = 0.0;            // top-decade envelope slope (log-log)
  double first_decade_max = 0.0;
  double last_decade_max = 0.0;
  double growth_factor = 0.0;    // last_decade_max / first_decade_max
  bool pass = false;
  // context recorded alongside the numbers
  std::string window;  // the compact interval the integral lives on
  std::string matrix;
  int resolution_warnings = 0;
};

namespace sweepmath {

struct DecadePeak {
  double at = 0.0;
  double value = 0.0;
};

/// Peak of |values| per decade of the grid, with the grid point achieving it.
inline std::vector<DecadePeak> decade_peaks(const std::vector<double>& grid,
                                            const std::vector<double>& vals) {
  std::vector<DecadePeak> peaks;
  if (grid.empty()) return peaks;
  int d_lo = static_cast<int>(std::floor(std::log10(grid.front()) + 1e-12));
  int d_hi = static_cast<int>(std::floor(std::log10(grid.back()) - 1e-12));
  for (int d = d_lo; d <= d_hi; ++d) {
    DecadePeak p;
    bool seen = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < std::pow(10.0, d) * (1.0 - 1e-12)) continue;
      if (grid[i] > std::pow(10.0, d + 1) * (1.0 + 1e-12)) continue;
      if (!seen || vals[i] > p.value) {
        p.at = grid[i];
        p.value = vals[i];
        seen = true;
      }
    }
    if (seen) peaks.push_back(p);
  }
  return peaks;
}

/// Log-log slope of the decay envelope across the top decade: the segment
/// between the last two per-decade peaks.
inline double top_decade_slope(const std::vector<double>& grid,
                               const std::vector<double>& vals) {
  auto peaks = decade_peaks(grid, vals);
  if (peaks.size() < 2) return 0.0;
  const auto& a = peaks[peaks.size() - 2];
  const auto& b = peaks.back();
  double dx = std::log10(b.at) - std::log10(a.at);
  if (std::abs(dx) < 1e-12) return 0.0;
  return (std::log10(std::max(b.value, 1e-300)) -
          std::log10(std::max(a.value, 1e-300))) /
         dx;
}

/// Least-squares log-log slope over all points (diagnostic).
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log10(x[i]);
    double ly = std::log10(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace sweepmath

/// How the growth factor compares decade maxima of the ratio.
/// `first_to_last` is the sweep-wide rule of the oscillatory criteria;
/// `at_limit` compares the two decades nearest the limit end, which is the
/// boundedness claim of the measure estimates (earlier decades sit in the
/// regime where the complementary estimate of the min(...) pair is sharp).
enum class GrowthRule { first_to_last, at_limit };

/// Fill the derived fields of a report whose grid/moduli/envelope/ratio
/// are already populated, applying the growth-factor pass rule together
/// with a slope requirement when one is given.
inline void finalize_report(DecayReport& r, double growth_limit = 1.5,
                            double slope_limit = std::nan(""),
                            GrowthRule rule = GrowthRule::first_to_last) {
  r.sup_ratio = 0.0;
  for (double v : r.ratio) r.sup_ratio = std::max(r.sup_ratio, v);
  auto peaks = sweepmath::decade_peaks(r.grid, r.ratio);
  if (peaks.size() >= 2) {
    const auto& base = (rule == GrowthRule::first_to_last)
                           ? peaks.front()
                           : peaks[peaks.size() - 2];
    r.first_decade_max = base.value;
    r.last_decade_max = peaks.back().value;
    r.growth_factor =
        r.last_decade_max / std::max(r.first_decade_max, 1e-300);
  } else if (peaks.size() == 1) {
    r.first_decade_max = r.last_decade_max = peaks.front().value;
    r.growth_factor = 1.0;
  }
  r.slope = sweepmath::top_decade_slope(r.grid, r.moduli);
  r.pass = (r.growth_factor <= growth_limit);
  if (!std::isnan(slope_limit)) r.pass = r.pass && (r.slope <= slope_limit);
}

}  // namespace aniso
