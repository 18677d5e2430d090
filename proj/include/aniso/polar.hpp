#pragma once

// Surface measure d(sigma) on Sigma and the polar integration identity
//
//   int f dx = int_0^inf int_Sigma f(A_t theta) t^{gamma-1} d sigma(theta) dt.
//
// The density of d(sigma) against Euclidean surface measure on Sigma is
// <B theta, P theta> / |B theta|, which is exactly what makes the identity
// hold; nodes are images of a uniform sphere rule under u -> B^{-1/2} u.
// Desk scale: n in {2, 3}.

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "aniso/quasinorm.hpp"

namespace aniso {

struct SurfaceMeasure {
  Matrix B;
  Matrix generator;
  SpectralDecomposition sd;  // of P, for shell dilations
  double gamma = 0.0;
  std::vector<Vector> nodes;    // theta on Sigma
  std::vector<double> weights;  // d sigma weights
  double total_mass = 0.0;      // sigma(Sigma)
  double max_node_gap = 0.0;    // largest Euclidean gap between neighbors
  int resolution = 0;

  int dim() const { return static_cast<int>(B.rows()); }
};

namespace detail {

inline void gauss_legendre(int q, std::vector<double>& x,
                           std::vector<double>& w) {
  Matrix J = Matrix::Zero(q, q);
  for (int i = 1; i < q; ++i) {
    double beta = i / std::sqrt(4.0 * i * i - 1.0);
    J(i, i - 1) = beta;
    J(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  x.resize(q);
  w.resize(q);
  for (int i = 0; i < q; ++i) {
    x[i] = es.eigenvalues()(i);
    w[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
}

}  // namespace detail

inline SurfaceMeasure build_surface_measure(const QuasiNormContext& ctx,
                                            int resolution) {
  const int n = static_cast<int>(ctx.B.rows());
  if (n > 3)
    throw UnsupportedDimensionError(
        "build_surface_measure: only n in {2,3} is supported");
  if (resolution < 16)
    throw std::domain_error("build_surface_measure: resolution must be >= 16");

  SurfaceMeasure sm;
  sm.B = ctx.B;
  sm.generator = ctx.group.generator;
  sm.sd = ctx.group.sd;
  sm.gamma = ctx.group.gamma;
  sm.resolution = resolution;

  Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.B);
  Matrix rootinv = es.eigenvectors() *
                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
  const double det_factor = 1.0 / std::sqrt(ctx.B.determinant());
  const Matrix& P = ctx.group.generator;

  auto push = [&](const Vector& u, double w_unit) {
    Vector theta = rootinv * u;
    Vector btheta = ctx.B * theta;
    double density = btheta.dot(P * theta);  // <B theta, P theta>
    if (!(density > 0.0))
      throw DegeneracyError("surface density is not positive", density);
    sm.nodes.push_back(theta);
    // |B theta| = |B^{1/2} u| cancels against the map's area factor
    sm.weights.push_back(w_unit * det_factor * density);
  };

  if (n == 2) {
    const int m = resolution;
    for (int i = 0; i < m; ++i) {
      double phi = 2.0 * M_PI * i / m;
      Vector u(2);
      u << std::cos(phi), std::sin(phi);
      push(u, 2.0 * M_PI / m);
    }
    for (int i = 0; i < m; ++i)
      sm.max_node_gap =
          std::max(sm.max_node_gap,
                   (sm.nodes[i] - sm.nodes[(i + 1) % m]).norm());
  } else {
    const int m_az = resolution;
    const int q_pol = std::max(8, resolution / 2);
    std::vector<double> c, wc;
    detail::gauss_legendre(q_pol, c, wc);
    for (int j = 0; j < q_pol; ++j) {
      double sj = std::sqrt(std::max(0.0, 1.0 - c[j] * c[j]));
      for (int i = 0; i < m_az; ++i) {
        double phi = 2.0 * M_PI * i / m_az;
        Vector u(3);
        u << sj * std::cos(phi), sj * std::sin(phi), c[j];
        push(u, wc[j] * 2.0 * M_PI / m_az);
      }
    }
    // neighbor gaps along the azimuth rings and between rings
    for (int j = 0; j < q_pol; ++j)
      for (int i = 0; i < m_az; ++i) {
        int a = j * m_az + i;
        int b = j * m_az + (i + 1) % m_az;
        sm.max_node_gap =
            std::max(sm.max_node_gap, (sm.nodes[a] - sm.nodes[b]).norm());
        if (j + 1 < q_pol) {
          int d = (j + 1) * m_az + i;
          sm.max_node_gap =
              std::max(sm.max_node_gap, (sm.nodes[a] - sm.nodes[d]).norm());
        }
      }
  }

  sm.total_mass = pairwise_sum(sm.weights);
  return sm;
}

/// Quadrature of  f  against d sigma on Sigma.
inline double surface_integral(const SurfaceMeasure& sm,
                               const std::function<double(const Vector&)>& f) {
  std::vector<double> vals(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i)
    vals[i] = sm.weights[i] * f(sm.nodes[i]);
  return pairwise_sum(vals);
}

/// || omega ||_{L^q(Sigma)} by node quadrature.
inline double surface_lq_norm(const SurfaceMeasure& sm,
                              const std::function<double(const Vector&)>& f,
                              double q) {
  std::vector<double> vals(sm.nodes.size());
  for (std::size_t i = 0; i < sm.nodes.size(); ++i)
    vals[i] = sm.weights[i] * std::pow(std::abs(f(sm.nodes[i])), q);
  return std::pow(pairwise_sum(vals), 1.0 / q);
}

/// Integrate f over the shell { t_min < r(x) <= t_max } in polar
/// coordinates: tensor of d sigma with Gauss-Legendre panels in log t.
template <class F>
auto integrate_polar(const SurfaceMeasure& sm, F&& f, double t_min,
                     double t_max, int radial_nodes)
    -> decltype(f(std::declval<const Vector&>())) {
  using R = decltype(f(std::declval<const Vector&>()));
  if (!(0.0 < t_min && t_min < t_max))
    throw std::domain_error("integrate_polar: need 0 < t_min < t_max");
  const double s0 = std::log(t_min), s1 = std::log(t_max);
  const int order = 8;
  const int panels = std::max(1, radial_nodes / order);
  std::vector<double> gx, gw;
  detail::gauss_legendre(order, gx, gw);

  std::vector<R> contributions;
  contributions.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (s1 - s0) / panels;
  for (int p = 0; p < panels; ++p) {
    double a = s0 + p * h;
    for (int g = 0; g < order; ++g) {
      double s = a + 0.5 * h * (gx[g] + 1.0);
      double t = std::exp(s);
      Matrix At = dilation_real(sm.sd, t);
      std::vector<R> ring(sm.nodes.size());
      for (std::size_t i = 0; i < sm.nodes.size(); ++i) {
        R v = f(Vector(At * sm.nodes[i]));
        if (!std::isfinite(std::abs(v))) {
          std::ostringstream os;
          os << "integrate_polar: non-finite sample at t = " << t
             << ", node " << i;
          throw Error(os.str());
        }
        ring[i] = sm.weights[i] * v;
      }
      // dt = t ds, so the radial factor is t^{gamma-1} * t = e^{gamma s}
      contributions.push_back(pairwise_sum(ring) * 0.5 * h * gw[g] *
                              std::exp(sm.gamma * s));
    }
  }
  return pairwise_sum(contributions);
}

/// omega minus its d sigma mean: the result integrates to zero.
inline std::function<double(const Vector&)> mean_zero_project(
    const SurfaceMeasure& sm, std::function<double(const Vector&)> omega) {
  double mean = surface_integral(sm, omega) / sm.total_mass;
  return [omega = std::move(omega), mean](const Vector& theta) {
    return omega(theta) - mean;
  };
}

/// Node-sample variant of the mean-zero projection.
inline std::vector<double> mean_zero_project(const SurfaceMeasure& sm,
                                             std::vector<double> samples) {
  std::vector<double> weighted(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    weighted[i] = sm.weights[i] * samples[i];
  double mean = pairwise_sum(weighted) / sm.total_mass;
  for (auto& v : samples) v -= mean;
  return samples;
}

}  // namespace aniso
