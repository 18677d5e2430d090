#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aniso/oscillatory.hpp"
#include "aniso/quasinorm.hpp"
#include "oracles.hpp"

using namespace aniso;

namespace {

SpectralDecomposition decompose(const Matrix& A, double tol = 1e-6) {
  return spectral_projections(A, minimal_polynomial(A, tol));
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("J and the pairing lower bound") {
  SECTION("identity: J = |<eta, zeta>|") {
    auto sd = decompose(Matrix::Identity(2, 2));
    REQUIRE(compute_J(sd, vec2(2, 1), vec2(1, 1)) ==
            Catch::Approx(3.0).epsilon(1e-13));
    REQUIRE(lower_bound_pairing(Matrix::Identity(2, 2), vec2(2, 1),
                                vec2(1, 1)) == Catch::Approx(3.0));
  }
  SECTION("diag(1,2) hand computation: J = 2") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    REQUIRE(compute_J(sd, vec2(1, 1), vec2(0, 1)) ==
            Catch::Approx(2.0).epsilon(1e-13));
    REQUIRE(lower_bound_pairing(A, vec2(1, 1), vec2(0, 1)) ==
            Catch::Approx(2.0));
  }
  SECTION("homogeneity in zeta") {
    Matrix A(2, 2);
    A << 1, -1, 1, 1;
    auto sd = decompose(A);
    double j1 = compute_J(sd, vec2(0.3, -0.8), vec2(1.1, 0.4));
    double j10 = compute_J(sd, vec2(0.3, -0.8), Vector(10.0 * vec2(1.1, 0.4)));
    REQUIRE(std::abs(j10 - 10.0 * j1) <= 1e-12 * j10);
  }
  SECTION("strict inequality witness: <A eta, zeta> = 0 but J > 0") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    REQUIRE(lower_bound_pairing(A, vec2(1, 1), vec2(2, -1)) ==
            Catch::Approx(0.0).margin(1e-14));
    REQUIRE(compute_J(sd, vec2(1, 1), vec2(2, -1)) ==
            Catch::Approx(4.0).epsilon(1e-13));
  }
  SECTION("triangle chain over random problems") {
    Rng rng(555);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
      int n = 2 + static_cast<int>(rng() % 3);
      Matrix A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = uni(rng);
      Eigen::ComplexEigenSolver<CMatrix> es(A.cast<Complex>());
      double lo = es.eigenvalues().real().minCoeff();
      if (lo < 0.25) A += (0.25 - lo) * Matrix::Identity(n, n);
      auto sd = decompose(A);
      Vector eta = random_direction(rng, n), zeta = random_direction(rng, n);
      REQUIRE(lower_bound_pairing(A, eta, zeta) <=
              compute_J(sd, eta, zeta) + 1e-12);
    }
  }
}

TEST_CASE("phase coefficients") {
  SECTION("identity: single coefficient <eta, zeta>") {
    auto sd = decompose(Matrix::Identity(2, 2));
    auto pe = phase_coefficients(sd, vec2(2, 1), vec2(1, 1));
    REQUIRE(pe.c.size() == 1);
    REQUIRE(pe.c[0].size() == 1);
    REQUIRE(std::abs(pe.c[0][0] - Complex(3.0)) < 1e-13);
  }
  SECTION("Jordan block hand computation") {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    auto sd = decompose(A);
    auto pe = phase_coefficients(sd, vec2(0, 1), vec2(1, 0));
    // A^T zeta = (1, 1); c_10 = <eta, A^T zeta> = 1, c_11 = <(A-E)eta, .> = 1
    REQUIRE(std::abs(pe.c[0][0] - Complex(1.0)) < 1e-12);
    REQUIRE(std::abs(pe.c[0][1] - Complex(1.0)) < 1e-12);
  }
  SECTION("all-zero coefficients detect a constant phase") {
    auto sd = decompose(Matrix::Identity(2, 2));
    auto pe = phase_coefficients(sd, vec2(1, 0), vec2(0, 1));
    REQUIRE(pe.degenerate(1e-15));
    // psi(t) = <t eta, zeta> = 0 for all t
    auto prof = phase_profile(sd, vec2(1, 0), vec2(0, 1));
    REQUIRE(std::abs(prof(0.5)) < 1e-15);
    REQUIRE(std::abs(prof(3.0)) < 1e-15);
  }
  SECTION("reconstruction matches direct differentiation") {
    Matrix A(3, 3);
    A << 1.0, 0.4, -0.2, 0.0, 1.5, 0.3, 0.2, 0.0, 2.2;
    auto sd = decompose(A);
    Rng rng(808);
    for (int trial = 0; trial < 10; ++trial) {
      Vector eta = random_direction(rng, 3), zeta = random_direction(rng, 3);
      auto pe = phase_coefficients(sd, eta, zeta);
      Vector az = A.transpose() * zeta;
      for (double s : {-0.9, -0.2, 0.0, 0.4, 1.1}) {
        // psi'(s) = <e^{sA} eta, A^T zeta>, via the expm oracle
        Matrix E = oracle::dilation_expm(A, std::exp(s));
        double direct = (E * eta).dot(az);
        Complex rec = pe.derivative_exp_form(s);
        REQUIRE(std::abs(rec.imag()) < 1e-9);
        REQUIRE(std::abs(rec.real() - direct) <=
                1e-9 * std::max(1.0, std::abs(direct)));
      }
      // sum |c_ij| is comparable to J (equal up to the 1/j! weights here)
      double J = compute_J(sd, eta, zeta);
      REQUIRE(pe.coefficient_sum() <= J + 1e-12);
      REQUIRE(J <= 2.0 * pe.coefficient_sum() + 1e-12);
    }
  }
}

TEST_CASE("oscillatory integral") {
  SECTION("linear phase closed form") {
    auto sd = decompose(Matrix::Identity(2, 2));
    OscillatoryProblem prob;
    prob.sd = &sd;
    prob.eta = vec2(1, 0);
    prob.zeta = vec2(2.7, 0);  // psi(t) = 2.7 t
    prob.a = 0.5;
    prob.b = 2.5;
    auto res = oscillatory_integral(prob, 1e-11);
    const Complex ic(0.0, 2.7);
    Complex want = (std::exp(ic * prob.b) - std::exp(ic * prob.a)) / ic;
    REQUIRE(std::abs(res.value - want) < 1e-10);
  }
  SECTION("quadratic phase against the trapezoid oracle") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    for (double lambda : {1e2, 1e4}) {
      OscillatoryProblem prob;
      prob.sd = &sd;
      prob.eta = vec2(1, 1);
      prob.zeta = vec2(0, lambda);  // psi(t) = lambda t^2
      prob.a = 1.0;
      prob.b = 2.0;
      auto res = oscillatory_integral(prob, 1e-10);
      auto want = oracle::trapezoid_oscillatory(
          [&](double t) { return lambda * t * t; }, 1.0, 2.0,
          [](double) { return 1.0; }, 3e-9);
      REQUIRE(std::abs(res.value - want) < 1e-8);
    }
  }
  SECTION("constant phase is exact") {
    auto sd = decompose(Matrix::Identity(2, 2));
    OscillatoryProblem prob;
    prob.sd = &sd;
    prob.eta = vec2(1, 0);
    prob.zeta = vec2(0, 1);  // psi identically 0
    prob.a = 0.5;
    prob.b = 2.0;
    auto res = oscillatory_integral(prob, 1e-12);
    REQUIRE(std::abs(res.value - Complex(1.5)) < 1e-14);
    prob.weight = RadialWeight::dt_over_t;
    res = oscillatory_integral(prob, 1e-12);
    REQUIRE(std::abs(res.value - Complex(std::log(4.0))) < 1e-13);
  }
  SECTION("tolerance contract and self-consistency") {
    auto sd = decompose(Matrix::Identity(2, 2));
    OscillatoryProblem prob;
    prob.sd = &sd;
    prob.eta = vec2(1, 0);
    prob.zeta = vec2(40.0, 0);
    prob.a = 1.0;
    prob.b = 2.0;
    REQUIRE_THROWS_AS(oscillatory_integral(prob, 1e-13), std::domain_error);
    auto coarse = oscillatory_integral(prob, 1e-8);
    auto fine = oscillatory_integral(prob, 5e-9);
    REQUIRE(std::abs(coarse.value - fine.value) <=
            coarse.error_estimate + fine.error_estimate + 1e-14);
  }
  SECTION("window containment enforced") {
    auto sd = decompose(Matrix::Identity(2, 2));
    OscillatoryProblem prob;
    prob.sd = &sd;
    prob.eta = vec2(1, 0);
    prob.zeta = vec2(1, 0);
    prob.a = 0.1;  // outside the default window [0.25, 4]
    prob.b = 2.0;
    REQUIRE_THROWS_AS(oscillatory_integral(prob, 1e-10), std::domain_error);
  }
  SECTION("node budget error carries achieved accuracy") {
    auto prof = [](double t) { return 1e9 * t * t; };
    REQUIRE_THROWS_AS(oscillatory_integral_profile(prof, 1.0, 2.0,
                                                   RadialWeight::dt, 1e-12,
                                                   20000),
                      BudgetError);
  }
}

TEST_CASE("decay sweeps") {
  std::vector<double> grid;
  for (int i = 0; i <= 24; ++i) grid.push_back(std::pow(10.0, 4.0 * i / 24));

  SECTION("identity: closed-form moduli, slope near -1, bounded ratio") {
    Matrix A = Matrix::Identity(2, 2);
    auto sd = decompose(A);
    auto rep = decay_sweep(A, sd, vec2(1, 0), vec2(1.3, 0), grid, 1.0, 2.0,
                           RadialWeight::dt, SweepMode::theorem5);
    REQUIRE(rep.pass);
    REQUIRE(rep.slope <= -0.95);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double c = 1.3 * grid[i];
      double want = 2.0 * std::abs(std::sin(0.5 * c)) / c;
      REQUIRE(std::abs(rep.moduli[i] - want) < 1e-10);
    }
  }
  SECTION("diag(1,2), theorem5 ratio bounded") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    auto rep = decay_sweep(A, sd, vec2(1, 1), vec2(0, 1), grid, 1.0, 2.0,
                           RadialWeight::dt, SweepMode::theorem5);
    REQUIRE(rep.pass);
    REQUIRE(rep.growth_factor <= 1.5);
    REQUIRE(rep.slope <= -0.5 + 0.05);
  }
  SECTION("corollary mode envelope") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    auto rep = decay_sweep(A, sd, vec2(1, 1), vec2(0, 1), grid, 1.0, 2.0,
                           RadialWeight::dt, SweepMode::corollary);
    REQUIRE(rep.pass);
    // |<A eta, lambda zeta>| = 2 lambda here, same scale as J
    REQUIRE(rep.envelope[0] == Catch::Approx(2.0));
  }
  SECTION("lemma2 mode: dt/t on [1,2], envelope <eta, P zeta>") {
    Matrix P = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(P);
    auto rep = decay_sweep(P, sd, vec2(1, 1), vec2(1, 1), grid, 1.0, 2.0,
                           RadialWeight::dt_over_t, SweepMode::lemma2);
    REQUIRE(rep.pass);
    REQUIRE(rep.envelope[0] == Catch::Approx(3.0));  // <(1,1), P(1,1)>
    REQUIRE(rep.slope <= -0.5 + 0.05);
  }
  SECTION("degenerate direction rejected") {
    Matrix A = Matrix::Identity(2, 2);
    auto sd = decompose(A);
    REQUIRE_THROWS_AS(decay_sweep(A, sd, vec2(1, 0), vec2(0, 1), grid, 1.0,
                                  2.0, RadialWeight::dt, SweepMode::theorem5),
                      std::domain_error);
  }
}

TEST_CASE("van der Corput partition") {
  SECTION("pure exponential phase: one monotone interval") {
    auto sd = decompose(Matrix::Identity(2, 2));
    auto pe = phase_coefficients(sd, vec2(1, 0), vec2(1, 0));
    auto part = vdc_partition(pe, 0.0, 2.0);
    REQUIRE(part.intervals.size() == 1);
    REQUIRE(part.intervals[0].order == 1);
    REQUIRE(validate_partition(pe, part));
    REQUIRE(part.dominance_c > 0.0);
  }
  SECTION("rotation block: alternating pieces, count stable under refinement") {
    Matrix A(2, 2);
    A << 0, -1, 1, 0;  // e^{sA} is rotation by s
    auto sd = decompose(A);
    auto pe = phase_coefficients(sd, vec2(1, 0), vec2(1, 0));
    auto part1 = vdc_partition(pe, 0.0, 10.0, 2048);
    auto part2 = vdc_partition(pe, 0.0, 10.0, 8192);
    REQUIRE(part1.intervals.size() == part2.intervals.size());
    REQUIRE(part1.intervals.size() >= 6);  // several alternations over 10 rad
    REQUIRE(validate_partition(pe, part1));
    // crossing enumeration oracle: |sin| vs |cos| swap every pi/4 + k pi/2,
    // and phi'' = -cos changes sign at pi/2 + k pi; count the distinct cuts
    std::vector<double> cuts;
    for (int k = 0;; ++k) {
      double c = M_PI / 4 + k * M_PI / 2;
      if (c >= 10.0) break;
      cuts.push_back(c);
    }
    for (int k = 0;; ++k) {
      double c = M_PI / 2 + k * M_PI;
      if (c >= 10.0) break;
      cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    REQUIRE(part1.intervals.size() == cuts.size() + 1);
  }
  SECTION("monotone quadratic-type phase: single interval") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = decompose(A);
    auto pe = phase_coefficients(sd, vec2(1, 1), vec2(0, 100.0));
    auto part = vdc_partition(pe, 0.0, std::log(2.0));
    REQUIRE(part.intervals.size() == 1);
    REQUIRE(validate_partition(pe, part));
  }
  SECTION("degenerate phase rejected; H_max enforced") {
    auto sd = decompose(Matrix::Identity(2, 2));
    auto pe0 = phase_coefficients(sd, vec2(1, 0), vec2(0, 1));
    REQUIRE_THROWS_AS(vdc_partition(pe0, 0.0, 1.0), std::domain_error);
    Matrix A(2, 2);
    A << 0, -1, 1, 0;
    auto sdr = decompose(A);
    auto pe = phase_coefficients(sdr, vec2(1, 0), vec2(1, 0));
    REQUIRE_THROWS_AS(vdc_partition(pe, 0.0, 200.0, 16384, 64),
                      PathologicalPhaseError);
  }
}
