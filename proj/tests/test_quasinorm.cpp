#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aniso/quasinorm.hpp"
#include "oracles.hpp"

using namespace aniso;

TEST_CASE("Lyapunov ellipsoid for fixed generators") {
  SECTION("identity: B = E/2") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    REQUIRE((ctx.B - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-12);
    REQUIRE(ctx.lyapunov_residual < 1e-10);
  }
  SECTION("diag(1,2): B = diag(1/2, 1/4)") {
    Matrix P = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto ctx = build_context(P);
    Matrix want(2, 2);
    want << 0.5, 0.0, 0.0, 0.25;
    REQUIRE((ctx.B - want).norm() < 1e-12);
  }
  SECTION("Jordan generator: direct 3-unknown solve") {
    Matrix P(2, 2);
    P << 1, 1, 0, 1;
    auto ctx = build_context(P);
    // 2 b11 = 1, b11 + 2 b12 = 0, 2 b12 + 2 b22 = 1 solved directly
    Matrix want(2, 2);
    want << 0.5, -0.25, -0.25, 0.75;
    REQUIRE((ctx.B - want).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.B);
    REQUIRE(es.eigenvalues().minCoeff() > 0.0);
  }
  SECTION("nonpositive eigenvalue rejected by name") {
    Matrix P(2, 2);
    P << -1, 0, 0, 1;
    REQUIRE_THROWS_WITH(build_context(P),
                        Catch::Matchers::ContainsSubstring("-1"));
  }
}

TEST_CASE("quasi-norm values") {
  SECTION("isotropic: r(x) = |x|/sqrt(2)") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    Vector x(2);
    x << 3.0, -4.0;  // |x| = 5
    REQUIRE(quasi_norm(ctx, x) == Catch::Approx(5.0 / std::sqrt(2.0)).epsilon(1e-11));
  }
  SECTION("zero vector") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    REQUIRE(quasi_norm(ctx, Vector::Zero(2)) == 0.0);
    REQUIRE(adjoint_norm(ctx, Vector::Zero(2)) == 0.0);
  }
  SECTION("diag(1,2): level-equation residual and diagonal oracle") {
    Matrix P = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto ctx = build_context(P);
    Vector x(2);
    x << 0.0, 2.0;
    double r = quasi_norm(ctx, x);
    REQUIRE(r == Catch::Approx(oracle::diagonal_quasinorm(0.5, 0.25, 1.0, 2.0,
                                                          0.0, 2.0))
                     .epsilon(1e-10));
    double level = detail::level_functional(ctx.group.sd, ctx.B, x, r);
    REQUIRE(std::abs(level - 1.0) < 1e-10);

    Vector y(2);
    y << 1.5, -0.7;
    REQUIRE(quasi_norm(ctx, y) ==
            Catch::Approx(oracle::diagonal_quasinorm(0.5, 0.25, 1.0, 2.0, 1.5,
                                                     -0.7))
                .epsilon(1e-10));
  }
}

TEST_CASE("adjoint norm agrees with r for symmetric generators") {
  Rng rng(4410);
  for (const Matrix& P :
       {Matrix(Matrix::Identity(2, 2)),
        Matrix(Vector::LinSpaced(2, 1.0, 2.0).asDiagonal().toDenseMatrix())}) {
    auto ctx = build_context(P);
    for (int i = 0; i < 50; ++i) {
      Vector x = 3.0 * random_direction(rng, 2);
      REQUIRE(std::abs(quasi_norm(ctx, x) - adjoint_norm(ctx, x)) <
              1e-10 * std::max(1.0, quasi_norm(ctx, x)));
    }
  }
}

TEST_CASE("polar decomposition") {
  SECTION("isotropic explicit case") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    Vector x(2);
    x << 2.0, 0.0;
    auto p = polar_decompose(ctx, x);
    REQUIRE(p.t == Catch::Approx(std::sqrt(2.0)).epsilon(1e-11));
    Vector want(2);
    want << std::sqrt(2.0), 0.0;
    REQUIRE((p.theta - want).norm() < 1e-10);
  }
  SECTION("points on Sigma and homogeneity") {
    Matrix P(2, 2);
    P << 1, 0.5, 0, 2;
    auto ctx = build_context(P);
    Rng rng(99);
    for (int i = 0; i < 25; ++i) {
      Vector dir = random_direction(rng, 2);
      double g = quasi_norm(ctx, dir);
      Vector theta = (dilation(ctx.group.sd, 1.0 / g) * to_complex(dir)).real();
      auto p0 = polar_decompose(ctx, theta);
      REQUIRE(p0.t == Catch::Approx(1.0).epsilon(1e-10));
      REQUIRE((p0.theta - theta).norm() < 1e-9);

      Vector x5 = (dilation(ctx.group.sd, 5.0) * to_complex(theta)).real();
      auto p5 = polar_decompose(ctx, x5);
      REQUIRE(p5.t == Catch::Approx(5.0).epsilon(1e-10));
      REQUIRE((p5.theta - theta).norm() < 1e-8);

      // round trip x -> (t, theta) -> x
      Vector back = (dilation(ctx.group.sd, p5.t) * to_complex(p5.theta)).real();
      REQUIRE((back - x5).norm() <= 1e-8 * x5.norm());
      REQUIRE(std::abs(p5.theta.dot(ctx.B * p5.theta) - 1.0) < 1e-10);
    }
  }
  SECTION("zero rejected") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    REQUIRE_THROWS_AS(polar_decompose(ctx, Vector::Zero(2)),
                      std::domain_error);
  }
}

TEST_CASE("homogeneity r(A_t x) = t r(x)") {
  Matrix P(3, 3);
  P << 1.0, 0.3, 0.0, 0.0, 1.5, -0.2, 0.1, 0.0, 2.0;
  auto ctx = build_context(P);
  Rng rng(31337);
  std::uniform_real_distribution<double> logt(std::log(1e-3), std::log(1e3));
  for (int i = 0; i < 400; ++i) {
    Vector x = random_direction(rng, 3) * std::exp(logt(rng) / 3.0);
    double t = std::exp(logt(rng));
    Vector xt = (dilation(ctx.group.sd, t) * to_complex(x)).real();
    double lhs = quasi_norm(ctx, xt);
    double rhs = t * quasi_norm(ctx, x);
    REQUIRE(std::abs(lhs - rhs) <= 1e-6 * rhs);
  }
}

TEST_CASE("quasi-triangle constant is stable under sample growth") {
  Matrix P(2, 2);
  P << 1, 1, 0, 1;
  auto ctx = build_context(P);
  auto sup_ratio = [&](int count, unsigned long long seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> amp(-3.0, 3.0);
    double sup = 0.0;
    for (int i = 0; i < count; ++i) {
      Vector x(2), y(2);
      x << amp(rng), amp(rng);
      y << amp(rng), amp(rng);
      double rx = quasi_norm(ctx, x), ry = quasi_norm(ctx, y);
      if (rx + ry < 1e-12) continue;
      sup = std::max(sup, quasi_norm(ctx, x + y) / (rx + ry));
    }
    return sup;
  };
  double s1 = sup_ratio(800, 1);
  double s2 = sup_ratio(3200, 2);
  REQUIRE(std::isfinite(s2));
  REQUIRE(s2 < 4.0);             // finite, modest constant
  REQUIRE(s2 <= 1.25 * std::max(s1, 1.0));  // stable as samples grow
}

TEST_CASE("exponent budget") {
  SECTION("isotropic budget") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    auto b = exponent_budget(ctx, 2.0, 2000);
    REQUIRE(b.alpha1 == Catch::Approx(1.0 / 1.01));
    REQUIRE(b.alpha2 == Catch::Approx(1.0 / 0.99));
    REQUIRE(std::abs(b.epsilon0 - 0.25) < 0.01);
    // r(x) = |x|/sqrt(2) exactly: both constants straddle 1/sqrt(2)
    REQUIRE(b.c1 < std::pow(2.0, -0.5));
    REQUIRE(b.c2 > std::pow(2.0, -0.5));
  }
  SECTION("diag(1,2): fast direction governs growth") {
    Matrix P = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto ctx = build_context(P);
    auto b = exponent_budget(ctx, 2.0, 4000);
    REQUIRE(b.alpha1 == Catch::Approx(1.0 / 2.01));
    REQUIRE(b.alpha2 == Catch::Approx(1.0 / 0.99));
    REQUIRE(b.d == Catch::Approx(b.b1 / b.alpha1));
    // axis sweep: along e2 the norm grows like |x|^{1/2}
    Vector e2(2);
    e2 << 0.0, 1.0;
    double r1 = quasi_norm(ctx, 100.0 * e2);
    double r2 = quasi_norm(ctx, 10000.0 * e2);
    REQUIRE(r2 / r1 == Catch::Approx(10.0).epsilon(1e-6));
  }
  SECTION("bad q' rejected") {
    auto ctx = build_context(Matrix::Identity(2, 2));
    REQUIRE_THROWS_AS(exponent_budget(ctx, 1.0, 100), std::domain_error);
  }
}
