#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aniso/spectral.hpp"
#include "oracles.hpp"

using namespace aniso;

namespace {

Matrix random_shifted_matrix(Rng& rng, int n, double min_real = 0.25) {
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = uni(rng);
  Eigen::ComplexEigenSolver<CMatrix> es(A.cast<Complex>());
  double lo = es.eigenvalues().real().minCoeff();
  if (lo < min_real) A += (min_real - lo) * Matrix::Identity(n, n);
  return A;
}

double rel_err(const CMatrix& got, const CMatrix& want) {
  return operator_norm(CMatrix(got - want)) /
         std::max(1.0, operator_norm(want));
}

}  // namespace

TEST_CASE("minimal polynomial of fixed matrices") {
  SECTION("identity: phi(t) = t - 1") {
    Matrix A = Matrix::Identity(2, 2);
    auto mp = minimal_polynomial(A, 1e-6);
    REQUIRE(mp.count() == 1);
    REQUIRE(mp.degree == 1);
    REQUIRE(mp.clusters[0].block == 1);
    REQUIRE(std::abs(mp.clusters[0].gamma - Complex(1.0)) < 1e-12);
  }
  SECTION("Jordan block: phi(t) = (t-1)^2, checked against (A-E) powers") {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    // independent check of the Jordan structure itself
    Matrix shifted = A - Matrix::Identity(2, 2);
    REQUIRE(shifted.norm() > 0.5);
    REQUIRE((shifted * shifted).norm() == 0.0);
    auto mp = minimal_polynomial(A, 1e-6);
    REQUIRE(mp.count() == 1);
    REQUIRE(mp.clusters[0].block == 2);
    REQUIRE(mp.degree == 2);
  }
  SECTION("diag(1,2): phi(t) = (t-1)(t-2)") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto mp = minimal_polynomial(A, 1e-6);
    REQUIRE(mp.count() == 2);
    REQUIRE(mp.degree == 2);
    REQUIRE(mp.clusters[0].block == 1);
    REQUIRE(mp.clusters[1].block == 1);
  }
  SECTION("tol domain and colliding clusters") {
    Matrix A = Matrix::Identity(2, 2);
    REQUIRE_THROWS_AS(minimal_polynomial(A, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(minimal_polynomial(A, 1e-3), std::domain_error);
    Matrix B = Matrix::Zero(2, 2);
    B(0, 0) = 1.0;
    B(1, 1) = 1.0 + 5e-6;  // separate clusters, but within 10*tol
    REQUIRE_THROWS_AS(minimal_polynomial(B, 1e-6), AmbiguityError);
  }
}

TEST_CASE("spectral projections of fixed matrices") {
  SECTION("diag(1,2): coordinate projections") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    CMatrix P1 = CMatrix::Zero(2, 2), P2 = CMatrix::Zero(2, 2);
    P1(0, 0) = 1.0;
    P2(1, 1) = 1.0;
    REQUIRE(rel_err(sd.projections[0], P1) < 1e-12);
    REQUIRE(rel_err(sd.projections[1], P2) < 1e-12);
  }
  SECTION("identity: single projection equal to E") {
    Matrix A = Matrix::Identity(2, 2);
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    REQUIRE(sd.projections.size() == 1);
    REQUIRE(rel_err(sd.projections[0], CMatrix::Identity(2, 2)) < 1e-12);
  }
  SECTION("Jordan block: P1 = E with nilpotent (A-E)P1") {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    REQUIRE(sd.projections.size() == 1);
    REQUIRE(rel_err(sd.projections[0], CMatrix::Identity(2, 2)) < 1e-10);
    CMatrix nil = CMatrix::Zero(2, 2);
    nil(0, 1) = 1.0;
    REQUIRE(rel_err(sd.nilpotent[0][1], nil) < 1e-10);
  }
}

TEST_CASE("dilation closed forms") {
  SECTION("identity gives t E") {
    Matrix A = Matrix::Identity(2, 2);
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    REQUIRE(rel_err(dilation(sd, 3.5), 3.5 * CMatrix::Identity(2, 2)) <
            1e-14);
    REQUIRE(rel_err(dilation(sd, 1.0), CMatrix::Identity(2, 2)) < 1e-14);
  }
  SECTION("diag(1,2) at t=3 gives diag(3,9)") {
    Matrix A = Vector::LinSpaced(2, 1.0, 2.0).asDiagonal();
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    CMatrix want = CMatrix::Zero(2, 2);
    want(0, 0) = 3.0;
    want(1, 1) = 9.0;
    REQUIRE(rel_err(dilation(sd, 3.0), want) < 1e-13);
  }
  SECTION("Jordan block gives t [[1, log t],[0,1]] and matches expm") {
    Matrix A(2, 2);
    A << 1, 1, 0, 1;
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    for (double t : {0.3, 1.0, 2.0, 7.5}) {
      CMatrix want(2, 2);
      want << t, t * std::log(t), 0.0, t;
      REQUIRE(rel_err(dilation(sd, t), want) < 1e-13);
      REQUIRE(rel_err(dilation(sd, t),
                      oracle::dilation_expm(A, t).cast<Complex>()) < 1e-12);
    }
  }
  SECTION("t <= 0 rejected") {
    Matrix A = Matrix::Identity(2, 2);
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    REQUIRE_THROWS_AS(dilation(sd, 0.0), std::domain_error);
    REQUIRE_THROWS_AS(dilation(sd, -1.0), std::domain_error);
  }
}

TEST_CASE("group law, oracle equivalence and determinant on random matrices") {
  Rng rng(20240915);
  std::uniform_real_distribution<double> tdist(0.1, 10.0);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);
    Matrix A = random_shifted_matrix(rng, n);
    auto sd = spectral_projections(A, minimal_polynomial(A, 1e-6));
    REQUIRE(sd.max_residual() < 1e-9);

    double t = tdist(rng), u = tdist(rng);
    CMatrix Dt = dilation(sd, t), Du = dilation(sd, u),
            Dtu = dilation(sd, t * u);
    REQUIRE(operator_norm(CMatrix(Dt * Du - Dtu)) <=
            1e-8 * operator_norm(Dtu));
    REQUIRE(rel_err(Dt, oracle::dilation_expm(A, t).cast<Complex>()) < 1e-8);

    double det = Dt.determinant().real();
    double want = std::pow(t, A.trace());
    REQUIRE(std::abs(det - want) <= 1e-8 * std::abs(want));
  }
}

TEST_CASE("projection identities with Jordan blocks up to size 3") {
  Rng rng(77001);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // J = diag(J3(g1), J2(g2)) conjugated by a well-conditioned matrix
    double g1 = 0.5 + 0.5 * std::abs(uni(rng));
    double g2 = g1 + 1.0 + std::abs(uni(rng));
    Matrix J = Matrix::Zero(5, 5);
    J.block(0, 0, 3, 3) << g1, 1, 0, 0, g1, 1, 0, 0, g1;
    J.block(3, 3, 2, 2) << g2, 1, 0, g2;
    Matrix Q = Matrix::Identity(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) Q(i, j) += 0.2 * uni(rng);
    Matrix A = Q * J * Q.inverse();

    auto mp = minimal_polynomial(A, 1e-4);
    REQUIRE(mp.count() == 2);
    REQUIRE(mp.degree == 5);
    auto sd = spectral_projections(A, mp);
    REQUIRE(sd.max_residual() < 1e-7);
    for (double t : {0.5, 2.0}) {
      REQUIRE(rel_err(dilation(sd, t),
                      oracle::dilation_expm(A, t).cast<Complex>()) < 1e-8);
    }
  }
}

TEST_CASE("complex-pair block round trip") {
  Matrix A(2, 2);
  A << 1, -1, 1, 1;  // eigenvalues 1 +/- i
  auto mp = minimal_polynomial(A, 1e-6);
  REQUIRE(mp.count() == 2);
  REQUIRE(mp.degree == 2);
  auto sd = spectral_projections(A, mp);
  for (double t : {0.25, 1.0, 4.0, 9.0}) {
    Matrix got = dilation_real(sd, t);
    Matrix want = oracle::dilation_expm(A, t);
    REQUIRE((got - want).norm() <= 1e-10 * std::max(1.0, want.norm()));
  }
}
