#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pdwave/linalg.hpp"
#include "pdwave/quadrature.hpp"

using namespace pdwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix b = random_symmetric(rng, n);
  Matrix a = b * b.transpose() + 0.5 * Matrix::Identity(n, n);
  return 0.5 * (a + a.transpose());
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("sinc and its companion", "[linalg]") {
  CHECK(sinc(0.0) == 1.0);
  for (double x : {1e-6, 5e-5, 1e-3, 0.5, 3.0}) CHECK_THAT(sinc(x), WithinRel(std::sin(x) / x, 1e-14));
  CHECK_THAT(sinc(9.99e-5), WithinRel(sinc(1.001e-4), 1e-8));
  for (double x : {1e-5, 5e-4, 2e-3, 1.0, 4.0}) {
    CHECK_THAT(one_minus_cos_over_sq(x), WithinRel((1.0 - std::cos(x)) / (x * x), x < 1e-2 ? 1e-6 : 1e-13));
  }
  CHECK(one_minus_cos_over_sq(0.0) == 0.5);
}

TEST_CASE("eigendecomposition of small matrices", "[linalg]") {
  for (auto method : {EigenMethod::Jacobi, EigenMethod::TridiagonalQR}) {
    const auto id = eig_symmetric(Matrix::Identity(3, 3), method);
    CHECK(id.eigenvalues.isApprox(Vector::Ones(3)));

    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 9.0, 1.0, 4.0;
    const auto e = eig_symmetric(d, method);
    CHECK_THAT(e.eigenvalues[0], WithinAbs(1.0, 1e-14));
    CHECK_THAT(e.eigenvalues[1], WithinAbs(4.0, 1e-14));
    CHECK_THAT(e.eigenvalues[2], WithinAbs(9.0, 1e-14));
    // axis vectors up to sign: e_1, e_2, e_0
    CHECK_THAT(std::abs(e.eigenvectors(1, 0)), WithinAbs(1.0, 1e-14));
    CHECK_THAT(std::abs(e.eigenvectors(2, 1)), WithinAbs(1.0, 1e-14));
    CHECK_THAT(std::abs(e.eigenvectors(0, 2)), WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("eigendecomposition invariants on random matrices", "[linalg][property]") {
  std::mt19937_64 rng(3);
  for (Eigen::Index n : {1, 2, 7, 20, 60}) {
    const Matrix a = random_symmetric(rng, n);
    const auto jac = eig_symmetric(a, EigenMethod::Jacobi);
    const auto qr = eig_symmetric(a, EigenMethod::TridiagonalQR);
    for (const auto* e : {&jac, &qr}) {
      CHECK(max_abs(e->eigenvectors.transpose() * e->eigenvectors - Matrix::Identity(n, n)) <= 1e-10);
      CHECK(max_abs(e->reconstruct() - a) <= 1e-10 * max_abs(a));
      for (Eigen::Index i = 1; i < n; ++i) CHECK(e->eigenvalues[i] >= e->eigenvalues[i - 1]);
    }
    // The two routes are independent; their spectra must agree.
    CHECK(max_abs(jac.eigenvalues - qr.eigenvalues) <= 1e-11 * std::max(1.0, max_abs(a)));
  }
}

TEST_CASE("non-symmetric input is rejected", "[linalg]") {
  Matrix a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(eig_symmetric(a), std::invalid_argument);
  CHECK_THROWS_AS(eig_symmetric(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("SPD square root", "[linalg]") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4.0, 9.0;
  const Matrix r = matrix_sqrt_spd(eig_symmetric(d));
  CHECK_THAT(r(0, 0), WithinAbs(2.0, 1e-14));
  CHECK_THAT(r(1, 1), WithinAbs(3.0, 1e-14));
  CHECK_THAT(r(0, 1), WithinAbs(0.0, 1e-14));

  Matrix s(1, 1);
  s << 4.0;
  CHECK_THAT(matrix_sqrt_spd(eig_symmetric(s))(0, 0), WithinAbs(2.0, 1e-15));

  SECTION("regularized stiffness operator") {
    const Material m;
    const Grid g = build_midpoint_grid(60, 0.1);
    const auto op = regularize(assemble_stiffness(g, MicromodulusModel::gaussian(m), m), 2.4);
    const Matrix w = matrix_sqrt_spd(eig_symmetric(op.omega2));
    CHECK(max_abs(w * w - op.omega2) <= 1e-9 * max_abs(op.omega2));
    CHECK(max_abs(w - w.transpose()) == 0.0);
  }
  SECTION("singular input asks for regularization") {
    const Material m;
    const Grid g = build_midpoint_grid(10, 0.5);
    const auto op = assemble_stiffness(g, MicromodulusModel::gaussian(m), m);
    Matrix z = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(matrix_sqrt_spd(eig_symmetric(z)), std::domain_error);
    auto e = eig_symmetric(op.omega2);
    e.eigenvalues[0] = 0.0;
    CHECK_THROWS_WITH(matrix_sqrt_spd(e), Catch::Matchers::ContainsSubstring("regularize"));
  }
}

TEST_CASE("trigonometric cache", "[linalg]") {
  SECTION("zero eigenvalue") {
    const auto c = build_trig_cache(eig_symmetric(Matrix::Zero(1, 1)), 0.3);
    CHECK(c.cos_tau_omega(0, 0) == 1.0);
    CHECK_THAT(c.tau_sinc_tau_omega(0, 0), WithinAbs(0.3, 1e-16));
    CHECK(c.omega_sin_tau_omega(0, 0) == 0.0);
  }
  SECTION("tau omega = pi") {
    const double tau = 0.2;
    Matrix a(1, 1);
    a << std::numbers::pi * std::numbers::pi / (tau * tau);
    TrigCacheOptions opt;
    opt.midpoint_forcing = true;
    const auto c = build_trig_cache(eig_symmetric(a), tau, opt);
    CHECK_THAT(c.cos_tau_omega(0, 0), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(c.omega_sin_tau_omega(0, 0), WithinAbs(0.0, 1e-13));
    CHECK_THAT(c.cos_half(0, 0), WithinAbs(0.0, 1e-15));
  }
  SECTION("random 2x2 against an independent decomposition") {
    std::mt19937_64 rng(5);
    const Matrix a = random_spd(rng, 2);
    const double tau = 0.37;
    TrigCacheOptions opt;
    opt.square_root = opt.midpoint_forcing = opt.gauss_forcing = opt.exact_constant_forcing = true;
    const auto c = build_trig_cache(eig_symmetric(a, EigenMethod::Jacobi), tau, opt);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    auto f = [&](auto fn) {
      Vector d(2);
      for (int i = 0; i < 2; ++i) d[i] = fn(std::sqrt(es.eigenvalues()[i]));
      return Matrix(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose());
    };
    CHECK(max_abs(c.cos_tau_omega - f([&](double w) { return std::cos(tau * w); })) <= 1e-11);
    CHECK(max_abs(c.tau_sinc_tau_omega - f([&](double w) { return std::sin(tau * w) / w; })) <= 1e-11);
    CHECK(max_abs(c.omega_sin_tau_omega - f([&](double w) { return w * std::sin(tau * w); })) <= 1e-11);
    CHECK(max_abs(c.omega - f([](double w) { return w; })) <= 1e-11);
    const double ta = 0.5 * tau * kGaussAlpha;
    CHECK(max_abs(c.cos_alpha - f([&](double w) { return std::cos(ta * w); })) <= 1e-11);
    CHECK(max_abs(c.exact_forcing_u - f([&](double w) { return (1.0 - std::cos(tau * w)) / (w * w); })) <= 1e-11);
  }
  SECTION("spectral identities and commutation") {
    const Material m;
    const Grid g = build_midpoint_grid(80, 0.1);
    const auto op = regularize(assemble_stiffness(g, MicromodulusModel::gaussian(m), m), 2.0);
    const auto eig = eig_symmetric(op.omega2);
    const double tau = 0.1;
    const auto c = build_trig_cache(eig, tau);
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      const double mu = tau * std::sqrt(eig.eigenvalues[i]);
      CHECK_THAT(std::cos(mu) * std::cos(mu) + std::sin(mu) * std::sin(mu), WithinAbs(1.0, 1e-12));
    }
    const double scale = max_abs(op.omega2);
    for (const Matrix* fm : {&c.cos_tau_omega, &c.tau_sinc_tau_omega, &c.omega_sin_tau_omega}) {
      CHECK(max_abs(*fm * op.omega2 - op.omega2 * *fm) <= 1e-9 * scale);
      CHECK(max_abs(*fm - fm->transpose()) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(build_trig_cache(eig_symmetric(Matrix::Identity(2, 2)), 0.0), std::invalid_argument);
}

TEST_CASE("SPD solves", "[linalg]") {
  const Vector r = solve_spd(Matrix::Identity(3, 3), Vector::LinSpaced(3, 1.0, 3.0));
  CHECK(r == Vector::LinSpaced(3, 1.0, 3.0));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 4.0;
  Vector b(2);
  b << 2.0, 4.0;
  CHECK(solve_spd(d, b).isApprox(Vector::Ones(2), 1e-15));

  std::mt19937_64 rng(9);
  const Matrix a = random_spd(rng, 30);
  std::normal_distribution<double> g;
  Vector rhs(30);
  for (auto& v : rhs) v = g(rng);
  const Vector x = solve_spd(a, rhs);
  CHECK((a * x - rhs).cwiseAbs().maxCoeff() <=
        1e-10 * (max_abs(a) * x.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff()));

  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(solve_spd(indefinite, b), std::domain_error);
}
