#include "catch_amalgamated.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

#include "pdwave/integrators.hpp"
#include "pdwave/reference.hpp"

using namespace pdwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Matrix s = a * a.transpose() / static_cast<double>(n) + 0.2 * Matrix::Identity(n, n);
  return scale * 0.5 * (s + s.transpose());
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

IntegratorState run(const LinearIntegrator& integ, IntegratorState s, std::size_t steps) {
  for (std::size_t k = 0; k < steps; ++k) s = integ.step(s);
  return s;
}

/// U(t) = cos(t Omega) U0 + t sinc(t Omega) V0 + Omega^-2 (I - cos(t Omega)) B.
Vector variation_of_constants(const Matrix& omega2, const Vector& U0, const Vector& V0, const Vector& B, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(omega2);
  const Matrix& Q = es.eigenvectors();
  const Eigen::Index n = omega2.rows();
  Vector a(n), b(n), f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::sqrt(es.eigenvalues()[i]);
    a[i] = std::cos(t * w);
    b[i] = std::sin(t * w) / w;
    f[i] = (1.0 - std::cos(t * w)) / (w * w);
  }
  return Q * (a.asDiagonal() * (Q.transpose() * U0) + b.asDiagonal() * (Q.transpose() * V0) +
              f.asDiagonal() * (Q.transpose() * B));
}

}  // namespace

TEST_CASE("time grid", "[integrators]") {
  const TimeGrid g(0.1, 3.0);
  CHECK(g.steps == 30);
  CHECK_THAT(g.time(7), WithinRel(0.7, 1e-15));
  CHECK(TimeGrid(0.025, 3.0).steps == 120);
  CHECK(TimeGrid(0.4, 1.0).steps == 2);
  CHECK_THROWS_AS(TimeGrid(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("Stormer-Verlet", "[integrators]") {
  SECTION("free flight") {
    const IntegratorState s{0, vec({1.0, -2.0}), vec({0.5, 3.0})};
    const auto out = step_stormer_verlet(s, Matrix::Zero(2, 2), Forcing::none(), 0.2);
    CHECK(out.U.isApprox(vec({1.1, -1.4})));
    CHECK(out.V == s.V);
    CHECK(out.n == 1);
  }
  SECTION("hand-executed scalar step") {
    const auto out = step_stormer_verlet({0, vec({1.0}), vec({0.0})}, scalar(1.0), Forcing::none(), 0.1);
    CHECK_THAT(out.U[0], WithinAbs(0.995, 1e-15));
    CHECK_THAT(out.V[0], WithinAbs(-0.09975, 1e-15));
  }
  SECTION("two-step form") {
    std::mt19937_64 rng(1);
    const Matrix w2 = random_spd(rng, 6);
    const double tau = 0.05;
    IntegratorState s0{0, random_vector(rng, 6), random_vector(rng, 6)};
    const auto s1 = step_stormer_verlet(s0, w2, Forcing::none(), tau);
    const auto s2 = step_stormer_verlet(s1, w2, Forcing::none(), tau);
    const Vector lhs = (s2.U - 2.0 * s1.U + s0.U) / (tau * tau);
    CHECK((lhs + w2 * s1.U).cwiseAbs().maxCoeff() <= 1e-11);
  }
  CHECK_THROWS_AS(step_stormer_verlet({0, vec({1.0}), vec({0.0})}, Matrix::Zero(2, 2), Forcing::none(), 0.1),
                  std::invalid_argument);
}

TEST_CASE("implicit midpoint", "[integrators]") {
  SECTION("free flight") {
    const IntegratorState s{0, vec({1.0, -2.0}), vec({0.5, 3.0})};
    const auto out = step_implicit_midpoint(s, Matrix::Zero(2, 2), Forcing::none(), 0.2);
    CHECK(out.U.isApprox(vec({1.1, -1.4})));
    CHECK(out.V.isApprox(s.V));
  }
  SECTION("unconditional stability at tau = 2") {
    CHECK_THAT(spectral_radius(amplification_matrix(TimeMethod::ImplicitMidpoint, 2.0, 1.0)), WithinAbs(1.0, 1e-14));
    const auto out = step_implicit_midpoint({0, vec({1.0}), vec({0.0})}, scalar(1.0), Forcing::none(), 2.0);
    CHECK_THAT(out.U[0] * out.U[0] + out.V[0] * out.V[0], WithinAbs(1.0, 1e-14));
  }
  SECTION("defining relations with forcing") {
    std::mt19937_64 rng(2);
    const Matrix w2 = random_spd(rng, 5, 3.0);
    const Vector b = random_vector(rng, 5);
    const Forcing B = Forcing::time_dependent([b](double t) { return Vector(std::cos(t) * b); });
    const double tau = 0.3;
    const IntegratorState s{4, random_vector(rng, 5), random_vector(rng, 5)};
    const auto o = step_implicit_midpoint(s, w2, B, tau);
    const double t = 4 * tau;
    const Vector r1 = o.U - s.U - 0.5 * tau * (o.V + s.V);
    const Vector r2 = o.V - s.V - 0.5 * tau * (-(w2 * (o.U + s.U)) + B(t, 5) + B(t + tau, 5));
    CHECK(r1.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(r2.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("trigonometric schemes", "[integrators]") {
  SECTION("exact oscillator") {
    for (double tau : {0.1, 0.7, 3.0}) {
      const LinearIntegrator integ(TimeMethod::Trig2, scalar(1.0), Forcing::none(), tau);
      const auto one = integ.step({0, vec({1.0}), vec({0.0})});
      CHECK_THAT(one.U[0], WithinAbs(std::cos(tau), 1e-15));
      CHECK_THAT(one.V[0], WithinAbs(-std::sin(tau), 1e-15));
      const auto many = run(integ, {0, vec({1.0}), vec({0.0})}, 40);
      CHECK_THAT(many.U[0], WithinAbs(std::cos(40 * tau), 1e-12));
    }
  }
  SECTION("constant forcing matches variation of constants") {
    std::mt19937_64 rng(4);
    for (Eigen::Index n : {1, 4, 12}) {
      const Matrix w2 = random_spd(rng, n, 5.0);
      const Vector U0 = random_vector(rng, n), V0 = random_vector(rng, n), b = random_vector(rng, n);
      const double tau = 0.07;
      const Vector exact = variation_of_constants(w2, U0, V0, b, 50 * tau);
      for (auto m : {TimeMethod::Trig2, TimeMethod::Trig4}) {
        const LinearIntegrator integ(m, w2, Forcing::constant(b), tau);
        CHECK((run(integ, {0, U0, V0}, 50).U - exact).cwiseAbs().maxCoeff() <= 1e-9);
      }
    }
    const LinearIntegrator scalar4(TimeMethod::Trig4, scalar(1.0), Forcing::constant(vec({1.0})), 0.25);
    const auto s = run(scalar4, {0, vec({0.3}), vec({-0.2})}, 12);
    CHECK_THAT(s.U[0], WithinAbs(0.3 * std::cos(3.0) - 0.2 * std::sin(3.0) + 1.0 - std::cos(3.0), 1e-10));
  }
  SECTION("tiny shift is near free flight") {
    const double shift = 1e-8, tau = 0.1;
    const auto out = LinearIntegrator(TimeMethod::Trig2, scalar(shift), Forcing::none(), tau)
                         .step({0, vec({1.0}), vec({2.0})});
    CHECK_THAT(out.U[0], WithinAbs(1.0 + tau * 2.0, 2.0 * tau * shift));
    CHECK_THAT(out.V[0], WithinAbs(2.0, 2.0 * tau * shift));
  }
  SECTION("trig4 equals trig2 without forcing") {
    std::mt19937_64 rng(6);
    const Matrix w2 = random_spd(rng, 8);
    const IntegratorState s{0, random_vector(rng, 8), random_vector(rng, 8)};
    const auto a = run(LinearIntegrator(TimeMethod::Trig2, w2, Forcing::none(), 0.2), s, 10);
    const auto b = run(LinearIntegrator(TimeMethod::Trig4, w2, Forcing::none(), 0.2), s, 10);
    CHECK((a.U - b.U).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((a.V - b.V).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SECTION("cache built for another step is rejected") {
    const auto cache = build_trig_cache(eig_symmetric(scalar(1.0)), 0.1);
    CHECK_THROWS(step_trig2({0, vec({1.0}), vec({0.0})}, cache, Forcing::none(), 0.2));
  }
}

TEST_CASE("self-convergence with time-dependent forcing", "[integrators][property]") {
  std::mt19937_64 rng(8);
  const Matrix w2 = random_spd(rng, 4, 4.0);
  const Vector b = random_vector(rng, 4);
  const Forcing B = Forcing::time_dependent([b](double t) { return Vector(std::sin(2.0 * t) * b + t * b); });
  const IntegratorState s0{0, random_vector(rng, 4), random_vector(rng, 4)};
  const double T = 2.0;
  const auto reference = run(LinearIntegrator(TimeMethod::Trig4, w2, B, T / 4000), s0, 4000).U;

  auto order = [&](TimeMethod m, double tau) {
    const auto e1 = (run(LinearIntegrator(m, w2, B, tau), s0, std::lround(T / tau)).U - reference)
                        .cwiseAbs()
                        .maxCoeff();
    const auto e2 = (run(LinearIntegrator(m, w2, B, tau / 2), s0, std::lround(2 * T / tau)).U - reference)
                        .cwiseAbs()
                        .maxCoeff();
    return std::log2(e1 / e2);
  };
  CHECK_THAT(order(TimeMethod::StormerVerlet, 0.05), WithinAbs(2.0, 0.1));
  CHECK_THAT(order(TimeMethod::ImplicitMidpoint, 0.05), WithinAbs(2.0, 0.1));
  CHECK_THAT(order(TimeMethod::Trig2, 0.05), WithinAbs(2.0, 0.1));
  CHECK_THAT(order(TimeMethod::Trig4, 0.2), WithinAbs(4.0, 0.15));
}

TEST_CASE("trig4 is fourth order on a resonance-free scalar problem", "[integrators]") {
  const double T = 4.0;
  const Forcing Bs = Forcing::time_dependent([](double t) { return Vector::Constant(1, std::sin(3.0 * t)); });
  // u'' + u = sin 3t, u(0) = u'(0) = 0: u = (3 sin t - sin 3t)/8.
  auto err_s = [&](double tau) {
    const auto s = run(LinearIntegrator(TimeMethod::Trig4, scalar(1.0), Bs, tau), {0, vec({0.0}), vec({0.0})},
                       std::lround(T / tau));
    return std::abs(s.U[0] - (3.0 * std::sin(T) - std::sin(3.0 * T)) / 8.0);
  };
  CHECK_THAT(std::log2(err_s(0.2) / err_s(0.1)), WithinAbs(4.0, 0.15));
  CHECK_THAT(std::log2(err_s(0.1) / err_s(0.05)), WithinAbs(4.0, 0.15));
}

TEST_CASE("amplification matrices", "[integrators][property]") {
  for (int i = 0; i <= 99; ++i) {
    const double x = 0.1 + 0.1 * i;
    if (std::abs(x - 2.0) < 1e-9) continue;
    const double sv = spectral_radius(amplification_matrix(TimeMethod::StormerVerlet, x, 1.0));
    CHECK((x <= 2.0) == (sv <= 1.0 + 1e-12));
    CHECK_THAT(spectral_radius(amplification_matrix(TimeMethod::ImplicitMidpoint, x, 1.0)), WithinAbs(1.0, 1e-12));
    CHECK_THAT(spectral_radius(amplification_matrix(TimeMethod::Trig2, x, 1.0)), WithinAbs(1.0, 1e-12));
  }
  SECTION("matrices agree with one stepper application") {
    const double tau = 0.3, w = 1.7;
    for (auto m : {TimeMethod::StormerVerlet, TimeMethod::ImplicitMidpoint, TimeMethod::Trig2}) {
      const LinearIntegrator integ(m, scalar(w * w), Forcing::none(), tau);
      const auto e0 = integ.step({0, vec({1.0}), vec({0.0})});
      const auto e1 = integ.step({0, vec({0.0}), vec({1.0})});
      const Eigen::Matrix2d a = amplification_matrix(m, tau, w);
      CHECK_THAT(a(0, 0), WithinAbs(e0.U[0], 1e-14));
      CHECK_THAT(a(1, 0), WithinAbs(e0.V[0], 1e-14));
      CHECK_THAT(a(0, 1), WithinAbs(e1.U[0], 1e-14));
      CHECK_THAT(a(1, 1), WithinAbs(e1.V[0], 1e-14));
    }
  }
}

TEST_CASE("stability bounds", "[integrators]") {
  SECTION("scalar spectral bound") {
    Grid g = build_midpoint_grid(2, 1.0);
    const Material m;
    const auto op = assemble_stiffness(g, MicromodulusModel::gaussian(m), m);
    const auto bound = stability_bounds(g, MicromodulusModel::gaussian(m), m, op.omega2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(op.omega2);
    CHECK_THAT(bound.tau_max_spectral, WithinRel(2.0 / std::sqrt(es.eigenvalues().maxCoeff()), 1e-14));
    const Matrix d = scalar(9.0);
    Grid one = build_midpoint_grid(2, 1.0);
    CHECK_THAT(stability_bounds(one, MicromodulusModel::gaussian(m), m, d).tau_max_spectral,
               WithinRel(2.0 / 3.0, 1e-14));
  }
  SECTION("square-root scaling in E") {
    const Grid g = build_midpoint_grid(100, 0.1);
    const Material m1, m100{1.0, 100.0, 1.0, 1.0};
    const auto b1 = stability_bounds(g, MicromodulusModel::gaussian(m1), m1,
                                     assemble_stiffness(g, MicromodulusModel::gaussian(m1), m1).omega2);
    const auto b100 = stability_bounds(g, MicromodulusModel::gaussian(m100), m100,
                                       assemble_stiffness(g, MicromodulusModel::gaussian(m100), m100).omega2);
    CHECK_THAT(b100.tau_max_spectral / b1.tau_max_spectral, WithinRel(0.1, 1e-10));
    CHECK_THAT(b100.tau_max_von_neumann / b1.tau_max_von_neumann, WithinRel(0.1, 1e-12));
    CHECK(b1.tau_max_von_neumann > 0.0);
    CHECK(b1.k_max > 0.0);
  }
  SECTION("E = 100, h = 0.05") {
    const Material m{1.0, 100.0, 1.0, 1.0};
    const Grid g = build_grid(QuadratureScheme::MidpointRule, 10.0, 0.05);
    const auto op = assemble_stiffness(g, MicromodulusModel::gaussian(m), m);
    const auto b = stability_bounds(g, MicromodulusModel::gaussian(m), m, op.omega2);
    CHECK_FALSE(b.stormer_verlet_stable(0.2));
    CHECK(b.stormer_verlet_stable(0.05));
  }
}

TEST_CASE("energy", "[integrators]") {
  SECTION("zero state") {
    const Trajectory traj(5, IntegratorState{0, Vector::Zero(3), Vector::Zero(3)});
    const auto e = energy_series(traj, Matrix::Identity(3, 3), Forcing::none());
    for (double v : e.total) CHECK(v == 0.0);
    CHECK(e.max_drift() == 0.0);
  }
  SECTION("components add up, constant forcing included") {
    std::mt19937_64 rng(10);
    const Matrix w2 = random_spd(rng, 6);
    const Vector b = random_vector(rng, 6);
    const LinearIntegrator integ(TimeMethod::Trig2, w2, Forcing::constant(b), 0.1);
    const auto traj = integrate_trajectory(integ, {0, random_vector(rng, 6), random_vector(rng, 6)}, 200);
    CHECK(traj.size() == 201);
    const auto e = energy_series(traj, w2, Forcing::constant(b));
    for (std::size_t n = 0; n < e.total.size(); ++n) {
      CHECK(e.total[n] == e.kinetic[n] + e.elastic[n] + e.external[n]);
    }
    // The exact propagator conserves the energy.
    CHECK(e.max_drift() <= 1e-12 * std::abs(e.total[0]) + 1e-13);
  }
  SECTION("time-dependent forcing is rejected") {
    const Trajectory traj(1, IntegratorState{0, Vector::Zero(1), Vector::Zero(1)});
    CHECK_THROWS_AS(energy_series(traj, scalar(1.0), Forcing::time_dependent([](double) { return Vector::Zero(1); })),
                    std::invalid_argument);
  }
  SECTION("symplectic schemes show no secular drift") {
    const Material m;
    const Grid g = build_midpoint_grid(48, 0.25);
    const auto op = assemble_stiffness(g, MicromodulusModel::gaussian(m), m);
    const Vector u0 = sample_function(g, [](double x) { return std::exp(-x * x); });
    for (auto method : {TimeMethod::StormerVerlet, TimeMethod::ImplicitMidpoint}) {
      const LinearIntegrator integ(method, op.omega2, Forcing::none(), 0.2);
      const auto traj = integrate_trajectory(integ, {0, u0, Vector::Zero(u0.size())}, 10000);
      const auto e = energy_series(traj, op.omega2, Forcing::none());
      double early = 0.0;
      for (std::size_t n = 0; n <= 1000; ++n) early = std::max(early, std::abs(e.drift[n]));
      // Implicit midpoint conserves the quadratic energy exactly; only rounding accumulates.
      CHECK(e.max_drift() <= 2.0 * early + 1e-10 * e.total[0]);
    }
  }
}

TEST_CASE("drift magnitude on the energy study grids", "[integrators]") {
  // Gaussian pulse, T = 30, h = tau; drift of order 1e-2 at N = 200 and 1e-3 at N = 400.
  const Material m;
  auto drift = [&](double h, TimeMethod method, std::optional<double> reg) {
    const Grid g = build_grid(QuadratureScheme::MidpointRule, 10.0, h);
    const auto op = assemble_stiffness(g, MicromodulusModel::gaussian(m), m);
    const Matrix used = reg ? regularize(op, *reg).omega2 : op.omega2;
    const LinearIntegrator integ(method, used, Forcing::none(), h);
    const Vector u0 = sample_function(g, [](double x) { return std::exp(-x * x); });
    const auto traj = integrate_trajectory(integ, {0, u0, Vector::Zero(u0.size())}, TimeGrid(h, 30.0).steps);
    return energy_series(traj, op.omega2, Forcing::none()).max_drift();
  };
  for (auto [method, reg] : {std::pair{TimeMethod::StormerVerlet, std::optional<double>{}},
                             std::pair{TimeMethod::Trig2, std::optional<double>{2.4}}}) {
    const double d200 = drift(0.1, method, reg);
    const double d400 = drift(0.05, method, reg);
    CHECK(d200 >= 1e-2);
    CHECK(d200 < 1e-1);
    CHECK(d400 >= 1e-3);
    CHECK(d400 < 1e-2);
  }
}

TEST_CASE("CSV streams", "[integrators]") {
  const Grid g = build_midpoint_grid(2, 1.0);
  Trajectory traj{{0, vec({1.0, 2.0, 3.0}), vec({0.0, 0.0, 0.0})}, {1, vec({1.5, 2.0, 3.0}), vec({0.5, 0.0, -1.0})}};
  std::ostringstream os;
  write_trajectory_csv(os, traj, g, 0.1);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,j,x,U,V");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);
  CHECK(os.str().find("1.0000000000000001e-01,2,1.0000000000000000e+00,3.0000000000000000e+00,-1.0000000000000000e+00") !=
        std::string::npos);

  std::ostringstream es;
  write_energy_csv(es, energy_series(traj, Matrix::Identity(3, 3), Forcing::none()), 0.1);
  CHECK(es.str().rfind("n,t,E_kin,E_el,E_ext,E_total,drift\n", 0) == 0);
}
