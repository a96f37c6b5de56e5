#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pdwave/spectral.hpp"

using namespace pdwave;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

ComplexVector random_samples(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  ComplexVector v(n);
  for (auto& z : v) z = {g(rng), g(rng)};
  return v;
}

double max_diff(const ComplexVector& a, const ComplexVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ProblemSpec problem_with(std::function<double(double)> u0, std::function<double(double)> v0) {
  ProblemSpec p;
  p.u0 = std::move(u0);
  p.v0 = std::move(v0);
  return p;
}

}  // namespace

TEST_CASE("nodes and endpoint weights", "[spectral]") {
  const auto x = spectral_nodes(2.0, 4);
  REQUIRE(x.size() == 8);
  CHECK_THAT(x.front(), WithinRel(-2.0 * pi, 1e-15));
  CHECK(x[4] == 0.0);
  CHECK_THAT(x.back(), WithinRel(1.5 * pi, 1e-15));
  CHECK(endpoint_weight(4, 4) == 2.0);
  CHECK(endpoint_weight(-4, 4) == 2.0);
  CHECK(endpoint_weight(3, 4) == 1.0);
}

TEST_CASE("DFT of single modes", "[spectral]") {
  const std::size_t N = 8;
  const double M = 1.5;
  const auto x = spectral_nodes(M, N);
  for (auto route : {DftRoute::Direct, DftRoute::Fast}) {
    for (long k0 : {0L, 1L, -3L, 7L}) {
      ComplexVector u(2 * N);
      for (std::size_t j = 0; j < 2 * N; ++j) u[j] = std::polar(1.0, static_cast<double>(k0) * x[j] / M);
      const auto c = dft_forward(u, N, route);
      for (long k = -8; k <= 8; ++k) {
        CHECK(std::abs(c[static_cast<std::size_t>(k + 8)] - Complex(k == k0 ? 1.0 : 0.0)) <= 1e-14);
      }
    }
    // The Nyquist samples (-1)^j split evenly between k = -N and k = N.
    ComplexVector alt(2 * N);
    for (std::size_t j = 0; j < 2 * N; ++j) alt[j] = (j % 2 == 0) ? 1.0 : -1.0;
    const auto c = dft_forward(alt, N, route);
    CHECK(std::abs(c.front() - 0.5) <= 1e-14);
    CHECK(std::abs(c.back() - 0.5) <= 1e-14);
    CHECK(max_diff(dft_inverse(c, N, route), alt) <= 1e-14);
  }
  CHECK_THROWS_AS(dft_forward(ComplexVector(5), 3), std::invalid_argument);
  CHECK_THROWS_AS(dft_inverse(ComplexVector(6), 3), std::invalid_argument);
  CHECK_THROWS_AS(dft_forward(ComplexVector{}, 0), std::invalid_argument);
}

TEST_CASE("DFT roundtrip and route agreement", "[spectral][property]") {
  std::mt19937_64 rng(12);
  for (std::size_t N : {1U, 2U, 5U, 8U, 13U, 64U, 100U}) {
    const auto u = random_samples(rng, 2 * N);
    const auto direct = dft_forward(u, N, DftRoute::Direct);
    const auto fast = dft_forward(u, N, DftRoute::Fast);
    CHECK(max_diff(direct, fast) <= 1e-11);
    CHECK(max_diff(dft_inverse(direct, N, DftRoute::Direct), u) <= 1e-11);
    CHECK(max_diff(dft_inverse(fast, N, DftRoute::Fast), u) <= 1e-11);
    CHECK(max_diff(dft_inverse(direct, N, DftRoute::Fast), dft_inverse(direct, N, DftRoute::Direct)) <= 1e-11);
  }
}

TEST_CASE("dispersion relation", "[spectral]") {
  const Material m;
  const auto C = MicromodulusModel::gaussian(m);
  CHECK(frequency_omega(C, 0.0) == 0.0);
  CHECK_THAT(frequency_omega(C, 1e3), WithinRel(4.0, 1e-15));
  CHECK_THAT(frequency_omega(C, 2.0), WithinRel(4.0 * (1.0 - std::exp(-1.0)), 1e-14));
  // Long waves: omega^2 ~ E kappa^2.
  CHECK_THAT(frequency_omega(C, 1e-4) / 1e-8, WithinRel(1.0, 1e-7));
  for (double kappa : {0.3, 1.0, 5.0}) {
    CHECK_THAT(frequency_omega_quadrature(C, kappa), WithinRel(frequency_omega(C, kappa), 1e-9));
  }
  const Material stiff{1.0, 7.0, 0.6, 1.0};
  CHECK_THAT(frequency_omega_quadrature(MicromodulusModel::gaussian(stiff), 2.5),
             WithinRel(frequency_omega(MicromodulusModel::gaussian(stiff), 2.5), 1e-9));

  SECTION("constant kernel on a finite horizon") {
    // 2 int_0^d (1 - cos k x) dx = 2 (d - sin(k d)/k).
    const double d = 0.8;
    const auto box = MicromodulusModel::finite([](double) { return 1.0; }, d);
    for (double kappa : {0.5, 3.0, 40.0}) {
      CHECK_THAT(frequency_omega(box, kappa), WithinRel(2.0 * (d - std::sin(kappa * d) / kappa), 1e-9));
    }
  }
}

TEST_CASE("single-mode evolution", "[spectral]") {
  CHECK(std::abs(evolve_mode(1.0, 0.0, 4.0, 1.0, 0.0) - 1.0) == 0.0);
  CHECK(std::abs(evolve_mode(1.0, 0.0, 4.0, 1.0, 0.3) - std::cos(0.6)) <= 1e-15);
  CHECK(std::abs(evolve_mode(0.0, 1.0, 4.0, 1.0, 0.3) - std::sin(0.6) / 2.0) <= 1e-15);
  CHECK(std::abs(evolve_mode(0.0, 1.0, 8.0, 2.0, 0.3) - std::sin(0.6) / 2.0) <= 1e-15);
  CHECK(std::abs(evolve_mode({1.0, 2.0}, {0.5, -1.0}, 0.0, 1.0, 2.0) - Complex(2.0, 0.0)) <= 1e-15);
  CHECK_THROWS_AS(evolve_mode(1.0, 0.0, 1.0, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(evolve_mode(1.0, 0.0, 1.0, 1.0, 1.0, [](double) { return Complex(1.0); }, 0.0),
                  std::invalid_argument);

  SECTION("forced modes converge at second order") {
    // u'' + 4u = sin t, u(0) = u'(0) = 0: u = (2 sin t - sin 2t)/6.
    const double t = 3.0;
    const double exact = (2.0 * std::sin(t) - std::sin(2.0 * t)) / 6.0;
    auto err = [&](double tau) {
      return std::abs(evolve_mode(0.0, 0.0, 4.0, 1.0, t, [](double s) { return Complex(std::sin(s)); }, tau) - exact);
    };
    CHECK_THAT(std::log2(err(0.025) / err(0.0125)), WithinAbs(2.0, 0.1));
    CHECK_THAT(std::log2(err(0.05) / err(0.025)), WithinAbs(2.0, 0.1));
  }
}

TEST_CASE("spectral model", "[spectral]") {
  const Material m;
  const auto s = build_spectral_model(MicromodulusModel::gaussian(m), m, 2.0, 16);
  CHECK(s.nodes.size() == 32);
  CHECK(s.omega2.size() == 33);
  CHECK(s.omega2[16] == 0.0);
  CHECK(s.omega2[16 + 5] == s.omega2[16 - 5]);
  CHECK_THAT(s.omega2[16 + 5], WithinRel(frequency_omega(MicromodulusModel::gaussian(m), 2.5), 1e-15));
  CHECK_THAT(s.h(), WithinRel(pi / 8.0, 1e-15));
  CHECK_THROWS_AS(build_spectral_model(MicromodulusModel::gaussian(m), m, 0.0, 16), std::invalid_argument);
}

TEST_CASE("spectral solution", "[spectral]") {
  const double M = 4.0;
  const std::size_t N = 64;
  auto pulse = gaussian_pulse_problem(Material{}, 2.0);

  SECTION("t = 0 reproduces the samples") {
    const auto sol = spectral_solve(pulse, M, N, {0.0});
    for (std::size_t j = 0; j < sol.x.size(); ++j) CHECK_THAT(sol.u[0][j], WithinAbs(pulse.u0(sol.x[j]), 1e-14));
  }
  SECTION("a periodic mode oscillates at its own frequency") {
    const double k0 = 3.0;
    const auto p = problem_with([&](double x) { return std::cos(k0 * x / M); }, [](double) { return 0.0; });
    const double w = std::sqrt(frequency_omega(MicromodulusModel::gaussian(Material{}), k0 / M));
    const auto sol = spectral_solve(p, M, N, {0.7, 5.0});
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < sol.x.size(); ++j) {
        CHECK_THAT(sol.u[i][j], WithinAbs(std::cos(k0 * sol.x[j] / M) * std::cos(w * sol.times[i]), 1e-13));
      }
    }
  }
  SECTION("real data stays real") {
    const auto sol = spectral_solve(pulse, M, N, {0.5, 1.0, 2.0});
    for (double r : sol.max_imag_ratio) CHECK(r <= 1e-12);
    CHECK(sol.warnings.empty());
  }
  SECTION("linearity") {
    auto f = [](double x) { return std::exp(-x * x) * std::sin(x); };
    auto g = [](double x) { return std::exp(-2.0 * (x - 1.0) * (x - 1.0)); };
    const auto a = spectral_solve(problem_with(f, g), M, N, {1.3});
    const auto b = spectral_solve(problem_with(g, f), M, N, {1.3});
    const auto ab = spectral_solve(
        problem_with([&](double x) { return 2.0 * f(x) - g(x); }, [&](double x) { return 2.0 * g(x) - f(x); }), M,
        N, {1.3});
    for (std::size_t j = 0; j < ab.x.size(); ++j) {
      CHECK_THAT(ab.u[0][j], WithinAbs(2.0 * a.u[0][j] - b.u[0][j], 1e-13));
    }
  }
  SECTION("a pulse reaching the boundary is reported") {
    auto wide = gaussian_pulse_problem(Material{1.0, 1.0, 1.0, 5.0}, 1.0);
    const auto sol = spectral_solve(wide, 1.0, 32, {0.0, 1.0});
    REQUIRE(sol.warnings.size() == 2);
    CHECK_THAT(sol.warnings[0], ContainsSubstring("wrap-around"));
  }
  SECTION("constant forcing drives every node alike") {
    // u'' = b with b = 1 and zero data: u = t^2/2 everywhere, the k = 0 mode only.
    auto p = problem_with([](double) { return 0.0; }, [](double) { return 0.0; });
    p.b = [](double, double) { return 1.0; };
    SpectralOptions opt;
    opt.boundary_warn_ratio = 2.0;
    const auto sol = spectral_solve(p, M, 16, {1.5}, opt);
    for (double u : sol.u[0]) CHECK_THAT(u, WithinAbs(1.125, 1e-13));
  }
  CHECK_THROWS_AS(spectral_solve(pulse, M, N, {-1.0}), std::invalid_argument);
  ProblemSpec nonlinear = pulse;
  nonlinear.interaction = ForceModel{BondStretch{1.0, 1.0}};
  CHECK_THROWS_AS(spectral_solve(nonlinear, M, N, {1.0}), std::invalid_argument);
}

TEST_CASE("spectral error measures", "[spectral]") {
  const std::vector<double> x{-2.0, -1.0, 0.0, 1.0, 2.0};
  const std::vector<double> u{5.0, 1.0, 2.0, -1.0, 5.0};
  const std::vector<double> r{0.0, 1.0, 1.5, -1.0, 0.0};
  const auto e = spectral_errors(x, u, r, -1.0, 1.0);
  CHECK(e.points == 3);
  CHECK_THAT(e.linf_relative, WithinRel(0.25, 1e-15));
  CHECK_THAT(e.l2_relative, WithinRel(0.25 / 6.0, 1e-15));
  CHECK_THROWS_AS(spectral_errors(x, u, {1.0}, -1.0, 1.0), std::invalid_argument);
}
