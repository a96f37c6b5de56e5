#pragma once

// Acceptance suite: reference-table reproduction and the property checks,
// one verdict per criterion.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pdwave/experiments.hpp"

namespace pdwave::acceptance {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;

  [[nodiscard]] bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline Check within_rel(const std::string& name, double value, double target, double rel) {
  const double err = std::abs(value - target) / std::abs(target);
  return {name, err <= rel, fmt("%.5e", value) + " vs " + fmt("%.5e", target) + " (rel " + fmt("%.3f", err) +
                                ", allowed " + fmt("%.2f", rel) + ")"};
}

inline Check within_abs(const std::string& name, double value, double target, double tol) {
  return {name, std::abs(value - target) <= tol,
          fmt("%.4f", value) + " vs " + fmt("%.2f", target) + " +- " + fmt("%.2f", tol)};
}

inline Check within_factor(const std::string& name, double value, double target, double factor) {
  const bool ok = value > 0.0 && value <= target * factor && value >= target / factor;
  return {name, ok, fmt("%.5e", value) + " vs " + fmt("%.5e", target) + " (ratio " + fmt("%.3f", value / target) +
                        ", factor " + fmt("%.0f", factor) + " allowed)"};
}

inline std::vector<std::size_t> rows_for(const harness::TableArtifact& t, const std::string& method) {
  std::vector<std::size_t> out;
  const auto col = t.column("method");
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (std::get<std::string>(t.rows[i][col]) == method) out.push_back(i);
  return out;
}

inline double order_at(const harness::TableArtifact& t, std::size_t row) {
  const auto& c = t.rows[row][t.column("order")];
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::nan("");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1. Convergence table
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_convergence(unsigned threads = 0) {
  CriterionResult r{1, "convergence ladder (MSV, MT, MMI, GT)", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test1Convergence);
  c.threads = threads;
  const auto res = harness::run_experiment(c);
  const auto& t = res.table;
  const double msv_ref[] = {1.2911e-3, 3.2340e-4, 8.0821e-5};
  const double gt_ref[] = {1.4940e-4, 9.3380e-6, 5.8300e-7};
  auto msv = detail::rows_for(t, "MSV");
  auto mt = detail::rows_for(t, "MT");
  auto mmi = detail::rows_for(t, "MMI");
  auto gt = detail::rows_for(t, "GT");
  for (std::size_t i = 0; i < 3; ++i) {
    r.checks.push_back(detail::within_rel("MSV error rung " + std::to_string(i + 1), t.number(msv[i], "max_error"),
                                          msv_ref[i], 0.05));
    r.checks.push_back(detail::within_rel("GT error rung " + std::to_string(i + 1), t.number(gt[i], "max_error"),
                                          gt_ref[i], 0.10));
  }
  for (std::size_t i = 1; i < 3; ++i) {
    const std::string s = " order rung " + std::to_string(i + 1);
    r.checks.push_back(detail::within_abs("MSV" + s, detail::order_at(t, msv[i]), 2.0, 0.05));
    r.checks.push_back(detail::within_abs("MMI" + s, detail::order_at(t, mmi[i]), 2.0, 0.05));
    r.checks.push_back(detail::within_abs("MT" + s, detail::order_at(t, mt[i]), 2.4, 0.05));
    r.checks.push_back(detail::within_abs("GT" + s, detail::order_at(t, gt[i]), 4.0, 0.05));
  }
  return r;
}

// ---------------------------------------------------------------------------
// 2. Stability
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_stability(unsigned threads = 0) {
  CriterionResult r{2, "stability with E = 100", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test2Stability);
  c.threads = threads;
  const auto res = harness::run_experiment(c);
  const auto& t = res.table;
  const auto msv = detail::rows_for(t, "MSV");
  r.checks.push_back(detail::within_rel("MSV (0.1, 0.1) bounded", t.number(msv[0], "max_error"), 1.0543, 0.05));
  for (std::size_t i = 1; i < 3; ++i) {
    const double e = t.number(msv[i], "max_error");
    r.checks.push_back({"MSV rung " + std::to_string(i + 1) + " diverges", e >= 1e100, detail::fmt("%.3e", e)});
  }
  for (const char* m : {"MT", "MMI"}) {
    const auto rows = detail::rows_for(t, m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double e = t.number(rows[i], "max_error");
      r.checks.push_back({std::string(m) + " rung " + std::to_string(i + 1) + " <= 1.5", e <= 1.5,
                          detail::fmt("%.4f", e)});
    }
  }
  for (std::size_t i = 0; i < msv.size(); ++i) {
    const bool predicted = t.number(msv[i], "sv_stable") != 0.0;
    const bool observed = t.number(msv[i], "diverged") == 0.0;
    r.checks.push_back({"spectral bound separates rung " + std::to_string(i + 1), predicted == observed,
                        "tau_max " + detail::fmt("%.9f", t.number(msv[i], "tau_max_spectral")) + ", tau " +
                            detail::fmt("%.3f", t.number(msv[i], "tau")) + ", predicted " +
                            (predicted ? "stable" : "unstable") + ", observed " + (observed ? "stable" : "unstable")});
  }
  return r;
}

// ---------------------------------------------------------------------------
// 3. Energy drift
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_energy(unsigned threads = 0) {
  CriterionResult r{3, "energy drift (N = 200, 400; T = 30)", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test2Energy);
  c.threads = threads;
  const auto res = harness::run_experiment(c);
  const auto& t = res.table;
  for (const char* m : {"MSV", "MT"}) {
    const auto rows = detail::rows_for(t, m);
    const double d0 = t.number(rows[0], "max_drift");
    const double d1 = t.number(rows[1], "max_drift");
    r.checks.push_back({std::string(m) + " drift N=200 in [1e-3, 5e-2]", d0 >= 1e-3 && d0 <= 5e-2,
                        detail::fmt("%.4e", d0)});
    r.checks.push_back({std::string(m) + " drift reduction N=200 -> 400 >= 3", d0 / d1 >= 3.0,
                        detail::fmt("%.4e", d1) + ", factor " + detail::fmt("%.3f", d0 / d1)});
  }
  return r;
}

// ---------------------------------------------------------------------------
// 4. Wave limit
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_wave_limit(unsigned threads = 0) {
  CriterionResult r{4, "classical wave limit l/L = 0.4, 0.2, 0.1", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test3WaveLimit);
  c.threads = threads;
  const auto res = harness::run_experiment(c);
  const auto& t = res.table;
  const std::vector<std::pair<std::string, std::vector<double>>> ref = {
      {"MSV", {5.4948e-2, 1.2269e-2, 2.4625e-3}},
      {"MT", {5.2569e-2, 1.5168e-2, 6.0420e-3}},
      {"GT", {5.6887e-2, 1.4646e-2, 3.7111e-3}},
      {"MMI", {6.0951e-2, 1.9493e-2, 9.6978e-3}}};
  for (const auto& [m, values] : ref) {
    const auto rows = detail::rows_for(t, m);
    bool decreasing = true;
    std::string seq;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double d = t.number(rows[i], "max_distance");
      seq += (i ? ", " : "") + detail::fmt("%.4e", d);
      if (i && !(d < t.number(rows[i - 1], "max_distance"))) decreasing = false;
      r.checks.push_back(detail::within_factor(m + " l/L=" + detail::fmt("%.1f", t.number(rows[i], "l_over_L")), d,
                                               values[i], 2.0));
    }
    r.checks.push_back({m + " strictly decreasing", decreasing, seq});
  }
  return r;
}

// ---------------------------------------------------------------------------
// 5. Spectral
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_spectral(unsigned threads = 0) {
  CriterionResult r{5, "spectral scheme at t = 3.5 on [-pi, pi]", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test4Spectral);
  c.spectral_N = {6284, 12566, 62832};
  c.threads = threads;
  const auto start = std::chrono::steady_clock::now();
  const auto res = harness::run_experiment(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& t = res.table;
  r.checks.push_back(detail::within_factor("E_Linf N=6284", t.number(0, "E_Linf"), 1.0474e-4, 2.0));
  bool decreasing = true;
  std::string seq;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    seq += (i ? ", " : "") + detail::fmt("%.4e", t.number(i, "E_L2"));
    if (i && !(t.number(i, "E_L2") < t.number(i - 1, "E_L2"))) decreasing = false;
  }
  r.checks.push_back({"E_L2 strictly decreasing over N = 6284, 12566, 62832", decreasing, seq});
  r.checks.push_back(detail::within_factor("E_L2 N=62832", t.number(2, "E_L2"), 4.7057e-8, 3.0));
  r.checks.push_back({"runtime <= 300 s", secs <= 300.0, detail::fmt("%.1f s", secs)});
  return r;
}

// ---------------------------------------------------------------------------
// 6. Nonlinear bar
// ---------------------------------------------------------------------------

[[nodiscard]] inline CriterionResult criterion_nonlinear(unsigned threads = 0) {
  CriterionResult r{6, "nonlinear bar, first-order convergence", {}, 0.0};
  auto c = harness::preset(harness::Experiment::Test5Nonlinear);
  c.threads = threads;
  const auto res = harness::run_experiment(c);
  const auto& t = res.table;
  for (const char* m : {"MSV", "MMI"}) {
    const auto rows = detail::rows_for(t, m);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      r.checks.push_back(detail::within_abs(std::string(m) + " order rung " + std::to_string(i + 1),
                                            detail::order_at(t, rows[i]), 1.0, 0.15));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// 7. Properties
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Matrix s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += 0.1;
  return scale * 0.5 * (s + s.transpose());
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace detail

/// (a) Trig steppers vs the variation-of-constants solution for constant B.
[[nodiscard]] inline Check property_trig_constant_forcing(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (Eigen::Index n : {1, 5, 20, 50}) {
    const Matrix omega2 = detail::random_spd(rng, n, 4.0);
    const Vector U0 = detail::random_vector(rng, n);
    const Vector V0 = detail::random_vector(rng, n);
    const Vector B = detail::random_vector(rng, n);
    const double tau = 0.05;
    const std::size_t steps = 100;
    const double t = tau * static_cast<double>(steps);
    Eigen::SelfAdjointEigenSolver<Matrix> es(omega2);
    const Matrix& Q = es.eigenvectors();
    Vector a(n), b(n), f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::sqrt(es.eigenvalues()[i]);
      a[i] = std::cos(t * w);
      b[i] = std::sin(t * w) / w;
      f[i] = (1.0 - std::cos(t * w)) / (w * w);
    }
    const Vector exact = Q * (a.asDiagonal() * (Q.transpose() * U0) + b.asDiagonal() * (Q.transpose() * V0) +
                              f.asDiagonal() * (Q.transpose() * B));
    for (auto method : {TimeMethod::Trig2, TimeMethod::Trig4}) {
      const LinearIntegrator integ(method, omega2, Forcing::constant(B), tau);
      IntegratorState s{0, U0, V0};
      for (std::size_t k = 0; k < steps; ++k) s = integ.step(s);
      worst = std::max(worst, (s.U - exact).cwiseAbs().maxCoeff() / std::max(1.0, exact.cwiseAbs().maxCoeff()));
    }
  }
  return {"(a) trig steppers exact for constant forcing (100 steps, n <= 50)", worst <= 1e-9,
          "max rel deviation " + detail::fmt("%.2e", worst)};
}

/// (b) Spectral radius of the one-step matrices over tau*omega in [0.1, 10].
[[nodiscard]] inline Check property_amplification() {
  bool ok = true;
  std::string detail_text;
  for (int i = 0; i <= 99; ++i) {
    const double x = 0.1 + 0.1 * i;
    const double sv = spectral_radius(amplification_matrix(TimeMethod::StormerVerlet, x, 1.0));
    const double im = spectral_radius(amplification_matrix(TimeMethod::ImplicitMidpoint, x, 1.0));
    const double tr = spectral_radius(amplification_matrix(TimeMethod::Trig2, x, 1.0));
    const bool sv_ok = (x <= 2.0) == (sv <= 1.0 + 1e-12);
    const bool im_ok = std::abs(im - 1.0) <= 1e-12;
    const bool tr_ok = std::abs(tr - 1.0) <= 1e-12;
    if (!(sv_ok && im_ok && tr_ok)) {
      ok = false;
      detail_text += detail::fmt(" x=%.1f", x);
    }
  }
  return {"(b) amplification moduli: SV <= 1 iff tau*omega <= 2, IM and trig = 1", ok,
          ok ? "100 probes" : "failing at" + detail_text};
}

/// (c) Symmetry, positive semidefiniteness and zero row sums of Omega^2.
[[nodiscard]] inline Check property_stiffness(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double asym = 0.0, neg = 0.0, rows = 0.0;
  for (int k = 0; k < 50; ++k) {
    Material m{0.5 + u(rng), 0.5 + 2.0 * u(rng), 0.3 + u(rng), 1.0};
    MicromodulusModel kernel = MicromodulusModel::gaussian(m);
    const int kind = k % 3;
    if (kind == 1) {
      const double a = 0.5 + u(rng), b = 0.2 + u(rng), delta = 0.3 + u(rng);
      kernel = MicromodulusModel::finite([a, b](double x) { return a / (1.0 + (x / b) * (x / b)); }, delta);
    } else if (kind == 2) {
      const double a = 0.5 + u(rng), delta = 0.2 + 0.6 * u(rng);
      kernel = MicromodulusModel::finite([a, delta](double x) { return a * (1.0 - x / delta); }, delta);
    }
    const double D = 2.0 + 2.0 * u(rng);
    const double h = 0.05 + 0.1 * u(rng);
    const auto scheme = (k % 2 == 0) ? QuadratureScheme::MidpointRule : QuadratureScheme::GaussTwoPoint;
    const Grid g = build_grid(scheme, D, h);
    const auto op = assemble_stiffness(g, kernel, m);
    const double scale = op.omega2.cwiseAbs().maxCoeff();
    asym = std::max(asym, (op.omega2 - op.omega2.transpose()).cwiseAbs().maxCoeff() / scale);
    Eigen::SelfAdjointEigenSolver<Matrix> es(op.omega2, Eigen::EigenvaluesOnly);
    neg = std::max(neg, -es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff());
    rows = std::max(rows, (op.omega2 * Vector::Ones(op.size())).cwiseAbs().maxCoeff() / scale);
  }
  const bool ok = asym == 0.0 && neg <= 1e-12 && rows <= 1e-12;
  return {"(c) stiffness symmetric, PSD, zero row sums (50 random kernels)", ok,
          "asym " + detail::fmt("%.1e", asym) + ", min eig/max eig " + detail::fmt("%.1e", -neg) + ", row sum " +
              detail::fmt("%.1e", rows)};
}

/// (d) Forward then inverse transform, both routes.
[[nodiscard]] inline Check property_dft_roundtrip(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 7);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (std::size_t N : {1u, 4u, 50u, 314u, 1024u}) {
    std::vector<double> v(2 * N);
    for (auto& x : v) x = g(rng);
    for (auto route : {DftRoute::Direct, DftRoute::Fast}) {
      const auto back = dft_inverse(dft_forward(v, N, route), N, route);
      for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(back[j] - v[j]));
    }
  }
  return {"(d) DFT roundtrip", worst <= 1e-12, "max error " + detail::fmt("%.2e", worst)};
}

/// (e) sum_i g_i(U) = 0 for the full and linearized closures.
[[nodiscard]] inline Check property_momentum(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 11);
  double worst = 0.0;
  const Grid g = build_midpoint_grid(40, 0.05);
  const ForceModel forces[] = {BondStretch{3.0, 0.15 * (1 + 1e-9)}, QuadraticStretch{2.0, 0.2},
                               CubicKernel{[](double x) { return 1.0 + x; }, 0.12}};
  for (const auto& f : forces) {
    for (auto closure : {Closure::FullNonlinear, Closure::Linearized}) {
      const NonlinearRHS rhs(g, f, 1.3, closure);
      for (int trial = 0; trial < 10; ++trial) {
        const Vector U = 0.01 * detail::random_vector(rng, static_cast<Eigen::Index>(g.size()));
        const Vector a = rhs(U);
        worst = std::max(worst, std::abs(a.sum()) / std::max(1.0, a.cwiseAbs().sum()));
      }
    }
  }
  return {"(e) nonlinear momentum conservation", worst <= 1e-12, "max |sum g| " + detail::fmt("%.2e", worst)};
}

/// (f) Linearized closure through the nonlinear steppers vs the linear path.
[[nodiscard]] inline Check property_linearized_equivalence(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 13);
  const Grid g = build_midpoint_grid(60, 0.05);
  const ForceModel force = BondStretch{2.0, 0.15 * (1 + 1e-9)};
  const Material m{1.0, 1.0, 1.0, 1.0};
  const NonlinearRHS rhs(g, force, m.rho, Closure::Linearized);
  const auto op = assemble_stiffness(g, linearize_force(force), m);
  const auto n = static_cast<Eigen::Index>(g.size());
  IntegratorState a{0, 0.01 * detail::random_vector(rng, n), 0.01 * detail::random_vector(rng, n)};
  IntegratorState b = a;
  double worst = (rhs(a.U) + op.omega2 * a.U).cwiseAbs().maxCoeff();
  const double tau = 0.01;
  for (int k = 0; k < 50; ++k) {
    a = step_nonlinear_sv(a, rhs, tau);
    b = step_stormer_verlet(b, op.omega2, Forcing::none(), tau);
    worst = std::max(worst, (a.U - b.U).cwiseAbs().maxCoeff());
  }
  IntegratorState c{0, b.U, b.V};
  IntegratorState d = c;
  const ImplicitMidpointSolver im(op.omega2, tau);
  double im_worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    c = step_nonlinear_im(c, rhs, tau, {1e-14, 200}).state;
    d = im.step(d, Forcing::none());
    im_worst = std::max(im_worst, (c.U - d.U).cwiseAbs().maxCoeff());
  }
  return {"(f) linearized closure matches the linear path", worst <= 1e-12 && im_worst <= 1e-12,
          "SV " + detail::fmt("%.2e", worst) + ", IM " + detail::fmt("%.2e", im_worst)};
}

/// (g) u*(x, 0) = exp(-x^2).
[[nodiscard]] inline Check property_exact_initial(std::uint64_t seed) {
  std::mt19937_64 rng(seed + 17);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    worst = std::max(worst, std::abs(peridynamic_exact(x, 0.0) - std::exp(-x * x)));
  }
  return {"(g) exact solution at t = 0 equals exp(-x^2) (1000 points)", worst <= 1e-10,
          "max error " + detail::fmt("%.2e", worst)};
}

[[nodiscard]] inline CriterionResult criterion_properties(std::uint64_t seed) {
  CriterionResult r{7, "property suites", {}, 0.0};
  r.checks.push_back(property_trig_constant_forcing(seed));
  r.checks.push_back(property_amplification());
  r.checks.push_back(property_stiffness(seed));
  r.checks.push_back(property_dft_roundtrip(seed));
  r.checks.push_back(property_momentum(seed));
  r.checks.push_back(property_linearized_equivalence(seed));
  r.checks.push_back(property_exact_initial(seed));
  return r;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

inline constexpr int kCriteria = 7;

[[nodiscard]] inline CriterionResult run_criterion(int id, std::uint64_t seed = 20240611, unsigned threads = 0) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = criterion_convergence(threads); break;
    case 2: r = criterion_stability(threads); break;
    case 3: r = criterion_energy(threads); break;
    case 4: r = criterion_wave_limit(threads); break;
    case 5: r = criterion_spectral(threads); break;
    case 6: r = criterion_nonlinear(threads); break;
    case 7: r = criterion_properties(seed); break;
    default: throw std::out_of_range("acceptance: criteria are numbered 1.." + std::to_string(kCriteria));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// One verdict line per criterion, then the individual checks indented.
inline void print(std::ostream& os, const CriterionResult& r, bool verbose = true) {
  char head[160];
  std::snprintf(head, sizeof head, "criterion %d: %s  %s  (%.1f s)", r.id, r.pass() ? "PASS" : "FAIL",
                r.title.c_str(), r.seconds);
  os << head << '\n';
  if (!verbose) return;
  for (const auto& c : r.checks) os << "    [" << (c.pass ? "ok" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
}

}  // namespace pdwave::acceptance
