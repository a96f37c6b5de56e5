#pragma once

// Time integration of U'' + Omega^2 U = B(t): Stormer-Verlet, implicit
// midpoint and the trigonometric schemes of order 2 and 4, plus stability
// bounds and the discrete energy.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdwave/linalg.hpp"
#include "pdwave/model.hpp"
#include "pdwave/quadrature.hpp"

namespace pdwave {

struct TimeGrid {
  double tau = 0.0;
  std::size_t steps = 0;  ///< N_T = floor(T / tau)

  TimeGrid(double tau_, double T) : tau(tau_) {
    if (!(tau_ > 0.0) || !(T > 0.0)) throw std::invalid_argument("TimeGrid: tau and T must be positive");
    // Guard against T/tau landing a hair below an integer.
    steps = static_cast<std::size_t>(std::floor(T / tau_ * (1.0 + 1e-12)));
    if (steps == 0) throw std::invalid_argument("TimeGrid: T < tau gives no steps");
  }

  [[nodiscard]] double time(std::size_t n) const { return static_cast<double>(n) * tau; }
};

struct IntegratorState {
  std::size_t n = 0;
  Vector U;
  Vector V;
};

/// Forcing B(t) = b(., t)/rho sampled at the nodes.
class Forcing {
 public:
  enum class Kind { Zero, Constant, TimeDependent };

  Forcing() = default;
  static Forcing none() { return {}; }
  static Forcing constant(Vector b) {
    Forcing f;
    f.kind_ = Kind::Constant;
    f.constant_ = std::move(b);
    return f;
  }
  static Forcing time_dependent(std::function<Vector(double)> sampler) {
    Forcing f;
    f.kind_ = Kind::TimeDependent;
    f.sampler_ = std::move(sampler);
    return f;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool is_zero() const { return kind_ == Kind::Zero; }
  [[nodiscard]] bool is_autonomous() const { return kind_ != Kind::TimeDependent; }

  [[nodiscard]] Vector operator()(double t, Eigen::Index n) const {
    switch (kind_) {
      case Kind::Zero: return Vector::Zero(n);
      case Kind::Constant: return constant_;
      case Kind::TimeDependent: return sampler_(t);
    }
    return Vector::Zero(n);
  }

 private:
  Kind kind_ = Kind::Zero;
  Vector constant_;
  std::function<Vector(double)> sampler_;
};

namespace detail {
inline void check_shapes(const IntegratorState& s, Eigen::Index n) {
  if (s.U.size() != n || s.V.size() != n) throw std::invalid_argument("integrator: state/operator size mismatch");
}
}  // namespace detail

/// Kick-drift-kick with B(t_n) and B(t_{n+1}).
[[nodiscard]] inline IntegratorState step_stormer_verlet(const IntegratorState& s, const Matrix& omega2,
                                                         const Forcing& B, double tau) {
  detail::check_shapes(s, omega2.rows());
  const double t = static_cast<double>(s.n) * tau;
  IntegratorState out;
  out.n = s.n + 1;
  Vector acc = -(omega2 * s.U);
  if (!B.is_zero()) acc += B(t, omega2.rows());
  const Vector v_half = s.V + 0.5 * tau * acc;
  out.U = s.U + tau * v_half;
  Vector acc1 = -(omega2 * out.U);
  if (!B.is_zero()) acc1 += B(t + tau, omega2.rows());
  out.V = v_half + 0.5 * tau * acc1;
  return out;
}

/// Implicit midpoint for the linear system; (I + tau^2/4 Omega^2) is factored once.
class ImplicitMidpointSolver {
 public:
  ImplicitMidpointSolver(Matrix omega2, double tau)
      : omega2_(std::move(omega2)),
        tau_(tau),
        factor_(Matrix::Identity(omega2_.rows(), omega2_.cols()) + 0.25 * tau * tau * omega2_) {}

  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] const Matrix& omega2() const { return omega2_; }

  /// Eliminating V_{n+1}:
  ///   (I + tau^2/4 Omega^2) U_{n+1} = U_n + tau V_n - tau^2/4 Omega^2 U_n + tau^2/4 (B_n + B_{n+1}).
  [[nodiscard]] IntegratorState step(const IntegratorState& s, const Forcing& B) const {
    detail::check_shapes(s, omega2_.rows());
    const double t = static_cast<double>(s.n) * tau_;
    const double q = 0.25 * tau_ * tau_;
    Vector rhs = s.U + tau_ * s.V - q * (omega2_ * s.U);
    Vector bsum;
    if (!B.is_zero()) {
      bsum = B(t, omega2_.rows()) + B(t + tau_, omega2_.rows());
      rhs += q * bsum;
    }
    IntegratorState out;
    out.n = s.n + 1;
    out.U = factor_.solve(rhs);
    out.V = (2.0 / tau_) * (out.U - s.U) - s.V;
    return out;
  }

 private:
  Matrix omega2_;
  double tau_;
  SpdFactorization factor_;
};

[[nodiscard]] inline IntegratorState step_implicit_midpoint(const IntegratorState& s, const Matrix& omega2,
                                                            const Forcing& B, double tau) {
  return ImplicitMidpointSolver(omega2, tau).step(s, B);
}

namespace detail {
inline void check_cache(const MatrixFunctionCache& c, double tau, const Matrix& m, const char* what) {
  if (std::abs(c.tau - tau) > 1e-14 * std::max(1.0, tau)) {
    throw std::invalid_argument("trigonometric step: cache was built for a different tau");
  }
  if (m.size() == 0) throw std::invalid_argument(std::string("trigonometric step: cache lacks ") + what);
}
}  // namespace detail

/// Free propagator plus forcing. Constant forcing uses the exact
/// variation-of-constants integrals; time-dependent forcing uses the midpoint
/// rule at t_n + tau/2.
[[nodiscard]] inline IntegratorState step_trig2(const IntegratorState& s, const MatrixFunctionCache& c,
                                                const Forcing& B, double tau) {
  detail::check_shapes(s, c.size());
  detail::check_cache(c, tau, c.cos_tau_omega, "the propagator");
  IntegratorState out;
  out.n = s.n + 1;
  out.U = c.cos_tau_omega * s.U + c.tau_sinc_tau_omega * s.V;
  out.V = -(c.omega_sin_tau_omega * s.U) + c.cos_tau_omega * s.V;
  if (B.kind() == Forcing::Kind::Constant) {
    detail::check_cache(c, tau, c.exact_forcing_u, "exact constant-forcing terms");
    const Vector b = B(0.0, c.size());
    out.U += c.exact_forcing_u * b;
    out.V += c.tau_sinc_tau_omega * b;
  } else if (B.kind() == Forcing::Kind::TimeDependent) {
    detail::check_cache(c, tau, c.cos_half, "midpoint forcing terms");
    const Vector b = B((static_cast<double>(s.n) + 0.5) * tau, c.size());
    out.U += c.half_tau2_sinc_half * b;
    out.V += tau * (c.cos_half * b);
  }
  return out;
}

/// Order-4 scheme: two-point Gauss rule in time for the forcing integrals.
[[nodiscard]] inline IntegratorState step_trig4(const IntegratorState& s, const MatrixFunctionCache& c,
                                                const Forcing& B, double tau) {
  if (B.kind() != Forcing::Kind::TimeDependent) return step_trig2(s, c, B, tau);
  detail::check_shapes(s, c.size());
  detail::check_cache(c, tau, c.cos_alpha, "Gauss forcing terms");
  const double t = static_cast<double>(s.n) * tau;
  const Vector b_beta = B(t + 0.5 * tau * kGaussBeta, c.size());
  const Vector b_alpha = B(t + 0.5 * tau * kGaussAlpha, c.size());
  IntegratorState out;
  out.n = s.n + 1;
  out.U = c.cos_tau_omega * s.U + c.tau_sinc_tau_omega * s.V +
          (0.25 * tau * tau) * (kGaussAlpha * (c.sinc_alpha * b_beta) + kGaussBeta * (c.sinc_beta * b_alpha));
  out.V = -(c.omega_sin_tau_omega * s.U) + c.cos_tau_omega * s.V +
          (0.5 * tau) * (c.cos_alpha * b_beta + c.cos_beta * b_alpha);
  return out;
}

// ---------------------------------------------------------------------------
// Uniform driver
// ---------------------------------------------------------------------------

enum class TimeMethod { StormerVerlet, ImplicitMidpoint, Trig2, Trig4 };

[[nodiscard]] inline const char* to_string(TimeMethod m) {
  switch (m) {
    case TimeMethod::StormerVerlet: return "stormer-verlet";
    case TimeMethod::ImplicitMidpoint: return "implicit-midpoint";
    case TimeMethod::Trig2: return "trig2";
    case TimeMethod::Trig4: return "trig4";
  }
  return "?";
}

/// Binds a method, Omega^2, the forcing and tau; owns the factorization or
/// matrix-function cache the method needs.
class LinearIntegrator {
 public:
  LinearIntegrator(TimeMethod method, const Matrix& omega2, Forcing forcing, double tau,
                   EigenMethod eig_method = EigenMethod::Auto)
      : method_(method), forcing_(std::move(forcing)), tau_(tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("LinearIntegrator: tau must be positive");
    switch (method) {
      case TimeMethod::StormerVerlet: omega2_ = omega2; break;
      case TimeMethod::ImplicitMidpoint: implicit_ = std::make_unique<ImplicitMidpointSolver>(omega2, tau); break;
      case TimeMethod::Trig2:
      case TimeMethod::Trig4: {
        TrigCacheOptions opt;
        opt.exact_constant_forcing = forcing_.kind() == Forcing::Kind::Constant;
        opt.midpoint_forcing = forcing_.kind() == Forcing::Kind::TimeDependent && method == TimeMethod::Trig2;
        opt.gauss_forcing = forcing_.kind() == Forcing::Kind::TimeDependent && method == TimeMethod::Trig4;
        cache_ = std::make_unique<MatrixFunctionCache>(build_trig_cache(eig_symmetric(omega2, eig_method), tau, opt));
        break;
      }
    }
  }

  [[nodiscard]] IntegratorState step(const IntegratorState& s) const {
    switch (method_) {
      case TimeMethod::StormerVerlet: return step_stormer_verlet(s, omega2_, forcing_, tau_);
      case TimeMethod::ImplicitMidpoint: return implicit_->step(s, forcing_);
      case TimeMethod::Trig2: return step_trig2(s, *cache_, forcing_, tau_);
      case TimeMethod::Trig4: return step_trig4(s, *cache_, forcing_, tau_);
    }
    return s;
  }

  [[nodiscard]] TimeMethod method() const { return method_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] const MatrixFunctionCache* cache() const { return cache_.get(); }

 private:
  TimeMethod method_;
  Forcing forcing_;
  double tau_;
  Matrix omega2_;
  std::unique_ptr<ImplicitMidpointSolver> implicit_;
  std::unique_ptr<MatrixFunctionCache> cache_;
};

using Trajectory = std::vector<IntegratorState>;

/// Runs `steps` steps from `initial`, calling observer(state) after each.
template <typename Observer>
IntegratorState integrate(const LinearIntegrator& integrator, IntegratorState state, std::size_t steps,
                          Observer&& observer) {
  for (std::size_t k = 0; k < steps; ++k) {
    state = integrator.step(state);
    observer(static_cast<const IntegratorState&>(state));
  }
  return state;
}

[[nodiscard]] inline Trajectory integrate_trajectory(const LinearIntegrator& integrator, IntegratorState initial,
                                                     std::size_t steps) {
  Trajectory traj;
  traj.reserve(steps + 1);
  traj.push_back(initial);
  integrate(integrator, std::move(initial), steps, [&](const IntegratorState& s) { traj.push_back(s); });
  return traj;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

struct StabilityBound {
  double tau_max_von_neumann = 0.0;  ///< sqrt(rho / (h sum_{q=0}^{N/2} w C_q))
  double tau_max_spectral = 0.0;     ///< 2 / sqrt(lambda_max(Omega^2)) = 2 sqrt(rho/(h k_max))
  double k_max = 0.0;                ///< largest eigenvalue of K

  /// Stormer-Verlet is linearly stable for tau*omega <= 2; the relative slack
  /// absorbs the rounding in lambda_max.
  [[nodiscard]] bool stormer_verlet_stable(double tau) const { return tau <= tau_max_spectral * (1.0 + 1e-9); }
};

/// von Neumann bound from the kernel samples of the central row (N' = N), and
/// the spectral bound from the largest eigenvalue of Omega^2.
[[nodiscard]] inline StabilityBound stability_bounds(const Grid& grid, const MicromodulusModel& kernel,
                                                     const Material& material, const Matrix& omega2) {
  StabilityBound b;
  const std::size_t center = grid.size() / 2;
  const std::size_t last = std::min(grid.size() - 1, center + grid.N / 2);
  const bool singular = singular_at_zero(kernel);
  double sum = 0.0;
  for (std::size_t j = center; j <= last; ++j) {
    if (j == center && singular) continue;
    sum += grid.weights[j] * eval_micromodulus(kernel, grid.nodes[j] - grid.nodes[center]);
  }
  b.tau_max_von_neumann = std::sqrt(material.rho / (grid.h * sum));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(omega2, Eigen::EigenvaluesOnly);
  const double lambda_max = solver.eigenvalues().maxCoeff();
  b.k_max = lambda_max * material.rho / grid.h;
  b.tau_max_spectral = 2.0 / std::sqrt(lambda_max);
  return b;
}

/// One-step propagation matrix of the scalar oscillator u'' + omega^2 u = 0
/// with x = tau*omega (tau = 1 scaling: entries expressed in x and tau).
[[nodiscard]] inline Eigen::Matrix2d amplification_matrix(TimeMethod method, double tau, double omega) {
  const double x = tau * omega;
  const double w2 = omega * omega;
  Eigen::Matrix2d m;
  switch (method) {
    case TimeMethod::StormerVerlet:
      m << 1.0 - 0.5 * x * x, tau, -0.5 * tau * w2 * (2.0 - 0.5 * x * x), 1.0 - 0.5 * x * x;
      break;
    case TimeMethod::ImplicitMidpoint: {
      const double d = 1.0 + 0.25 * x * x;
      m << (1.0 - 0.25 * x * x) / d, tau / d, -tau * w2 / d, (1.0 - 0.25 * x * x) / d;
      break;
    }
    case TimeMethod::Trig2:
    case TimeMethod::Trig4:
      m << std::cos(x), tau * sinc(x), -omega * std::sin(x), std::cos(x);
      break;
  }
  return m;
}

/// Largest eigenvalue modulus of a 2x2 real matrix.
[[nodiscard]] inline double spectral_radius(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
  return std::max(std::abs(0.5 * (tr + disc)), std::abs(0.5 * (tr - disc)));
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

struct EnergyReport {
  std::vector<double> kinetic, elastic, external, total, drift;

  [[nodiscard]] double max_drift() const {
    double m = 0.0;
    for (double d : drift) m = std::max(m, std::abs(d));
    return m;
  }
};

/// E_n = 1/2 V^T V + 1/2 U^T Omega^2 U - U^T B for autonomous B.
[[nodiscard]] inline EnergyReport energy_series(const Trajectory& trajectory, const Matrix& omega2,
                                                const Forcing& B) {
  if (!B.is_autonomous()) {
    throw std::invalid_argument("energy_series: forcing is time dependent, the energy is not conserved");
  }
  EnergyReport r;
  const Vector b = B(0.0, omega2.rows());
  for (const auto& s : trajectory) {
    detail::check_shapes(s, omega2.rows());
    const double kin = 0.5 * s.V.squaredNorm();
    const double el = 0.5 * s.U.dot(omega2 * s.U);
    const double ext = -s.U.dot(b);
    r.kinetic.push_back(kin);
    r.elastic.push_back(el);
    r.external.push_back(ext);
    r.total.push_back(kin + el + ext);
    r.drift.push_back(r.total.back() - r.total.front());
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV streams
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}
}  // namespace detail

/// Long format: t,j,x,U,V.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Grid& grid, double tau) {
  os << "t,j,x,U,V\n";
  for (const auto& s : traj) {
    const double t = static_cast<double>(s.n) * tau;
    for (Eigen::Index j = 0; j < s.U.size(); ++j) {
      os << detail::fmt17(t) << ',' << j << ',' << detail::fmt17(grid.nodes[static_cast<std::size_t>(j)]) << ','
         << detail::fmt17(s.U[j]) << ',' << detail::fmt17(s.V[j]) << '\n';
    }
  }
}

inline void write_energy_csv(std::ostream& os, const EnergyReport& e, double tau) {
  os << "n,t,E_kin,E_el,E_ext,E_total,drift\n";
  for (std::size_t n = 0; n < e.total.size(); ++n) {
    os << n << ',' << detail::fmt17(static_cast<double>(n) * tau) << ',' << detail::fmt17(e.kinetic[n]) << ','
       << detail::fmt17(e.elastic[n]) << ',' << detail::fmt17(e.external[n]) << ',' << detail::fmt17(e.total[n])
       << ',' << detail::fmt17(e.drift[n]) << '\n';
  }
}

}  // namespace pdwave
