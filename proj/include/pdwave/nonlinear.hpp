#pragma once

// Nonlinear semi-discrete right-hand side
//
//   g_i(U) = (h/rho) sum_{j != i, |x_j - x_i| <= delta} w_j f~(x_j - x_i, U_j - U_i)
//
// where f~ is the pairwise force itself or one of its closures, and the
// Stormer-Verlet / implicit midpoint steppers built on it.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdwave/integrators.hpp"
#include "pdwave/model.hpp"
#include "pdwave/quadrature.hpp"

namespace pdwave {

enum class Closure { FullNonlinear, Linearized, Trapezoidal, Taylor };

[[nodiscard]] inline const char* to_string(Closure c) {
  switch (c) {
    case Closure::FullNonlinear: return "full";
    case Closure::Linearized: return "linearized";
    case Closure::Trapezoidal: return "trapezoidal";
    case Closure::Taylor: return "taylor";
  }
  return "?";
}

inline constexpr int kMaxTaylorOrder = 3;

/// Polynomial coefficients a_1..a_s of f(xi, .) - f(xi, 0) on one side of eta = 0.
using TaylorCoefficients = std::array<double, kMaxTaylorOrder + 1>;

struct TaylorExpansion {
  double f0 = 0.0;
  TaylorCoefficients positive{};  ///< used for eta >= 0
  TaylorCoefficients negative{};  ///< used for eta < 0
  int order = 1;
  bool kink_at_zero = false;  ///< one-sided coefficients differ: f(xi, .) is not C^s at 0

  [[nodiscard]] double operator()(double eta) const {
    const auto& a = eta >= 0.0 ? positive : negative;
    double p = 0.0;
    for (int i = order; i >= 1; --i) p = (p + a[static_cast<std::size_t>(i)]) * eta;
    return f0 + p;
  }
};

/// Order-s expansion in eta at fixed xi. a_1 is the analytic slope C(xi);
/// a_2..a_s interpolate f at eta = +-m d, m = 1..s-1, d = 1e-3 max(1, |xi|),
/// separately for each sign of eta. Exact for forces that are polynomials of
/// degree <= s on each side.
[[nodiscard]] inline TaylorExpansion taylor_expansion(const ForceModel& force, int s, double xi) {
  if (s < 1 || s > kMaxTaylorOrder) throw std::invalid_argument("taylor closure: order must be 1, 2 or 3");
  TaylorExpansion t;
  t.order = s;
  t.f0 = eval_force(force, xi, 0.0);
  const double slope = eval_force_deta(force, xi, 0.0);
  t.positive[1] = slope;
  t.negative[1] = slope;
  if (s == 1) return t;
  const double d = 1e-3 * std::max(1.0, std::abs(xi));
  for (const double sigma : {1.0, -1.0}) {
    const int n = s - 1;
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd rhs(n);
    for (int m = 1; m <= n; ++m) {
      const double e = sigma * m * d;
      for (int i = 2; i <= s; ++i) A(m - 1, i - 2) = std::pow(e, i);
      rhs[m - 1] = eval_force(force, xi, e) - t.f0 - slope * e;
    }
    const Eigen::VectorXd a = A.fullPivLu().solve(rhs);
    auto& target = sigma > 0.0 ? t.positive : t.negative;
    for (int i = 2; i <= s; ++i) target[static_cast<std::size_t>(i)] = a[i - 2];
  }
  for (int i = 2; i <= s; ++i) {
    const double p = t.positive[static_cast<std::size_t>(i)];
    const double q = t.negative[static_cast<std::size_t>(i)];
    if (std::abs(p - q) > 1e-6 * (std::abs(p) + std::abs(q)) + 1e-12) t.kink_at_zero = true;
  }
  return t;
}

struct TaylorValue {
  double value = 0.0;
  bool kink_at_zero = false;
};

[[nodiscard]] inline TaylorValue taylor_closure_force(const ForceModel& force, int s, double xi, double eta) {
  const auto t = taylor_expansion(force, s, xi);
  return {t(eta), t.kink_at_zero};
}

/// f(xi, 0) + eta/2 [df/deta(xi, 0) + df/deta(xi, eta)].
[[nodiscard]] inline double trapezoidal_closure_force(const ForceModel& force, double xi, double eta) {
  return eval_force(force, xi, 0.0) +
         0.5 * eta * (eval_force_deta(force, xi, 0.0) + eval_force_deta(force, xi, eta));
}

/// Prescribes nodal values (e.g. boundary layers) after every position update.
using DisplacementConstraint = std::function<void(Vector& U, double t)>;

class NonlinearRHS {
 public:
  struct Bond {
    Eigen::Index j;
    double xi;
    double weight;  ///< w_j
    double slope;   ///< C(xi) = df/deta(xi, 0)
    TaylorExpansion taylor;
  };

  NonlinearRHS(Grid grid, ForceModel force, double rho, Closure closure = Closure::FullNonlinear,
               int taylor_order = 1)
      : grid_(std::move(grid)), force_(std::move(force)), rho_(rho), closure_(closure), taylor_order_(taylor_order) {
    detail::validate_force(force_);
    if (!(rho_ > 0.0)) throw std::invalid_argument("NonlinearRHS: rho must be positive");
    const double delta = horizon(force_);
    // Relative slack so offsets that are exact multiples of h stay inside.
    const double reach = delta * (1.0 + 1e-12);
    const auto n = static_cast<Eigen::Index>(grid_.size());
    bonds_.resize(grid_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double xi = grid_.nodes[static_cast<std::size_t>(j)] - grid_.nodes[static_cast<std::size_t>(i)];
        if (std::abs(xi) > reach) continue;
        if (xi == 0.0) throw std::domain_error("NonlinearRHS: two nodes coincide, the force would be sampled at xi = 0");
        Bond b{j, xi, grid_.weights[static_cast<std::size_t>(j)], eval_force_deta(force_, xi, 0.0), {}};
        if (closure_ == Closure::Taylor) {
          b.taylor = taylor_expansion(force_, taylor_order_, xi);
          kink_ = kink_ || b.taylor.kink_at_zero;
        }
        bonds_[static_cast<std::size_t>(i)].push_back(b);
      }
    }
  }

  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(grid_.size()); }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const ForceModel& force() const { return force_; }
  [[nodiscard]] Closure closure() const { return closure_; }
  [[nodiscard]] double rho() const { return rho_; }
  /// Some bond's Taylor expansion straddles a kink at eta = 0.
  [[nodiscard]] bool taylor_kink() const { return kink_; }
  [[nodiscard]] const std::vector<Bond>& bonds(Eigen::Index i) const { return bonds_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] double pair_force(const Bond& b, double eta) const {
    switch (closure_) {
      case Closure::FullNonlinear: return eval_force(force_, b.xi, eta);
      case Closure::Linearized: return b.slope * eta;
      case Closure::Trapezoidal: return trapezoidal_closure_force(force_, b.xi, eta);
      case Closure::Taylor: return b.taylor(eta);
    }
    return 0.0;
  }

  /// Acceleration g(U); summed over j in increasing order.
  [[nodiscard]] Vector operator()(const Vector& U) const {
    if (U.size() != size()) throw std::invalid_argument("assemble_nonlinear_rhs: U has the wrong length");
    Vector g(U.size());
    const double scale = grid_.h / rho_;
    for (Eigen::Index i = 0; i < U.size(); ++i) {
      double s = 0.0;
      for (const auto& b : bonds_[static_cast<std::size_t>(i)]) s += b.weight * pair_force(b, U[b.j] - U[i]);
      g[i] = scale * s;
    }
    return g;
  }

 private:
  Grid grid_;
  ForceModel force_;
  double rho_;
  Closure closure_;
  int taylor_order_;
  bool kink_ = false;
  std::vector<std::vector<Bond>> bonds_;
};

[[nodiscard]] inline Vector assemble_nonlinear_rhs(const NonlinearRHS& rhs, const Vector& U) { return rhs(U); }

struct NonlinearProblem {
  const NonlinearRHS* rhs = nullptr;
  Forcing forcing;                   ///< B = b/rho
  DisplacementConstraint constraint; ///< optional
};

namespace detail {
inline Vector acceleration(const NonlinearProblem& p, const Vector& U, double t) {
  Vector g = (*p.rhs)(U);
  if (!p.forcing.is_zero()) g += p.forcing(t, U.size());
  return g;
}
}  // namespace detail

[[nodiscard]] inline IntegratorState step_nonlinear_sv(const IntegratorState& s, const NonlinearProblem& p,
                                                       double tau) {
  const double t = static_cast<double>(s.n) * tau;
  IntegratorState out;
  out.n = s.n + 1;
  const Vector v_half = s.V + 0.5 * tau * detail::acceleration(p, s.U, t);
  out.U = s.U + tau * v_half;
  if (p.constraint) p.constraint(out.U, t + tau);
  out.V = v_half + 0.5 * tau * detail::acceleration(p, out.U, t + tau);
  return out;
}

[[nodiscard]] inline IntegratorState step_nonlinear_sv(const IntegratorState& s, const NonlinearRHS& rhs,
                                                       double tau) {
  return step_nonlinear_sv(s, NonlinearProblem{&rhs, {}, {}}, tau);
}

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, std::size_t iterations)
      : std::runtime_error("implicit midpoint: fixed-point iteration stalled after " + std::to_string(iterations) +
                           " iterations (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        iterations_(iterations) {}

  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

struct FixedPointOptions {
  double tol = 1e-12;
  std::size_t max_iters = 200;
};

struct ImplicitStepResult {
  IntegratorState state;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Picard iteration on U_{n+1} for
///   U_{n+1} = U_n + tau/2 (V_n + V_{n+1}),
///   V_{n+1} = V_n + tau/2 (g(U_n) + g(U_{n+1}) + B(t_n) + B(t_{n+1})),
/// starting from the explicit Stormer-Verlet prediction. Converged when the
/// update of U falls below tol * max(1, |U|_inf).
[[nodiscard]] inline ImplicitStepResult step_nonlinear_im(const IntegratorState& s, const NonlinearProblem& p,
                                                          double tau, const FixedPointOptions& options = {}) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("step_nonlinear_im: fp_tol must be positive");
  const double t = static_cast<double>(s.n) * tau;
  const Vector g0 = detail::acceleration(p, s.U, t);
  ImplicitStepResult r;
  r.state.n = s.n + 1;
  Vector U1 = s.U + tau * s.V + 0.5 * tau * tau * g0;
  if (p.constraint) p.constraint(U1, t + tau);
  Vector V1;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    V1 = s.V + 0.5 * tau * (g0 + detail::acceleration(p, U1, t + tau));
    Vector U2 = s.U + 0.5 * tau * (s.V + V1);
    if (p.constraint) p.constraint(U2, t + tau);
    const double scale = std::max(1.0, U2.cwiseAbs().maxCoeff());
    r.residual = (U2 - U1).cwiseAbs().maxCoeff();
    U1 = std::move(U2);
    r.iterations = it;
    if (!std::isfinite(r.residual)) throw ConvergenceError(r.residual, it);
    if (r.residual <= options.tol * scale) {
      r.state.U = std::move(U1);
      r.state.V = std::move(V1);
      return r;
    }
  }
  throw ConvergenceError(r.residual, options.max_iters);
}

[[nodiscard]] inline ImplicitStepResult step_nonlinear_im(const IntegratorState& s, const NonlinearRHS& rhs,
                                                          double tau, const FixedPointOptions& options = {}) {
  return step_nonlinear_im(s, NonlinearProblem{&rhs, {}, {}}, tau, options);
}

}  // namespace pdwave
