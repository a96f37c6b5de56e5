#pragma once

// Continuous problem: material, micromodulus kernels, pairwise forces and
// initial/forcing data for the 1D peridynamic equation
//
//   rho u_tt(x,t) = int f(x' - x, u(x',t) - u(x,t)) dx' + b(x,t).

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

namespace pdwave {

struct Material {
  double rho = 1.0;  ///< mass density
  double E = 1.0;    ///< Young modulus
  double l = 1.0;    ///< nonlocality length scale
  double L = 1.0;    ///< width of the initial datum

  void validate() const {
    if (!(rho > 0.0) || !(E > 0.0) || !(l > 0.0) || !(L > 0.0)) {
      throw std::invalid_argument("Material: rho, E, l and L must all be strictly positive");
    }
  }

  /// Classical wave speed sqrt(E/rho) of the local limit.
  [[nodiscard]] double wave_speed() const { return std::sqrt(E / rho); }
};

// ---------------------------------------------------------------------------
// Pairwise force models f(xi, eta)
// ---------------------------------------------------------------------------

/// f = c * s * sign(xi + eta), s = (|xi + eta| - |xi|) / |xi|. Singular at xi = 0.
struct BondStretch {
  double c = 1.0;
  double delta = 1.0;
};

/// f = c (|eta| - |xi|)^2 eta.
struct QuadraticStretch {
  double c = 1.0;
  double delta = 1.0;
};

/// f = a(|xi|) (|eta|^2 - |xi|^2) eta.
struct CubicKernel {
  std::function<double(double)> a;
  double delta = 1.0;
};

using ForceModel = std::variant<BondStretch, QuadraticStretch, CubicKernel>;

[[nodiscard]] inline double horizon(const ForceModel& model) {
  return std::visit([](const auto& m) { return m.delta; }, model);
}

[[nodiscard]] inline bool singular_at_zero(const ForceModel& model) {
  return std::holds_alternative<BondStretch>(model);
}

namespace detail {

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

inline void validate_force(const ForceModel& model) {
  std::visit(
      [](const auto& m) {
        if (!(m.delta > 0.0)) throw std::invalid_argument("ForceModel: horizon must be positive");
      },
      model);
  if (const auto* cubic = std::get_if<CubicKernel>(&model); cubic && !cubic->a) {
    throw std::invalid_argument("CubicKernel: coefficient function a(|xi|) is empty");
  }
}

}  // namespace detail

/// Pairwise force density f(xi, eta); zero beyond the horizon.
/// Throws std::domain_error for BondStretch at xi = 0.
[[nodiscard]] inline double eval_force(const ForceModel& model, double xi, double eta) {
  const double axi = std::abs(xi);
  if (axi > horizon(model)) return 0.0;
  if (const auto* bs = std::get_if<BondStretch>(&model)) {
    if (xi == 0.0) throw std::domain_error("BondStretch force is singular at xi = 0");
    const double y = xi + eta;
    const double stretch = (std::abs(y) - axi) / axi;
    return bs->c * stretch * detail::sign(y);
  }
  if (const auto* qs = std::get_if<QuadraticStretch>(&model)) {
    const double d = std::abs(eta) - axi;
    return qs->c * d * d * eta;
  }
  const auto& ck = std::get<CubicKernel>(model);
  return ck.a(axi) * (eta * eta - xi * xi) * eta;
}

/// Analytic partial derivative df/deta(xi, eta).
[[nodiscard]] inline double eval_force_deta(const ForceModel& model, double xi, double eta) {
  const double axi = std::abs(xi);
  if (axi > horizon(model)) return 0.0;
  if (const auto* bs = std::get_if<BondStretch>(&model)) {
    if (xi == 0.0) throw std::domain_error("BondStretch force is singular at xi = 0");
    // f = c (xi + eta)/|xi| - c sign(xi + eta): slope c/|xi| away from the jump at eta = -xi.
    return bs->c / axi;
  }
  if (const auto* qs = std::get_if<QuadraticStretch>(&model)) {
    const double ae = std::abs(eta);
    const double d = ae - axi;
    return qs->c * (d * d + 2.0 * d * ae);
  }
  const auto& ck = std::get<CubicKernel>(model);
  return ck.a(axi) * (3.0 * eta * eta - xi * xi);
}

// ---------------------------------------------------------------------------
// Micromodulus kernels C(xi)
// ---------------------------------------------------------------------------

/// C(xi) = 4E exp(-xi^2/l^2) / (l^3 sqrt(pi)).
struct GaussianInfiniteHorizon {
  Material material;
};

struct FiniteHorizon {
  std::function<double(double)> sample;  ///< evaluated for |xi| <= delta only
  double delta = 1.0;
  bool singular_at_zero = false;
};

/// C(xi) = df/deta(xi, 0) of the referenced force model.
struct LinearizedFromForce {
  std::shared_ptr<const ForceModel> force;
};

struct MicromodulusModel {
  std::variant<GaussianInfiniteHorizon, FiniteHorizon, LinearizedFromForce> variant;

  static MicromodulusModel gaussian(const Material& m) { return {GaussianInfiniteHorizon{m}}; }
  static MicromodulusModel finite(std::function<double(double)> sample, double delta) {
    return {FiniteHorizon{std::move(sample), delta, false}};
  }
};

/// Horizon of the kernel; +infinity for the Gaussian.
[[nodiscard]] inline double horizon(const MicromodulusModel& model) {
  struct V {
    double operator()(const GaussianInfiniteHorizon&) const {
      return std::numeric_limits<double>::infinity();
    }
    double operator()(const FiniteHorizon& f) const { return f.delta; }
    double operator()(const LinearizedFromForce& f) const { return horizon(*f.force); }
  };
  return std::visit(V{}, model.variant);
}

[[nodiscard]] inline bool singular_at_zero(const MicromodulusModel& model) {
  if (const auto* fh = std::get_if<FiniteHorizon>(&model.variant)) return fh->singular_at_zero;
  if (const auto* lin = std::get_if<LinearizedFromForce>(&model.variant)) {
    return singular_at_zero(*lin->force);
  }
  return false;
}

[[nodiscard]] inline double gaussian_micromodulus(const Material& m, double xi) {
  const double l = m.l;
  return 4.0 * m.E * std::exp(-(xi * xi) / (l * l)) / (l * l * l * std::sqrt(std::numbers::pi));
}

[[nodiscard]] inline double eval_micromodulus(const MicromodulusModel& model, double xi) {
  struct V {
    double xi;
    double operator()(const GaussianInfiniteHorizon& g) const {
      return gaussian_micromodulus(g.material, xi);
    }
    double operator()(const FiniteHorizon& f) const {
      const double axi = std::abs(xi);
      if (axi > f.delta) return 0.0;
      if (f.singular_at_zero && xi == 0.0) {
        throw std::domain_error("micromodulus is singular at xi = 0");
      }
      return f.sample(axi);
    }
    double operator()(const LinearizedFromForce& f) const {
      return eval_force_deta(*f.force, xi, 0.0);
    }
  };
  return std::visit(V{xi}, model.variant);
}

/// Linearization C(xi) = df/deta(xi, 0) as a finite-horizon kernel.
[[nodiscard]] inline MicromodulusModel linearize_force(const ForceModel& model) {
  detail::validate_force(model);
  auto shared = std::make_shared<const ForceModel>(model);
  FiniteHorizon fh;
  fh.delta = horizon(model);
  fh.singular_at_zero = singular_at_zero(model);
  fh.sample = [shared](double axi) { return eval_force_deta(*shared, axi, 0.0); };
  return {std::move(fh)};
}

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

using SpaceFunction = std::function<double(double)>;
using SpaceTimeFunction = std::function<double(double, double)>;

struct ProblemSpec {
  Material material;
  std::variant<MicromodulusModel, ForceModel> interaction = MicromodulusModel::gaussian(Material{});
  SpaceFunction u0;
  SpaceFunction v0;
  SpaceTimeFunction b;  ///< empty means b = 0
  double T = 1.0;

  void validate() const {
    material.validate();
    if (!(T > 0.0)) throw std::invalid_argument("ProblemSpec: time horizon T must be positive");
    if (!u0 || !v0) throw std::invalid_argument("ProblemSpec: initial data must be set");
  }

  [[nodiscard]] bool unforced() const { return !b; }
};

/// u0(x) = exp(-(x/L)^2), v0 = 0, b = 0 with the Gaussian kernel.
[[nodiscard]] inline ProblemSpec gaussian_pulse_problem(const Material& m, double T) {
  ProblemSpec p;
  p.material = m;
  p.interaction = MicromodulusModel::gaussian(m);
  const double L = m.L;
  p.u0 = [L](double x) { return std::exp(-(x / L) * (x / L)); };
  p.v0 = [](double) { return 0.0; };
  p.T = T;
  return p;
}

}  // namespace pdwave
