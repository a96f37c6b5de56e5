#pragma once

// Reference solutions: the exact solution of the linear Gaussian-kernel
// problem with u0 = exp(-(x/L)^2), v0 = 0, the classical d'Alembert limit and
// the sine series used for the nonlinear bar, plus max-norm error reports.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "pdwave/integrators.hpp"
#include "pdwave/model.hpp"
#include "pdwave/numeric.hpp"

namespace pdwave {

/// Parameters of u*(x, t) = (2/sqrt(pi)) int_0^S exp(-s^2) cos(2 s x / L)
///   cos(t (2/l) sqrt(E/rho) sqrt(1 - exp(-s^2 l^2 / L^2))) ds.
struct ExactSolutionParams {
  Material material;
  double tol = 1e-10;

  void validate() const {
    material.validate();
    if (!(tol > 0.0) || tol > 1e-6) throw std::invalid_argument("peridynamic_exact: tol must lie in (0, 1e-6]");
  }

  /// Upper limit S = sqrt(ln(1/tol)) + 2; the tail is below (sqrt(pi)/2) erfc(S) < tol.
  [[nodiscard]] double truncation() const { return std::sqrt(std::log(1.0 / tol)) + 2.0; }
};

namespace detail {

struct ExactIntegrand {
  double x, t, L, freq, ratio;  // freq = (2/l) sqrt(E/rho), ratio = l/L

  ExactIntegrand(const Material& m, double x_, double t_)
      : x(x_), t(t_), L(m.L), freq(2.0 / m.l * std::sqrt(m.E / m.rho)), ratio(m.l / m.L) {}

  [[nodiscard]] double dispersion(double s) const {
    const double a = s * ratio;
    return freq * std::sqrt(-std::expm1(-a * a));
  }
  double operator()(double s) const {
    return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-s * s) * std::cos(2.0 * s * x / L) *
           std::cos(t * dispersion(s));
  }
};

}  // namespace detail

/// Adaptive Gauss-Kronrod evaluation of u*(x, t).
[[nodiscard]] inline double peridynamic_exact(double x, double t, const ExactSolutionParams& p = {}) {
  p.validate();
  detail::ExactIntegrand f(p.material, x, t);
  // Quadrature and truncation share the budget.
  return numeric::integrate_gauss_kronrod(f, 0.0, p.truncation(), 0.25 * p.tol).value;
}

/// Independent rule: adaptive Simpson.
[[nodiscard]] inline double peridynamic_exact_simpson(double x, double t, const ExactSolutionParams& p = {}) {
  p.validate();
  detail::ExactIntegrand f(p.material, x, t);
  return numeric::integrate_adaptive_simpson(f, 0.0, p.truncation(), 0.05 * p.tol, 64).value;
}

/// Independent rule: composite Gauss-Legendre panels.
[[nodiscard]] inline double peridynamic_exact_gauss_legendre(double x, double t, std::size_t panels = 256,
                                                             std::size_t order = 16,
                                                             const ExactSolutionParams& p = {}) {
  p.validate();
  detail::ExactIntegrand f(p.material, x, t);
  return numeric::integrate_gauss_legendre_panels(f, 0.0, p.truncation(), panels, numeric::gauss_legendre(order));
}

/// Memoized u*, keyed by (x, t, tol) quantized to 1e-14. Safe for concurrent use.
class ExactSolutionCache {
 public:
  explicit ExactSolutionCache(ExactSolutionParams p = {}) : params_(std::move(p)) { params_.validate(); }

  [[nodiscard]] double operator()(double x, double t) const {
    constexpr double q = 1e14;
    if (std::abs(x) * q > 9e18 || std::abs(t) * q > 9e18) return peridynamic_exact(x, t, params_);
    const Key key{std::llround(x * q), std::llround(t * q), std::llround(params_.tol * 1e24)};
    {
      std::lock_guard lock(mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) {
        ++hits_;
        return it->second;
      }
    }
    const double value = peridynamic_exact(x, t, params_);
    std::lock_guard lock(mutex_);
    memo_.emplace(key, value);
    return value;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return memo_.size();
  }
  [[nodiscard]] std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  [[nodiscard]] const ExactSolutionParams& params() const { return params_; }

 private:
  using Key = std::tuple<long long, long long, long long>;
  ExactSolutionParams params_;
  mutable std::mutex mutex_;
  mutable std::map<Key, double> memo_;
  mutable std::size_t hits_ = 0;
};

/// u*(x_j, t) for a whole set of nodes at once. A fixed composite
/// Gauss-Legendre rule is chosen by doubling the panel count until two
/// successive rules agree to tol at every node for t = t_max; that rule is
/// then used for every t <= t_max. The quadrature weights times
/// exp(-s^2) cos(t w(s)) are formed once per t and contracted with cos(2 s x/L).
class ExactProfileEvaluator {
 public:
  ExactProfileEvaluator(std::vector<double> xs, double t_max, ExactSolutionParams p = {},
                        bool cache_basis = true)
      : params_(std::move(p)), xs_(std::move(xs)), t_max_(t_max) {
    params_.validate();
    const auto rule = numeric::gauss_legendre(kOrder);
    // The check runs on a subsample that keeps the extreme nodes.
    const std::size_t stride = std::max<std::size_t>(1, xs_.size() / 2000);
    for (std::size_t j = 0; j < xs_.size(); j += stride) check_.push_back(xs_[j]);
    if (!xs_.empty() && check_.back() != xs_.back()) check_.push_back(xs_.back());
    std::size_t panels = 8;
    Vector previous = profile_with(build_nodes(panels, rule), t_max);
    for (;;) {
      panels *= 2;
      auto nodes = build_nodes(panels, rule);
      Vector current = profile_with(nodes, t_max);
      const double diff = check_.empty() ? 0.0 : (current - previous).cwiseAbs().maxCoeff();
      if (diff <= params_.tol || panels >= kMaxPanels) {
        s_ = std::move(nodes.first);
        w_ = std::move(nodes.second);
        converged_ = diff <= params_.tol;
        break;
      }
      previous = std::move(current);
    }
    if (cache_basis) {
      basis_.resize(static_cast<Eigen::Index>(xs_.size()), s_.size());
      const double L = params_.material.L;
      for (Eigen::Index q = 0; q < s_.size(); ++q)
        for (std::size_t j = 0; j < xs_.size(); ++j)
          basis_(static_cast<Eigen::Index>(j), q) = std::cos(2.0 * s_[q] * xs_[j] / L);
    }
  }

  [[nodiscard]] Vector operator()(double t) const {
    if (std::abs(t) > t_max_ * (1.0 + 1e-12)) {
      throw std::invalid_argument("ExactProfileEvaluator: t exceeds the t_max the rule was checked for");
    }
    const Vector g = weighted_time_factor(s_, w_, t);
    if (basis_.size() > 0) return basis_ * g;
    return contract(s_, g, xs_);
  }

  [[nodiscard]] bool converged() const { return converged_; }
  [[nodiscard]] Eigen::Index quadrature_nodes() const { return s_.size(); }
  [[nodiscard]] const std::vector<double>& nodes() const { return xs_; }

 private:
  static constexpr std::size_t kOrder = 20;
  static constexpr std::size_t kMaxPanels = 1u << 14;

  std::pair<Vector, Vector> build_nodes(std::size_t panels, const numeric::GaussLegendreRule& rule) const {
    const double S = params_.truncation();
    const double width = S / static_cast<double>(panels);
    Vector s(static_cast<Eigen::Index>(panels * kOrder));
    Vector w(s.size());
    Eigen::Index k = 0;
    for (std::size_t p = 0; p < panels; ++p) {
      const double c = (static_cast<double>(p) + 0.5) * width;
      for (std::size_t i = 0; i < kOrder; ++i, ++k) {
        s[k] = c + 0.5 * width * rule.nodes[i];
        w[k] = 0.5 * width * rule.weights[i];
      }
    }
    return {std::move(s), std::move(w)};
  }

  Vector weighted_time_factor(const Vector& s, const Vector& w, double t) const {
    detail::ExactIntegrand f(params_.material, 0.0, t);
    Vector g(s.size());
    for (Eigen::Index q = 0; q < s.size(); ++q) {
      g[q] = w[q] * 2.0 / std::sqrt(std::numbers::pi) * std::exp(-s[q] * s[q]) * std::cos(t * f.dispersion(s[q]));
    }
    return g;
  }

  Vector contract(const Vector& s, const Vector& g, const std::vector<double>& xs) const {
    const double L = params_.material.L;
    Vector out(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      double sum = 0.0;
      for (Eigen::Index q = 0; q < s.size(); ++q) sum += g[q] * std::cos(2.0 * s[q] * xs[j] / L);
      out[static_cast<Eigen::Index>(j)] = sum;
    }
    return out;
  }

  Vector profile_with(const std::pair<Vector, Vector>& nodes, double t) const {
    return contract(nodes.first, weighted_time_factor(nodes.first, nodes.second, t), check_);
  }

  ExactSolutionParams params_;
  std::vector<double> xs_;
  std::vector<double> check_;
  double t_max_;
  Vector s_, w_;
  Matrix basis_;
  bool converged_ = false;
};

/// Classical limit: (u0(x - ct) + u0(x + ct)) / 2.
[[nodiscard]] inline double wave_dalembert(const SpaceFunction& u0, double x, double t, double c) {
  return 0.5 * (u0(x - c * t) + u0(x + c * t));
}

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;  ///< bound on |value - limit|
};

/// (8 eps L/pi^2) sum_{k<K} (-1)^k/(2k+1)^2 sin((2k+1) pi x/(2L)) cos(sqrt(E/rho) (2k+1) pi t/(2L)).
[[nodiscard]] inline SeriesValue nonlinear_series(double x, double t, std::size_t K_terms, double epsilon, double L,
                                                  double E, double rho) {
  if (K_terms < 1) throw std::invalid_argument("nonlinear_series: K_terms must be at least 1");
  if (!(L > 0.0) || !(E > 0.0) || !(rho > 0.0)) throw std::invalid_argument("nonlinear_series: L, E, rho > 0");
  const double c = std::sqrt(E / rho);
  const double a = std::numbers::pi / (2.0 * L);
  double sum = 0.0;
  // Summed from the smallest term up.
  for (std::size_t kk = K_terms; kk-- > 0;) {
    const double m = 2.0 * static_cast<double>(kk) + 1.0;
    const double sign = (kk % 2 == 0) ? 1.0 : -1.0;
    sum += sign / (m * m) * std::sin(m * a * x) * std::cos(c * m * a * t);
  }
  const double pref = 8.0 * epsilon * L / (std::numbers::pi * std::numbers::pi);
  // sum_{k >= K} (2k+1)^-2 <= int_{K-1/2}^inf (2k+1)^-2 dk = 1/(4K).
  return {pref * sum, pref / (4.0 * static_cast<double>(K_terms))};
}

/// K -> infinity limit of the series: half-sum of two travelling copies of the
/// 4L-periodic triangle wave that is odd about 0, even about L and equal to
/// eps*x on [-L, L].
[[nodiscard]] inline double triangle_wave(double y, double epsilon, double L) {
  const double period = 4.0 * L;
  double r = std::fmod(y + 2.0 * L, period);
  if (r < 0.0) r += period;
  r -= 2.0 * L;  // r in [-2L, 2L)
  if (r > L) return epsilon * (2.0 * L - r);
  if (r < -L) return epsilon * (-2.0 * L - r);
  return epsilon * r;
}

[[nodiscard]] inline double nonlinear_series_limit(double x, double t, double epsilon, double L, double E,
                                                   double rho) {
  const double c = std::sqrt(E / rho);
  return 0.5 * (triangle_wave(x - c * t, epsilon, L) + triangle_wave(x + c * t, epsilon, L));
}

// ---------------------------------------------------------------------------
// Error norms
// ---------------------------------------------------------------------------

struct ErrorReport {
  std::vector<double> per_step;  ///< e_k = max_i |U_i(t_k) - u*(x_i, t_k)|, k = 1..N_T
  double global_max = 0.0;       ///< max_k e_k; +inf once the solution is non-finite
  std::size_t argmax_step = 0;
  bool diverged = false;  ///< some |U| exceeded the blow-up threshold
};

inline constexpr double kBlowUpThreshold = 1e12;

/// Accumulates e_k one step at a time so trajectories need not be stored.
class ErrorAccumulator {
 public:
  void add(std::size_t step, const Vector& numeric, const Vector& reference) {
    if (numeric.size() != reference.size()) throw std::invalid_argument("error_norms: size mismatch");
    double e = 0.0;
    bool finite = true;
    for (Eigen::Index i = 0; i < numeric.size(); ++i) {
      if (!std::isfinite(numeric[i])) {
        finite = false;
        break;
      }
      if (std::abs(numeric[i]) > kBlowUpThreshold) report_.diverged = true;
      e = std::max(e, std::abs(numeric[i] - reference[i]));
    }
    if (!finite) {
      e = std::numeric_limits<double>::infinity();
      report_.diverged = true;
    }
    report_.per_step.push_back(e);
    if (e > report_.global_max || report_.per_step.size() == 1) {
      report_.global_max = e;
      report_.argmax_step = step;
    }
  }

  [[nodiscard]] const ErrorReport& report() const { return report_; }

 private:
  ErrorReport report_;
};

/// Errors of a stored trajectory (state 0 skipped) against u(x, t).
[[nodiscard]] inline ErrorReport error_norms(const Trajectory& trajectory,
                                             const std::function<double(double, double)>& reference,
                                             const Grid& grid, double tau) {
  ErrorAccumulator acc;
  for (const auto& s : trajectory) {
    if (s.n == 0) continue;
    const double t = static_cast<double>(s.n) * tau;
    const Vector ref = sample_function(grid, [&](double x) { return reference(x, t); });
    acc.add(s.n, s.U, ref);
  }
  return acc.report();
}

/// log2(e_{i-1}/e_i) for consecutive rungs; the first entry is empty.
[[nodiscard]] inline std::vector<std::optional<double>> convergence_orders(const std::vector<double>& errors) {
  std::vector<std::optional<double>> out(errors.size());
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double r = errors[i - 1] / errors[i];
    if (std::isfinite(r) && r > 0.0) out[i] = std::log2(r);
  }
  return out;
}

/// Reference profile CSV: x,t,u.
inline void write_reference_csv(std::ostream& os, const std::vector<double>& xs, double t, const Vector& u) {
  os << "x,t,u\n";
  for (std::size_t j = 0; j < xs.size(); ++j) {
    os << detail::fmt17(xs[j]) << ',' << detail::fmt17(t) << ',' << detail::fmt17(u[static_cast<Eigen::Index>(j)])
       << '\n';
  }
}

}  // namespace pdwave
