#pragma once

// Fourier spectral semi-discretization on the periodic box [-M pi, M pi]:
// nodes x_j = j M pi / N (j = -N..N-1), coefficients for k = -N..N with the
// Nyquist pair halved (c_{+-N} = 2), and one scalar oscillator per mode.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdwave/linalg.hpp"
#include "pdwave/model.hpp"
#include "pdwave/numeric.hpp"
#include "pdwave/integrators.hpp"

namespace pdwave {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Sizes at or below this use the direct sum.
inline constexpr std::size_t kDirectDftMaxN = std::size_t{1} << 13;

enum class DftRoute { Auto, Direct, Fast };

[[nodiscard]] inline double endpoint_weight(long k, std::size_t N) {
  return static_cast<std::size_t>(std::labs(k)) == N ? 2.0 : 1.0;
}

[[nodiscard]] inline std::vector<double> spectral_nodes(double M, std::size_t N) {
  std::vector<double> x(2 * N);
  for (std::size_t m = 0; m < 2 * N; ++m) {
    x[m] = (static_cast<double>(m) - static_cast<double>(N)) * M * std::numbers::pi / static_cast<double>(N);
  }
  return x;
}

namespace detail {

inline void check_dft_sizes(std::size_t samples, std::size_t N) {
  if (N == 0) throw std::invalid_argument("dft: N must be positive");
  if (samples != 2 * N) {
    throw std::invalid_argument("dft: expected " + std::to_string(2 * N) + " samples, got " +
                                std::to_string(samples));
  }
}

// The phase of mode k at node j is pi k j / N whatever M is.
inline ComplexVector dft_direct(const ComplexVector& u, std::size_t N) {
  const auto n2 = static_cast<long>(2 * N);
  const long n = static_cast<long>(N);
  ComplexVector out(2 * N + 1);
  for (long k = -n; k <= n; ++k) {
    Complex sum = 0.0;
    for (long m = 0; m < n2; ++m) {
      const long j = m - n;
      // Reduce k*j mod 2N before forming the angle to keep it small.
      long r = (k * j) % n2;
      if (r < 0) r += n2;
      const double phase = -std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
      sum += u[static_cast<std::size_t>(m)] * Complex(std::cos(phase), std::sin(phase));
    }
    out[static_cast<std::size_t>(k + n)] = sum / (static_cast<double>(n2) * endpoint_weight(k, N));
  }
  return out;
}

inline ComplexVector idft_direct(const ComplexVector& c, std::size_t N) {
  const auto n2 = static_cast<long>(2 * N);
  const long n = static_cast<long>(N);
  ComplexVector out(2 * N);
  for (long m = 0; m < n2; ++m) {
    const long j = m - n;
    Complex sum = 0.0;
    for (long k = -n; k <= n; ++k) {
      long r = (k * j) % n2;
      if (r < 0) r += n2;
      const double phase = std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
      sum += c[static_cast<std::size_t>(k + n)] * Complex(std::cos(phase), std::sin(phase));
    }
    out[static_cast<std::size_t>(m)] = sum;
  }
  return out;
}

// With m = j + N, sum_j u_j e^{-i pi k j/N} = (-1)^k DFT_{2N}(u)[k mod 2N].
inline ComplexVector dft_fast(const ComplexVector& u, std::size_t N) {
  Eigen::FFT<double> fft;
  ComplexVector spec;
  fft.fwd(spec, u);
  const long n = static_cast<long>(N);
  const auto n2 = static_cast<long>(2 * N);
  ComplexVector out(2 * N + 1);
  for (long k = -n; k <= n; ++k) {
    const long idx = ((k % n2) + n2) % n2;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    out[static_cast<std::size_t>(k + n)] =
        sign * spec[static_cast<std::size_t>(idx)] / (static_cast<double>(n2) * endpoint_weight(k, N));
  }
  return out;
}

inline ComplexVector idft_fast(const ComplexVector& c, std::size_t N) {
  const long n = static_cast<long>(N);
  const auto n2 = static_cast<long>(2 * N);
  // Fold the Nyquist pair onto index N, apply (-1)^k and invert.
  ComplexVector folded(2 * N, Complex(0.0));
  for (long k = -n; k <= n; ++k) {
    const long idx = ((k % n2) + n2) % n2;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    folded[static_cast<std::size_t>(idx)] += sign * c[static_cast<std::size_t>(k + n)];
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  ComplexVector out;
  fft.inv(out, folded);
  return out;
}

inline bool use_fast(DftRoute route, std::size_t N) {
  return route == DftRoute::Fast || (route == DftRoute::Auto && N > kDirectDftMaxN);
}

}  // namespace detail

/// u~_k = 1/(2N c_k) sum_j u(x_j) e^{-i k x_j / M}, k = -N..N (index k + N).
[[nodiscard]] inline ComplexVector dft_forward(const ComplexVector& values, std::size_t N,
                                               DftRoute route = DftRoute::Auto) {
  detail::check_dft_sizes(values.size(), N);
  return detail::use_fast(route, N) ? detail::dft_fast(values, N) : detail::dft_direct(values, N);
}

[[nodiscard]] inline ComplexVector dft_forward(const std::vector<double>& values, std::size_t N,
                                               DftRoute route = DftRoute::Auto) {
  return dft_forward(ComplexVector(values.begin(), values.end()), N, route);
}

/// sum_{|k|<=N} u~_k e^{i k x_j / M} at the 2N nodes.
[[nodiscard]] inline ComplexVector dft_inverse(const ComplexVector& coefficients, std::size_t N,
                                               DftRoute route = DftRoute::Auto) {
  if (coefficients.size() != 2 * N + 1) throw std::invalid_argument("dft_inverse: expected 2N+1 coefficients");
  return detail::use_fast(route, N) ? detail::idft_fast(coefficients, N) : detail::idft_direct(coefficients, N);
}

/// omega^2(kappa) = 2 int_0^inf C(xi) (1 - cos kappa xi) dxi for the physical
/// wavenumber kappa. Closed form (4E/l^2)(1 - exp(-kappa^2 l^2/4)) for the
/// Gaussian kernel, adaptive quadrature otherwise.
[[nodiscard]] inline double frequency_omega_quadrature(const MicromodulusModel& kernel, double kappa,
                                                       double rel_tol = 1e-10) {
  if (kappa == 0.0) return 0.0;
  double upper = horizon(kernel);
  if (!std::isfinite(upper)) {
    const auto& g = std::get<GaussianInfiniteHorizon>(kernel.variant);
    // C(xi) < 1e-16 C(0) beyond this point.
    upper = g.material.l * std::sqrt(-std::log(1e-16));
  }
  auto integrand = [&](double xi) {
    return 2.0 * eval_micromodulus(kernel, xi) * (1.0 - std::cos(kappa * xi));
  };
  // Split at the oscillation period so each segment is smooth.
  const double period = 2.0 * std::numbers::pi / std::abs(kappa);
  const auto pieces = static_cast<std::size_t>(std::min(4096.0, std::ceil(upper / period)));
  double total = 0.0;
  double err = 0.0;
  const std::size_t n = std::max<std::size_t>(1, pieces);
  for (std::size_t p = 0; p < n; ++p) {
    const double a = upper * static_cast<double>(p) / static_cast<double>(n);
    const double b = upper * static_cast<double>(p + 1) / static_cast<double>(n);
    const auto r = numeric::integrate_gauss_kronrod(integrand, a, b, 1e-300, rel_tol * 1e-2);
    total += r.value;
    err += r.error;
  }
  if (!(err <= rel_tol * std::abs(total))) {
    throw std::runtime_error("frequency_omega: quadrature did not reach relative tolerance (estimate " +
                             std::to_string(err) + ")");
  }
  return total;
}

[[nodiscard]] inline double frequency_omega(const MicromodulusModel& kernel, double kappa) {
  if (const auto* g = std::get_if<GaussianInfiniteHorizon>(&kernel.variant)) {
    const double l = g->material.l;
    return 4.0 * g->material.E / (l * l) * -std::expm1(-kappa * kappa * l * l / 4.0);
  }
  return frequency_omega_quadrature(kernel, kappa);
}

/// u~_k(t) for u~'' + (omega^2/rho) u~ = b~/rho. Unforced: the closed form;
/// forced: scalar order-2 trigonometric steps of size tau, midpoint rule for b~.
[[nodiscard]] inline Complex evolve_mode(Complex u0, Complex v0, double omega2, double rho, double t,
                                         const std::function<Complex(double)>& b_tilde = {}, double tau = 0.0) {
  if (t < 0.0) throw std::invalid_argument("evolve_mode: t must be nonnegative");
  const double w = std::sqrt(std::max(omega2, 0.0) / rho);
  if (!b_tilde) return u0 * std::cos(w * t) + v0 * t * sinc(w * t);
  if (!(tau > 0.0)) throw std::invalid_argument("evolve_mode: forced modes need tau > 0");
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(t / tau * (1.0 - 1e-12))));
  const double dt = steps ? t / static_cast<double>(steps) : 0.0;
  const double x = w * dt;
  const double c = std::cos(x);
  const double sc = dt * sinc(x);
  const double ws = w * std::sin(x);
  Complex u = u0;
  Complex v = v0;
  for (std::size_t n = 0; n < steps; ++n) {
    const Complex b = b_tilde((static_cast<double>(n) + 0.5) * dt) / rho;
    const Complex un = c * u + sc * v + 0.5 * dt * dt * sinc(0.5 * x) * b;
    const Complex vn = -ws * u + c * v + dt * std::cos(0.5 * x) * b;
    u = un;
    v = vn;
  }
  return u;
}

struct SpectralModel {
  double M = 1.0;
  std::size_t N = 0;
  double rho = 1.0;
  std::vector<double> nodes;      ///< x_j, j = -N..N-1
  std::vector<double> omega2;     ///< k = -N..N (index k + N)
  std::vector<double> c;          ///< endpoint weights

  [[nodiscard]] double h() const { return M * std::numbers::pi / static_cast<double>(N); }
};

[[nodiscard]] inline SpectralModel build_spectral_model(const MicromodulusModel& kernel, const Material& m,
                                                        double M, std::size_t N) {
  if (!(M > 0.0) || N == 0) throw std::invalid_argument("spectral model: M and N must be positive");
  m.validate();
  SpectralModel s;
  s.M = M;
  s.N = N;
  s.rho = m.rho;
  s.nodes = spectral_nodes(M, N);
  s.omega2.resize(2 * N + 1);
  s.c.resize(2 * N + 1);
  const long n = static_cast<long>(N);
  for (long k = 0; k <= n; ++k) {
    const double w2 = frequency_omega(kernel, static_cast<double>(k) / M);
    s.omega2[static_cast<std::size_t>(n + k)] = w2;
    s.omega2[static_cast<std::size_t>(n - k)] = w2;
  }
  s.omega2[N] = 0.0;
  for (long k = -n; k <= n; ++k) s.c[static_cast<std::size_t>(k + n)] = endpoint_weight(k, N);
  return s;
}

struct SpectralOptions {
  DftRoute route = DftRoute::Auto;
  double forcing_tau = 1e-2;  ///< step of the scalar schemes when b != 0
  double boundary_warn_ratio = 1e-6;
};

struct SpectralSolution {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> u;   ///< u[i][j] = u_N(x_j, times[i])
  std::vector<double> max_imag_ratio;   ///< max |Im| / max |u| per time
  std::vector<std::string> warnings;
};

/// Projects u0, v0 (and b) onto the modes, evolves each mode and reconstructs
/// at the nodes for every requested time.
[[nodiscard]] inline SpectralSolution spectral_solve(const ProblemSpec& problem, double M, std::size_t N,
                                                     const std::vector<double>& times,
                                                     const SpectralOptions& options = {}) {
  problem.validate();
  const auto* kernel = std::get_if<MicromodulusModel>(&problem.interaction);
  if (!kernel) throw std::invalid_argument("spectral_solve: only linear (micromodulus) problems are supported");
  const SpectralModel model = build_spectral_model(*kernel, problem.material, M, N);

  auto transform = [&](const std::function<double(double)>& f) {
    ComplexVector v(2 * N);
    for (std::size_t j = 0; j < 2 * N; ++j) v[j] = f(model.nodes[j]);
    return dft_forward(v, N, options.route);
  };
  const ComplexVector u0 = transform(problem.u0);
  const ComplexVector v0 = transform(problem.v0);

  SpectralSolution out;
  out.x = model.nodes;
  out.times = times;
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("spectral_solve: negative output time");
    ComplexVector coeffs(2 * N + 1);
    if (problem.unforced()) {
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        coeffs[k] = evolve_mode(u0[k], v0[k], model.omega2[k], model.rho, t);
      }
    } else {
      // Step all modes together so b is transformed once per substep.
      const auto steps = static_cast<std::size_t>(std::ceil(t / options.forcing_tau * (1.0 - 1e-12)));
      const double dt = steps ? t / static_cast<double>(steps) : 0.0;
      ComplexVector u = u0;
      ComplexVector v = v0;
      for (std::size_t s = 0; s < steps; ++s) {
        const double tm = (static_cast<double>(s) + 0.5) * dt;
        const ComplexVector b = transform([&](double x) { return problem.b(x, tm); });
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
          const double w = std::sqrt(std::max(model.omega2[k], 0.0) / model.rho);
          const double x = w * dt;
          const Complex bk = b[k] / model.rho;
          const Complex un = std::cos(x) * u[k] + dt * sinc(x) * v[k] + 0.5 * dt * dt * sinc(0.5 * x) * bk;
          const Complex vn = -w * std::sin(x) * u[k] + std::cos(x) * v[k] + dt * std::cos(0.5 * x) * bk;
          u[k] = un;
          v[k] = vn;
        }
      }
      coeffs = u;
    }
    const ComplexVector nodal = dft_inverse(coeffs, N, options.route);
    std::vector<double> real(2 * N);
    double max_abs = 0.0;
    double max_imag = 0.0;
    for (std::size_t j = 0; j < 2 * N; ++j) {
      real[j] = nodal[j].real();
      max_abs = std::max(max_abs, std::abs(real[j]));
      max_imag = std::max(max_imag, std::abs(nodal[j].imag()));
    }
    out.max_imag_ratio.push_back(max_abs > 0.0 ? max_imag / max_abs : max_imag);
    const double boundary = std::max(std::abs(real.front()), std::abs(real.back()));
    if (boundary > options.boundary_warn_ratio * max_abs) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "t=%.6g: boundary value %.3e exceeds %.0e of max|u|; periodic wrap-around may contaminate "
                    "the solution",
                    t, boundary, options.boundary_warn_ratio);
      out.warnings.emplace_back(buf);
    }
    out.u.push_back(std::move(real));
  }
  return out;
}

struct SpectralErrors {
  double linf_relative = 0.0;  ///< max|u_N - u*| / max|u_N|
  double l2_relative = 0.0;    ///< sum|u_N - u*|^2 / sum|u_N|^2
  std::size_t points = 0;
};

/// Relative errors over the nodes inside [a, b].
[[nodiscard]] inline SpectralErrors spectral_errors(const std::vector<double>& x, const std::vector<double>& u,
                                                    const std::vector<double>& reference, double a, double b) {
  if (x.size() != u.size() || u.size() != reference.size()) throw std::invalid_argument("spectral_errors: sizes");
  double emax = 0.0, umax = 0.0, e2 = 0.0, u2 = 0.0;
  SpectralErrors r;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < a || x[j] > b) continue;
    const double d = u[j] - reference[j];
    emax = std::max(emax, std::abs(d));
    umax = std::max(umax, std::abs(u[j]));
    e2 += d * d;
    u2 += u[j] * u[j];
    ++r.points;
  }
  r.linf_relative = umax > 0.0 ? emax / umax : emax;
  r.l2_relative = u2 > 0.0 ? e2 / u2 : e2;
  return r;
}

/// Columns x,t,u_numeric,u_reference,abs_error for one output time.
inline void write_spectral_csv(std::ostream& os, const std::vector<double>& x, double t,
                               const std::vector<double>& u, const std::vector<double>& reference) {
  os << "x,t,u_numeric,u_reference,abs_error\n";
  for (std::size_t j = 0; j < x.size(); ++j) {
    os << detail::fmt17(x[j]) << ',' << detail::fmt17(t) << ',' << detail::fmt17(u[j]) << ','
       << detail::fmt17(reference[j]) << ',' << detail::fmt17(std::abs(u[j] - reference[j])) << '\n';
  }
}

}  // namespace pdwave
