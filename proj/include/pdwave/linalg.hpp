#pragma once

// Dense symmetric eigendecomposition, spectral matrix functions for the
// trigonometric integrators and SPD solves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdwave {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// sin(x)/x with the series branch near zero.
[[nodiscard]] inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// (1 - cos x)/x^2, the kernel of the exact constant-forcing integral.
[[nodiscard]] inline double one_minus_cos_over_sq(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return 0.5 - x2 / 24.0 + x2 * x2 / 720.0;
  }
  const double s = std::sin(0.5 * x) / x;
  return 2.0 * s * s;
}

struct SymmetricEigen {
  Vector eigenvalues;  ///< ascending
  Matrix eigenvectors; ///< orthonormal columns

  [[nodiscard]] Eigen::Index size() const { return eigenvalues.size(); }

  [[nodiscard]] Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }

  /// Q f(lambda) Q^T for a scalar function of the eigenvalue.
  template <typename F>
  [[nodiscard]] Matrix apply_function(F&& f) const {
    Vector d(eigenvalues.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(eigenvalues[i]);
    Matrix scaled = eigenvectors * d.asDiagonal();
    Matrix out = scaled * eigenvectors.transpose();
    // Symmetrize away the rounding of the two products.
    return 0.5 * (out + out.transpose());
  }
};

enum class EigenMethod { Auto, Jacobi, TridiagonalQR };

inline constexpr Eigen::Index kJacobiMaxSize = 200;

namespace detail {

inline void require_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eig_symmetric: matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw std::invalid_argument("eig_symmetric: matrix is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  }
}

inline SymmetricEigen sort_ascending(Vector values, Matrix vectors) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  SymmetricEigen out;
  out.eigenvalues.resize(values.size());
  out.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto ks = static_cast<Eigen::Index>(k);
    out.eigenvalues[ks] = values[order[k]];
    out.eigenvectors.col(ks) = vectors.col(order[k]);
  }
  return out;
}

}  // namespace detail

/// Cyclic Jacobi rotations. Stops when the off-diagonal Frobenius norm falls
/// below 1e-13 ||A||_F or after 30 sweeps.
[[nodiscard]] inline SymmetricEigen jacobi_eigen(const Matrix& input) {
  detail::require_symmetric(input);
  const Eigen::Index n = input.rows();
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double threshold = 1e-13 * a.norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < 30 && off_norm() > threshold; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p,q) rotation; columns then rows.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return detail::sort_ascending(a.diagonal(), v);
}

/// Householder tridiagonalization + implicit QR (Eigen's self-adjoint solver).
[[nodiscard]] inline SymmetricEigen tridiagonal_qr_eigen(const Matrix& input) {
  detail::require_symmetric(input);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (input + input.transpose()));
  if (solver.info() != Eigen::Success) throw std::runtime_error("eig_symmetric: QR iteration did not converge");
  return detail::sort_ascending(solver.eigenvalues(), solver.eigenvectors());
}

[[nodiscard]] inline SymmetricEigen eig_symmetric(const Matrix& a, EigenMethod method = EigenMethod::Auto) {
  if (method == EigenMethod::Auto) {
    method = a.rows() <= kJacobiMaxSize ? EigenMethod::Jacobi : EigenMethod::TridiagonalQR;
  }
  return method == EigenMethod::Jacobi ? jacobi_eigen(a) : tridiagonal_qr_eigen(a);
}

/// Unique SPD square root; every eigenvalue must be positive.
[[nodiscard]] inline Matrix matrix_sqrt_spd(const SymmetricEigen& eig) {
  if (eig.size() > 0 && !(eig.eigenvalues.minCoeff() > 0.0)) {
    throw std::domain_error("matrix_sqrt_spd: nonpositive eigenvalue " +
                            std::to_string(eig.eigenvalues.minCoeff()) +
                            "; regularize Omega^2 (add h^s I) first");
  }
  return eig.apply_function([](double lambda) { return std::sqrt(lambda); });
}

/// What a MatrixFunctionCache precomputes beyond the free propagator.
struct TrigCacheOptions {
  bool square_root = false;      ///< Omega itself
  bool midpoint_forcing = false; ///< cos, sinc at tau/2 (order-2 scheme)
  bool gauss_forcing = false;    ///< cos, sinc at tau*alpha/2, tau*beta/2 (order-4 scheme)
  bool exact_constant_forcing = false; ///< tau^2 (1 - cos)/x^2 for autonomous forcing
};

inline constexpr double kGaussAlpha = 1.0 + 0.57735026918962576451;  // 1 + 1/sqrt(3)
inline constexpr double kGaussBeta = 1.0 - 0.57735026918962576451;   // 1 - 1/sqrt(3)

/// Precomputed matrix functions of Omega for one time step tau. Eigenvalues of
/// Omega^2 may be zero (sinc(0) = 1); negative values round-off is clamped.
struct MatrixFunctionCache {
  double tau = 0.0;
  SymmetricEigen eig;
  Matrix omega;                  ///< empty unless requested
  Matrix cos_tau_omega;          ///< cos(tau Omega)
  Matrix tau_sinc_tau_omega;     ///< tau sinc(tau Omega)
  Matrix omega_sin_tau_omega;    ///< Omega sin(tau Omega)
  Matrix cos_half;               ///< cos(tau Omega / 2)
  Matrix half_tau2_sinc_half;    ///< (tau^2/2) sinc(tau Omega / 2)
  Matrix cos_alpha, cos_beta;    ///< cos(tau alpha Omega / 2), cos(tau beta Omega / 2)
  Matrix sinc_alpha, sinc_beta;  ///< sinc(tau alpha Omega / 2), sinc(tau beta Omega / 2)
  Matrix exact_forcing_u;        ///< tau^2 (1 - cos(tau Omega))/(tau Omega)^2

  [[nodiscard]] Eigen::Index size() const { return eig.size(); }
};

[[nodiscard]] inline MatrixFunctionCache build_trig_cache(const SymmetricEigen& eig, double tau,
                                                          const TrigCacheOptions& options = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("build_trig_cache: tau must be positive");
  MatrixFunctionCache c;
  c.tau = tau;
  c.eig = eig;
  auto root = [](double lambda) { return std::sqrt(std::max(lambda, 0.0)); };
  c.cos_tau_omega = eig.apply_function([&](double l) { return std::cos(tau * root(l)); });
  c.tau_sinc_tau_omega = eig.apply_function([&](double l) { return tau * sinc(tau * root(l)); });
  c.omega_sin_tau_omega = eig.apply_function([&](double l) { return root(l) * std::sin(tau * root(l)); });
  if (options.square_root) c.omega = eig.apply_function(root);
  if (options.midpoint_forcing) {
    c.cos_half = eig.apply_function([&](double l) { return std::cos(0.5 * tau * root(l)); });
    c.half_tau2_sinc_half =
        eig.apply_function([&](double l) { return 0.5 * tau * tau * sinc(0.5 * tau * root(l)); });
  }
  if (options.gauss_forcing) {
    const double ta = 0.5 * tau * kGaussAlpha;
    const double tb = 0.5 * tau * kGaussBeta;
    c.cos_alpha = eig.apply_function([&](double l) { return std::cos(ta * root(l)); });
    c.cos_beta = eig.apply_function([&](double l) { return std::cos(tb * root(l)); });
    c.sinc_alpha = eig.apply_function([&](double l) { return sinc(ta * root(l)); });
    c.sinc_beta = eig.apply_function([&](double l) { return sinc(tb * root(l)); });
  }
  if (options.exact_constant_forcing) {
    c.exact_forcing_u =
        eig.apply_function([&](double l) { return tau * tau * one_minus_cos_over_sq(tau * root(l)); });
  }
  return c;
}

/// Cholesky factorization of an SPD matrix, reusable across solves.
class SpdFactorization {
 public:
  explicit SpdFactorization(const Matrix& a) : llt_(a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("solve_spd: matrix is not square");
    if (llt_.info() != Eigen::Success) {
      throw std::domain_error("solve_spd: matrix is not symmetric positive definite");
    }
  }

  [[nodiscard]] Vector solve(const Vector& rhs) const {
    if (rhs.size() != llt_.rows()) throw std::invalid_argument("solve_spd: size mismatch");
    return llt_.solve(rhs);
  }

 private:
  Eigen::LLT<Matrix> llt_;
};

[[nodiscard]] inline Vector solve_spd(const Matrix& a, const Vector& rhs) {
  return SpdFactorization(a).solve(rhs);
}

}  // namespace pdwave
