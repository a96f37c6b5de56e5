#pragma once

// Spatial grids and assembly of the stiffness operator
//
//   Omega^2 = (h/rho) K,   k_ij = alpha_i delta_ij - w_j C(x_j - x_i),
//   alpha_i = sum_k w_k C(x_k - x_i),
//
// for the composite midpoint and composite two-point Gauss rules.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdwave/model.hpp"

namespace pdwave {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class QuadratureScheme { MidpointRule, GaussTwoPoint };

[[nodiscard]] inline const char* to_string(QuadratureScheme s) {
  return s == QuadratureScheme::MidpointRule ? "midpoint" : "gauss2";
}

/// Nominal order of accuracy of the quadrature rule.
[[nodiscard]] inline double quadrature_order(QuadratureScheme s) {
  return s == QuadratureScheme::MidpointRule ? 2.0 : 4.0;
}

struct Grid {
  QuadratureScheme scheme = QuadratureScheme::MidpointRule;
  std::size_t N = 0;  ///< node count is N + 1
  double h = 0.0;     ///< subinterval length
  double D = 0.0;     ///< half-width of the truncated domain
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// Midpoints of the N+1 cells of [-(N+1)h/2, (N+1)h/2]; unit weights.
[[nodiscard]] inline Grid build_midpoint_grid(std::size_t N, double h) {
  if (N == 0 || N % 2 != 0) throw std::invalid_argument("midpoint grid: N must be even and positive");
  if (!(h > 0.0)) throw std::invalid_argument("midpoint grid: step h must be positive");
  Grid g;
  g.scheme = QuadratureScheme::MidpointRule;
  g.N = N;
  g.h = h;
  g.D = 0.5 * static_cast<double>(N + 1) * h;
  g.nodes.resize(N + 1);
  g.weights.assign(N + 1, 1.0);
  const double half = 0.5 * static_cast<double>(N);
  for (std::size_t j = 0; j <= N; ++j) g.nodes[j] = (static_cast<double>(j) - half) * h;
  return g;
}

/// Two Gauss points m_j -/+ h/(2 sqrt 3) in each of the M cells of [-D, D];
/// N = 2M - 1, weights 1/2.
[[nodiscard]] inline Grid build_gauss_grid(std::size_t M, double D) {
  if (M == 0) throw std::invalid_argument("Gauss grid: M must be positive");
  if (!(D > 0.0)) throw std::invalid_argument("Gauss grid: half-width D must be positive");
  Grid g;
  g.scheme = QuadratureScheme::GaussTwoPoint;
  g.N = 2 * M - 1;
  g.h = 2.0 * D / static_cast<double>(M);
  g.D = D;
  g.nodes.resize(2 * M);
  g.weights.assign(2 * M, 0.5);
  const double offset = g.h / (2.0 * std::sqrt(3.0));
  for (std::size_t j = 0; j < M; ++j) {
    const double mid = -D + (static_cast<double>(j) + 0.5) * g.h;
    g.nodes[2 * j] = mid - offset;
    g.nodes[2 * j + 1] = mid + offset;
  }
  return g;
}

/// Grid covering [-D, D] with step h: N = 2D/h for the midpoint rule and
/// M = 2D/h cells for the Gauss rule.
[[nodiscard]] inline Grid build_grid(QuadratureScheme scheme, double D, double h) {
  if (!(h > 0.0) || !(D > 0.0)) throw std::invalid_argument("build_grid: D and h must be positive");
  const auto cells = static_cast<std::size_t>(std::llround(2.0 * D / h));
  if (scheme == QuadratureScheme::MidpointRule) return build_midpoint_grid(cells + cells % 2, h);
  return build_gauss_grid(cells, D);
}

/// Values f(x_j) at the grid nodes.
template <typename F>
[[nodiscard]] Vector sample_function(const Grid& grid, F&& f) {
  Vector out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) out[static_cast<Eigen::Index>(j)] = f(grid.nodes[j]);
  return out;
}

/// Symmetric band matrix with half-bandwidth r; row i holds columns i-r..i+r.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(Eigen::Index n, Eigen::Index r) : n_(n), r_(r), data_(Matrix::Zero(n, 2 * r + 1)) {}

  [[nodiscard]] Eigen::Index size() const { return n_; }
  [[nodiscard]] Eigen::Index radius() const { return r_; }

  [[nodiscard]] double at(Eigen::Index i, Eigen::Index j) const {
    const Eigen::Index d = j - i;
    if (d < -r_ || d > r_) return 0.0;
    return data_(i, d + r_);
  }
  double& ref(Eigen::Index i, Eigen::Index j) { return data_(i, j - i + r_); }

  [[nodiscard]] Vector apply(const Vector& v) const {
    Vector out = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - r_);
      const Eigen::Index hi = std::min<Eigen::Index>(n_ - 1, i + r_);
      double s = 0.0;
      for (Eigen::Index j = lo; j <= hi; ++j) s += data_(i, j - i + r_) * v[j];
      out[i] = s;
    }
    return out;
  }

  [[nodiscard]] Matrix dense() const {
    Matrix m = Matrix::Zero(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - r_); j <= std::min<Eigen::Index>(n_ - 1, i + r_); ++j)
        m(i, j) = at(i, j);
    return m;
  }

 private:
  Eigen::Index n_ = 0;
  Eigen::Index r_ = 0;
  Matrix data_;
};

struct Regularization {
  bool applied = false;
  double exponent = 0.0;
  double shift = 0.0;  ///< h^exponent
};

struct StiffnessOperator {
  Matrix omega2;                       ///< (h/rho) K, plus the shift if regularized
  Vector row_sums;                     ///< alpha_i = sum_k w_k C_ik (k != i)
  double h = 0.0;
  double rho = 1.0;
  Regularization regularization;
  std::optional<Eigen::Index> band_radius;
  std::optional<BandedMatrix> banded;  ///< same entries as omega2 inside the band

  [[nodiscard]] Eigen::Index size() const { return omega2.rows(); }

  [[nodiscard]] Vector apply(const Vector& v) const {
    if (banded) return banded->apply(v);
    return omega2 * v;
  }
};

/// Relative cut below which Gaussian tail entries are dropped.
inline constexpr double kGaussianTailCut = 1e-16;

[[nodiscard]] inline StiffnessOperator assemble_stiffness(const Grid& grid, const MicromodulusModel& kernel,
                                                          const Material& material) {
  material.validate();
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (n == 0) throw std::invalid_argument("assemble_stiffness: empty grid");
  for (std::size_t j = 1; j < grid.weights.size(); ++j) {
    if (grid.weights[j] != grid.weights[0]) {
      throw std::invalid_argument("assemble_stiffness: non-constant weights give a nonsymmetric K");
    }
  }
  const double w = grid.weights[0];
  double cutoff = horizon(kernel);
  if (std::holds_alternative<GaussianInfiniteHorizon>(kernel.variant)) {
    const double l = std::get<GaussianInfiniteHorizon>(kernel.variant).material.l;
    cutoff = l * std::sqrt(-std::log(kGaussianTailCut));
  }

  Matrix k = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double xi = grid.nodes[j] - grid.nodes[i];
      if (xi > cutoff) break;  // nodes are increasing
      if (xi == 0.0) {
        throw std::domain_error("assemble_stiffness: coincident nodes would sample the kernel at xi = 0");
      }
      const double c = w * eval_micromodulus(kernel, xi);
      k(i, j) = -c;
      k(j, i) = -c;
    }
  }
  StiffnessOperator op;
  op.h = grid.h;
  op.rho = material.rho;
  op.row_sums.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) s -= k(i, j);
    op.row_sums[i] = s;
    k(i, i) = s;
  }
  op.omega2 = (grid.h / material.rho) * k;

  const double delta = horizon(kernel);
  if (std::isfinite(delta)) {
    const auto r = static_cast<Eigen::Index>(std::floor(delta / grid.h * (1.0 + 1e-12)));
    op.band_radius = r;
    // Gauss nodes are not equispaced: take the widest index distance actually coupled.
    Eigen::Index radius = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n && op.omega2(i, j) != 0.0; ++j) radius = std::max(radius, j - i);
    if (grid.scheme == QuadratureScheme::GaussTwoPoint) op.band_radius = radius;
    const Eigen::Index rb = std::max(radius, *op.band_radius);
    BandedMatrix band(n, rb);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - rb); j <= std::min<Eigen::Index>(n - 1, i + rb); ++j)
        band.ref(i, j) = op.omega2(i, j);
    op.banded = std::move(band);
  }
  return op;
}

/// Omega^2 <- Omega^2 + h^s I.
[[nodiscard]] inline StiffnessOperator regularize(StiffnessOperator op, double exponent) {
  if (op.regularization.applied) throw std::logic_error("regularize: operator is already regularized");
  const double shift = std::pow(op.h, exponent);
  op.omega2.diagonal().array() += shift;
  if (op.banded) {
    for (Eigen::Index i = 0; i < op.banded->size(); ++i) op.banded->ref(i, i) += shift;
  }
  op.regularization = {true, exponent, shift};
  return op;
}

/// Plain-text export: one row per line, whitespace separated, %.17e.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17e", m(i, j));
      if (j) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace pdwave
