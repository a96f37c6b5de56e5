#pragma once

// Experiment driver: method x resolution ladders for the convergence,
// stability, energy, wave-limit, spectral and nonlinear studies. Rungs run
// concurrently; results are collected in ladder order so every table is
// reproducible byte for byte.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pdwave/config.hpp"
#include "pdwave/csv.hpp"
#include "pdwave/integrators.hpp"
#include "pdwave/nonlinear.hpp"
#include "pdwave/quadrature.hpp"
#include "pdwave/reference.hpp"
#include "pdwave/spectral.hpp"

namespace pdwave::harness {

/// Runs fn(0..n-1) with at most `threads` in flight; results in index order.
template <typename F>
auto parallel_map(std::size_t n, unsigned threads, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<R> out;
  out.reserve(n);
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (std::size_t start = 0; start < n; start += threads) {
    std::vector<std::future<R>> batch;
    for (std::size_t i = start; i < std::min(n, start + threads); ++i) {
      batch.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
    }
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

struct MethodSetup {
  QuadratureScheme scheme = QuadratureScheme::MidpointRule;
  TimeMethod integrator = TimeMethod::StormerVerlet;
  std::optional<double> regularization;  ///< exponent s of h^s
};

[[nodiscard]] inline MethodSetup method_setup(MethodTag m, const ExperimentConfig& c) {
  switch (m) {
    case MethodTag::MSV: return {QuadratureScheme::MidpointRule, TimeMethod::StormerVerlet, std::nullopt};
    case MethodTag::MMI: return {QuadratureScheme::MidpointRule, TimeMethod::ImplicitMidpoint, std::nullopt};
    case MethodTag::MT: return {QuadratureScheme::MidpointRule, TimeMethod::Trig2, c.mt_regularization};
    case MethodTag::GT: return {QuadratureScheme::GaussTwoPoint, TimeMethod::Trig4, c.gt_regularization};
    case MethodTag::SPECTRAL: break;
  }
  throw ConfigError(std::string("method ") + to_string(m) + " has no grid/integrator pairing", 0, "experiment.methods");
}

/// N as tabulated: N for the midpoint rule (N + 1 nodes), the node count 2M
/// for the Gauss rule.
[[nodiscard]] inline std::size_t reported_N(const Grid& g) {
  return g.scheme == QuadratureScheme::MidpointRule ? g.N : g.size();
}

struct LinearRun {
  ErrorReport errors;
  Trajectory trajectory;  ///< kept only on request
};

/// Integrates from (u0, 0) for `steps` steps and compares with reference[k-1]
/// after step k.
[[nodiscard]] inline LinearRun run_linear(const StiffnessOperator& op, const MethodSetup& setup, const Vector& u0,
                                          double tau, std::size_t steps, const std::vector<Vector>& reference,
                                          bool keep_trajectory = false) {
  const StiffnessOperator used = setup.regularization ? regularize(op, *setup.regularization) : op;
  const LinearIntegrator integrator(setup.integrator, used.omega2, Forcing::none(), tau);
  IntegratorState s{0, u0, Vector::Zero(u0.size())};
  LinearRun run;
  if (keep_trajectory) run.trajectory.push_back(s);
  ErrorAccumulator acc;
  for (std::size_t k = 1; k <= steps; ++k) {
    s = integrator.step(s);
    if (!reference.empty()) acc.add(k, s.U, reference[k - 1]);
    if (keep_trajectory) run.trajectory.push_back(s);
    // Past overflow nothing more is learned.
    if (!std::isfinite(s.U.cwiseAbs().maxCoeff())) {
      for (std::size_t r = k + 1; r <= steps && !reference.empty(); ++r) acc.add(r, s.U, reference[r - 1]);
      break;
    }
  }
  run.errors = acc.report();
  return run;
}

[[nodiscard]] inline Vector gaussian_pulse(const Grid& g, const Material& m) {
  return sample_function(g, [L = m.L](double x) { return std::exp(-(x / L) * (x / L)); });
}

/// u*(x_j, t_k) for k = 1..steps.
[[nodiscard]] inline std::vector<Vector> exact_profiles(const Grid& g, const Material& m, double tau,
                                                        std::size_t steps, double tol) {
  const double t_end = static_cast<double>(steps) * tau;
  ExactProfileEvaluator ev(g.nodes, t_end, {m, tol});
  std::vector<Vector> out;
  out.reserve(steps);
  for (std::size_t k = 1; k <= steps; ++k) out.push_back(ev(static_cast<double>(k) * tau));
  return out;
}

struct ExperimentResult {
  TableArtifact table;
  std::vector<std::string> side_files;
  std::vector<std::string> warnings;
};

namespace detail {

inline void write_error_series(const ExperimentConfig& c, const std::string& stem, const ErrorReport& r,
                               double tau, ExperimentResult& res) {
  if (!c.write_series) return;
  TableArtifact t{stem, {"step", "t", "error"}, {}};
  for (std::size_t k = 0; k < r.per_step.size(); ++k) {
    t.add_row({static_cast<long long>(k + 1), static_cast<double>(k + 1) * tau, r.per_step[k]});
  }
  const auto path = std::filesystem::path(c.output_dir) / "series" / (stem + ".csv");
  emit_csv(t, path);
  res.side_files.push_back(path.string());
}

inline std::string rung_stem(const char* method, const Rung& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_h%.6g_tau%.6g", method, r.h, r.tau);
  return buf;
}

inline Cell order_cell(const std::vector<std::optional<double>>& orders, std::size_t i) {
  if (i < orders.size() && orders[i]) return *orders[i];
  return std::monostate{};
}

inline std::size_t steps_for(double T, double tau) { return TimeGrid(tau, T).steps; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Convergence and custom ladders
// ---------------------------------------------------------------------------

struct LadderEntry {
  std::string label;
  MethodSetup setup;
};

[[nodiscard]] inline ExperimentResult run_convergence(const ExperimentConfig& c,
                                                      const std::vector<LadderEntry>& entries) {
  struct RungOut {
    std::vector<ErrorReport> reports;
    std::vector<std::size_t> N;
    std::size_t steps = 0;
  };
  const auto kernel = MicromodulusModel::gaussian(c.material);
  auto outs = parallel_map(c.ladder.size(), c.threads, [&](std::size_t r) {
    const Rung rung = c.ladder[r];
    RungOut out;
    out.steps = detail::steps_for(c.T, rung.tau);
    // One grid, operator and reference per quadrature scheme, shared by methods.
    std::optional<Grid> grids[2];
    std::optional<StiffnessOperator> ops[2];
    std::optional<std::vector<Vector>> refs[2];
    for (const auto& e : entries) {
      const int s = e.setup.scheme == QuadratureScheme::MidpointRule ? 0 : 1;
      if (!grids[s]) {
        grids[s] = build_grid(e.setup.scheme, c.D, rung.h);
        ops[s] = assemble_stiffness(*grids[s], kernel, c.material);
        refs[s] = exact_profiles(*grids[s], c.material, rung.tau, out.steps, c.exact_tol);
      }
      const Vector u0 = gaussian_pulse(*grids[s], c.material);
      out.reports.push_back(run_linear(*ops[s], e.setup, u0, rung.tau, out.steps, *refs[s]).errors);
      out.N.push_back(reported_N(*grids[s]));
    }
    return out;
  });

  ExperimentResult res;
  res.table = {std::string(to_string(c.experiment)),
               {"method", "h", "tau", "N", "N_T", "max_error", "order"},
               {}};
  for (std::size_t m = 0; m < entries.size(); ++m) {
    std::vector<double> errs;
    for (const auto& o : outs) errs.push_back(o.reports[m].global_max);
    const auto orders = convergence_orders(errs);
    for (std::size_t r = 0; r < outs.size(); ++r) {
      res.table.add_row({entries[m].label, c.ladder[r].h, c.ladder[r].tau, static_cast<long long>(outs[r].N[m]),
                         static_cast<long long>(outs[r].steps), errs[r], detail::order_cell(orders, r)});
      detail::write_error_series(c, detail::rung_stem(entries[m].label.c_str(), c.ladder[r]), outs[r].reports[m],
                                 c.ladder[r].tau, res);
    }
  }
  return res;
}

[[nodiscard]] inline std::vector<LadderEntry> ladder_entries(const ExperimentConfig& c) {
  std::vector<LadderEntry> entries;
  if (c.experiment == Experiment::Custom) {
    MethodSetup s{c.custom_scheme, c.custom_integrator, c.custom_regularization};
    if (!s.regularization && (s.integrator == TimeMethod::Trig2 || s.integrator == TimeMethod::Trig4)) {
      s.regularization = s.integrator == TimeMethod::Trig2 ? c.mt_regularization : c.gt_regularization;
    }
    entries.push_back({std::string(to_string(s.scheme)) + "+" + to_string(s.integrator), s});
    return entries;
  }
  for (auto m : c.methods) entries.push_back({to_string(m), method_setup(m, c)});
  return entries;
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentResult run_stability(const ExperimentConfig& c) {
  const auto entries = ladder_entries(c);
  const auto kernel = MicromodulusModel::gaussian(c.material);
  struct RungOut {
    std::vector<ErrorReport> reports;
    std::size_t N = 0, steps = 0;
    StabilityBound bound;
  };
  auto outs = parallel_map(c.ladder.size(), c.threads, [&](std::size_t r) {
    const Rung rung = c.ladder[r];
    RungOut out;
    out.steps = detail::steps_for(c.T, rung.tau);
    const Grid grid = build_grid(QuadratureScheme::MidpointRule, c.D, rung.h);
    const auto op = assemble_stiffness(grid, kernel, c.material);
    out.bound = stability_bounds(grid, kernel, c.material, op.omega2);
    out.N = reported_N(grid);
    std::optional<Grid> gauss;
    std::optional<StiffnessOperator> gauss_op;
    const auto ref = exact_profiles(grid, c.material, rung.tau, out.steps, c.exact_tol);
    std::optional<std::vector<Vector>> gauss_ref;
    for (const auto& e : entries) {
      if (e.setup.scheme == QuadratureScheme::MidpointRule) {
        out.reports.push_back(run_linear(op, e.setup, gaussian_pulse(grid, c.material), rung.tau, out.steps, ref).errors);
      } else {
        if (!gauss) {
          gauss = build_grid(QuadratureScheme::GaussTwoPoint, c.D, rung.h);
          gauss_op = assemble_stiffness(*gauss, kernel, c.material);
          gauss_ref = exact_profiles(*gauss, c.material, rung.tau, out.steps, c.exact_tol);
        }
        out.reports.push_back(
            run_linear(*gauss_op, e.setup, gaussian_pulse(*gauss, c.material), rung.tau, out.steps, *gauss_ref).errors);
      }
    }
    return out;
  });
  ExperimentResult res;
  res.table = {"stability",
               {"method", "h", "tau", "N", "N_T", "max_error", "diverged", "tau_max_spectral", "tau_max_von_neumann",
                "sv_stable"},
               {}};
  for (std::size_t m = 0; m < entries.size(); ++m) {
    for (std::size_t r = 0; r < outs.size(); ++r) {
      const auto& o = outs[r];
      const auto& rep = o.reports[m];
      res.table.add_row({entries[m].label, c.ladder[r].h, c.ladder[r].tau, static_cast<long long>(o.N),
                         static_cast<long long>(o.steps), rep.global_max,
                         static_cast<long long>(rep.diverged || rep.global_max >= 1e100 ? 1 : 0),
                         o.bound.tau_max_spectral, o.bound.tau_max_von_neumann,
                         static_cast<long long>(o.bound.stormer_verlet_stable(c.ladder[r].tau) ? 1 : 0)});
      detail::write_error_series(c, detail::rung_stem(entries[m].label.c_str(), c.ladder[r]), rep, c.ladder[r].tau,
                                 res);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentResult run_energy(const ExperimentConfig& c) {
  const auto entries = ladder_entries(c);
  const auto kernel = MicromodulusModel::gaussian(c.material);
  struct RungOut {
    std::vector<EnergyReport> energy;
    std::vector<Grid> grids;
    std::size_t steps = 0;
  };
  auto outs = parallel_map(c.ladder.size(), c.threads, [&](std::size_t r) {
    const Rung rung = c.ladder[r];
    RungOut out;
    out.steps = detail::steps_for(c.T, rung.tau);
    for (const auto& e : entries) {
      const Grid grid = build_grid(e.setup.scheme, c.D, rung.h);
      const auto op = assemble_stiffness(grid, kernel, c.material);
      const auto run = run_linear(op, e.setup, gaussian_pulse(grid, c.material), rung.tau, out.steps, {}, true);
      // The energy is measured with the unshifted operator.
      out.energy.push_back(energy_series(run.trajectory, op.omega2, Forcing::none()));
      out.grids.push_back(grid);
    }
    return out;
  });
  ExperimentResult res;
  res.table = {"energy", {"method", "h", "tau", "N", "N_T", "max_drift", "drift_ratio"}, {}};
  for (std::size_t m = 0; m < entries.size(); ++m) {
    for (std::size_t r = 0; r < outs.size(); ++r) {
      const double drift = outs[r].energy[m].max_drift();
      Cell ratio = std::monostate{};
      if (r > 0) ratio = outs[r - 1].energy[m].max_drift() / drift;
      res.table.add_row({entries[m].label, c.ladder[r].h, c.ladder[r].tau,
                         static_cast<long long>(reported_N(outs[r].grids[m])), static_cast<long long>(outs[r].steps),
                         drift, ratio});
      if (c.write_series) {
        const auto path = std::filesystem::path(c.output_dir) / "series" /
                          ("energy_" + detail::rung_stem(entries[m].label.c_str(), c.ladder[r]) + ".csv");
        std::filesystem::create_directories(path.parent_path());
        std::ofstream os(path, std::ios::binary);
        write_energy_csv(os, outs[r].energy[m], c.ladder[r].tau);
        res.side_files.push_back(path.string());
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Wave limit
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentResult run_wave_limit(const ExperimentConfig& c) {
  const auto entries = ladder_entries(c);
  ExperimentResult res;
  res.table = {"wave_limit", {"method", "l_over_L", "h", "tau", "N", "N_T", "max_distance"}, {}};
  struct Job {
    std::size_t rung, l;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < c.ladder.size(); ++r)
    for (std::size_t i = 0; i < c.l_values.size(); ++i) jobs.push_back({r, i});
  struct JobOut {
    std::vector<ErrorReport> reports;
    std::vector<std::size_t> N;
    std::size_t steps = 0;
  };
  auto outs = parallel_map(jobs.size(), c.threads, [&](std::size_t j) {
    const Rung rung = c.ladder[jobs[j].rung];
    Material m = c.material;
    m.l = c.l_values[jobs[j].l] * m.L;
    const auto kernel = MicromodulusModel::gaussian(m);
    JobOut out;
    out.steps = detail::steps_for(c.T, rung.tau);
    const double speed = m.wave_speed();
    const SpaceFunction u0 = [L = m.L](double x) { return std::exp(-(x / L) * (x / L)); };
    for (const auto& e : entries) {
      const Grid grid = build_grid(e.setup.scheme, c.D, rung.h);
      const auto op = assemble_stiffness(grid, kernel, m);
      std::vector<Vector> ref;
      for (std::size_t k = 1; k <= out.steps; ++k) {
        const double t = static_cast<double>(k) * rung.tau;
        ref.push_back(sample_function(grid, [&](double x) { return wave_dalembert(u0, x, t, speed); }));
      }
      out.reports.push_back(run_linear(op, e.setup, sample_function(grid, u0), rung.tau, out.steps, ref).errors);
      out.N.push_back(reported_N(grid));
    }
    return out;
  });
  for (std::size_t m = 0; m < entries.size(); ++m) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const Rung& rung = c.ladder[jobs[j].rung];
      res.table.add_row({entries[m].label, c.l_values[jobs[j].l], rung.h, rung.tau,
                         static_cast<long long>(outs[j].N[m]), static_cast<long long>(outs[j].steps),
                         outs[j].reports[m].global_max});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Spectral
// ---------------------------------------------------------------------------

[[nodiscard]] inline ExperimentResult run_spectral(const ExperimentConfig& c) {
  ExperimentResult res;
  res.table = {"spectral", {"N", "M", "h", "t", "points", "E_Linf", "E_L2"}, {}};
  const auto problem = gaussian_pulse_problem(c.material, std::max(c.spectral_t, 1e-12));
  struct Out {
    SpectralErrors err;
    std::vector<std::string> warnings;
    std::vector<double> x, u, ref;
  };
  auto outs = parallel_map(c.spectral_N.size(), c.threads, [&](std::size_t i) {
    const std::size_t N = c.spectral_N[i];
    const auto sol = spectral_solve(problem, c.spectral_M, N, {c.spectral_t});
    Out out;
    out.warnings = sol.warnings;
    for (std::size_t j = 0; j < sol.x.size(); ++j) {
      if (std::abs(sol.x[j]) <= c.spectral_window) {
        out.x.push_back(sol.x[j]);
        out.u.push_back(sol.u[0][j]);
      }
    }
    ExactProfileEvaluator ev(out.x, std::max(c.spectral_t, 1e-12), {c.material, c.exact_tol}, false);
    const Vector ref = ev(c.spectral_t);
    out.ref.assign(ref.data(), ref.data() + ref.size());
    out.err = spectral_errors(out.x, out.u, out.ref, -c.spectral_window, c.spectral_window);
    if (!c.write_series) {
      out.x.clear();
      out.u.clear();
      out.ref.clear();
    }
    return out;
  });
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::size_t N = c.spectral_N[i];
    res.table.add_row({static_cast<long long>(N), c.spectral_M,
                       c.spectral_M * std::numbers::pi / static_cast<double>(N), c.spectral_t,
                       static_cast<long long>(outs[i].err.points), outs[i].err.linf_relative,
                       outs[i].err.l2_relative});
    for (const auto& w : outs[i].warnings) res.warnings.push_back("N=" + std::to_string(N) + ": " + w);
    if (c.write_series) {
      const auto path = std::filesystem::path(c.output_dir) / "series" / ("spectral_N" + std::to_string(N) + ".csv");
      std::filesystem::create_directories(path.parent_path());
      std::ofstream os(path, std::ios::binary);
      write_spectral_csv(os, outs[i].x, c.spectral_t, outs[i].u, outs[i].ref);
      res.side_files.push_back(path.string());
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Nonlinear bar
// ---------------------------------------------------------------------------

/// Bar [0, L] sampled at cell midpoints, with `layers` extra nodes on each
/// side that carry the prescribed boundary displacement.
struct BarGrid {
  Grid grid;
  std::size_t layers = 0;
  std::size_t interior = 0;
};

[[nodiscard]] inline BarGrid build_bar_grid(double L, double h, std::size_t layers) {
  const auto n = static_cast<std::size_t>(std::llround(L / h));
  if (n == 0) throw std::invalid_argument("bar grid: h exceeds the bar length");
  BarGrid b;
  b.layers = layers;
  b.interior = n;
  b.grid.scheme = QuadratureScheme::MidpointRule;
  b.grid.h = h;
  b.grid.N = n;
  b.grid.D = L;
  const auto total = static_cast<long>(n + 2 * layers);
  for (long i = 0; i < total; ++i) {
    b.grid.nodes.push_back((static_cast<double>(i - static_cast<long>(layers)) + 0.5) * h);
  }
  b.grid.weights.assign(static_cast<std::size_t>(total), 1.0);
  return b;
}

struct NonlinearRun {
  ErrorReport errors;
  std::size_t max_iterations = 0;
};

/// Bond-stretch bar with u0 = eps x, v0 = 0 and boundary layers driven by the
/// reference solution; errors over the bar nodes.
[[nodiscard]] inline NonlinearRun run_nonlinear_bar(const ExperimentConfig& c, MethodTag method, const Rung& rung) {
  const Material& m = c.material;
  const auto r = static_cast<std::size_t>(c.horizon_nodes);
  const BarGrid bar = build_bar_grid(m.L, rung.h, r);
  const double rr = static_cast<double>(r);
  // Bond constant matching E on the midpoint lattice: h^2 sum_{q<=r} q = h^2 r(r+1)/2.
  const double c_bond = 2.0 * m.E / (rung.h * rung.h * rr * (rr + 1.0));
  const ForceModel force = BondStretch{c_bond, rr * rung.h * (1.0 + 1e-9)};
  const NonlinearRHS rhs(bar.grid, force, m.rho, Closure::FullNonlinear);
  auto reference = [&](double x, double t) { return nonlinear_series_limit(x, t, c.epsilon, m.L, m.E, m.rho); };
  const std::size_t n_all = bar.grid.size();
  NonlinearProblem problem{&rhs, Forcing::none(), [&](Vector& U, double t) {
                             for (std::size_t i = 0; i < bar.layers; ++i) {
                               const auto lo = static_cast<Eigen::Index>(i);
                               const auto hi = static_cast<Eigen::Index>(n_all - 1 - i);
                               U[lo] = reference(bar.grid.nodes[static_cast<std::size_t>(lo)], t);
                               U[hi] = reference(bar.grid.nodes[static_cast<std::size_t>(hi)], t);
                             }
                           }};
  IntegratorState s{0, sample_function(bar.grid, [&](double x) { return reference(x, 0.0); }),
                    Vector::Zero(static_cast<Eigen::Index>(n_all))};
  const std::size_t steps = detail::steps_for(c.T, rung.tau);
  const FixedPointOptions fp{c.fp_tol, c.fp_max_iters};
  NonlinearRun out;
  ErrorAccumulator acc;
  const auto first = static_cast<Eigen::Index>(bar.layers);
  const auto count = static_cast<Eigen::Index>(bar.interior);
  for (std::size_t k = 1; k <= steps; ++k) {
    if (method == MethodTag::MSV) {
      s = step_nonlinear_sv(s, problem, rung.tau);
    } else {
      auto step = step_nonlinear_im(s, problem, rung.tau, fp);
      out.max_iterations = std::max(out.max_iterations, step.iterations);
      s = std::move(step.state);
    }
    const double t = static_cast<double>(k) * rung.tau;
    Vector ref(count);
    for (Eigen::Index i = 0; i < count; ++i) ref[i] = reference(bar.grid.nodes[static_cast<std::size_t>(first + i)], t);
    acc.add(k, s.U.segment(first, count), ref);
  }
  out.errors = acc.report();
  return out;
}

[[nodiscard]] inline ExperimentResult run_nonlinear(const ExperimentConfig& c) {
  struct Job {
    std::size_t method, rung;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < c.methods.size(); ++m)
    for (std::size_t r = 0; r < c.ladder.size(); ++r) jobs.push_back({m, r});
  auto outs = parallel_map(jobs.size(), c.threads,
                           [&](std::size_t j) { return run_nonlinear_bar(c, c.methods[jobs[j].method], c.ladder[jobs[j].rung]); });
  ExperimentResult res;
  res.table = {"nonlinear", {"method", "h", "tau", "N", "N_T", "max_error", "order", "max_fp_iterations"}, {}};
  for (std::size_t m = 0; m < c.methods.size(); ++m) {
    std::vector<double> errs;
    for (std::size_t r = 0; r < c.ladder.size(); ++r) errs.push_back(outs[m * c.ladder.size() + r].errors.global_max);
    const auto orders = convergence_orders(errs);
    for (std::size_t r = 0; r < c.ladder.size(); ++r) {
      const auto& o = outs[m * c.ladder.size() + r];
      const Rung& rung = c.ladder[r];
      const Cell iters = c.methods[m] == MethodTag::MMI ? Cell{static_cast<long long>(o.max_iterations)}
                                                        : Cell{std::monostate{}};
      res.table.add_row({to_string(c.methods[m]), rung.h, rung.tau,
                         static_cast<long long>(std::llround(c.material.L / rung.h)),
                         static_cast<long long>(detail::steps_for(c.T, rung.tau)), errs[r],
                         detail::order_cell(orders, r), iters});
      detail::write_error_series(c, detail::rung_stem(to_string(c.methods[m]), rung), o.errors, rung.tau, res);
    }
  }
  return res;
}

/// Runs the configured experiment. Side files are written only when
/// output.series is set; the main table is returned for the caller to emit.
[[nodiscard]] inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  finalize(c);
  switch (c.experiment) {
    case Experiment::Test1Convergence:
    case Experiment::Custom: return run_convergence(c, ladder_entries(c));
    case Experiment::Test2Stability: return run_stability(c);
    case Experiment::Test2Energy: return run_energy(c);
    case Experiment::Test3WaveLimit: return run_wave_limit(c);
    case Experiment::Test4Spectral: return run_spectral(c);
    case Experiment::Test5Nonlinear: return run_nonlinear(c);
  }
  return {};
}

/// Built-in presets matching the shipped configs/*.ini files.
[[nodiscard]] inline ExperimentConfig preset(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  apply_experiment_defaults(c);
  finalize(c);
  return c;
}

}  // namespace pdwave::harness
