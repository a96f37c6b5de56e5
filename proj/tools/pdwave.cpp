// pdwave: command-line driver for the peridynamic wave experiments.
//
//   pdwave run configs/table1.ini
//   pdwave table2 --config configs/table2.ini
//   pdwave table1 --method MSV,GT --out results
//   pdwave solve --scheme gauss2 --integrator trig4 --h 0.05 --tau 0.05 --T 3
//   pdwave exact --t 1.5 --points 401
//   pdwave accept --criterion 1 --criterion 7
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 acceptance failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdwave/pdwave.hpp"

namespace fs = std::filesystem;
using namespace pdwave;
using namespace pdwave::harness;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAcceptance = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string methods;
  std::string ladder;
  std::optional<double> T;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool series = false;
};

void add_overrides(CLI::App* app, Overrides& o, bool with_config = true) {
  if (with_config) app->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "Seed for randomized checks");
  app->add_option("--method", o.methods, "Comma-separated method list (MSV, MMI, MT, GT)");
  app->add_option("--ladder", o.ladder, "Rungs as h:tau pairs, e.g. 0.1:0.1,0.05:0.05");
  app->add_option("--T", o.T, "Final time");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app->add_flag("--series", o.series, "Also write per-step error and energy series");
}

void apply(ExperimentConfig& c, const Overrides& o) {
  if (!o.methods.empty()) c.methods = parse_methods(o.methods);
  if (!o.ladder.empty()) c.ladder = parse_ladder(o.ladder);
  if (o.T) c.T = *o.T;
  if (o.out) c.output_dir = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.series) c.write_series = true;
  if (o.seed) c.seed = *o.seed;
}

void print_table(const TableArtifact& t) {
  std::vector<std::size_t> width(t.columns.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
  for (const auto& row : t.rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string s;
      if (const auto* d = std::get_if<double>(&row[i])) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4e", *d);
        s = buf;
      } else {
        s = format_cell(row[i]);
      }
      width[i] = std::max(width[i], s.size());
      line.push_back(std::move(s));
    }
    cells.push_back(std::move(line));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      std::cout << (i ? "  " : "") << std::string(width[i] - line[i].size(), ' ') << line[i];
    }
    std::cout << '\n';
  };
  emit(t.columns);
  for (const auto& line : cells) emit(line);
}

int run_and_report(const ExperimentConfig& c) {
  const auto res = run_experiment(c);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  const fs::path path = fs::path(c.output_dir) / (res.table.name + ".csv");
  emit_csv(res.table, path);
  print_table(res.table);
  std::cout << "wrote " << path.string() << '\n';
  for (const auto& f : res.side_files) std::cout << "wrote " << f << '\n';
  return 0;
}

struct SolveOptions {
  std::string config;
  std::string scheme = "midpoint";
  std::string integrator = "sv";
  double h = 0.1;
  double tau = 0.1;
  double T = 3.0;
  double D = 10.0;
  std::optional<double> regularization;
  Material material;
  double tol = 1e-10;
  std::string out = "out/solve";
};

/// Command-line values win over the config file, which wins over defaults.
ExperimentConfig solve_config(const SolveOptions& o, const CLI::App& cmd) {
  ExperimentConfig c = o.config.empty() ? parse_config_text("", Experiment::Custom)
                                        : parse_config(o.config, Experiment::Custom);
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--scheme")) c.custom_scheme = parse_config_text("custom.scheme = " + o.scheme).custom_scheme;
  if (given("--integrator")) {
    c.custom_integrator = parse_config_text("custom.integrator = " + o.integrator).custom_integrator;
  }
  Rung rung = c.ladder.front();
  if (given("--h")) rung.h = o.h;
  if (given("--tau")) rung.tau = o.tau;
  c.ladder = {rung};
  if (given("--T")) c.T = o.T;
  if (given("--D")) c.D = o.D;
  if (given("--regularization")) c.custom_regularization = o.regularization;
  if (given("--tol")) c.exact_tol = o.tol;
  if (given("--rho")) c.material.rho = o.material.rho;
  if (given("--E")) c.material.E = o.material.E;
  if (given("--l")) c.material.l = o.material.l;
  if (given("--L")) c.material.L = o.material.L;
  finalize(c);
  return c;
}

int solve(const SolveOptions& o, const CLI::App& cmd) {
  const ExperimentConfig c = solve_config(o, cmd);
  const auto entries = ladder_entries(c);
  const MethodSetup& setup = entries.front().setup;
  const double h = c.ladder.front().h;
  const double tau = c.ladder.front().tau;

  const Grid grid = build_grid(setup.scheme, c.D, h);
  const auto op = assemble_stiffness(grid, MicromodulusModel::gaussian(c.material), c.material);
  const std::size_t steps = TimeGrid(tau, c.T).steps;
  const auto reference = exact_profiles(grid, c.material, tau, steps, c.exact_tol);
  const auto run = run_linear(op, setup, gaussian_pulse(grid, c.material), tau, steps, reference, true);
  const auto energy = energy_series(run.trajectory, op.omega2, Forcing::none());

  const fs::path dir(o.out);
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + (dir / name).string());
    return f;
  };
  {
    auto f = open("trajectory.csv");
    write_trajectory_csv(f, run.trajectory, grid, tau);
  }
  {
    auto f = open("energy.csv");
    write_energy_csv(f, energy, tau);
  }
  {
    auto f = open("error.csv");
    f << "n,t,error\n";
    for (std::size_t k = 0; k < run.errors.per_step.size(); ++k) {
      f << k + 1 << ',' << format_double(static_cast<double>(k + 1) * tau) << ','
        << format_double(run.errors.per_step[k]) << '\n';
    }
  }
  std::printf("%s  N=%zu  N_T=%zu  max_error=%.6e (step %zu)  max_drift=%.6e%s\n", entries.front().label.c_str(),
              reported_N(grid), steps, run.errors.global_max, run.errors.argmax_step, energy.max_drift(),
              run.errors.diverged ? "  DIVERGED" : "");
  std::cout << "wrote " << (dir / "trajectory.csv").string() << ", energy.csv, error.csv\n";
  return 0;
}

struct ExactOptions {
  double t = 0.0;
  double x_min = -5.0;
  double x_max = 5.0;
  std::size_t points = 201;
  Material material;
  double tol = 1e-10;
  std::optional<std::string> out;
};

int exact(const ExactOptions& o) {
  if (o.points < 2 || !(o.x_max > o.x_min)) throw ConfigError("need points >= 2 and x-max > x-min", 0, "exact");
  std::vector<double> xs(o.points);
  for (std::size_t i = 0; i < o.points; ++i)
    xs[i] = o.x_min + (o.x_max - o.x_min) * static_cast<double>(i) / static_cast<double>(o.points - 1);
  const ExactSolutionParams p{o.material, o.tol};
  p.validate();
  ExactProfileEvaluator ev(xs, std::max(o.t, 1e-12), p);
  const Vector u = ev(o.t);
  if (o.out) {
    std::ofstream f(*o.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + *o.out);
    write_reference_csv(f, xs, o.t, u);
  } else {
    write_reference_csv(std::cout, xs, o.t, u);
  }
  return 0;
}

void add_material(CLI::App* app, Material& m) {
  app->add_option("--rho", m.rho, "Mass density")->capture_default_str();
  app->add_option("--E", m.E, "Young modulus")->capture_default_str();
  app->add_option("--l", m.l, "Nonlocal length scale")->capture_default_str();
  app->add_option("--L", m.L, "Width of the initial pulse")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peridynamic wave propagation: discretization and time-integration experiments"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_over;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "INI config file")->required();
  add_overrides(run, run_over, false);

  struct PresetCommand {
    const char* name;
    Experiment experiment;
    const char* help;
  };
  const PresetCommand presets[] = {
      {"table1", Experiment::Test1Convergence, "Convergence ladder for MSV, MT, MMI, GT"},
      {"table2", Experiment::Test2Stability, "Stability study with E = 100"},
      {"stability", Experiment::Test2Stability, "Alias of table2"},
      {"energy", Experiment::Test2Energy, "Energy drift of MSV and MT over T = 30"},
      {"table3", Experiment::Test3WaveLimit, "Distance to the classical wave solution"},
      {"table4", Experiment::Test4Spectral, "Spectral scheme errors"},
      {"spectral", Experiment::Test4Spectral, "Alias of table4"},
      {"table5", Experiment::Test5Nonlinear, "Nonlinear bar convergence"},
  };
  std::vector<Overrides> preset_over(std::size(presets));
  std::vector<CLI::App*> preset_apps;
  for (std::size_t i = 0; i < std::size(presets); ++i) {
    preset_apps.push_back(app.add_subcommand(presets[i].name, presets[i].help));
    add_overrides(preset_apps.back(), preset_over[i]);
  }

  SolveOptions solve_opt;
  auto* solve_cmd = app.add_subcommand("solve", "Single run against the exact solution; writes trajectory and energy");
  // --h is the grid step here, so help is long-form only.
  solve_cmd->set_help_flag("--help", "Print this help message and exit");
  solve_cmd->add_option("--config", solve_opt.config, "INI config file ([custom] section)")->check(CLI::ExistingFile);
  solve_cmd->add_option("--scheme", solve_opt.scheme, "midpoint or gauss2")->capture_default_str();
  solve_cmd->add_option("--integrator", solve_opt.integrator, "sv, im, trig2 or trig4")->capture_default_str();
  solve_cmd->add_option("--h", solve_opt.h, "Grid step")->capture_default_str();
  solve_cmd->add_option("--tau", solve_opt.tau, "Time step")->capture_default_str();
  solve_cmd->add_option("--T", solve_opt.T, "Final time")->capture_default_str();
  solve_cmd->add_option("--D", solve_opt.D, "Half-width of the truncated domain")->capture_default_str();
  solve_cmd->add_option("--regularization", solve_opt.regularization, "Exponent s of the h^s shift");
  solve_cmd->add_option("--tol", solve_opt.tol, "Reference quadrature tolerance")->capture_default_str();
  solve_cmd->add_option("--out", solve_opt.out, "Output directory")->capture_default_str();
  add_material(solve_cmd, solve_opt.material);

  ExactOptions exact_opt;
  auto* exact_cmd = app.add_subcommand("exact", "Tabulate the exact solution u*(x, t)");
  exact_cmd->add_option("--t", exact_opt.t, "Time")->capture_default_str();
  exact_cmd->add_option("--x-min", exact_opt.x_min)->capture_default_str();
  exact_cmd->add_option("--x-max", exact_opt.x_max)->capture_default_str();
  exact_cmd->add_option("--points", exact_opt.points)->capture_default_str();
  exact_cmd->add_option("--tol", exact_opt.tol)->capture_default_str();
  exact_cmd->add_option("--out", exact_opt.out, "CSV file (default stdout)");
  add_material(exact_cmd, exact_opt.material);

  std::vector<int> criteria;
  std::uint64_t seed = 20240611;
  unsigned accept_threads = 0;
  bool quiet = false;
  auto* accept = app.add_subcommand("accept", "Run the acceptance criteria and print PASS/FAIL per criterion");
  accept->add_option("--criterion", criteria, "Criterion number 1..7 (repeatable; default all)")
      ->check(CLI::Range(1, acceptance::kCriteria));
  accept->add_option("--seed", seed, "Seed for the randomized property checks")->capture_default_str();
  accept->add_option("--threads", accept_threads, "Worker threads (0: all cores)");
  accept->add_flag("--quiet", quiet, "Verdict lines only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      auto c = parse_config(config_path);
      apply(c, run_over);
      return run_and_report(c);
    }
    for (std::size_t i = 0; i < preset_apps.size(); ++i) {
      if (!*preset_apps[i]) continue;
      auto c = preset_over[i].config.empty() ? preset(presets[i].experiment)
                                             : parse_config(preset_over[i].config, presets[i].experiment);
      if (preset_over[i].config.empty()) {
        c.methods.clear();
        c.ladder.clear();
      }
      apply(c, preset_over[i]);
      return run_and_report(c);
    }
    if (*solve_cmd) return solve(solve_opt, *solve_cmd);
    if (*exact_cmd) return exact(exact_opt);
    if (*accept) {
      if (criteria.empty())
        for (int i = 1; i <= acceptance::kCriteria; ++i) criteria.push_back(i);
      bool all = true;
      for (int id : criteria) {
        const auto r = acceptance::run_criterion(id, seed, accept_threads);
        acceptance::print(std::cout, r, !quiet);
        std::cout.flush();
        all = all && r.pass();
      }
      return all ? 0 : kExitAcceptance;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
