#include "ncps/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "ncps/brownian.hpp"
#include "ncps/convergence.hpp"

namespace ncps {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f.imbue(std::locale::classic());
  return f;
}

bool wants(const RunConfig& cfg, const std::string& format) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

// Benchmark: d = 10 nearest-neighbour repulsion, b = sin, sigma = sin(2x)/2.
ParticleSystem benchmark_system(double spacing, const ScalarField& sigma) {
  std::vector<double> x0(10);
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = spacing * static_cast<double>(i + 1);
  return make_uniform_system(InteractionMatrix::nearest_neighbor(10, 1.0), fields::sine(), sigma, std::move(x0), 1.0);
}

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

CheckLine check_solver_oracle(const ValidateSettings& s) {
  const std::size_t trials = s.quick ? 2000 : 10000;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> a_dist(-5.0, 5.0), h_dist(1e-4, 1.0), g_dist(0.1, 10.0);
  double worst = 0.0;
  std::size_t failures = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::vector<double> a{a_dist(rng), a_dist(rng)};
    const double h = h_dist(rng);
    const InteractionMatrix gamma = InteractionMatrix::nearest_neighbor(2, g_dist(rng));
    const auto [x1, x2] = solve_pair_closed_form(a[0], a[1], h, gamma(0, 1));
    try {
      const auto r = solve(ImplicitProblem{a, h, gamma}, s.solver);
      worst = std::max({worst, std::abs(r.x[0] - x1), std::abs(r.x[1] - x2)});
    } catch (const NonConvergence&) {
      ++failures;
    }
  }
  std::ostringstream d;
  d << trials << " d=2 problems, max |solve - closed form| = " << std::setprecision(3) << worst
    << ", non-converged = " << failures;
  return {"solver-oracle", failures == 0 && worst <= 1e-10, d.str()};
}

CheckLine check_scheme_coincidence(const ValidateSettings& s) {
  const std::size_t paths = s.quick ? 20 : 100;
  const ParticleSystem sys = benchmark_system(1.0, fields::constant(0.5));
  double worst = 0.0;
  for (std::size_t m = 0; m < paths; ++m) {
    const auto grid = generate(split_seed(s.seed, m), sys.d, 6, sys.horizon);
    const auto a = simulate_path(sys, SchemeKind::SIM, grid, s.solver);
    const auto b = simulate_path(sys, SchemeKind::SIEM, grid, s.solver);
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  }
  std::ostringstream d;
  d << paths << " paths with constant sigma, max |SIM - SIEM| = " << worst;
  return {"sim-siem-coincidence", worst <= 1e-15, d.str()};
}

CheckLine check_exact_order(const ValidateSettings& s) {
  const std::size_t paths = s.quick ? 2000 : 10000;
  const auto report = strong_error_vs_exact(2, 7, paths, s.seed, {}, s.solver, s.workers);
  const double sim = report.rates.fits.at(SchemeKind::SIM).beta;
  const double siem = report.rates.fits.at(SchemeKind::SIEM).beta;
  std::ostringstream d;
  d << std::fixed << std::setprecision(3) << "geometric BM, M = " << paths << ": SIM order " << sim
    << " (want [0.85, 1.15]), SIEM order " << siem << " (want [0.35, 0.65])";
  const bool pass = sim >= 0.85 && sim <= 1.15 && siem >= 0.35 && siem <= 0.65;
  return {"exact-solution-order", pass, d.str()};
}

CheckLine check_non_colliding(const ValidateSettings& s) {
  const std::size_t paths = s.quick ? 50 : 1000;
  std::size_t violations = 0, aborts = 0, outputs = 0;
  for (double spacing : {0.5, 1.0, 2.0}) {
    const ParticleSystem sys = benchmark_system(spacing, fields::halfsin2());
    for (SchemeKind kind : {SchemeKind::SIM, SchemeKind::SIEM}) {
      for (std::size_t m = 0; m < paths; ++m) {
        const auto grid = generate(split_seed(s.seed, m), sys.d, 7, sys.horizon);
        try {
          const auto traj = simulate_path(sys, kind, grid, s.solver);
          for (std::size_t k = 1; k < traj.nodes(); ++k) {
            ++outputs;
            if (!in_chamber(traj.row(k))) ++violations;
          }
        } catch (const PathAborted&) {
          ++aborts;
        }
      }
    }
  }
  std::ostringstream d;
  d << outputs << " step outputs over 3 initial conditions, ordering violations = " << violations
    << ", aborted paths = " << aborts;
  return {"non-colliding", violations == 0 && aborts == 0, d.str()};
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    fs::create_directories(cfg.output_dir);
    auto summary = open_output(fs::path(cfg.output_dir) / "simulate_summary.csv");
    summary << "scheme,path,seed,level,min_gap,newton_iterations,max_residual\n";
    summary.precision(17);
    for (std::size_t p = 0; p < cfg.paths_simulate; ++p) {
      const std::uint64_t seed = split_seed(cfg.seed, p);
      const auto grid = generate(seed, cfg.d, cfg.level, cfg.horizon);
      if (wants(cfg, "increments")) {
        auto f = open_output(fs::path(cfg.output_dir) / ("increments_path" + std::to_string(p) + ".csv"));
        write_csv(f, grid);
      }
      for (SchemeKind kind : cfg.schemes) {
        Trajectory traj;
        try {
          traj = simulate_path(cfg.system, kind, grid, cfg.solver);
        } catch (const PathAborted& e) {
          err << "error: " << to_string(kind) << " path " << p << ": " << e.what() << '\n';
          return kExitRuntimeError;
        }
        const std::string name = "trajectory_" + std::string(to_string(kind)) + "_path" + std::to_string(p) + ".csv";
        auto f = open_output(fs::path(cfg.output_dir) / name);
        write_csv(f, traj);

        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < traj.nodes(); ++k) gap = std::min(gap, min_gap(traj.row(k)));
        summary << to_string(kind) << ',' << p << ',' << seed << ',' << cfg.level << ',';
        if (std::isfinite(gap)) summary << gap;
        summary << ',' << traj.solver_stats.newton_iterations << ',' << traj.solver_stats.max_residual << '\n';
        out << to_string(kind) << " path " << p << ": " << name << "  min gap " << gap << "  newton iterations "
            << traj.solver_stats.newton_iterations << "  max residual " << traj.solver_stats.max_residual << '\n';
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_converge(const RunConfig& cfg, unsigned workers, std::ostream& out, std::ostream& err) {
  ExperimentConfig exp;
  exp.system = cfg.system;
  exp.schemes = cfg.schemes;
  exp.k_min = cfg.k_min;
  exp.k_max = cfg.k_max;
  exp.paths = cfg.paths_mc;
  exp.master_seed = cfg.seed;
  exp.solver = cfg.solver;
  exp.workers = workers;
  exp.audit_paths = std::min<std::size_t>(10, cfg.paths_mc);

  try {
    const MseTable table = run_mse_experiment(exp);
    const RateReport rates = fit_rate_lenient(table);
    fs::create_directories(cfg.output_dir);
    {
      auto f = open_output(fs::path(cfg.output_dir) / "mse.csv");
      write_mse_csv(f, table);
    }
    {
      auto f = open_output(fs::path(cfg.output_dir) / "rates.csv");
      write_rates_csv(f, rates);
    }
    {
      auto f = open_output(fs::path(cfg.output_dir) / "plotdata.csv");
      write_plotdata_csv(f, table, rates);
    }

    out << "M = " << table.paths << ", k = " << cfg.k_min << ".." << cfg.k_max << '\n';
    for (const auto& [kind, rows] : table.rows) {
      for (const auto& e : rows) {
        out << "  " << std::setw(4) << to_string(kind) << "  k=" << e.k << "  mse=" << std::scientific
            << std::setprecision(4) << e.mse << " +- " << e.stderr_jackknife << std::defaultfloat
            << "  discards=" << e.discards << '\n';
      }
    }
    for (const auto& [kind, fit] : rates.fits) {
      out << to_string(kind) << ": ";
      if (fit.degenerate) {
        out << "DegenerateFit (fewer than two positive mse values)\n";
      } else {
        out << std::fixed << std::setprecision(3) << "beta = " << fit.beta << "  intercept = " << fit.intercept
            << "  r2 = " << fit.r2 << std::defaultfloat << '\n';
      }
    }
    out << "coupling audit: " << table.audit.paths_checked << " paths, " << table.audit.mismatches
        << " mismatches\n";
    if (table.audit.mismatches != 0) {
      err << "error: coupling audit failed\n";
      return kExitRuntimeError;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

int cmd_config_dump(const RunConfig& cfg, std::ostream& out) {
  out << dump_config(cfg);
  return kExitOk;
}

int cmd_validate(const ValidateSettings& settings, std::ostream& out) {
  std::vector<CheckLine> lines;
  for (auto check : {check_solver_oracle, check_scheme_coincidence, check_exact_order, check_non_colliding}) {
    try {
      lines.push_back(check(settings));
    } catch (const std::exception& e) {
      lines.push_back({"(check)", false, std::string("exception: ") + e.what()});
    }
  }
  bool all = true;
  for (const auto& l : lines) {
    out << (l.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(22) << l.name << l.detail << '\n';
    all = all && l.pass;
  }
  out << (all ? "all checks passed" : "validation FAILED") << '\n';
  return all ? kExitOk : kExitValidationFailed;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-colliding particle systems: semi-implicit Milstein and Euler-Maruyama schemes", "ncps"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  bool quick = false;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config_path, "Configuration file")->required();
    sub->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
    sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory (overrides output.directory)");
    sub->add_option("overrides", overrides, "section.key=value overrides");
  };
  auto* simulate = app.add_subcommand("simulate", "Simulate trajectories and write CSV files");
  add_common(simulate, true);
  auto* converge = app.add_subcommand("converge", "Coupled-refinement mse experiment and rate fit");
  add_common(converge, true);
  auto* dump = app.add_subcommand("config-dump", "Print the effective configuration");
  add_common(dump, true);
  auto* validate = app.add_subcommand("validate", "Run the built-in self-check suite");
  add_common(validate, false);
  validate->add_flag("--quick", quick, "Reduced Monte Carlo sizes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  if (validate->parsed()) {
    ValidateSettings vs;
    vs.quick = quick;
    vs.workers = workers;
    if (seed) vs.seed = *seed;
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      const std::string key = o.substr(0, eq);
      const std::string value = eq == std::string::npos ? "" : o.substr(eq + 1);
      try {
        if (key == "solver.tol") {
          vs.solver.residual_tol = std::stod(value);
        } else if (key == "solver.max_iter") {
          vs.solver.max_iter = std::stoi(value);
        } else {
          throw std::invalid_argument("only solver.tol and solver.max_iter can be overridden");
        }
      } catch (const std::exception& e) {
        err << "error: " << key << ": " << e.what() << '\n';
        return kExitConfigError;
      }
    }
    return cmd_validate(vs, out);
  }

  RunConfig cfg;
  try {
    RawConfig raw = load_config_file(config_path);
    for (const auto& o : overrides) apply_override(raw, o);
    if (seed) raw.set("experiment.seed", std::to_string(*seed));
    if (out_dir) raw.set("output.directory", *out_dir);
    cfg = build_run_config(raw);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';

  if (simulate->parsed()) return cmd_simulate(cfg, out, err);
  if (converge->parsed()) return cmd_converge(cfg, workers, out, err);
  return cmd_config_dump(cfg, out);
}

}  // namespace ncps
