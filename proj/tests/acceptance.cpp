// Acceptance suite. One PASS/FAIL line per criterion; exit status is nonzero
// if any criterion fails. `--quick` runs the rate reproduction with M = 200
// and widened tolerance (+-0.30) instead of M = 1000 (+-0.20).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ncps/brownian.hpp"
#include "ncps/convergence.hpp"
#include "ncps/implicit_solver.hpp"
#include "ncps/schemes.hpp"

using namespace ncps;

namespace {

constexpr std::uint64_t kSeed = 20190615;

struct Outcome {
  bool pass = false;
  std::string detail;
};

ParticleSystem benchmark(double spacing, const ScalarField& sigma) {
  std::vector<double> x0(10);
  for (std::size_t i = 0; i < 10; ++i) x0[i] = spacing * static_cast<double>(i + 1);
  return make_uniform_system(InteractionMatrix::nearest_neighbor(10, 1.0), fields::sine(), sigma, x0, 1.0);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome solver_oracle() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> a(-5.0, 5.0), h(1e-4, 1.0), g(0.1, 10.0);
  double worst = 0.0;
  std::size_t failures = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::vector<double> A{a(rng), a(rng)};
    const double hh = h(rng);
    const auto gamma = InteractionMatrix::nearest_neighbor(2, g(rng));
    const auto [c1, c2] = solve_pair_closed_form(A[0], A[1], hh, gamma(0, 1));
    try {
      const auto x = solve(ImplicitProblem{A, hh, gamma}).x;
      worst = std::max({worst, std::abs(x[0] - c1), std::abs(x[1] - c2)});
    } catch (const NonConvergence&) {
      ++failures;
    }
  }
  return {failures == 0 && worst <= 1e-10,
          fmt("10^4 problems, max componentwise error %.2e (tol 1e-10), failures %zu", worst, failures)};
}

Outcome non_colliding() {
  std::size_t outputs = 0, violations = 0, aborts = 0;
  for (double spacing : {0.5, 1.0, 2.0}) {
    const auto sys = benchmark(spacing, fields::halfsin2());
    for (SchemeKind kind : {SchemeKind::SIM, SchemeKind::SIEM}) {
      for (std::size_t m = 0; m < 1000; ++m) {
        const auto grid = generate(split_seed(kSeed, m), 10, 7, 1.0);
        try {
          const auto traj = simulate_path(sys, kind, grid);
          for (std::size_t k = 1; k < traj.nodes(); ++k) {
            const auto row = traj.row(k);
            for (std::size_t i = 0; i + 1 < row.size(); ++i) {
              ++outputs;
              if (!(row[i + 1] - row[i] > 0.0)) ++violations;
            }
          }
        } catch (const PathAborted&) {
          ++aborts;
        }
      }
    }
  }
  return {violations == 0 && aborts == 0,
          fmt("%zu adjacent-pair checks, %zu violations, %zu aborted paths", outputs, violations, aborts)};
}

Outcome scheme_coincidence() {
  const auto sys = benchmark(1.0, fields::constant(0.5));
  double worst = 0.0;
  std::size_t bit_differences = 0;
  for (std::size_t m = 0; m < 100; ++m) {
    const auto grid = generate(split_seed(kSeed, m), 10, 7, 1.0);
    const auto a = simulate_path(sys, SchemeKind::SIM, grid);
    const auto b = simulate_path(sys, SchemeKind::SIEM, grid);
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    if (std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) != 0) ++bit_differences;
  }
  return {worst <= 1e-15,
          fmt("100 paths, max |SIM - SIEM| = %.1e (tol 1e-15), bitwise-different paths %zu", worst, bit_differences)};
}

Outcome classical_order() {
  const auto report = strong_error_vs_exact(2, 7, 10000, kSeed, {0.5, 0.5, 1.0, 1.0});
  const double sim = report.rates.fits.at(SchemeKind::SIM).beta;
  const double siem = report.rates.fits.at(SchemeKind::SIEM).beta;
  const bool pass = sim >= 0.85 && sim <= 1.15 && siem >= 0.35 && siem <= 0.65;
  return {pass, fmt("SIM order %.3f in [0.85, 1.15], SIEM order %.3f in [0.35, 0.65]", sim, siem)};
}

Outcome table_reproduction(bool quick) {
  const std::size_t M = quick ? 200 : 1000;
  const double tol = quick ? 0.30 : 0.20;
  struct Case {
    double spacing;
    double sim_target;   // NaN = no two-sided target
    double siem_target;
  };
  const Case cases[] = {{0.5, NAN, NAN}, {1.0, 0.91, 0.59}, {2.0, 0.97, 0.66}};
  bool pass = true;
  std::string detail = fmt("M = %zu, tol +-%.2f;", M, tol);
  for (const auto& c : cases) {
    ExperimentConfig cfg;
    cfg.system = benchmark(c.spacing, fields::halfsin2());
    cfg.k_min = 1;
    cfg.k_max = 5;
    cfg.paths = M;
    cfg.master_seed = kSeed;
    const auto rates = fit_rate(run_mse_experiment(cfg));
    const double sim = rates.fits.at(SchemeKind::SIM).beta;
    const double siem = rates.fits.at(SchemeKind::SIEM).beta;
    bool ok = sim > siem;
    if (std::isnan(c.sim_target)) {
      ok = ok && sim >= 0.55;
    } else {
      ok = ok && std::abs(sim - c.sim_target) <= tol && std::abs(siem - c.siem_target) <= tol;
    }
    pass = pass && ok;
    detail += fmt(" x0=%gi: SIM %.3f SIEM %.3f%s;", c.spacing, sim, siem, ok ? "" : " (out of band)");
  }
  return {pass, detail};
}

Outcome coupling_exactness() {
  ExperimentConfig cfg;
  cfg.system = benchmark(1.0, fields::halfsin2());
  cfg.k_min = 1;
  cfg.k_max = 5;
  cfg.paths = 10;
  cfg.audit_paths = 10;
  cfg.master_seed = kSeed;
  const auto table = run_mse_experiment(cfg);

  // Independent re-derivation: regenerate each path's finest grid and check
  // every coarser level by explicit pairwise sums.
  std::size_t independent_mismatches = 0;
  for (std::size_t m = 0; m < 10; ++m) {
    auto fine = generate(split_seed(kSeed, m), 10, 6, 1.0);
    while (fine.level() > 1) {
      const auto coarse = coarsen(fine);
      for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t k = 0; k < coarse.steps(); ++k) {
          const double s = fine(i, 2 * k) + fine(i, 2 * k + 1);
          if (std::memcmp(&s, &coarse.raw()[i * coarse.steps() + k], sizeof s) != 0) ++independent_mismatches;
        }
      }
      fine = coarse;
    }
  }
  const bool pass = table.audit.paths_checked == 10 && table.audit.mismatches == 0 && independent_mismatches == 0;
  return {pass, fmt("audit %zu paths, %zu mismatches; independent recheck %zu mismatches", table.audit.paths_checked,
                    table.audit.mismatches, independent_mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"1 solver oracle equivalence", solver_oracle},
      {"2 non-colliding invariant", non_colliding},
      {"3 scheme coincidence", scheme_coincidence},
      {"4 classical-order validation", classical_order},
      {"5 rate table reproduction", [quick] { return table_reproduction(quick); }},
      {"6 coupling exactness", coupling_exactness},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %-30s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("[INFO] %-30s %s\n", "7 theorem constants",
              "nonconstructive constants and the log-factor sup bound are not numerically reproducible; "
              "covered by the property tests");
  std::printf("%s\n", failures == 0 ? "all acceptance criteria passed" : "acceptance FAILED");
  return failures == 0 ? 0 : 1;
}
