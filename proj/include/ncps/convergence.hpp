#pragma once

// Monte Carlo estimation of strong convergence rates.
//
// mse(k) = (1/M) sum_m |X^{2^k, m}(T) - X^{2^{k+1}, m}(T)|^2, where both
// resolutions of path m are driven by the same Brownian path: one grid is
// drawn at level k_max + 1 from split_seed(master_seed, m) and every coarser
// grid is obtained by pairwise summation. The order beta is read off the
// least-squares line log2 mse(k) = -2 beta k + intercept.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncps/implicit_solver.hpp"
#include "ncps/model.hpp"
#include "ncps/schemes.hpp"

namespace ncps {

struct ExperimentConfig {
  ParticleSystem system;
  std::vector<SchemeKind> schemes{SchemeKind::SIM, SchemeKind::SIEM};
  unsigned k_min = 1;
  unsigned k_max = 5;
  std::size_t paths = 1000;  // M
  std::uint64_t master_seed = 1;
  SolverOptions solver;
  unsigned workers = 1;
  /// Number of leading paths whose grids are re-checked for bitwise coupling.
  std::size_t audit_paths = 0;
  /// Fraction of discarded paths tolerated at any level.
  double discard_budget = 0.10;
};

/// Empty when valid; otherwise one message per violated invariant.
std::vector<std::string> validate_experiment(const ExperimentConfig& cfg);

struct MseEntry {
  unsigned k = 0;
  double mse = 0.0;
  double stderr_jackknife = 0.0;
  std::size_t used = 0;      // paths contributing
  std::size_t discards = 0;  // paths excluded because either level aborted
};

struct CouplingAudit {
  std::size_t paths_checked = 0;
  std::size_t mismatches = 0;
};

struct MseTable {
  std::map<SchemeKind, std::vector<MseEntry>> rows;
  CouplingAudit audit;
  std::size_t paths = 0;
};

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument for an invalid config and ExperimentError when
/// more than cfg.discard_budget of the paths are discarded at some level.
/// Results do not depend on cfg.workers. Endpoint components that agree to
/// 1e-12 relative are treated as equal, so exactly coupled levels give mse 0.
MseTable run_mse_experiment(const ExperimentConfig& cfg);

/// Mean and jackknife standard error of per-path samples.
std::pair<double, double> jackknife_mean(const std::vector<double>& samples);

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Throws DegenerateFit for
/// fewer than two points or identical abscissae.
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct RateFit {
  double beta = 0.0;  // -slope / 2
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<unsigned> used_k;
  std::vector<unsigned> excluded_k;  // zero or non-finite mse
  bool degenerate = false;
};

struct RateReport {
  std::map<SchemeKind, RateFit> fits;
};

/// Fit of log2 mse(k) on k for each scheme. Throws DegenerateFit when any
/// scheme has fewer than two positive entries.
RateReport fit_rate(const MseTable& table);
/// As fit_rate, but degenerate schemes are flagged rather than thrown.
RateReport fit_rate_lenient(const MseTable& table);
/// Single-scheme fit over (k, mse) pairs.
RateFit fit_rate(const std::vector<MseEntry>& entries);

struct ExactSolutionParams {
  double mu = 0.5;
  double sigma = 0.5;
  double x0 = 1.0;
  double horizon = 1.0;
};

struct ExactErrorReport {
  MseTable errors;  // mse(k) = mean |X^{2^k}(T) - X(T)|^2
  RateReport rates;
};

/// d = 1 geometric Brownian motion dX = mu X dt + sigma X dW with exact
/// solution x0 exp((mu - sigma^2/2) T + sigma W(T)); both schemes are run on
/// levels k_lo..k_hi of the same paths and compared with the exact endpoint.
ExactErrorReport strong_error_vs_exact(unsigned k_lo, unsigned k_hi, std::size_t paths, std::uint64_t seed,
                                       const ExactSolutionParams& params = {}, const SolverOptions& solver = {},
                                       unsigned workers = 1);

struct MomentDiagnostics {
  double max_mean_norm_pow = 0.0;             // max_t E|X(t)|^p
  std::optional<double> max_mean_inv_gap_pow;  // max_t E[min gap^-p]; empty for d = 1
  double holder_quotient = 0.0;               // max |X(t_{k+1}) - X(t_k)| / sqrt(h)
  double min_gap_observed = 0.0;              // +inf for d = 1
  std::size_t paths_used = 0;
  std::size_t discards = 0;
};

/// Heuristic blow-up indicators over `paths` simulated paths.
MomentDiagnostics moment_diagnostics(const ParticleSystem& sys, unsigned level, std::size_t paths,
                                     std::uint64_t seed, double p, SchemeKind kind = SchemeKind::SIM,
                                     const SolverOptions& solver = {});

/// Mean squared distance between SIM and SIEM endpoints driven by the same
/// grids. Exactly zero when sigma is constant.
double cross_scheme_mse(const ParticleSystem& sys, unsigned level, std::size_t paths, std::uint64_t seed,
                        const SolverOptions& solver = {});

/// "scheme,k,mse,stderr,discards"
void write_mse_csv(std::ostream& out, const MseTable& table);
/// "scheme,beta,intercept,r2,status"
void write_rates_csv(std::ostream& out, const RateReport& report);
/// "scheme,k,log2_mse,fitted_line"
void write_plotdata_csv(std::ostream& out, const MseTable& table, const RateReport& report);

}  // namespace ncps
