#include "ncps/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <locale>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "ncps/brownian.hpp"

namespace ncps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Calls fn(i) for i in [0, count) on `workers` threads. Each index is handled
// exactly once; the first exception thrown by any worker is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Endpoint difference for the mse table. Components that agree to within
// rounding of the endpoint itself count as equal: level-to-level summation
// order differs, so exactly coupled paths would otherwise leave ~1e-33 noise.
double coupled_sq_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (std::abs(diff) <= 1e-12 * std::max({1.0, std::abs(a[i]), std::abs(b[i])})) continue;
    s += diff * diff;
  }
  return s;
}

// Grids for levels k_lo..k_hi of one path, index 0 = k_lo.
std::vector<IncrementGrid> grid_ladder(std::uint64_t seed, std::size_t d, unsigned k_lo, unsigned k_hi, double T) {
  std::vector<IncrementGrid> ladder;
  ladder.reserve(k_hi - k_lo + 1);
  ladder.push_back(generate(seed, d, k_hi, T));
  while (ladder.back().level() > k_lo) ladder.push_back(coarsen(ladder.back()));
  std::reverse(ladder.begin(), ladder.end());
  return ladder;
}

// Reduces per-path samples (NaN = discarded) into table rows, in path order.
std::vector<MseEntry> reduce_samples(const std::vector<std::vector<double>>& by_level, unsigned k_lo) {
  std::vector<MseEntry> rows;
  for (std::size_t li = 0; li < by_level.size(); ++li) {
    std::vector<double> kept;
    kept.reserve(by_level[li].size());
    for (double v : by_level[li])
      if (std::isfinite(v)) kept.push_back(v);
    MseEntry e;
    e.k = k_lo + static_cast<unsigned>(li);
    e.used = kept.size();
    e.discards = by_level[li].size() - kept.size();
    std::tie(e.mse, e.stderr_jackknife) = jackknife_mean(kept);
    rows.push_back(e);
  }
  return rows;
}

void check_discards(const MseTable& table, double budget) {
  for (const auto& [kind, rows] : table.rows) {
    for (const auto& e : rows) {
      if (static_cast<double>(e.discards) > budget * static_cast<double>(table.paths)) {
        throw ExperimentError(std::string(to_string(kind)) + ": " + std::to_string(e.discards) + " of " +
                              std::to_string(table.paths) + " paths discarded at k = " + std::to_string(e.k));
      }
    }
  }
}

std::string format_csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> errs = validate_system(cfg.system).violations;
  if (cfg.k_max < cfg.k_min + 1) errs.emplace_back("k_max must be >= k_min + 1");
  if (cfg.k_max > 30) errs.emplace_back("k_max must be <= 30");
  if (cfg.paths < 2) errs.emplace_back("M must be >= 2");
  if (cfg.schemes.empty()) errs.emplace_back("at least one scheme is required");
  if (!(cfg.solver.residual_tol > 0.0)) errs.emplace_back("solver tolerance must be > 0");
  if (cfg.solver.max_iter < 1) errs.emplace_back("solver max_iter must be >= 1");
  return errs;
}

MseTable run_mse_experiment(const ExperimentConfig& cfg) {
  if (auto errs = validate_experiment(cfg); !errs.empty()) {
    std::string msg = "invalid experiment:";
    for (const auto& e : errs) msg += " " + e + ";";
    throw std::invalid_argument(msg);
  }
  const auto& sys = cfg.system;
  const std::size_t levels = cfg.k_max - cfg.k_min + 1;  // mse levels k_min..k_max
  const std::size_t M = cfg.paths;

  // slots[scheme][level][path]
  std::vector<std::vector<std::vector<double>>> slots(
      cfg.schemes.size(), std::vector<std::vector<double>>(levels, std::vector<double>(M, kNaN)));
  std::atomic<std::size_t> mismatches{0};
  const std::size_t audited = std::min(cfg.audit_paths, M);

  parallel_for(M, cfg.workers, [&](std::size_t m) {
    const std::uint64_t seed = split_seed(cfg.master_seed, m);
    const auto ladder = grid_ladder(seed, sys.d, cfg.k_min, cfg.k_max + 1, sys.horizon);
    if (m < audited) {
      const IncrementGrid fresh = generate(seed, sys.d, cfg.k_max + 1, sys.horizon);
      if (fresh.raw() != ladder.back().raw()) ++mismatches;
      for (std::size_t li = 0; li + 1 < ladder.size(); ++li)
        if (!is_coarsening_of(ladder[li], ladder[li + 1])) ++mismatches;
    }
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      std::vector<std::optional<std::vector<double>>> endpoint(ladder.size());
      for (std::size_t li = 0; li < ladder.size(); ++li) {
        try {
          const auto traj = simulate_path(sys, cfg.schemes[s], ladder[li], cfg.solver);
          const auto fin = traj.final_state();
          endpoint[li].emplace(fin.begin(), fin.end());
        } catch (const PathAborted&) {
        }
      }
      for (std::size_t li = 0; li < levels; ++li) {
        if (endpoint[li] && endpoint[li + 1]) slots[s][li][m] = coupled_sq_diff(*endpoint[li], *endpoint[li + 1]);
      }
    }
  });

  MseTable table;
  table.paths = M;
  table.audit = {audited, mismatches.load()};
  for (std::size_t s = 0; s < cfg.schemes.size(); ++s) table.rows[cfg.schemes[s]] = reduce_samples(slots[s], cfg.k_min);
  check_discards(table, cfg.discard_budget);
  return table;
}

std::pair<double, double> jackknife_mean(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n == 0) return {kNaN, kNaN};
  double total = 0.0;
  for (double v : samples) total += v;
  const double mean = total / static_cast<double>(n);
  if (n == 1) return {mean, kNaN};
  const double nm1 = static_cast<double>(n - 1);
  double loo_mean = 0.0;
  for (double v : samples) loo_mean += (total - v) / nm1;
  loo_mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) {
    const double dev = (total - v) / nm1 - loo_mean;
    ss += dev * dev;
  }
  return {mean, std::sqrt(nm1 / static_cast<double>(n) * ss)};
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("least_squares: size mismatch");
  if (n < 2) throw DegenerateFit("least_squares: fewer than two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DegenerateFit("least_squares: all abscissae identical");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

RateFit fit_rate(const std::vector<MseEntry>& entries) {
  RateFit out;
  std::vector<double> ks, logs;
  for (const auto& e : entries) {
    if (std::isfinite(e.mse) && e.mse > 0.0) {
      out.used_k.push_back(e.k);
      ks.push_back(static_cast<double>(e.k));
      logs.push_back(std::log2(e.mse));
    } else {
      out.excluded_k.push_back(e.k);
    }
  }
  try {
    const LineFit line = least_squares(ks, logs);
    out.beta = -line.slope / 2.0;
    out.intercept = line.intercept;
    out.r2 = line.r2;
  } catch (const DegenerateFit&) {
    out.degenerate = true;
    out.beta = out.intercept = out.r2 = kNaN;
  }
  return out;
}

RateReport fit_rate_lenient(const MseTable& table) {
  RateReport report;
  for (const auto& [kind, rows] : table.rows) report.fits[kind] = fit_rate(rows);
  return report;
}

RateReport fit_rate(const MseTable& table) {
  RateReport report = fit_rate_lenient(table);
  for (const auto& [kind, fit] : report.fits) {
    if (fit.degenerate) {
      throw DegenerateFit(std::string(to_string(kind)) + ": fewer than two positive mse entries");
    }
  }
  return report;
}

ExactErrorReport strong_error_vs_exact(unsigned k_lo, unsigned k_hi, std::size_t paths, std::uint64_t seed,
                                       const ExactSolutionParams& params, const SolverOptions& solver,
                                       unsigned workers) {
  if (k_hi < k_lo + 1) throw std::invalid_argument("strong_error_vs_exact: need at least two levels");
  if (paths < 2) throw std::invalid_argument("strong_error_vs_exact: need at least two paths");
  const ParticleSystem sys = make_uniform_system(InteractionMatrix(1), fields::linear(params.mu),
                                                 fields::linear(params.sigma), {params.x0}, params.horizon);
  const std::vector<SchemeKind> kinds{SchemeKind::SIM, SchemeKind::SIEM};
  const std::size_t levels = k_hi - k_lo + 1;
  std::vector<std::vector<std::vector<double>>> slots(
      kinds.size(), std::vector<std::vector<double>>(levels, std::vector<double>(paths, kNaN)));

  parallel_for(paths, workers, [&](std::size_t m) {
    const auto ladder = grid_ladder(split_seed(seed, m), 1, k_lo, k_hi, params.horizon);
    const double w_T = ladder.back().endpoint(0);
    const double exact =
        params.x0 * std::exp((params.mu - 0.5 * params.sigma * params.sigma) * params.horizon + params.sigma * w_T);
    for (std::size_t s = 0; s < kinds.size(); ++s) {
      for (std::size_t li = 0; li < levels; ++li) {
        try {
          const auto traj = simulate_path(sys, kinds[s], ladder[li], solver);
          const double e = traj.final_state()[0] - exact;
          slots[s][li][m] = e * e;
        } catch (const PathAborted&) {
        }
      }
    }
  });

  ExactErrorReport out;
  out.errors.paths = paths;
  for (std::size_t s = 0; s < kinds.size(); ++s) out.errors.rows[kinds[s]] = reduce_samples(slots[s], k_lo);
  out.rates = fit_rate(out.errors);
  return out;
}

MomentDiagnostics moment_diagnostics(const ParticleSystem& sys, unsigned level, std::size_t paths,
                                     std::uint64_t seed, double p, SchemeKind kind, const SolverOptions& solver) {
  if (!(p > 0.0)) throw std::invalid_argument("moment_diagnostics: exponent must be > 0");
  const std::size_t nodes = (std::size_t{1} << level) + 1;
  std::vector<double> sum_norm(nodes, 0.0);
  std::vector<double> sum_inv_gap(nodes, 0.0);
  MomentDiagnostics out;
  out.min_gap_observed = std::numeric_limits<double>::infinity();

  for (std::size_t m = 0; m < paths; ++m) {
    const auto grid = generate(split_seed(seed, m), sys.d, level, sys.horizon);
    Trajectory traj;
    try {
      traj = simulate_path(sys, kind, grid, solver);
    } catch (const PathAborted&) {
      ++out.discards;
      continue;
    }
    ++out.paths_used;
    const double sqrt_h = std::sqrt(grid.step_size());
    for (std::size_t k = 0; k < nodes; ++k) {
      const auto row = traj.row(k);
      double norm2 = 0.0;
      for (double v : row) norm2 += v * v;
      sum_norm[k] += std::pow(std::sqrt(norm2), p);
      if (sys.d >= 2) {
        const double g = min_gap(row);
        out.min_gap_observed = std::min(out.min_gap_observed, g);
        sum_inv_gap[k] += std::pow(g, -p);
      }
      if (k + 1 < nodes) {
        out.holder_quotient =
            std::max(out.holder_quotient, std::sqrt(squared_distance(row, traj.row(k + 1))) / sqrt_h);
      }
    }
  }
  if (out.paths_used > 0) {
    const double used = static_cast<double>(out.paths_used);
    out.max_mean_norm_pow = *std::max_element(sum_norm.begin(), sum_norm.end()) / used;
    if (sys.d >= 2) out.max_mean_inv_gap_pow = *std::max_element(sum_inv_gap.begin(), sum_inv_gap.end()) / used;
  }
  return out;
}

double cross_scheme_mse(const ParticleSystem& sys, unsigned level, std::size_t paths, std::uint64_t seed,
                        const SolverOptions& solver) {
  double total = 0.0;
  for (std::size_t m = 0; m < paths; ++m) {
    const auto grid = generate(split_seed(seed, m), sys.d, level, sys.horizon);
    const auto a = simulate_path(sys, SchemeKind::SIM, grid, solver);
    const auto b = simulate_path(sys, SchemeKind::SIEM, grid, solver);
    total += squared_distance(a.final_state(), b.final_state());
  }
  return paths == 0 ? 0.0 : total / static_cast<double>(paths);
}

void write_mse_csv(std::ostream& out, const MseTable& table) {
  out << "scheme,k,mse,stderr,discards\n";
  for (const auto& [kind, rows] : table.rows) {
    for (const auto& e : rows) {
      out << to_string(kind) << ',' << e.k << ',' << format_csv_number(e.mse) << ','
          << format_csv_number(e.stderr_jackknife) << ',' << e.discards << '\n';
    }
  }
}

void write_rates_csv(std::ostream& out, const RateReport& report) {
  out << "scheme,beta,intercept,r2,status\n";
  for (const auto& [kind, fit] : report.fits) {
    out << to_string(kind) << ',' << format_csv_number(fit.beta) << ',' << format_csv_number(fit.intercept) << ','
        << format_csv_number(fit.r2) << ',' << (fit.degenerate ? "DegenerateFit" : "ok") << '\n';
  }
}

void write_plotdata_csv(std::ostream& out, const MseTable& table, const RateReport& report) {
  out << "scheme,k,log2_mse,fitted_line\n";
  for (const auto& [kind, rows] : table.rows) {
    const auto it = report.fits.find(kind);
    for (const auto& e : rows) {
      const double log2_mse = e.mse > 0.0 ? std::log2(e.mse) : kNaN;
      double fitted = kNaN;
      if (it != report.fits.end() && !it->second.degenerate) {
        fitted = -2.0 * it->second.beta * static_cast<double>(e.k) + it->second.intercept;
      }
      out << to_string(kind) << ',' << e.k << ',' << format_csv_number(log2_mse) << ','
          << format_csv_number(fitted) << '\n';
    }
  }
}

}  // namespace ncps
