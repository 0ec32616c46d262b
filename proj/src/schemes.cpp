#include "ncps/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <locale>
#include <ostream>

namespace ncps {

std::string_view to_string(SchemeKind kind) { return kind == SchemeKind::SIM ? "SIM" : "SIEM"; }

SchemeKind parse_scheme(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "SIM") return SchemeKind::SIM;
  if (upper == "SIEM") return SchemeKind::SIEM;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (expected SIM or SIEM)");
}

std::vector<double> explicit_part(const ParticleSystem& sys, SchemeKind kind, std::span<const double> x,
                                  std::span<const double> dW, double h) {
  const std::size_t d = sys.d;
  if (x.size() != d || dW.size() != d) throw std::invalid_argument("explicit_part: dimension mismatch");
  std::vector<double> a(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double s = sys.sigma[i](x[i]);
    a[i] = x[i] + h * sys.b[i](x[i]) + s * dW[i];
    if (kind == SchemeKind::SIM) a[i] += 0.5 * s * sys.sigma[i].derivative(x[i]) * (dW[i] * dW[i] - h);
  }
  return a;
}

SolveResult step(const ParticleSystem& sys, SchemeKind kind, std::span<const double> x, std::span<const double> dW,
                 double h, const SolverOptions& opts) {
  if (!in_chamber(x)) throw DomainError("step: state not strictly increasing");
  const std::vector<double> a = explicit_part(sys, kind, x, dW, h);
  return solve(ImplicitProblem{a, h, sys.gamma}, opts);
}

std::vector<double> sim_step(const ParticleSystem& sys, std::span<const double> x, std::span<const double> dW,
                             double h, const SolverOptions& opts) {
  return step(sys, SchemeKind::SIM, x, dW, h, opts).x;
}

std::vector<double> siem_step(const ParticleSystem& sys, std::span<const double> x, std::span<const double> dW,
                              double h, const SolverOptions& opts) {
  return step(sys, SchemeKind::SIEM, x, dW, h, opts).x;
}

Trajectory simulate_path(const ParticleSystem& sys, SchemeKind kind, const IncrementGrid& grid,
                         const SolverOptions& opts) {
  if (grid.channels() != sys.d) throw std::invalid_argument("simulate_path: grid channels do not match d");
  if (grid.horizon() != sys.horizon) throw std::invalid_argument("simulate_path: grid horizon does not match T");

  const std::size_t d = sys.d;
  const std::size_t n = grid.steps();
  const double h = grid.step_size();

  Trajectory traj;
  traj.d = d;
  traj.level = grid.level();
  traj.horizon = sys.horizon;
  traj.values.resize((n + 1) * d);
  std::copy(sys.x0.begin(), sys.x0.end(), traj.values.begin());

  std::vector<double> dW(d);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) dW[i] = grid(i, k);
    const std::span<const double> x(traj.values.data() + k * d, d);
    SolveResult r;
    try {
      r = step(sys, kind, x, dW, h, opts);
    } catch (const NonConvergence& e) {
      throw PathAborted(k, e.what());
    }
    if (!in_chamber(r.x)) throw PathAborted(k, "solution left the chamber");
    traj.solver_stats.newton_iterations += r.iterations;
    traj.solver_stats.max_residual = std::max(traj.solver_stats.max_residual, r.residual);
    std::copy(r.x.begin(), r.x.end(), traj.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
  }
  return traj;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
  const auto old_locale = out.imbue(std::locale::classic());
  const auto old_precision = out.precision(17);
  out << 't';
  for (std::size_t i = 0; i < traj.d; ++i) out << ",x" << (i + 1);
  out << '\n';
  for (std::size_t k = 0; k < traj.nodes(); ++k) {
    out << traj.time(k);
    for (double v : traj.row(k)) out << ',' << v;
    out << '\n';
  }
  out.precision(old_precision);
  out.imbue(old_locale);
}

}  // namespace ncps
