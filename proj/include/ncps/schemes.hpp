#pragma once

// Semi-implicit time stepping: the singular drift is taken at the new time
// point, drift b and diffusion sigma at the old one.
//
//   SIEM: A_i = x_i + h b_i(x_i) + sigma_i(x_i) dW_i
//   SIM:  A_i = SIEM + 1/2 sigma_i(x_i) sigma_i'(x_i) (dW_i^2 - h)
//
// and the new state solves x' = A + h F(x') inside the chamber.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ncps/brownian.hpp"
#include "ncps/implicit_solver.hpp"
#include "ncps/model.hpp"

namespace ncps {

enum class SchemeKind { SIM, SIEM };

std::string_view to_string(SchemeKind kind);
/// Accepts "SIM" / "SIEM" (case-insensitive); throws std::invalid_argument.
SchemeKind parse_scheme(std::string_view name);

/// Solver failure inside a path driver.
class PathAborted : public std::runtime_error {
 public:
  PathAborted(std::size_t step, const std::string& why)
      : std::runtime_error("path aborted at step " + std::to_string(step) + ": " + why), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct SolverStats {
  long long newton_iterations = 0;
  double max_residual = 0.0;
};

struct Trajectory {
  std::size_t d = 0;
  unsigned level = 0;
  double horizon = 1.0;
  std::vector<double> values;  // (n+1) x d, row k = state at t_k
  SolverStats solver_stats;

  std::size_t nodes() const { return d == 0 ? 0 : values.size() / d; }
  std::span<const double> row(std::size_t k) const { return {values.data() + k * d, d}; }
  std::span<const double> final_state() const { return row(nodes() - 1); }
  double time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(nodes() - 1); }
};

/// Explicit part A of one step (no solve).
std::vector<double> explicit_part(const ParticleSystem& sys, SchemeKind kind, std::span<const double> x,
                                  std::span<const double> dW, double h);

/// One step of the given scheme. Propagates NonConvergence from the solver.
SolveResult step(const ParticleSystem& sys, SchemeKind kind, std::span<const double> x, std::span<const double> dW,
                 double h, const SolverOptions& opts = {});

std::vector<double> sim_step(const ParticleSystem& sys, std::span<const double> x, std::span<const double> dW,
                             double h, const SolverOptions& opts = {});
std::vector<double> siem_step(const ParticleSystem& sys, std::span<const double> x, std::span<const double> dW,
                              double h, const SolverOptions& opts = {});

/// Runs the scheme over every step of `grid` starting from sys.x0. Throws
/// std::invalid_argument if the grid does not match the system and
/// PathAborted on solver failure.
Trajectory simulate_path(const ParticleSystem& sys, SchemeKind kind, const IncrementGrid& grid,
                         const SolverOptions& opts = {});

/// Header "t,x1,...,xd", one row per grid node.
void write_csv(std::ostream& out, const Trajectory& traj);

}  // namespace ncps
