#pragma once

// Solver for the per-step implicit system
//
//   x_i = A_i + h * sum_{j != i} gamma_ij / (x_i - x_j),   x in the open chamber.
//
// The system is the stationarity condition of the strictly convex barrier
// objective
//
//   Phi(x) = 1/2 |x - A|^2 - h * sum_{i<j} gamma_ij * log(x_j - x_i),
//
// so it is solved with damped Newton on G(x) = grad Phi(x). The Jacobian
// I - h*DF(x) is symmetric positive definite everywhere in the chamber.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ncps/model.hpp"

namespace ncps {

struct SolverOptions {
  double residual_tol = 1e-12;  // sup-norm, absolute
  int max_iter = 100;
  double min_gap_floor = 1e-300;
  int max_halvings = 60;
};

/// Non-owning view of one step's system; A need not lie in the chamber.
struct ImplicitProblem {
  std::span<const double> A;
  double h;
  const InteractionMatrix& gamma;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
  /// max(residual_tol, rounding floor of the residual at x). The floor only
  /// exceeds the requested tolerance for badly conditioned steps, where
  /// particles are pushed from far out of order into gaps of order h.
  double effective_tol = 0.0;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Returns the unique chamber solution with residual <= effective_tol.
/// Throws std::invalid_argument for an invalid problem and NonConvergence
/// when the tolerance is not met within opts.max_iter Newton steps.
SolveResult solve(const ImplicitProblem& p, const SolverOptions& opts = {});

/// |x - A - h*F(x)|_inf. Throws DomainError if x is not strictly increasing.
double residual(const ImplicitProblem& p, std::span<const double> x);

/// Rounding-error bound of the residual near x: 4 eps (|x| |I - h DF(x)| +
/// |A| + max_i h sum_j gamma_ij / |x_i - x_j|), all in the sup norm.
double residual_floor(const ImplicitProblem& p, std::span<const double> x);

/// Closed-form d = 2 solution: the gap D = x2 - x1 solves
/// D^2 - (A2 - A1) D - 2 h gamma = 0 and x1 + x2 = A1 + A2.
std::pair<double, double> solve_pair_closed_form(double a1, double a2, double h, double gamma12);

}  // namespace ncps
