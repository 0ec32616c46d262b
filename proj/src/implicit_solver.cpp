#include "ncps/implicit_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ncps {

namespace {

void check_problem(const ImplicitProblem& p, const SolverOptions& opts) {
  const std::size_t d = p.A.size();
  if (d == 0) throw std::invalid_argument("solve: empty problem");
  if (p.gamma.size() != d) throw std::invalid_argument("solve: gamma dimension does not match A");
  if (!(p.h > 0.0) || !std::isfinite(p.h)) throw std::invalid_argument("solve: step h must be > 0");
  for (double a : p.A)
    if (!std::isfinite(a)) throw std::invalid_argument("solve: A has a non-finite entry");
  if (d >= 2 && !(p.gamma.min_adjacent() > 0.0)) {
    throw std::invalid_argument("solve: gamma[i][i+1] must be > 0 for every adjacent pair");
  }
  if (!(opts.residual_tol > 0.0) || opts.max_iter < 1) throw std::invalid_argument("solve: invalid SolverOptions");
}

// Sorted A, pushed apart to a minimum gap sqrt(h * min adjacent gamma), then
// recentred on the mean of A.
std::vector<double> initial_iterate(const ImplicitProblem& p) {
  std::vector<double> x(p.A.begin(), p.A.end());
  if (x.size() < 2) return x;
  std::sort(x.begin(), x.end());
  const double mean_before = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double gap = std::sqrt(p.h * p.gamma.min_adjacent());
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double floor = std::max(x[i] + gap, std::nextafter(x[i], std::numeric_limits<double>::infinity()));
    x[i + 1] = std::max(x[i + 1], floor);
  }
  const double mean_after = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double shift = mean_before - mean_after;
  for (double& v : x) v += shift;
  if (!in_chamber(x)) {
    // Shift rounding collapsed a gap; fall back to the unshifted spread.
    for (double& v : x) v -= shift;
  }
  return x;
}

bool gaps_above(std::span<const double> x, double floor) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i + 1] - x[i] > floor)) return false;
  return true;
}

// Objective value and an estimate of its rounding magnitude.
std::pair<double, double> objective(const ImplicitProblem& p, std::span<const double> x) {
  const std::size_t d = x.size();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) quad += 0.5 * (x[i] - p.A[i]) * (x[i] - p.A[i]);
  double barrier = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double g = p.gamma(i, j);
      if (g == 0.0) continue;
      const double term = p.h * g * std::log(x[j] - x[i]);
      barrier -= term;
      scale += std::abs(term);
    }
  }
  return {quad + barrier, quad + scale};
}

// G(x) = x - A - h*F(x), written into g; returns |G|_inf.
double gradient(const ImplicitProblem& p, std::span<const double> x, Eigen::VectorXd& g) {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < d; ++i) g[i] = x[i] - p.A[i];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double gij = p.gamma(i, j);
      if (gij == 0.0) continue;
      const double t = p.h * gij / (x[i] - x[j]);
      g[i] -= t;
      g[j] += t;
    }
  }
  return d == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

// Hessian of Phi: I - h*DF(x).
void hessian(const ImplicitProblem& p, std::span<const double> x, Eigen::MatrixXd& H) {
  const std::size_t d = x.size();
  H.setIdentity();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double gij = p.gamma(i, j);
      if (gij == 0.0) continue;
      const double diff = x[i] - x[j];
      const double c = p.h * gij / (diff * diff);
      H(i, i) += c;
      H(j, j) += c;
      H(i, j) -= c;
      H(j, i) -= c;
    }
  }
}

}  // namespace

SolveResult solve(const ImplicitProblem& p, const SolverOptions& opts) {
  check_problem(p, opts);
  const std::size_t d = p.A.size();
  const auto n = static_cast<Eigen::Index>(d);

  SolveResult out;
  out.x = initial_iterate(p);
  std::vector<double> trial(d);
  Eigen::VectorXd g(n);
  Eigen::VectorXd step(n);
  Eigen::MatrixXd H(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(n);

  auto [phi, phi_scale] = objective(p, out.x);
  for (int iter = 0;; ++iter) {
    out.residual = gradient(p, out.x, g);
    out.iterations = iter;
    out.effective_tol = std::max(opts.residual_tol, residual_floor(p, out.x));
    if (out.residual <= out.effective_tol) return out;
    if (iter >= opts.max_iter) {
      throw NonConvergence("implicit solve: residual " + std::to_string(out.residual) + " after " +
                               std::to_string(iter) + " Newton iterations",
                           iter, out.residual);
    }

    hessian(p, out.x, H);
    llt.compute(H);
    if (llt.info() != Eigen::Success) {
      throw NonConvergence("implicit solve: Jacobian factorization failed", iter, out.residual);
    }
    step = llt.solve(-g);

    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + phi_scale);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, t *= 0.5) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = out.x[i] + t * step[static_cast<Eigen::Index>(i)];
      if (!gaps_above(trial, opts.min_gap_floor)) continue;
      const auto [phi_trial, scale_trial] = objective(p, trial);
      if (phi_trial <= phi + slack) {
        phi = phi_trial;
        phi_scale = scale_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergence("implicit solve: line search failed after " + std::to_string(opts.max_halvings) +
                               " halvings",
                           iter, out.residual);
    }
    out.x.swap(trial);
  }
}

double residual(const ImplicitProblem& p, std::span<const double> x) {
  if (x.size() != p.A.size() || p.gamma.size() != x.size()) throw std::invalid_argument("residual: size mismatch");
  if (!in_chamber(x)) throw DomainError("residual: x not strictly increasing");
  Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
  return gradient(p, x, g);
}

double residual_floor(const ImplicitProblem& p, std::span<const double> x) {
  const std::size_t d = x.size();
  double x_norm = 0.0, a_norm = 0.0, jac_norm = 1.0, drift_norm = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    x_norm = std::max(x_norm, std::abs(x[i]));
    a_norm = std::max(a_norm, std::abs(p.A[i]));
    double row = 1.0, drift = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == i || p.gamma(i, j) == 0.0) continue;
      const double gap = std::abs(x[i] - x[j]);
      drift += p.h * p.gamma(i, j) / gap;
      row += 2.0 * p.h * p.gamma(i, j) / (gap * gap);
    }
    jac_norm = std::max(jac_norm, row);
    drift_norm = std::max(drift_norm, drift);
  }
  return 4.0 * std::numeric_limits<double>::epsilon() * (x_norm * jac_norm + a_norm + drift_norm);
}

std::pair<double, double> solve_pair_closed_form(double a1, double a2, double h, double gamma12) {
  const double s = a2 - a1;
  const double r = std::sqrt(s * s + 8.0 * h * gamma12);
  // Two algebraically equal forms of (s + r)/2; pick the cancellation-free one.
  const double gap = s >= 0.0 ? 0.5 * (s + r) : 4.0 * h * gamma12 / (r - s);
  const double mid = 0.5 * (a1 + a2);
  return {mid - 0.5 * gap, mid + 0.5 * gap};
}

}  // namespace ncps
