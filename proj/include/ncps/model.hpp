#pragma once

// Particle system definition: interaction matrix, coefficient catalog,
// singular repulsion drift and well-posedness checks.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncps {

/// Thrown when a configuration leaves the open chamber x_1 < ... < x_d.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A real function of one variable together with its analytic derivative.
struct ScalarField {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  bool bounded = true;  // f and f' bounded on R

  double operator()(double x) const { return value(x); }
};

/// Builds a catalog entry from its textual name, e.g. "sin", "constant(0.5)",
/// "affine(2,1)", "linear(0.5)", "halfsin2", "zero". Throws
/// std::invalid_argument for unknown names or malformed parameters.
ScalarField make_field(const std::string& spec);

namespace fields {
ScalarField zero();
ScalarField constant(double c);
ScalarField affine(double a, double c);  // x -> a*x + c
ScalarField linear(double mu);           // x -> mu*x
ScalarField sine();                      // x -> sin x
ScalarField halfsin2();                  // x -> sin(2x)/2
}  // namespace fields

/// Symmetric, dense d x d matrix of nonnegative interaction strengths.
/// Only off-diagonal entries are meaningful.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  explicit InteractionMatrix(std::size_t d);

  /// gamma_ij = g for |i-j| == 1, zero otherwise.
  static InteractionMatrix nearest_neighbor(std::size_t d, double g);
  /// gamma_ij = g for all i != j.
  static InteractionMatrix all_pairs(std::size_t d, double g);
  /// Row-major d x d entries; the diagonal is ignored.
  static InteractionMatrix from_dense(std::size_t d, std::vector<double> entries);

  std::size_t size() const { return d_; }
  double operator()(std::size_t i, std::size_t j) const { return g_[i * d_ + j]; }
  /// Sets both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v);

  bool is_zero() const;
  double min_adjacent() const;  // min_i gamma(i, i+1); +inf when d < 2

 private:
  std::size_t d_ = 0;
  std::vector<double> g_;
};

struct ParticleSystem {
  std::size_t d = 0;
  InteractionMatrix gamma;
  std::vector<ScalarField> b;
  std::vector<ScalarField> sigma;
  std::vector<double> x0;
  double horizon = 1.0;
};

/// Same drift and diffusion for every particle.
ParticleSystem make_uniform_system(InteractionMatrix gamma, const ScalarField& b,
                                   const ScalarField& sigma, std::vector<double> x0,
                                   double horizon);

struct ValidationResult {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
};

/// Collects every violated invariant of `sys`; never throws. Indices in
/// messages are 1-based.
ValidationResult validate_system(const ParticleSystem& sys);

/// True iff x is strictly increasing.
bool in_chamber(std::span<const double> x);

/// Smallest adjacent gap x_{i+1} - x_i; +inf for fewer than two entries.
double min_gap(std::span<const double> x);

/// F_i = sum_{j != i} gamma_ij / (x_i - x_j). Throws DomainError when x is
/// not strictly increasing.
std::vector<double> singular_drift(const InteractionMatrix& gamma, std::span<const double> x);

inline std::vector<double> singular_drift(const ParticleSystem& sys, std::span<const double> x) {
  return singular_drift(sys.gamma, x);
}

}  // namespace ncps
