#include "ncps/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <locale>
#include <sstream>

namespace ncps {

namespace fields {

ScalarField zero() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, true};
}

ScalarField constant(double c) {
  std::ostringstream name;
  name << "constant(" << c << ")";
  return {name.str(), [c](double) { return c; }, [](double) { return 0.0; }, true};
}

ScalarField affine(double a, double c) {
  std::ostringstream name;
  name << "affine(" << a << "," << c << ")";
  return {name.str(), [a, c](double x) { return a * x + c; }, [a](double) { return a; }, a == 0.0};
}

ScalarField linear(double mu) {
  std::ostringstream name;
  name << "linear(" << mu << ")";
  return {name.str(), [mu](double x) { return mu * x; }, [mu](double) { return mu; }, mu == 0.0};
}

ScalarField sine() {
  return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, true};
}

ScalarField halfsin2() {
  return {"halfsin2", [](double x) { return 0.5 * std::sin(2.0 * x); },
          [](double x) { return std::cos(2.0 * x); }, true};
}

}  // namespace fields

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_real(const std::string& text, const std::string& context) {
  std::istringstream in(trim(text));
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (in.fail() || !in.eof() || !std::isfinite(v)) {
    throw std::invalid_argument("bad numeric parameter '" + text + "' in " + context);
  }
  return v;
}

}  // namespace

ScalarField make_field(const std::string& spec_text) {
  const std::string spec = trim(spec_text);
  const auto open = spec.find('(');
  const std::string head = trim(spec.substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (spec.back() != ')') throw std::invalid_argument("unterminated parameter list in '" + spec + "'");
    const std::string inner = spec.substr(open + 1, spec.size() - open - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) args.push_back(parse_real(item, spec));
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n) {
      throw std::invalid_argument("'" + head + "' expects " + std::to_string(n) + " parameter(s), got '" +
                                  spec + "'");
    }
  };
  if (head == "zero") { want(0); return fields::zero(); }
  if (head == "sin") { want(0); return fields::sine(); }
  if (head == "halfsin2") { want(0); return fields::halfsin2(); }
  if (head == "constant") { want(1); return fields::constant(args[0]); }
  if (head == "linear") { want(1); return fields::linear(args[0]); }
  if (head == "affine") { want(2); return fields::affine(args[0], args[1]); }
  throw std::invalid_argument("unknown coefficient function '" + spec + "'");
}

InteractionMatrix::InteractionMatrix(std::size_t d) : d_(d), g_(d * d, 0.0) {}

InteractionMatrix InteractionMatrix::nearest_neighbor(std::size_t d, double g) {
  InteractionMatrix m(d);
  for (std::size_t i = 0; i + 1 < d; ++i) m.set(i, i + 1, g);
  return m;
}

InteractionMatrix InteractionMatrix::all_pairs(std::size_t d, double g) {
  InteractionMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) m.set(i, j, g);
  return m;
}

InteractionMatrix InteractionMatrix::from_dense(std::size_t d, std::vector<double> entries) {
  if (entries.size() != d * d) {
    throw std::invalid_argument("interaction matrix needs " + std::to_string(d * d) + " entries, got " +
                                std::to_string(entries.size()));
  }
  InteractionMatrix m(d);
  m.g_ = std::move(entries);
  for (std::size_t i = 0; i < d; ++i) m.g_[i * d + i] = 0.0;
  return m;
}

void InteractionMatrix::set(std::size_t i, std::size_t j, double v) {
  g_[i * d_ + j] = v;
  g_[j * d_ + i] = v;
}

bool InteractionMatrix::is_zero() const {
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j)
      if (i != j && g_[i * d_ + j] != 0.0) return false;
  return true;
}

double InteractionMatrix::min_adjacent() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < d_; ++i) m = std::min(m, (*this)(i, i + 1));
  return m;
}

ParticleSystem make_uniform_system(InteractionMatrix gamma, const ScalarField& b, const ScalarField& sigma,
                                   std::vector<double> x0, double horizon) {
  ParticleSystem sys;
  sys.d = x0.size();
  sys.gamma = std::move(gamma);
  sys.b.assign(sys.d, b);
  sys.sigma.assign(sys.d, sigma);
  sys.x0 = std::move(x0);
  sys.horizon = horizon;
  return sys;
}

namespace {

// Central-difference agreement of a catalog derivative, eps = 1e-5, tol = 1e-6.
bool derivative_consistent(const ScalarField& f) {
  constexpr double eps = 1e-5;
  constexpr std::array<double, 7> probes{-3.0, -1.7, -0.4, 0.3, 1.1, 2.5, 4.0};
  for (double x : probes) {
    const double fd = (f.value(x + eps) - f.value(x - eps)) / (2.0 * eps);
    if (!(std::abs(f.derivative(x) - fd) <= 1e-6)) return false;
  }
  return true;
}

}  // namespace

ValidationResult validate_system(const ParticleSystem& sys) {
  ValidationResult r;
  const std::size_t d = sys.d;
  if (d < 1) r.violations.emplace_back("d must be >= 1");
  if (!(sys.horizon > 0.0) || !std::isfinite(sys.horizon)) r.violations.emplace_back("horizon T must be > 0");

  if (sys.gamma.size() != d) {
    r.violations.emplace_back("gamma is " + std::to_string(sys.gamma.size()) + "x" +
                              std::to_string(sys.gamma.size()) + " but d = " + std::to_string(d));
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        const double gij = sys.gamma(i, j);
        const double gji = sys.gamma(j, i);
        const std::string tag = "gamma[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
        if (!std::isfinite(gij) || !std::isfinite(gji)) {
          r.violations.push_back(tag + " must be finite");
        } else if (gij != gji) {
          r.violations.push_back(tag + " must equal gamma[" + std::to_string(j + 1) + "][" +
                                 std::to_string(i + 1) + "]");
        } else if (gij < 0.0) {
          r.violations.push_back(tag + " must be >= 0");
        }
      }
    }
    for (std::size_t i = 0; i + 1 < d; ++i) {
      if (!(sys.gamma(i, i + 1) > 0.0)) {
        r.violations.push_back("gamma[" + std::to_string(i + 1) + "][" + std::to_string(i + 2) + "] must be > 0");
      }
    }
  }

  if (sys.x0.size() != d) {
    r.violations.emplace_back("x0 has " + std::to_string(sys.x0.size()) + " entries but d = " + std::to_string(d));
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(sys.x0[i])) r.violations.push_back("x0[" + std::to_string(i + 1) + "] must be finite");
    }
    for (std::size_t i = 0; i + 1 < d; ++i) {
      if (!(sys.x0[i] < sys.x0[i + 1])) {
        r.violations.push_back("x0 not strictly increasing at index " + std::to_string(i + 1));
      }
    }
  }

  auto check_fields = [&](const std::vector<ScalarField>& fs, const char* label) {
    if (fs.size() != d) {
      r.violations.push_back(std::string(label) + " has " + std::to_string(fs.size()) + " entries but d = " +
                             std::to_string(d));
      return;
    }
    for (std::size_t i = 0; i < d; ++i) {
      const auto& f = fs[i];
      const std::string tag = std::string(label) + "[" + std::to_string(i + 1) + "]";
      if (!f.value || !f.derivative) {
        r.violations.push_back(tag + " is undefined");
        continue;
      }
      if (!derivative_consistent(f)) r.violations.push_back(tag + " (" + f.name + ") derivative inconsistent");
      if (!f.bounded && !sys.gamma.is_zero()) {
        r.warnings.push_back(tag + " (" + f.name + ") is unbounded while interaction is active");
      }
    }
  };
  check_fields(sys.b, "b");
  check_fields(sys.sigma, "sigma");
  return r;
}

bool in_chamber(std::span<const double> x) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!(x[i] < x[i + 1])) return false;
  return true;
}

double min_gap(std::span<const double> x) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < x.size(); ++i) m = std::min(m, x[i + 1] - x[i]);
  return m;
}

std::vector<double> singular_drift(const InteractionMatrix& gamma, std::span<const double> x) {
  const std::size_t d = x.size();
  if (gamma.size() != d) throw std::invalid_argument("singular_drift: dimension mismatch");
  for (std::size_t i = 0; i + 1 < d; ++i) {
    if (!(x[i] < x[i + 1])) {
      throw DomainError("singular_drift: x not strictly increasing at index " + std::to_string(i + 1));
    }
  }
  std::vector<double> f(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double g = gamma(i, j);
      if (g == 0.0) continue;
      const double t = g / (x[i] - x[j]);
      f[i] += t;
      f[j] -= t;
    }
  }
  return f;
}

}  // namespace ncps
