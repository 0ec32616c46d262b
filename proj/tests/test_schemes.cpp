#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "ncps/schemes.hpp"

using namespace ncps;

namespace {

ParticleSystem benchmark(double spacing, const ScalarField& sigma) {
  std::vector<double> x0(10);
  for (std::size_t i = 0; i < 10; ++i) x0[i] = spacing * static_cast<double>(i + 1);
  return make_uniform_system(InteractionMatrix::nearest_neighbor(10, 1.0), fields::sine(), sigma, x0, 1.0);
}

ParticleSystem single(const ScalarField& b, const ScalarField& sigma, double x0) {
  return make_uniform_system(InteractionMatrix(1), b, sigma, {x0}, 1.0);
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  CHECK(parse_scheme("sim") == SchemeKind::SIM);
  CHECK(parse_scheme("SIEM") == SchemeKind::SIEM);
  CHECK(to_string(SchemeKind::SIM) == "SIM");
  CHECK_THROWS_AS(parse_scheme("euler"), std::invalid_argument);
}

TEST_CASE("sim_step without noise reduces to the pair solve") {
  const auto sys = make_uniform_system(InteractionMatrix::nearest_neighbor(2, 1.0), fields::zero(), fields::zero(),
                                       {0.0, 1.0}, 1.0);
  const std::vector<double> x{0.0, 1.0};
  for (double dw : {0.0, 0.7, -2.0}) {
    const auto y = sim_step(sys, x, std::vector<double>{dw, -dw}, 0.1);
    CHECK(y[0] == doctest::Approx(-0.0854101966).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(1.0854101966).epsilon(1e-9));
  }
}

TEST_CASE("single particle with additive noise is exact") {
  const auto sys = single(fields::zero(), fields::constant(0.3), 2.0);
  const std::vector<double> x{2.0};
  CHECK(sim_step(sys, x, std::vector<double>{0.4}, 0.01)[0] == 2.0 + 0.3 * 0.4);
  CHECK(siem_step(sys, x, std::vector<double>{0.4}, 0.01)[0] == 2.0 + 0.3 * 0.4);
}

TEST_CASE("Milstein correction by hand for sigma(x) = x") {
  const auto sys = single(fields::zero(), fields::linear(1.0), 1.0);
  const std::vector<double> x{1.0};
  const std::vector<double> dW{0.2};
  // 1 + 0.2 + 0.5 * (0.04 - 0.01)
  CHECK(sim_step(sys, x, dW, 0.01)[0] == doctest::Approx(1.215).epsilon(1e-15));
  CHECK(siem_step(sys, x, dW, 0.01)[0] == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("zero step without noise is the identity") {
  const auto sys = benchmark(1.0, fields::halfsin2());
  const std::vector<double> dW(10, 0.0);
  const auto y = siem_step(sys, sys.x0, dW, 1e-14);
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(y[i] - sys.x0[i]) <= 1e-10);
}

TEST_CASE("constant sigma makes SIM and SIEM steps identical") {
  const auto sys = benchmark(0.5, fields::constant(0.5));
  const auto grid = generate(5, 10, 3, 1.0);
  std::vector<double> x = sys.x0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const auto a = sim_step(sys, x, grid.column(k), grid.step_size());
    const auto b = siem_step(sys, x, grid.column(k), grid.step_size());
    CHECK(a == b);
    x = a;
  }
}

TEST_CASE("explicit parts differ by the Milstein term") {
  const auto sys = benchmark(1.0, fields::halfsin2());
  const auto grid = generate(8, 10, 4, 1.0);
  const double h = grid.step_size();
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const auto dW = grid.column(k);
    const auto a = explicit_part(sys, SchemeKind::SIM, sys.x0, dW, h);
    const auto b = explicit_part(sys, SchemeKind::SIEM, sys.x0, dW, h);
    for (std::size_t i = 0; i < 10; ++i) {
      const double s = sys.sigma[i](sys.x0[i]);
      const double term = 0.5 * s * sys.sigma[i].derivative(sys.x0[i]) * (dW[i] * dW[i] - h);
      CHECK(std::abs((a[i] - b[i]) - term) <= 1e-14);
    }
  }

  // Without interaction the outputs differ by the same term.
  const auto one = single(fields::sine(), fields::halfsin2(), 0.4);
  const std::vector<double> x{0.4}, dW{0.3};
  const double term = 0.5 * one.sigma[0](0.4) * one.sigma[0].derivative(0.4) * (0.09 - 0.01);
  CHECK(sim_step(one, x, dW, 0.01)[0] - siem_step(one, x, dW, 0.01)[0] == doctest::Approx(term).epsilon(1e-12));
}

TEST_CASE("simulate_path with additive noise tracks x0 + c W") {
  const auto sys = single(fields::zero(), fields::constant(0.5), 1.0);
  for (unsigned level : {0u, 3u, 8u}) {
    const auto grid = generate(77, 1, level, 1.0);
    const auto traj = simulate_path(sys, SchemeKind::SIM, grid);
    CHECK(traj.nodes() == grid.steps() + 1);
    CHECK(traj.row(0)[0] == 1.0);
    double w = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
      w += grid(0, k);
      CHECK(traj.row(k + 1)[0] == doctest::Approx(1.0 + 0.5 * w).epsilon(1e-14));
    }
  }
}

TEST_CASE("constant sigma trajectories coincide bitwise") {
  const auto sys = benchmark(1.0, fields::constant(0.5));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto grid = generate(s, 10, 6, 1.0);
    const auto a = simulate_path(sys, SchemeKind::SIM, grid);
    const auto b = simulate_path(sys, SchemeKind::SIEM, grid);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("paths are deterministic") {
  const auto sys = benchmark(1.0, fields::halfsin2());
  const auto grid = generate(31, 10, 5, 1.0);
  const auto a = simulate_path(sys, SchemeKind::SIM, grid);
  const auto b = simulate_path(sys, SchemeKind::SIM, grid);
  CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
  CHECK(a.solver_stats.newton_iterations == b.solver_stats.newton_iterations);
  CHECK(a.solver_stats.max_residual <= 1e-12);
}

TEST_CASE("benchmark system never leaves the chamber at level 5") {
  const auto sys = benchmark(1.0, fields::halfsin2());
  std::size_t violations = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto grid = generate(split_seed(2019, s), 10, 5, 1.0);
    for (SchemeKind kind : {SchemeKind::SIM, SchemeKind::SIEM}) {
      const auto traj = simulate_path(sys, kind, grid);
      for (std::size_t k = 0; k < traj.nodes(); ++k)
        if (!in_chamber(traj.row(k))) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("simulate_path input checks and abort reporting") {
  const auto sys = benchmark(1.0, fields::halfsin2());
  CHECK_THROWS_AS(simulate_path(sys, SchemeKind::SIM, generate(1, 9, 3, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_path(sys, SchemeKind::SIM, generate(1, 10, 3, 2.0)), std::invalid_argument);

  SolverOptions hopeless;
  hopeless.max_iter = 1;
  hopeless.residual_tol = 1e-300;
  try {
    simulate_path(sys, SchemeKind::SIM, generate(1, 10, 3, 1.0), hopeless);
    FAIL("expected PathAborted");
  } catch (const PathAborted& e) {
    CHECK(e.step() == 0);
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("trajectory CSV layout") {
  const auto sys = make_uniform_system(InteractionMatrix::nearest_neighbor(2, 1.0), fields::zero(), fields::zero(),
                                       {0.0, 1.0}, 1.0);
  const auto traj = simulate_path(sys, SchemeKind::SIEM, generate(3, 2, 1, 1.0));
  std::ostringstream out;
  write_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x1,x2");
  std::getline(in, line);
  CHECK(line == "0,0,1");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
