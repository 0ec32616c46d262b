#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ncps/brownian.hpp"

using namespace ncps;

TEST_CASE("single-step grid holds W(T)") {
  const auto g = generate(11, 1, 0, 1.0);
  REQUIRE(g.steps() == 1);
  CHECK(g.endpoint(0) == g(0, 0));
  CHECK(g.step_size() == 1.0);
}

TEST_CASE("generation is deterministic and seed dependent") {
  const auto a = generate(123, 3, 6, 2.0);
  const auto b = generate(123, 3, 6, 2.0);
  const auto c = generate(124, 3, 6, 2.0);
  CHECK(a.raw() == b.raw());
  CHECK(a.raw() != c.raw());
  CHECK(a.steps() == 64);
  CHECK(a.seed() == 123);
}

TEST_CASE("generate rejects invalid arguments") {
  CHECK_THROWS_AS(generate(1, 0, 3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(generate(1, 2, 3, 0.0), std::invalid_argument);
}

TEST_CASE("increment sampling statistics at level 10") {
  // 100 channels x 1024 steps = 102400 draws from N(0, 2^-10).
  const auto g = generate(2024, 100, 10, 1.0);
  const double n = static_cast<double>(g.raw().size());
  double sum = 0.0;
  for (double v : g.raw()) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : g.raw()) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1);
  const double target = std::ldexp(1.0, -10);
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(target) / std::sqrt(n));
  CHECK(std::abs(var / target - 1.0) <= 0.05);
}

TEST_CASE("channels and consecutive steps are uncorrelated") {
  const auto g = generate(99, 3, 17, 1.0);
  const std::size_t n = g.steps();
  auto corr = [&](auto x, auto y, std::size_t len) {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < len; ++k) {
      mx += x(k);
      my += y(k);
    }
    mx /= len;
    my /= len;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < len; ++k) {
      sxy += (x(k) - mx) * (y(k) - my);
      sxx += (x(k) - mx) * (x(k) - mx);
      syy += (y(k) - my) * (y(k) - my);
    }
    return sxy / std::sqrt(sxx * syy);
  };
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      CHECK(std::abs(corr([&](std::size_t k) { return g(i, k); }, [&](std::size_t k) { return g(j, k); }, n)) < 0.02);
    }
    CHECK(std::abs(corr([&](std::size_t k) { return g(i, k); }, [&](std::size_t k) { return g(i, k + 1); }, n - 1)) <
          0.02);
  }
}

TEST_CASE("coarsen sums fine pairs") {
  const IncrementGrid fine(1, 1, 1.0, 5, {0.25, -0.5});
  const auto coarse = coarsen(fine);
  CHECK(coarse.level() == 0);
  CHECK(coarse(0, 0) == -0.25);
  CHECK(coarse.seed() == 5);
  CHECK(coarse.horizon() == 1.0);
  CHECK_THROWS_AS(coarsen(coarse), std::invalid_argument);

  const IncrementGrid four(1, 2, 1.0, 5, {0.5, 0.25, 0.125, 1.0});
  CHECK(coarsen(coarsen(four))(0, 0) == 1.875);
}

TEST_CASE("coarsening preserves channel totals and is bitwise pairwise") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto grid = generate(seed, 4, 8, 1.5);
    while (grid.level() > 0) {
      const auto coarse = coarsen(grid);
      CHECK(is_coarsening_of(coarse, grid));
      for (std::size_t i = 0; i < grid.channels(); ++i) {
        CHECK(coarse.endpoint(i) == doctest::Approx(grid.endpoint(i)).epsilon(1e-13));
      }
      grid = coarse;
    }
  }
}

TEST_CASE("is_coarsening_of detects tampering") {
  const auto fine = generate(1, 2, 3, 1.0);
  auto raw = coarsen(fine).raw();
  raw[1] = std::nextafter(raw[1], 10.0);
  const IncrementGrid tampered(2, 2, 1.0, 1, raw);
  CHECK_FALSE(is_coarsening_of(tampered, fine));
}

TEST_CASE("split_seed separates streams") {
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) != split_seed(2, 0));
  CHECK(split_seed(7, 3) == split_seed(7, 3));
}

TEST_CASE("grid CSV dump") {
  const IncrementGrid g(2, 1, 1.0, 0, {0.5, -0.25, 1.0, 2.0});
  std::ostringstream out;
  write_csv(out, g);
  CHECK(out.str() == "channel,step,increment\n1,0,0.5\n1,1,-0.25\n2,0,1\n2,1,2\n");
}
