#include "ncps/brownian.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <locale>
#include <ostream>
#include <random>
#include <stdexcept>

namespace ncps {

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

IncrementGrid::IncrementGrid(std::size_t d, unsigned level, double horizon, std::uint64_t seed,
                             std::vector<double> increments)
    : d_(d), n_(std::size_t{1} << level), level_(level), horizon_(horizon), seed_(seed), inc_(std::move(increments)) {
  if (inc_.size() != d_ * n_) throw std::invalid_argument("IncrementGrid: table size does not match d * 2^level");
}

std::vector<double> IncrementGrid::column(std::size_t step) const {
  std::vector<double> c(d_);
  for (std::size_t i = 0; i < d_; ++i) c[i] = (*this)(i, step);
  return c;
}

double IncrementGrid::endpoint(std::size_t channel) const {
  double w = 0.0;
  for (double v : this->channel(channel)) w += v;
  return w;
}

IncrementGrid generate(std::uint64_t seed, std::size_t d, unsigned level, double horizon) {
  if (d == 0) throw std::invalid_argument("generate: d must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("generate: horizon must be > 0");
  if (level > 40) throw std::invalid_argument("generate: level too large");
  const std::size_t n = std::size_t{1} << level;
  const double scale = std::sqrt(horizon / static_cast<double>(n));
  std::vector<double> inc(d * n);
  for (std::size_t i = 0; i < d; ++i) {
    std::mt19937_64 engine(split_seed(seed, i));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) inc[i * n + k] = scale * normal(engine);
  }
  return IncrementGrid(d, level, horizon, seed, std::move(inc));
}

IncrementGrid coarsen(const IncrementGrid& fine) {
  if (fine.level() == 0) throw std::invalid_argument("coarsen: grid is already at level 0");
  const std::size_t d = fine.channels();
  const std::size_t n = fine.steps() / 2;
  std::vector<double> inc(d * n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < n; ++k) inc[i * n + k] = fine(i, 2 * k) + fine(i, 2 * k + 1);
  return IncrementGrid(d, fine.level() - 1, fine.horizon(), fine.seed(), std::move(inc));
}

bool is_coarsening_of(const IncrementGrid& coarse, const IncrementGrid& fine) {
  if (coarse.channels() != fine.channels() || coarse.level() + 1 != fine.level()) return false;
  for (std::size_t i = 0; i < coarse.channels(); ++i) {
    for (std::size_t k = 0; k < coarse.steps(); ++k) {
      const double expected = fine(i, 2 * k) + fine(i, 2 * k + 1);
      const double got = coarse(i, k);
      if (std::memcmp(&expected, &got, sizeof(double)) != 0) return false;
    }
  }
  return true;
}

void write_csv(std::ostream& out, const IncrementGrid& grid) {
  const auto old_locale = out.imbue(std::locale::classic());
  const auto old_precision = out.precision(17);
  out << "channel,step,increment\n";
  for (std::size_t i = 0; i < grid.channels(); ++i)
    for (std::size_t k = 0; k < grid.steps(); ++k) out << (i + 1) << ',' << k << ',' << grid(i, k) << '\n';
  out.precision(old_precision);
  out.imbue(old_locale);
}

}  // namespace ncps
