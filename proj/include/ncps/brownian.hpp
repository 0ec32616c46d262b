#pragma once

// Seeded Brownian increments on dyadic grids.
//
// Each channel i of a grid generated from `seed` draws from its own
// std::mt19937_64 stream seeded with split_seed(seed, i); normals come from
// std::normal_distribution<double> scaled by sqrt(T/n). Tables are therefore
// bit-reproducible for a given standard library, and only statistically
// equivalent across toolchains.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ncps {

/// Derives an independent 64-bit stream seed from (seed, index) using the
/// SplitMix64 finalizer.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

class IncrementGrid {
 public:
  IncrementGrid(std::size_t d, unsigned level, double horizon, std::uint64_t seed,
                std::vector<double> increments);

  std::size_t channels() const { return d_; }
  std::size_t steps() const { return n_; }
  unsigned level() const { return level_; }
  double horizon() const { return horizon_; }
  double step_size() const { return horizon_ / static_cast<double>(n_); }
  std::uint64_t seed() const { return seed_; }

  /// W_i(t_{k+1}) - W_i(t_k).
  double operator()(std::size_t channel, std::size_t step) const { return inc_[channel * n_ + step]; }
  std::span<const double> channel(std::size_t i) const { return {inc_.data() + i * n_, n_}; }
  /// Increments of all channels at step k.
  std::vector<double> column(std::size_t step) const;
  /// W_i(T) as the left-to-right sum of the channel's increments.
  double endpoint(std::size_t channel) const;

  const std::vector<double>& raw() const { return inc_; }

 private:
  std::size_t d_;
  std::size_t n_;
  unsigned level_;
  double horizon_;
  std::uint64_t seed_;
  std::vector<double> inc_;  // channel-major, d x n
};

/// 2^level increments per channel over [0, T]. Throws std::invalid_argument
/// for d == 0, T <= 0 or level > 40.
IncrementGrid generate(std::uint64_t seed, std::size_t d, unsigned level, double horizon);

/// Pairwise sum of fine increments: coarse(i,k) = fine(i,2k) + fine(i,2k+1).
/// Throws std::invalid_argument for a level-0 grid.
IncrementGrid coarsen(const IncrementGrid& fine);

/// True iff `coarse` is bitwise the coarsening of `fine`.
bool is_coarsening_of(const IncrementGrid& coarse, const IncrementGrid& fine);

/// Debug dump: "channel,step,increment" with 1-based channel, 0-based step.
void write_csv(std::ostream& out, const IncrementGrid& grid);

}  // namespace ncps
