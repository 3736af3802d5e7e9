// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace dlpm {

/// Seeded source of uniform, exponential and Gaussian variates.
///
/// Every sampler in the library takes one of these explicitly; there is no
/// global generator. Streams are cheap to copy and fully determined by their
/// seed, so independent work units derive their own stream with `derive`.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed);

  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Uniform on (lo, hi), endpoints excluded.
  double uniform_open(double lo, double hi);
  double exponential();
  double normal();
  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  /// Stream deterministically derived from this stream's seed and `key`.
  RandomStream derive(std::uint64_t key) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

} // namespace dlpm
