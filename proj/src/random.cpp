// SPDX-License-Identifier: Apache-2.0
#include "dlpm/random.hpp"

#include <cmath>

namespace dlpm {

// splitmix64 finalizer
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed, 0)) {}

double RandomStream::uniform_open() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::uniform_open(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

double RandomStream::exponential() { return -std::log(uniform_open()); }

double RandomStream::normal() { return normal_(engine_); }

std::int64_t RandomStream::integer(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(engine_);
}

RandomStream RandomStream::derive(std::uint64_t key) const { return RandomStream(mix_seed(seed_, key)); }

} // namespace dlpm
