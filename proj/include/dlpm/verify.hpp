// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dlpm {

struct VerifyOptions {
  std::uint64_t seed = 20240501;
  /// Replaces c_A in every positive-stable sampler the suite builds.
  std::optional<double> corrupt_ca;
  /// Multiplies every Monte Carlo sample size (1 = full suite).
  double size_scale = 1.0;
};

struct VerifyLine {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyLine> lines;
  bool all_pass() const;
  void print(std::ostream& out) const;
};

VerifyReport run_verification_suite(const VerifyOptions& options);

} // namespace dlpm
