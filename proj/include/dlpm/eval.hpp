// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "dlpm/types.hpp"

namespace dlpm {

/// Tail fit of the norm distributions:
///   (1/K) sum_k (log q_real(p_k) - log q_gen(p_k))^2,
///   p_k = xi + (k - 1/2)(1 - xi)/K,
/// with empirical quantiles q(p) = x_(floor(p n)) (0-based order statistic,
/// capped below the sample maximum). Rows are samples.
double msle(const Matrix& real, const Matrix& gen, double xi = 0.95, int levels = 100);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// k-NN manifold estimate: a generated point is precise if it lies within the
/// k-th-neighbour radius of some real point; recall swaps the roles.
PrecisionRecall precision_recall(const Matrix& real, const Matrix& gen, int k = 3);

/// Harmonic mean, 0 when both are 0.
double f1_pr(double precision, double recall);

struct MetricsReport {
  std::optional<double> msle;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::int64_t n_real = 0;
  std::int64_t n_gen = 0;
  std::uint64_t seed = 0;
  std::string method;
  double alpha = 2.0;
  int steps = 0;
  std::string dataset;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
};

} // namespace dlpm
