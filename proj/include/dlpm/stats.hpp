// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dlpm/types.hpp"

namespace dlpm::stats {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_x(x) - F_y(x)|.
double ks_statistic(std::vector<double> x, std::vector<double> y);

/// Asymptotic critical value of the two-sample statistic at significance
/// `level` (e.g. 0.01), c(level) sqrt((n + m) / (n m)).
double ks_critical_value(std::size_t n, std::size_t m, double level);

/// Hill estimate of the tail index from the largest `top_fraction` of |x|.
double hill_tail_index(std::span<const double> x, double top_fraction);

/// Least-squares slope of log P(|X| > r) against log r over the largest
/// `top_fraction` of |x| (approximately -alpha for heavy-tailed data).
double tail_slope(std::span<const double> x, double top_fraction);

/// x_k^T direction for every row of `samples`.
std::vector<double> project(const Matrix& samples, const Vector& direction);

/// Euclidean norm of every row.
std::vector<double> row_norms(const Matrix& samples);

double mean(std::span<const double> x);
double variance(std::span<const double> x);

/// Median of a copy of x (average of the two central values for even sizes).
double median(std::vector<double> x);

} // namespace dlpm::stats
