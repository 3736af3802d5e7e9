// SPDX-License-Identifier: Apache-2.0
#include "dlpm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dlpm/error.hpp"

namespace dlpm::stats {

double ks_statistic(std::vector<double> x, std::vector<double> y) {
  require(!x.empty() && !y.empty(), "KS statistic needs two nonempty samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double level) {
  require(level > 0.0 && level < 1.0, "significance level must lie in (0, 1)");
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  const auto nn = static_cast<double>(n);
  const auto mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

namespace {

std::vector<double> sorted_abs_desc(std::span<const double> x) {
  std::vector<double> a(x.size());
  std::transform(x.begin(), x.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end(), std::greater<>());
  return a;
}

std::size_t tail_count(std::size_t n, double top_fraction) {
  require(top_fraction > 0.0 && top_fraction < 1.0, "tail fraction must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(top_fraction * static_cast<double>(n));
  require(k >= 2 && k < n, "not enough samples for a tail estimate");
  return k;
}

} // namespace

double hill_tail_index(std::span<const double> x, double top_fraction) {
  const auto a = sorted_abs_desc(x);
  const std::size_t k = tail_count(a.size(), top_fraction);
  const double threshold = std::log(a[k]);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(a[i]) - threshold;
  return static_cast<double>(k) / acc;
}

double tail_slope(std::span<const double> x, double top_fraction) {
  const auto a = sorted_abs_desc(x);
  const std::size_t k = tail_count(a.size(), top_fraction);
  const double n = static_cast<double>(a.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lx = std::log(a[i]);
    const double ly = std::log((static_cast<double>(i) + 1.0) / n);  // empirical survival
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double kk = static_cast<double>(k);
  return (kk * sxy - sx * sy) / (kk * sxx - sx * sx);
}

std::vector<double> project(const Matrix& samples, const Vector& direction) {
  require(samples.cols() == direction.size(), "projection direction dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index k = 0; k < samples.rows(); ++k) out[static_cast<std::size_t>(k)] = samples.row(k).dot(direction);
  return out;
}

std::vector<double> row_norms(const Matrix& samples) {
  std::vector<double> out(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index k = 0; k < samples.rows(); ++k) out[static_cast<std::size_t>(k)] = samples.row(k).norm();
  return out;
}

double mean(std::span<const double> x) {
  require(!x.empty(), "mean of an empty sample");
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  require(x.size() >= 2, "variance needs at least two samples");
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) {
  require(!x.empty(), "median of an empty sample");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
  if (x.size() % 2 == 1) return x[mid];
  const double upper = x[mid];
  const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

} // namespace dlpm::stats
