// SPDX-License-Identifier: Apache-2.0
#include "dlpm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include <json.hpp>

#include "dlpm/error.hpp"
#include "dlpm/stats.hpp"

namespace dlpm {

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(n)));
  idx = std::min(idx, n - 2);
  return sorted[idx];
}

// Distance from every row of `pts` to its k-th nearest other row.
std::vector<double> knn_radii(const Matrix& pts, int k) {
  const Eigen::Index n = pts.rows();
  std::vector<double> radii(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) dist[static_cast<std::size_t>(j)] = (pts.row(i) - pts.row(j)).squaredNorm();
    dist[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    radii[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(k - 1)];
  }
  return radii;  // squared
}

double coverage(const Matrix& support, const std::vector<double>& radii_sq, const Matrix& query) {
  std::int64_t inside = 0;
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    for (Eigen::Index i = 0; i < support.rows(); ++i) {
      if ((query.row(q) - support.row(i)).squaredNorm() <= radii_sq[static_cast<std::size_t>(i)]) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(query.rows());
}

} // namespace

double msle(const Matrix& real, const Matrix& gen, double xi, int levels) {
  require(real.rows() >= 100 && gen.rows() >= 100, "MSLE needs at least 100 samples on each side");
  require(real.cols() >= 1 && real.cols() == gen.cols(), "MSLE inputs must share a positive dimension");
  require(xi > 0.0 && xi < 1.0, "MSLE threshold must lie in (0, 1)");
  require(levels >= 1, "MSLE needs at least one quantile level");
  std::vector<double> a = stats::row_norms(real);
  std::vector<double> b = stats::row_norms(gen);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (int k = 1; k <= levels; ++k) {
    const double p = xi + (k - 0.5) * (1.0 - xi) / levels;
    const double qa = quantile(a, p);
    const double qb = quantile(b, p);
    if (!(qa > 0.0) || !(qb > 0.0) || !std::isfinite(qa) || !std::isfinite(qb))
      throw NumericError("MSLE: nonpositive or non-finite norm at a probed quantile");
    const double diff = std::log(qa) - std::log(qb);
    acc += diff * diff;
  }
  return acc / levels;
}

PrecisionRecall precision_recall(const Matrix& real, const Matrix& gen, int k) {
  require(k >= 1, "k must be positive");
  require(real.rows() >= k + 1 && gen.rows() >= k + 1, "precision/recall needs more than k points per set");
  require(real.cols() == gen.cols(), "precision/recall inputs must share a dimension");
  PrecisionRecall pr;
  pr.precision = coverage(real, knn_radii(real, k), gen);
  pr.recall = coverage(gen, knn_radii(gen, k), real);
  return pr;
}

double f1_pr(double precision, double recall) {
  require(precision >= 0.0 && precision <= 1.0 && recall >= 0.0 && recall <= 1.0,
          "precision and recall must lie in [0, 1]");
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  const auto opt = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  j["dataset"] = dataset;
  j["method"] = method;
  j["alpha"] = alpha;
  j["steps"] = steps;
  j["seed"] = seed;
  j["n_real"] = n_real;
  j["n_gen"] = n_gen;
  opt("msle", msle);
  opt("precision", precision);
  opt("recall", recall);
  opt("f1", f1);
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    const auto opt = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<double>();
    };
    r.dataset = j.value("dataset", "");
    r.method = j.value("method", "");
    r.alpha = j.value("alpha", 2.0);
    r.steps = j.value("steps", 0);
    r.seed = j.value("seed", std::uint64_t{0});
    r.n_real = j.value("n_real", std::int64_t{0});
    r.n_gen = j.value("n_gen", std::int64_t{0});
    r.msle = opt("msle");
    r.precision = opt("precision");
    r.recall = opt("recall");
    r.f1 = opt("f1");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
}

} // namespace dlpm
