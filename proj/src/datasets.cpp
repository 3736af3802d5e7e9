// SPDX-License-Identifier: Apache-2.0
#include "dlpm/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dlpm/checkpoint.hpp"
#include "dlpm/error.hpp"
#include "dlpm/stable.hpp"

namespace dlpm {

Matrix gen_stable2d(std::size_t n, RandomStream& rng) {
  require(n >= 1, "dataset size must be positive");
  MultivariateStableSpec spec;
  spec.dim = 2;
  spec.alpha = 1.7;
  spec.sigma = 0.05;
  spec.isotropy = Isotropy::isotropic;
  return sample_multivariate_stable(spec, n, rng);
}

const std::array<double, 9>& grid_weights() {
  static const std::array<double, 9> weights = [] {
    std::array<double, 9> w{.01, .02, .02, .05, .05, .1, .1, .15, .2};
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
  }();
  return weights;
}

std::array<double, 2> grid_mean(int c) {
  require(c >= 0 && c < 9, "grid component index out of range");
  return {static_cast<double>(c % 3) - 1.0, static_cast<double>(c / 3) - 1.0};
}

LabeledData gen_gaussian_grid(std::size_t n, RandomStream& rng, double std_dev) {
  require(n >= 1, "dataset size must be positive");
  require(std_dev >= 0.0, "standard deviation must be nonnegative");
  const auto& w = grid_weights();
  std::array<double, 9> cdf{};
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  LabeledData out;
  out.points.resize(static_cast<Eigen::Index>(n), 2);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform_open();
    const int c = static_cast<int>(std::min<std::ptrdiff_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), 8));
    const auto m = grid_mean(c);
    out.labels[i] = c;
    out.points(static_cast<Eigen::Index>(i), 0) = m[0] + std_dev * rng.normal();
    out.points(static_cast<Eigen::Index>(i), 1) = m[1] + std_dev * rng.normal();
  }
  return out;
}

Matrix gen_single_point(std::size_t n, const Vector& point) {
  require(n >= 1 && point.size() >= 1, "single-point dataset needs n >= 1 and a nonempty point");
  return point.transpose().replicate(static_cast<Eigen::Index>(n), 1);
}

Matrix load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
    if (rows.empty()) width = row.size();
    if (row.size() != width || width == 0)
      throw FormatError(path.string() + ": ragged row " + std::to_string(rows.size() + 2));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv(const std::filesystem::path& path, const Matrix& data,
               const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (j) out << ',';
    out << (static_cast<std::size_t>(j) < header.size() ? header[static_cast<std::size_t>(j)]
                                                         : "x" + std::to_string(j));
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << format_double(data(i, j));
    }
    out << '\n';
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

} // namespace dlpm
