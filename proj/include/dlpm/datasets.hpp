// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "dlpm/random.hpp"
#include "dlpm/types.hpp"

namespace dlpm {

/// n x 2 isotropic draws from S_1.7(0, 0.05).
Matrix gen_stable2d(std::size_t n, RandomStream& rng);

struct LabeledData {
  Matrix points;            // n x 2
  std::vector<int> labels;  // component index 0..8, row-major over the 3x3 grid
};

/// Mixture weights of the nine grid components (sum to 1).
const std::array<double, 9>& grid_weights();

/// Mean of component `c` on the {-1, 0, 1}^2 lattice.
std::array<double, 2> grid_mean(int c);

/// Unbalanced 3x3 Gaussian grid, per-component standard deviation `std_dev`.
LabeledData gen_gaussian_grid(std::size_t n, RandomStream& rng, double std_dev = 0.05);

/// n copies of one point.
Matrix gen_single_point(std::size_t n, const Vector& point);

/// Numeric CSV with a header row; every row must have the same width.
Matrix load_csv(const std::filesystem::path& path);

/// Writes `header` then one row per sample with shortest round-trip decimals.
void write_csv(const std::filesystem::path& path, const Matrix& data,
               const std::vector<std::string>& header = {});

} // namespace dlpm
