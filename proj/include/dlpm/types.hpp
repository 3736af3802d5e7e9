// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace dlpm {

/// n x d sample matrix, one point per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Isotropy { isotropic, nonisotropic };

} // namespace dlpm
