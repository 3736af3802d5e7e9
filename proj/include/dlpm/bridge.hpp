// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "dlpm/random.hpp"
#include "dlpm/schedule.hpp"
#include "dlpm/types.hpp"

namespace dlpm {

class PositiveStableSampler;

/// One noised datum built from a bridge draw:
///   y_t = gamma_{1->t} y0 + sqrt(Sigma'_t) g,   eps_target = (y_t - gamma_{1->t} y0) / sigma_{1->t}.
/// `bridges` has one entry (isotropic) or one entry per coordinate.
struct ForwardDraw {
  Vector y0;
  int t = 1;
  Vector yt;
  Vector g;
  std::vector<BridgeDraw> bridges;
  Vector eps_target;

  const BridgeDraw& bridge(Eigen::Index coord) const {
    return bridges.size() == 1 ? bridges.front() : bridges[static_cast<std::size_t>(coord)];
  }
};

/// Gaussian law of Y_{t-1} given (Y_t, Y_0) and the mixing variables.
/// `variance` is per coordinate (constant across coordinates when isotropic).
struct BackwardPosterior {
  Vector mean;
  Vector variance;
};

/// Runs X_k = gamma_k X_{k-1} + sigma_k eps_k for k = 1..t with fresh unit
/// stable noise. Exists as an independent oracle for marginal_sample.
Vector simulate_chain(const Vector& y0, const NoiseSchedule& schedule, int t, RandomStream& rng,
                      Isotropy isotropy);

/// Deterministic construction of a ForwardDraw from given bridges and Gaussian.
ForwardDraw forward_from(const Vector& y0, const NoiseSchedule& schedule, int t,
                         std::vector<BridgeDraw> bridges, Vector g);

/// One draw of (y_t, eps target): bridge draw(s) first, then the Gaussian vector.
ForwardDraw marginal_sample(const Vector& y0, const NoiseSchedule& schedule, int t,
                            RandomStream& rng, Isotropy isotropy);
ForwardDraw marginal_sample(const Vector& y0, const NoiseSchedule& schedule, int t,
                            RandomStream& rng, Isotropy isotropy,
                            const PositiveStableSampler& mixing);

/// mean = (y_t - Gamma'_t sigma_{1->t} eps_t(y_t, y0)) / gamma_t,
/// variance = Gamma'_t Sigma'_{t-1}   (zero at t = 1).
BackwardPosterior backward_posterior(const Vector& yt, const Vector& y0,
                                     const NoiseSchedule& schedule, int t,
                                     std::span<const BridgeDraw> bridges);

/// (y_t - gamma_{1->t} y0) / sigma_{1->t}; t = 0 is an error.
Vector eps_residual(const Vector& yt, const Vector& y0, const NoiseSchedule& schedule, int t);

} // namespace dlpm
