// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlpm/model.hpp"
#include "dlpm/random.hpp"
#include "dlpm/schedule.hpp"

namespace dlpm {

enum class SamplerMethod { dlpm, dlim, lim, lim_ode };

std::string to_string(SamplerMethod method);
SamplerMethod sampler_method_from_string(const std::string& name);

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::dlpm;
  int steps = 100;
  std::uint64_t seed = 0;
  int batch = 10000;
  Isotropy isotropy = Isotropy::isotropic;

  void validate(const NoiseSchedule& schedule) const;
  bool operator==(const SamplerConfig&) const = default;
};

/// Noise prediction for the columns of y (d x N), all at original timestep t.
using EpsPredictor = std::function<Matrix(const Matrix& y, int t)>;

EpsPredictor model_predictor(const EpsModel& model, int horizon);

/// Decreasing subset T = t_0 > ... > t_{K-1} = 1 with
/// t_k = T - floor(k (T - 1) / (K - 1)); a single step gives {T}.
std::vector<int> strided_timesteps(int horizon, int steps);

/// Schedule of the coarse chain through `timesteps` (decreasing), indexed
/// 1..K in increasing time. Step k spans (s, t] with
/// gamma = gamma_{1->t} / gamma_{1->s} and
/// sigma^alpha = sigma_{1->t}^alpha - gamma^alpha sigma_{1->s}^alpha.
NoiseSchedule coarse_schedule(const NoiseSchedule& schedule, std::span<const int> timesteps);

struct SampleResult {
  Matrix samples;      ///< N x d, failed chains removed
  int restarted = 0;   ///< chains rerun after a non-finite state
  int failed = 0;      ///< chains dropped after the rerun also failed
};

/// Ancestral sampler. Per chain the mixing variables A_1..A_K are drawn up
/// front, Sigma_{1->k} is accumulated forward, Y_T = sqrt(Sigma_{1->K}) G and
///   Y_{k-1} = (Y_k - Gamma_k sigma_{1->k} eps) / gamma_k + sqrt(Gamma_k Sigma_{1->k-1}) G_k
/// with no noise at the last step.
SampleResult dlpm_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                         const SamplerConfig& config, int dim, RandomStream& rng);

/// Deterministic sampler
///   Y_{k-1} = Y_k / gamma_k - (sigma_{1->k} / gamma_k - sigma_{1->k-1}) eps.
/// Without a latent (N x d) one is drawn from S_alpha(0, sigma_{1->T}) using `rng`.
Matrix dlim_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                   const SamplerConfig& config, const Matrix& latent);
Matrix draw_latent(const NoiseSchedule& schedule, const SamplerConfig& config, int dim,
                   RandomStream& rng);

/// Discretised Levy-Ito baseline. Stochastic:
///   X_{k-1} = X_k / gamma_k - alpha (1/gamma_k - 1) / sigma_{1->k}^{alpha-1} eps
///             + (1/gamma_k^alpha - 1)^{1/alpha} eps',  eps' ~ S_alpha^i(0, I);
/// deterministic:
///   X_{k-1} = X_k / gamma_k - (sigma_{1->k}^{1-alpha} / gamma_k - sigma_{1->k}^{1-alpha}) eps.
/// The last stochastic step drops the noise term.
SampleResult lim_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                        const SamplerConfig& config, int dim, RandomStream& rng, bool deterministic);

/// Single-step maps on a state matrix (d x N), exposed for reduction tests.
/// `gamma_factor` is Gamma_k, `variance` Gamma_k Sigma_{1->k-1}, `g` the Gaussian.
Matrix dlpm_step(const NoiseSchedule& schedule, int k, const Matrix& y, const Matrix& eps,
                 const Matrix& gamma_factor, const Matrix& variance, const Matrix& g);
Matrix dlim_step(const NoiseSchedule& schedule, int k, const Matrix& y, const Matrix& eps);
/// `noise` is the unit stable draw of the stochastic row; null omits the noise term.
Matrix lim_step(const NoiseSchedule& schedule, int k, const Matrix& x, const Matrix& eps,
                bool deterministic, const Matrix* noise);

/// Dispatch on config.method.
SampleResult run_sampler(const EpsPredictor& eps, const NoiseSchedule& schedule,
                         const SamplerConfig& config, int dim, RandomStream& rng,
                         const std::optional<Matrix>& latent = std::nullopt);

} // namespace dlpm
