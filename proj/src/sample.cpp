// SPDX-License-Identifier: Apache-2.0
#include "dlpm/sample.hpp"

#include <algorithm>
#include <cmath>

#include "dlpm/error.hpp"
#include "dlpm/stable.hpp"

namespace dlpm {

std::string to_string(SamplerMethod method) {
  switch (method) {
  case SamplerMethod::dlpm: return "dlpm";
  case SamplerMethod::dlim: return "dlim";
  case SamplerMethod::lim: return "lim";
  case SamplerMethod::lim_ode: return "lim_ode";
  }
  return "dlpm";
}

SamplerMethod sampler_method_from_string(const std::string& name) {
  if (name == "dlpm") return SamplerMethod::dlpm;
  if (name == "dlim") return SamplerMethod::dlim;
  if (name == "lim") return SamplerMethod::lim;
  if (name == "lim_ode") return SamplerMethod::lim_ode;
  throw ParameterError("unknown sampler method '" + name + "'");
}

void SamplerConfig::validate(const NoiseSchedule& schedule) const {
  require(steps >= 1 && steps <= schedule.horizon(), "sampler steps must lie in [1, T]");
  require(batch >= 1, "sampler batch must be at least 1");
  if (method == SamplerMethod::lim || method == SamplerMethod::lim_ode)
    require(schedule.kind() == ScheduleKind::scale_preserving,
            "the LIM baseline needs a scale-preserving schedule");
}

EpsPredictor model_predictor(const EpsModel& model, int horizon) {
  return [&model, horizon](const Matrix& y, int t) {
    const std::vector<int> ts(static_cast<std::size_t>(y.cols()), t);
    return model.forward_batch(y, ts, horizon);
  };
}

std::vector<int> strided_timesteps(int horizon, int steps) {
  require(horizon >= 1, "horizon must be positive");
  require(steps >= 1 && steps <= horizon, "steps must lie in [1, T]");
  if (steps == 1) return {horizon};
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k)
    out.push_back(horizon - static_cast<int>((static_cast<long long>(k) * (horizon - 1)) / (steps - 1)));
  return out;
}

NoiseSchedule coarse_schedule(const NoiseSchedule& schedule, std::span<const int> timesteps) {
  require(!timesteps.empty(), "need at least one timestep");
  const double alpha = schedule.alpha();
  std::vector<double> gammas, sigmas;
  int prev = 0;
  for (auto it = timesteps.rbegin(); it != timesteps.rend(); ++it) {
    const int t = *it;
    require(t > prev && t <= schedule.horizon(), "timesteps must be strictly decreasing within [1, T]");
    const double g = schedule.gamma_cum(t) / schedule.gamma_cum(prev);
    const double s_pow = schedule.sigma_cum_pow(t) - std::pow(g, alpha) * schedule.sigma_cum_pow(prev);
    gammas.push_back(g);
    sigmas.push_back(std::pow(std::max(s_pow, 0.0), 1.0 / alpha));
    prev = t;
  }
  return NoiseSchedule::from_steps(alpha, std::move(gammas), std::move(sigmas), schedule.kind());
}

Matrix dlpm_step(const NoiseSchedule& schedule, int k, const Matrix& y, const Matrix& eps,
                 const Matrix& gamma_factor, const Matrix& variance, const Matrix& g) {
  const double sc = schedule.sigma_cum(k);
  Matrix out = (y.array() - gamma_factor.array() * sc * eps.array()) / schedule.gamma(k);
  out.array() += variance.array().sqrt() * g.array();
  return out;
}

Matrix dlim_step(const NoiseSchedule& schedule, int k, const Matrix& y, const Matrix& eps) {
  const double g = schedule.gamma(k);
  return y / g - (schedule.sigma_cum(k) / g - schedule.sigma_cum(k - 1)) * eps;
}

Matrix lim_step(const NoiseSchedule& schedule, int k, const Matrix& x, const Matrix& eps,
                bool deterministic, const Matrix* noise) {
  const double a = schedule.alpha();
  const double g = schedule.gamma(k);
  const double sc = schedule.sigma_cum(k);
  if (deterministic) {
    const double s = std::pow(sc, 1.0 - a);
    return x / g - (s / g - s) * eps;
  }
  Matrix out = x / g - (a * (1.0 / g - 1.0) / std::pow(sc, a - 1.0)) * eps;
  if (noise) out += std::pow(1.0 / std::pow(g, a) - 1.0, 1.0 / a) * (*noise);
  return out;
}

namespace {

// d x N matrix of mixing variables; isotropic chains share one draw per column.
Matrix draw_mixing(const PositiveStableSampler& mixing, Isotropy iso, int dim, int n, RandomStream& rng) {
  Matrix a(dim, n);
  for (int c = 0; c < n; ++c) {
    if (iso == Isotropy::isotropic) {
      a.col(c).setConstant(mixing(rng));
    } else {
      for (int j = 0; j < dim; ++j) a(j, c) = mixing(rng);
    }
  }
  return a;
}

Matrix gaussian(int dim, int n, RandomStream& rng) {
  Matrix g(dim, n);
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < dim; ++j) g(j, c) = rng.normal();
  return g;
}

// d x N unit stable noise.
Matrix unit_stable(double alpha, Isotropy iso, int dim, int n, RandomStream& rng) {
  MultivariateStableSpec spec;
  spec.dim = static_cast<std::size_t>(dim);
  spec.alpha = alpha;
  spec.sigma = 1.0;
  spec.isotropy = iso;
  return sample_multivariate_stable(spec, static_cast<std::size_t>(n), rng).transpose();
}

using BatchRunner = std::function<Matrix(int n, RandomStream& rng)>;

// Runs the batch, reruns chains that ended non-finite once on a derived
// stream, and drops the ones that fail again.
SampleResult guarded(const BatchRunner& run, int n, RandomStream& rng) {
  Matrix out = run(n, rng);
  std::vector<int> bad;
  for (int c = 0; c < n; ++c)
    if (!out.col(c).allFinite()) bad.push_back(c);
  SampleResult res;
  res.restarted = static_cast<int>(bad.size());
  if (!bad.empty()) {
    RandomStream retry = rng.derive(0x5245u);
    const Matrix redo = run(static_cast<int>(bad.size()), retry);
    for (std::size_t i = 0; i < bad.size(); ++i) out.col(bad[i]) = redo.col(static_cast<Eigen::Index>(i));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    if (out.col(c).allFinite()) keep.push_back(c);
  res.failed = static_cast<int>(out.cols() - static_cast<Eigen::Index>(keep.size()));
  res.samples.resize(static_cast<Eigen::Index>(keep.size()), out.rows());
  for (std::size_t i = 0; i < keep.size(); ++i)
    res.samples.row(static_cast<Eigen::Index>(i)) = out.col(keep[i]).transpose();
  return res;
}

} // namespace

SampleResult dlpm_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                         const SamplerConfig& config, int dim, RandomStream& rng) {
  config.validate(schedule);
  require(dim >= 1, "dimension must be positive");
  const std::vector<int> ts = strided_timesteps(schedule.horizon(), config.steps);
  const NoiseSchedule coarse = coarse_schedule(schedule, ts);
  const int steps = coarse.horizon();
  const PositiveStableSampler mixing(schedule.alpha());

  const BatchRunner run = [&](int n, RandomStream& r) {
    std::vector<Matrix> a(static_cast<std::size_t>(steps) + 1);
    std::vector<Matrix> big_sigma(static_cast<std::size_t>(steps) + 1);
    big_sigma[0] = Matrix::Zero(dim, n);
    for (int k = 1; k <= steps; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      a[ku] = draw_mixing(mixing, config.isotropy, dim, n, r);
      const double g = coarse.gamma(k), s = coarse.sigma(k);
      big_sigma[ku] = s * s * a[ku] + g * g * big_sigma[ku - 1];
    }
    Matrix y = big_sigma[static_cast<std::size_t>(steps)].array().sqrt() * gaussian(dim, n, r).array();
    for (int k = steps; k >= 1; --k) {
      const auto ku = static_cast<std::size_t>(k);
      const double s = coarse.sigma(k);
      const Matrix fresh = s * s * a[ku];
      const Matrix gamma_factor =
          (big_sigma[ku].array() > 0.0).select(fresh.array() / big_sigma[ku].array(), 1.0);
      const Matrix variance = gamma_factor.array() * big_sigma[ku - 1].array();
      const Matrix e = eps(y, ts[static_cast<std::size_t>(steps - k)]);
      const Matrix g = k > 1 ? gaussian(dim, n, r) : Matrix::Zero(dim, n);
      y = dlpm_step(coarse, k, y, e, gamma_factor, variance, g);
    }
    return y;
  };
  return guarded(run, config.batch, rng);
}

Matrix draw_latent(const NoiseSchedule& schedule, const SamplerConfig& config, int dim,
                   RandomStream& rng) {
  MultivariateStableSpec spec;
  spec.dim = static_cast<std::size_t>(dim);
  spec.alpha = schedule.alpha();
  spec.sigma = schedule.sigma_cum(schedule.horizon());
  spec.isotropy = config.isotropy;
  return sample_multivariate_stable(spec, static_cast<std::size_t>(config.batch), rng);
}

Matrix dlim_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                   const SamplerConfig& config, const Matrix& latent) {
  config.validate(schedule);
  require(latent.rows() >= 1 && latent.cols() >= 1, "latent must be a nonempty N x d matrix");
  const std::vector<int> ts = strided_timesteps(schedule.horizon(), config.steps);
  const NoiseSchedule coarse = coarse_schedule(schedule, ts);
  Matrix y = latent.transpose();
  for (int k = coarse.horizon(); k >= 1; --k)
    y = dlim_step(coarse, k, y, eps(y, ts[static_cast<std::size_t>(coarse.horizon() - k)]));
  return y.transpose();
}

SampleResult lim_sample(const EpsPredictor& eps, const NoiseSchedule& schedule,
                        const SamplerConfig& config, int dim, RandomStream& rng, bool deterministic) {
  config.validate(schedule);
  require(schedule.kind() == ScheduleKind::scale_preserving,
          "the LIM baseline needs a scale-preserving schedule");
  const std::vector<int> ts = strided_timesteps(schedule.horizon(), config.steps);
  const NoiseSchedule coarse = coarse_schedule(schedule, ts);
  const int steps = coarse.horizon();
  const BatchRunner run = [&](int n, RandomStream& r) {
    SamplerConfig local = config;
    local.batch = n;
    Matrix x = draw_latent(schedule, local, dim, r).transpose();
    for (int k = steps; k >= 1; --k) {
      const Matrix e = eps(x, ts[static_cast<std::size_t>(steps - k)]);
      if (deterministic || k == 1) {
        x = lim_step(coarse, k, x, e, deterministic, nullptr);
      } else {
        const Matrix noise = unit_stable(coarse.alpha(), config.isotropy, dim, n, r);
        x = lim_step(coarse, k, x, e, false, &noise);
      }
    }
    return x;
  };
  return guarded(run, config.batch, rng);
}

SampleResult run_sampler(const EpsPredictor& eps, const NoiseSchedule& schedule,
                         const SamplerConfig& config, int dim, RandomStream& rng,
                         const std::optional<Matrix>& latent) {
  switch (config.method) {
  case SamplerMethod::dlpm: return dlpm_sample(eps, schedule, config, dim, rng);
  case SamplerMethod::dlim: {
    SampleResult res;
    res.samples = dlim_sample(eps, schedule, config, latent ? *latent : draw_latent(schedule, config, dim, rng));
    return res;
  }
  case SamplerMethod::lim: return lim_sample(eps, schedule, config, dim, rng, false);
  case SamplerMethod::lim_ode: return lim_sample(eps, schedule, config, dim, rng, true);
  }
  throw ParameterError("unknown sampler method");
}

} // namespace dlpm
