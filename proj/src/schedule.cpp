// SPDX-License-Identifier: Apache-2.0
#include "dlpm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dlpm/error.hpp"
#include "dlpm/stable.hpp"

namespace dlpm {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::scale_preserving ? "scale_preserving" : "scale_exploding";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "scale_preserving") return ScheduleKind::scale_preserving;
  if (name == "scale_exploding") return ScheduleKind::scale_exploding;
  throw ParameterError("unknown schedule kind '" + name + "'");
}

NoiseSchedule NoiseSchedule::from_steps(double alpha, std::vector<double> gammas,
                                        std::vector<double> sigmas, ScheduleKind kind) {
  require(alpha > 0.0 && alpha <= 2.0, "tail index alpha must lie in (0, 2]");
  require(!gammas.empty() && gammas.size() == sigmas.size(), "schedule needs T >= 1 matching steps");
  NoiseSchedule s;
  s.horizon_ = static_cast<int>(gammas.size());
  s.alpha_ = alpha;
  s.kind_ = kind;
  const auto n = gammas.size() + 1;
  s.gamma_.assign(n, 1.0);
  s.sigma_.assign(n, 0.0);
  s.gamma_cum_.assign(n, 1.0);
  s.sigma_cum_.assign(n, 0.0);
  s.sigma_cum_pow_.assign(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    const double g = gammas[t - 1];
    const double sg = sigmas[t - 1];
    require(std::isfinite(g) && g > 0.0, "gamma_t must be positive");
    require(std::isfinite(sg) && sg >= 0.0, "sigma_t must be nonnegative");
    s.gamma_[t] = g;
    s.sigma_[t] = sg;
    s.gamma_cum_[t] = s.gamma_cum_[t - 1] * g;
    s.sigma_cum_pow_[t] = std::pow(g, alpha) * s.sigma_cum_pow_[t - 1] + std::pow(sg, alpha);
    s.sigma_cum_[t] = std::pow(s.sigma_cum_pow_[t], 1.0 / alpha);
  }
  return s;
}

void NoiseSchedule::check_step(int t) const {
  require(t >= 1 && t <= horizon_, "timestep out of range [1, T]");
}

void NoiseSchedule::check_cum(int t) const {
  require(t >= 0 && t <= horizon_, "timestep out of range [0, T]");
}

double NoiseSchedule::gamma(int t) const {
  check_step(t);
  return gamma_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma(int t) const {
  check_step(t);
  return sigma_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::gamma_cum(int t) const {
  check_cum(t);
  return gamma_cum_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma_cum(int t) const {
  check_cum(t);
  return sigma_cum_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sigma_cum_pow(int t) const {
  check_cum(t);
  return sigma_cum_pow_[static_cast<std::size_t>(t)];
}

NoiseSchedule build_cosine_schedule(int horizon, double alpha) {
  require(horizon >= 1, "horizon T must be at least 1");
  require(alpha > 0.0 && alpha <= 2.0, "tail index alpha must lie in (0, 2]");
  constexpr double offset = 0.008;
  constexpr double max_beta = 0.999;
  const auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / horizon + offset) / (1.0 + offset) *
                              std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> gammas;
  std::vector<double> sigmas;
  for (int t = 1; t <= horizon; ++t) {
    const double beta = std::min(1.0 - f(t) / f(t - 1), max_beta);
    gammas.push_back(std::pow(1.0 - beta, 1.0 / alpha));
    sigmas.push_back(std::pow(beta, 1.0 / alpha));
  }
  return NoiseSchedule::from_steps(alpha, std::move(gammas), std::move(sigmas),
                                   ScheduleKind::scale_preserving);
}

NoiseSchedule build_scale_exploding_schedule(double alpha, std::span<const double> sigma_cum) {
  require(!sigma_cum.empty(), "scale-exploding schedule needs at least one level");
  std::vector<double> gammas(sigma_cum.size(), 1.0);
  std::vector<double> sigmas;
  double prev = 0.0;
  for (double level : sigma_cum) {
    require(std::isfinite(level) && level > prev, "sigma_{1->t} grid must be strictly increasing");
    sigmas.push_back(std::pow(std::pow(level, alpha) - std::pow(prev, alpha), 1.0 / alpha));
    prev = level;
  }
  return NoiseSchedule::from_steps(alpha, std::move(gammas), std::move(sigmas),
                                   ScheduleKind::scale_exploding);
}

NoiseSchedule build_schedule(const ScheduleSpec& spec) {
  if (spec.kind == ScheduleKind::scale_preserving) return build_cosine_schedule(spec.horizon, spec.alpha);
  require(spec.horizon >= 1, "horizon T must be at least 1");
  std::vector<double> grid;
  for (int t = 1; t <= spec.horizon; ++t)
    grid.push_back(0.01 * std::pow(100.0, static_cast<double>(t) / spec.horizon));
  return build_scale_exploding_schedule(spec.alpha, grid);
}

double sigma_cumulative_squared(const NoiseSchedule& schedule, int t, std::span<const double> a_seq) {
  require(t >= 1 && t <= schedule.horizon(), "timestep out of range [1, T]");
  require(a_seq.size() == static_cast<std::size_t>(t), "A sequence length must equal t");
  double acc = 0.0;
  for (int k = 1; k <= t; ++k) {
    const double a = a_seq[static_cast<std::size_t>(k - 1)];
    require(a > 0.0, "A values must be positive");
    const double g = schedule.gamma(k);
    const double s = schedule.sigma(k);
    acc = s * s * a + g * g * acc;
  }
  return acc;
}

double gamma_t_factor(const NoiseSchedule& schedule, int t, std::span<const double> a_seq) {
  const double total = sigma_cumulative_squared(schedule, t, a_seq);
  const double s = schedule.sigma(t);
  const double fresh = s * s * a_seq[static_cast<std::size_t>(t - 1)];
  if (total == 0.0) return 1.0;
  return fresh / total;
}

BridgeDraw bridge_from(const NoiseSchedule& schedule, int t, double a0, double a1) {
  BridgeDraw b;
  b.t = t;
  b.a0 = t == 1 ? 0.0 : a0;
  b.a1 = a1;
  const double g = schedule.gamma(t);
  const double s = schedule.sigma(t);
  const double prev = schedule.sigma_cum(t - 1);
  b.sigma_prime_prev = prev * prev * b.a0;
  const double fresh = s * s * b.a1;
  b.sigma_prime = fresh + g * g * b.sigma_prime_prev;
  b.gamma_prime = b.sigma_prime > 0.0 ? fresh / b.sigma_prime : 1.0;
  return b;
}

BridgeDraw make_bridge_draw(const NoiseSchedule& schedule, int t, RandomStream& rng) {
  return make_bridge_draw(schedule, t, rng, PositiveStableSampler(schedule.alpha()));
}

BridgeDraw make_bridge_draw(const NoiseSchedule& schedule, int t, RandomStream& rng,
                            const PositiveStableSampler& mixing) {
  require(t >= 1 && t <= schedule.horizon(), "timestep out of range [1, T]");
  const double a0 = mixing(rng);
  const double a1 = mixing(rng);
  return bridge_from(schedule, t, a0, a1);
}

} // namespace dlpm
