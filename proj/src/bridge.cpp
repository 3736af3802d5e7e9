// SPDX-License-Identifier: Apache-2.0
#include "dlpm/bridge.hpp"

#include <cmath>

#include "dlpm/error.hpp"
#include "dlpm/stable.hpp"

namespace dlpm {

Vector simulate_chain(const Vector& y0, const NoiseSchedule& schedule, int t, RandomStream& rng,
                      Isotropy isotropy) {
  require(t >= 0 && t <= schedule.horizon(), "timestep out of range [0, T]");
  const PositiveStableSampler mixing(schedule.alpha());
  Vector x = y0;
  for (int k = 1; k <= t; ++k) {
    const double g = schedule.gamma(k);
    const double s = schedule.sigma(k);
    if (isotropy == Isotropy::isotropic) {
      const double root = std::sqrt(mixing(rng));
      for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = g * x(j) + s * root * rng.normal();
    } else {
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double root = std::sqrt(mixing(rng));
        x(j) = g * x(j) + s * root * rng.normal();
      }
    }
  }
  return x;
}

ForwardDraw forward_from(const Vector& y0, const NoiseSchedule& schedule, int t,
                         std::vector<BridgeDraw> bridges, Vector g) {
  require(t >= 1 && t <= schedule.horizon(), "timestep out of range [1, T]");
  require(g.size() == y0.size(), "Gaussian draw must match the data dimension");
  require(bridges.size() == 1 || bridges.size() == static_cast<std::size_t>(y0.size()),
          "need one bridge draw or one per coordinate");
  ForwardDraw out;
  out.y0 = y0;
  out.t = t;
  out.g = std::move(g);
  out.bridges = std::move(bridges);
  out.yt.resize(y0.size());
  out.eps_target.resize(y0.size());
  const double gc = schedule.gamma_cum(t);
  const double sc = schedule.sigma_cum(t);
  for (Eigen::Index j = 0; j < y0.size(); ++j) {
    const double noise = std::sqrt(out.bridge(j).sigma_prime) * out.g(j);
    out.yt(j) = gc * y0(j) + noise;
    out.eps_target(j) = noise / sc;
  }
  return out;
}

ForwardDraw marginal_sample(const Vector& y0, const NoiseSchedule& schedule, int t,
                            RandomStream& rng, Isotropy isotropy) {
  return marginal_sample(y0, schedule, t, rng, isotropy, PositiveStableSampler(schedule.alpha()));
}

ForwardDraw marginal_sample(const Vector& y0, const NoiseSchedule& schedule, int t,
                            RandomStream& rng, Isotropy isotropy,
                            const PositiveStableSampler& mixing) {
  require(t >= 1 && t <= schedule.horizon(), "timestep out of range [1, T]");
  const std::size_t count = isotropy == Isotropy::isotropic ? 1 : static_cast<std::size_t>(y0.size());
  std::vector<BridgeDraw> bridges;
  bridges.reserve(count);
  for (std::size_t j = 0; j < count; ++j) bridges.push_back(make_bridge_draw(schedule, t, rng, mixing));
  Vector g(y0.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = rng.normal();
  return forward_from(y0, schedule, t, std::move(bridges), std::move(g));
}

BackwardPosterior backward_posterior(const Vector& yt, const Vector& y0,
                                     const NoiseSchedule& schedule, int t,
                                     std::span<const BridgeDraw> bridges) {
  require(yt.size() == y0.size(), "y_t and y_0 dimensions differ");
  require(bridges.size() == 1 || bridges.size() == static_cast<std::size_t>(y0.size()),
          "need one bridge draw or one per coordinate");
  for (const auto& b : bridges) require(b.t == t, "bridge draw belongs to a different timestep");
  const Vector eps = eps_residual(yt, y0, schedule, t);
  const double g = schedule.gamma(t);
  const double sc = schedule.sigma_cum(t);
  BackwardPosterior post;
  post.mean.resize(yt.size());
  post.variance.resize(yt.size());
  for (Eigen::Index j = 0; j < yt.size(); ++j) {
    const BridgeDraw& b = bridges.size() == 1 ? bridges[0] : bridges[static_cast<std::size_t>(j)];
    post.mean(j) = (yt(j) - b.gamma_prime * sc * eps(j)) / g;
    post.variance(j) = b.gamma_prime * b.sigma_prime_prev;
  }
  return post;
}

Vector eps_residual(const Vector& yt, const Vector& y0, const NoiseSchedule& schedule, int t) {
  require(t >= 1, "noise residual is undefined at t = 0 (sigma_{1->0} = 0)");
  require(yt.size() == y0.size(), "y_t and y_0 dimensions differ");
  const double sc = schedule.sigma_cum(t);
  require(sc > 0.0, "noise residual needs sigma_{1->t} > 0");
  return (yt - schedule.gamma_cum(t) * y0) / sc;
}

} // namespace dlpm
