// SPDX-License-Identifier: Apache-2.0
#include "dlpm/stable.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dlpm/error.hpp"

namespace dlpm {

namespace {

constexpr double kPi = std::numbers::pi;

void require_alpha(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 2.0,
          "tail index alpha must lie in (0, 2], got " + std::to_string(alpha));
}

// Chambers-Mallows-Stuck for alpha != 1 in the standard (sigma = 1, mu = 0)
// parameterization, given the precomputed shift B and stretch S.
double cms_unit(double alpha, double shift, double stretch, RandomStream& rng) {
  const double v = rng.uniform_open(-kPi / 2, kPi / 2);
  const double w = rng.exponential();
  const double arg = alpha * (v + shift);
  return stretch * std::sin(arg) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - arg) / w, (1.0 - alpha) / alpha);
}

} // namespace

void StableParams::validate() const {
  require_alpha(alpha);
  require(std::isfinite(beta) && beta >= -1.0 && beta <= 1.0, "skewness beta must lie in [-1, 1]");
  require(std::isfinite(mu), "location mu must be finite");
  require(std::isfinite(sigma) && sigma > 0.0, "scale sigma must be positive");
  require(alpha != 1.0 || beta == 0.0, "alpha = 1 is only supported for beta = 0");
}

double positive_stable_const(double alpha) {
  require_alpha(alpha);
  if (alpha == 2.0) return 0.0;
  return std::pow(std::cos(kPi * alpha / 4.0), 2.0 / alpha);
}

double positive_stable_scale(double /*alpha*/, double c_a) { return 2.0 * c_a; }

PositiveStableSampler::PositiveStableSampler(double alpha)
    : PositiveStableSampler(alpha, positive_stable_const(alpha)) {}

PositiveStableSampler::PositiveStableSampler(double alpha, double c_a)
    : alpha_(alpha), c_a_(c_a), index_(alpha / 2.0), scale_(positive_stable_scale(alpha, c_a)),
      shift_(kPi / 2.0), stretch_(1.0) {
  require_alpha(alpha);
  require(std::isfinite(c_a) && c_a >= 0.0, "c_A must be nonnegative");
  if (alpha < 2.0) {
    require(c_a > 0.0, "c_A must be positive for alpha < 2");
    const double zeta = std::tan(kPi * index_ / 2.0);
    // atan(tan(pi a / 2)) / a is exactly pi / 2 for a in (0, 1).
    stretch_ = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * index_));
  }
}

double PositiveStableSampler::operator()(RandomStream& rng) const {
  if (alpha_ == 2.0) return 2.0;
  return scale_ * cms_unit(index_, shift_, stretch_, rng);
}

StableParams PositiveStableSampler::law() const { return {index_, 1.0, 0.0, scale_}; }

double draw_stable(const StableParams& p, RandomStream& rng) {
  if (p.alpha == 2.0) return p.mu + std::sqrt(2.0) * p.sigma * rng.normal();
  if (p.alpha == 1.0) return p.mu + p.sigma * std::tan(rng.uniform_open(-kPi / 2, kPi / 2));
  const double zeta = p.beta * std::tan(kPi * p.alpha / 2.0);
  const double shift = std::atan(zeta) / p.alpha;
  const double stretch = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * p.alpha));
  return p.mu + p.sigma * cms_unit(p.alpha, shift, stretch, rng);
}

std::vector<double> sample_stable(const StableParams& params, std::size_t n, RandomStream& rng) {
  params.validate();
  std::vector<double> out(n);
  for (auto& x : out) x = draw_stable(params, rng);
  return out;
}

std::vector<double> sample_symmetric_stable(const StableParams& params, std::size_t n,
                                            RandomStream& rng) {
  require(params.beta == 0.0, "symmetric sampler requires beta = 0");
  require(n >= 1, "sample count must be at least 1");
  return sample_stable(params, n, rng);
}

std::vector<double> sample_positive_stable(double alpha, std::size_t n, RandomStream& rng) {
  const PositiveStableSampler draw(alpha);
  std::vector<double> out(n);
  for (auto& a : out) a = draw(rng);
  return out;
}

void MultivariateStableSpec::validate() const {
  require(dim >= 1, "dimension must be positive");
  require_alpha(alpha);
  require(std::isfinite(sigma) && sigma > 0.0, "scale sigma must be positive");
  require(mu.size() == 0 || static_cast<std::size_t>(mu.size()) == dim,
          "location vector length must match the dimension");
}

Matrix sample_multivariate_stable(const MultivariateStableSpec& spec, std::size_t n,
                                  RandomStream& rng) {
  spec.validate();
  return sample_multivariate_stable(spec, n, rng, PositiveStableSampler(spec.alpha));
}

Matrix sample_multivariate_stable(const MultivariateStableSpec& spec, std::size_t n,
                                  RandomStream& rng, const PositiveStableSampler& mixing) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index row = 0; row < out.rows(); ++row) {
    if (spec.isotropy == Isotropy::isotropic) {
      const double root = std::sqrt(mixing(rng));
      for (Eigen::Index j = 0; j < d; ++j) out(row, j) = spec.sigma * root * rng.normal();
    } else {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double root = std::sqrt(mixing(rng));
        out(row, j) = spec.sigma * root * rng.normal();
      }
    }
    if (spec.mu.size() != 0) out.row(row) += spec.mu.transpose();
  }
  return out;
}

std::complex<double> empirical_cf(const Matrix& samples, const Vector& u) {
  require(samples.rows() >= 1, "empirical characteristic function needs at least one sample");
  require(samples.cols() == u.size(), "frequency dimension must match sample dimension");
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index k = 0; k < samples.rows(); ++k) {
    const double phase = samples.row(k).dot(u);
    re += std::cos(phase);
    im += std::sin(phase);
  }
  const auto n = static_cast<double>(samples.rows());
  return {re / n, im / n};
}

std::complex<double> empirical_cf(const std::vector<double>& samples, double u) {
  require(!samples.empty(), "empirical characteristic function needs at least one sample");
  double re = 0.0;
  double im = 0.0;
  for (double x : samples) {
    re += std::cos(u * x);
    im += std::sin(u * x);
  }
  const auto n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

std::complex<double> stable_cf(const StableParams& p, double u) {
  p.validate();
  const double mag = std::pow(std::abs(p.sigma * u), p.alpha);
  const double sgn = (u > 0) - (u < 0);
  const double skew = p.alpha == 1.0 ? 0.0 : p.beta * sgn * std::tan(kPi * p.alpha / 2.0);
  return std::exp(std::complex<double>(-mag, u * p.mu + mag * skew));
}

std::complex<double> multivariate_stable_cf(const MultivariateStableSpec& spec, const Vector& u) {
  spec.validate();
  require(static_cast<std::size_t>(u.size()) == spec.dim, "frequency dimension mismatch");
  const double shift = spec.mu.size() == 0 ? 0.0 : spec.mu.dot(u);
  double mag = 0.0;
  if (spec.isotropy == Isotropy::isotropic) {
    mag = std::pow(spec.sigma * u.norm(), spec.alpha);
  } else {
    for (Eigen::Index j = 0; j < u.size(); ++j) mag += std::pow(spec.sigma * std::abs(u(j)), spec.alpha);
  }
  return std::exp(std::complex<double>(-mag, shift));
}

StableParams sum_stability_params(const StableParams& p1, const StableParams& p2) {
  p1.validate();
  p2.validate();
  require(p1.alpha == p2.alpha, "sum stability requires equal tail indices");
  const double w1 = std::pow(p1.sigma, p1.alpha);
  const double w2 = std::pow(p2.sigma, p2.alpha);
  StableParams out;
  out.alpha = p1.alpha;
  out.mu = p1.mu + p2.mu;
  out.sigma = std::pow(w1 + w2, 1.0 / p1.alpha);
  out.beta = (p1.beta * w1 + p2.beta * w2) / (w1 + w2);
  return out;
}

} // namespace dlpm
