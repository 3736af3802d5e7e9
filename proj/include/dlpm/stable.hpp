// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "dlpm/random.hpp"
#include "dlpm/types.hpp"

namespace dlpm {

/// One-dimensional stable law S_{alpha,beta}(mu, sigma), characteristic function
///   exp(i u mu - |sigma u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2)))   (alpha != 1).
struct StableParams {
  double alpha = 2.0;
  double beta = 0.0;
  double mu = 0.0;
  double sigma = 1.0;

  /// Throws ParameterError unless 0 < alpha <= 2, |beta| <= 1, sigma > 0 and
  /// (alpha, beta) is not the unsupported alpha = 1, beta != 0 case.
  void validate() const;
};

/// c_A = cos^{2/alpha}(pi alpha / 4). Zero at alpha = 2.
double positive_stable_const(double alpha);

/// Scale of the positive-stable mixing variable A whose square root turns a
/// standard Gaussian into a unit isotropic alpha-stable vector: 2 c_A.
///
/// With this scale E[exp(-s A)] = exp(-(2 s)^{alpha/2}), so A^{1/2} G has
/// characteristic function exp(-|u|^alpha), and A -> 2 as alpha -> 2.
double positive_stable_scale(double alpha, double c_a);

/// Draws of the positive-stable mixing variable for tail index alpha.
/// For alpha = 2 every draw is exactly 2.
class PositiveStableSampler {
public:
  explicit PositiveStableSampler(double alpha);
  /// Test hook: build the sampler around an explicit c_A instead of the
  /// analytic constant.
  PositiveStableSampler(double alpha, double c_a);

  double operator()(RandomStream& rng) const;

  double alpha() const { return alpha_; }
  double c_a() const { return c_a_; }
  /// Parameters of the law being sampled, S_{alpha/2,1}(0, 2 c_A).
  StableParams law() const;

private:
  double alpha_;
  double c_a_;
  double index_;    // alpha / 2
  double scale_;
  double shift_;    // B in the Chambers-Mallows-Stuck transform
  double stretch_;  // S in the Chambers-Mallows-Stuck transform
};

/// Single Chambers-Mallows-Stuck draw from S_{alpha,beta}(mu, sigma).
double draw_stable(const StableParams& params, RandomStream& rng);

/// n i.i.d. draws from an arbitrary supported stable law.
std::vector<double> sample_stable(const StableParams& params, std::size_t n, RandomStream& rng);

/// n i.i.d. draws from the symmetric law S_alpha(mu, sigma); requires beta = 0.
/// alpha = 2 draws N(mu, 2 sigma^2).
std::vector<double> sample_symmetric_stable(const StableParams& params, std::size_t n,
                                            RandomStream& rng);

/// n i.i.d. draws of the positive-stable mixing variable (see PositiveStableSampler).
std::vector<double> sample_positive_stable(double alpha, std::size_t n, RandomStream& rng);

struct MultivariateStableSpec {
  std::size_t dim = 1;
  double alpha = 2.0;
  Vector mu;  // empty means zero location
  double sigma = 1.0;
  Isotropy isotropy = Isotropy::isotropic;

  void validate() const;
};

/// n x d draws: isotropic rows are mu + sigma A^{1/2} G with one A per row,
/// non-isotropic rows use an independent A per coordinate.
Matrix sample_multivariate_stable(const MultivariateStableSpec& spec, std::size_t n,
                                  RandomStream& rng);

/// Same as sample_multivariate_stable but with an explicitly supplied
/// mixing sampler (used to inject a corrupted c_A).
Matrix sample_multivariate_stable(const MultivariateStableSpec& spec, std::size_t n,
                                  RandomStream& rng, const PositiveStableSampler& mixing);

/// (1/n) sum_k exp(i u^T x_k) over the rows of `samples`.
std::complex<double> empirical_cf(const Matrix& samples, const Vector& u);
std::complex<double> empirical_cf(const std::vector<double>& samples, double u);

/// Analytic characteristic function of a one-dimensional stable law (alpha != 1
/// or beta = 0).
std::complex<double> stable_cf(const StableParams& params, double u);

/// Analytic characteristic function of the multivariate law in `spec`.
std::complex<double> multivariate_stable_cf(const MultivariateStableSpec& spec, const Vector& u);

/// Law of X1 + X2 for independent stable X1, X2 sharing alpha.
StableParams sum_stability_params(const StableParams& p1, const StableParams& p2);

} // namespace dlpm
