// SPDX-License-Identifier: Apache-2.0
#include "dlpm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dlpm/bridge.hpp"
#include "dlpm/sample.hpp"
#include "dlpm/schedule.hpp"
#include "dlpm/stable.hpp"
#include "dlpm/stats.hpp"

namespace dlpm {

bool VerifyReport::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const VerifyLine& l) { return l.pass; });
}

void VerifyReport::print(std::ostream& out) const {
  char buf[256];
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof(buf), "%-4s %-44s stat=%-12.4g limit=%-10.3g %s\n", l.pass ? "PASS" : "FAIL",
                  l.name.c_str(), l.statistic, l.threshold, l.detail.c_str());
    out << buf;
  }
  const auto failed = std::count_if(lines.begin(), lines.end(), [](const VerifyLine& l) { return !l.pass; });
  out << (failed == 0 ? "all " + std::to_string(lines.size()) + " properties passed\n"
                      : std::to_string(failed) + " of " + std::to_string(lines.size()) + " properties FAILED\n");
}

namespace {

class Suite {
public:
  explicit Suite(const VerifyOptions& opt) : opt_(opt), root_(opt.seed) {}

  VerifyReport run() {
    schedule_identity();
    telescoping();
    for (double a : {1.5, 1.7}) decomposition_cf(a);
    sum_stability_cf();
    positivity();
    gaussian_reduction();
    tail_law();
    chain_sigma_law();
    bridge_law();
    for (double a : {1.5, 1.7, 2.0})
      for (int t : {5, 50, 100}) marginal_equivalence(a, t);
    joint_pair(1.7, 50);
    for (double a : {1.5, 1.7}) gamma_bound(a);
    alpha2_reductions();
    posterior_two_forms();
    return std::move(report_);
  }

private:
  std::size_t size(double n) const {
    return std::max<std::size_t>(200, static_cast<std::size_t>(n * opt_.size_scale));
  }

  PositiveStableSampler mixing(double alpha) const {
    return opt_.corrupt_ca && alpha < 2.0 ? PositiveStableSampler(alpha, *opt_.corrupt_ca)
                                          : PositiveStableSampler(alpha);
  }

  RandomStream stream() { return root_.derive(next_key_++); }

  void add(std::string name, double stat, double limit, bool pass, std::string detail = {}) {
    report_.lines.push_back({std::move(name), stat, limit, pass, std::move(detail)});
  }
  void add_below(std::string name, double stat, double limit, std::string detail = {}) {
    add(std::move(name), stat, limit, std::isfinite(stat) && stat < limit, std::move(detail));
  }

  static std::string alpha_tag(double a) {
    std::ostringstream s;
    s << "alpha=" << a;
    return s.str();
  }

  // sup over u in {0, 0.3, ..., 3} of |ecf(u) - cf(u)|; the negative half of
  // the grid is the complex conjugate on both sides.
  template <class Cf>
  static double cf_gap(const std::vector<double>& x, Cf cf) {
    double worst = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double u = 0.3 * k;
      worst = std::max(worst, std::abs(empirical_cf(x, u) - cf(u)));
      worst = std::max(worst, std::abs(empirical_cf(x, -u) - cf(-u)));
    }
    return worst;
  }

  void schedule_identity() {
    double worst = 0.0;
    for (double a : {1.5, 1.7, 1.8, 1.9, 2.0}) {
      const NoiseSchedule s = build_cosine_schedule(4000, a);
      for (int t = 0; t <= 4000; ++t)
        worst = std::max(worst, std::abs(std::pow(s.sigma_cum(t), a) + std::pow(s.gamma_cum(t), a) - 1.0));
    }
    add_below("schedule: sigma^a + gamma^a = 1 (T=4000)", worst, 1e-10);
  }

  void telescoping() {
    double worst = 0.0;
    for (double a : {1.5, 1.7, 2.0}) {
      const NoiseSchedule s = build_cosine_schedule(100, a);
      for (int t = 1; t <= 100; ++t) {
        double direct = 0.0;
        for (int i = 1; i <= t; ++i) direct += std::pow(s.gamma_cum(t) * s.sigma(i) / s.gamma_cum(i), a);
        worst = std::max(worst, std::abs(std::pow(direct, 1.0 / a) - s.sigma_cum(t)));
      }
    }
    add_below("schedule: recursion vs direct cumulant sum", worst, 1e-12);
  }

  void decomposition_cf(double alpha) {
    RandomStream rng = stream();
    MultivariateStableSpec spec;
    spec.dim = 2;
    spec.alpha = alpha;
    const Matrix x = sample_multivariate_stable(spec, size(1e6), rng, mixing(alpha));
    double worst = 0.0;
    for (int dir = 0; dir < 8; ++dir) {
      const double phi = rng.uniform_open(0.0, 2.0 * std::numbers::pi);
      Vector e(2);
      e << std::cos(phi), std::sin(phi);
      const std::vector<double> p = stats::project(x, e);
      worst = std::max(worst, cf_gap(p, [&](double u) { return std::complex<double>(std::exp(-std::pow(std::abs(u), alpha))); }));
    }
    add_below("Gaussian-mixture decomposition CF, " + alpha_tag(alpha), worst, 0.01, "8 directions x 21 u");
  }

  void sum_stability_cf() {
    RandomStream rng = stream();
    const StableParams p1{1.7, 0.5, 0.3, 1.0};
    const StableParams p2{1.7, -0.2, -0.1, 0.7};
    const std::size_t n = size(1e6);
    std::vector<double> x = sample_stable(p1, n, rng);
    const std::vector<double> y = sample_stable(p2, n, rng);
    for (std::size_t i = 0; i < n; ++i) x[i] += y[i];
    const StableParams sum = sum_stability_params(p1, p2);
    add_below("sum stability CF", cf_gap(x, [&](double u) { return stable_cf(sum, u); }), 0.01);
  }

  void positivity() {
    RandomStream rng = stream();
    double min_a = INFINITY;
    const std::size_t n = size(1e7);
    for (double a : {1.5, 1.7}) {
      const PositiveStableSampler m = mixing(a);
      for (std::size_t i = 0; i < n / 2; ++i) min_a = std::min(min_a, m(rng));
    }
    add("positive-stable draws strictly positive", min_a, 0.0, min_a > 0.0, "minimum draw");
  }

  void gaussian_reduction() {
    RandomStream rng = stream();
    const std::size_t n = size(1e5);
    const std::vector<double> s = sample_symmetric_stable({2.0, 0.0, 0.0, 0.8}, n, rng);
    std::vector<double> g(n);
    for (auto& v : g) v = std::sqrt(2.0) * 0.8 * rng.normal();
    add_below("alpha=2 sampler vs direct Gaussian KS", stats::ks_statistic(s, g), 0.01);
  }

  void tail_law() {
    RandomStream rng = stream();
    const std::vector<double> x = sample_symmetric_stable({1.5, 0.0, 0.0, 1.0}, size(1e6), rng);
    const double slope = stats::tail_slope(x, 0.01);
    add_below("tail slope of |X| vs -alpha, alpha=1.5", std::abs(slope + 1.5), 0.1);
    const double hill = stats::hill_tail_index(x, 0.01);
    add_below("Hill tail index, alpha=1.5", std::abs(hill - 1.5), 0.1);
  }

  void chain_sigma_law() {
    RandomStream rng = stream();
    const double alpha = 1.7;
    const int t = 50;
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const PositiveStableSampler m = mixing(alpha);
    const PositiveStableSampler truth(alpha);
    const std::size_t n = size(1e5);
    std::vector<double> lhs(n), rhs(n), seq(static_cast<std::size_t>(t));
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& a : seq) a = m(rng);
      lhs[i] = sigma_cumulative_squared(s, t, seq) / (s.sigma_cum(t) * s.sigma_cum(t));
    }
    for (auto& a : rhs) a = truth(rng);
    add_below("chain Sigma/sigma^2 vs A KS, t=50", stats::ks_statistic(lhs, rhs), 0.01);
  }

  void bridge_law() {
    RandomStream rng = stream();
    const double alpha = 1.7;
    const int t = 50;
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const PositiveStableSampler m = mixing(alpha);
    const PositiveStableSampler truth(alpha);
    const std::size_t n = size(1e5);
    std::vector<double> lhs(n), rhs(n);
    for (auto& v : lhs) v = make_bridge_draw(s, t, rng, m).sigma_prime / (s.sigma_cum(t) * s.sigma_cum(t));
    for (auto& a : rhs) a = truth(rng);
    add_below("bridge Sigma'_t/sigma^2 vs A KS, t=50", stats::ks_statistic(lhs, rhs), 0.01);
  }

  void marginal_equivalence(double alpha, int t) {
    RandomStream rng = stream();
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const PositiveStableSampler m = mixing(alpha);
    const std::size_t n = size(1e5);
    Vector y0(2);
    y0 << 0.5, -0.3;
    // The oracle chain always uses the analytic mixing law.
    Matrix chain(static_cast<Eigen::Index>(n), 2), bridge(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i)
      chain.row(static_cast<Eigen::Index>(i)) = simulate_chain(y0, s, t, rng, Isotropy::isotropic).transpose();
    for (std::size_t i = 0; i < n; ++i)
      bridge.row(static_cast<Eigen::Index>(i)) =
          marginal_sample(y0, s, t, rng, Isotropy::isotropic, m).yt.transpose();
    double worst = 0.0;
    for (int dir = 0; dir < 4; ++dir) {
      const double phi = rng.uniform_open(0.0, 2.0 * std::numbers::pi);
      Vector e(2);
      e << std::cos(phi), std::sin(phi);
      worst = std::max(worst, stats::ks_statistic(stats::project(chain, e), stats::project(bridge, e)));
    }
    add_below("chain vs bridge marginal KS, " + alpha_tag(alpha) + " t=" + std::to_string(t), worst, 0.01,
              "4 projections");
  }

  void joint_pair(double alpha, int t) {
    RandomStream rng = stream();
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const PositiveStableSampler m = mixing(alpha);
    const std::size_t n = size(1e5);
    Vector y0(2);
    y0 << 0.5, -0.3;
    Matrix chain(static_cast<Eigen::Index>(n), 4), bridge(static_cast<Eigen::Index>(n), 4);
    const PositiveStableSampler truth(alpha);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector prev = simulate_chain(y0, s, t - 1, rng, Isotropy::isotropic);
      const double root = std::sqrt(truth(rng));
      Vector cur(2);
      for (int j = 0; j < 2; ++j) cur(j) = s.gamma(t) * prev(j) + s.sigma(t) * root * rng.normal();
      chain.row(static_cast<Eigen::Index>(i)) << prev.transpose(), cur.transpose();
    }
    for (std::size_t i = 0; i < n; ++i) {
      const ForwardDraw fd = marginal_sample(y0, s, t, rng, Isotropy::isotropic, m);
      const BackwardPosterior post = backward_posterior(fd.yt, y0, s, t, fd.bridges);
      Vector prev(2);
      for (int j = 0; j < 2; ++j) prev(j) = post.mean(j) + std::sqrt(post.variance(j)) * rng.normal();
      bridge.row(static_cast<Eigen::Index>(i)) << prev.transpose(), fd.yt.transpose();
    }
    double worst = 0.0;
    for (int dir = 0; dir < 4; ++dir) {
      Vector e(4);
      for (int j = 0; j < 4; ++j) e(j) = rng.normal();
      e.normalize();
      worst = std::max(worst, stats::ks_statistic(stats::project(chain, e), stats::project(bridge, e)));
    }
    add_below("bridge (Y_t-1, Y_t) pair vs chain KS, " + alpha_tag(alpha), worst, 0.01, "4 projections in R^4");
  }

  void gamma_bound(double alpha) {
    RandomStream rng = stream();
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const PositiveStableSampler m = mixing(alpha);
    const std::size_t n = size(1e6);
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int t = 1; t <= 100; ++t) {
        const double fresh = s.sigma(t) * s.sigma(t) * m(rng);
        acc = fresh + s.gamma(t) * s.gamma(t) * acc;
        const double g = fresh / acc;
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
    }
    const bool pass = lo >= 0.0 && hi <= 1.0;
    add("Gamma_t in [0,1] for all t <= 100, " + alpha_tag(alpha), hi, 1.0, pass,
        "range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  // Independent DDPM/DDIM reference built from the cosine beta recipe.
  void alpha2_reductions() {
    RandomStream rng = stream();
    const int horizon = 100;
    const NoiseSchedule s = build_cosine_schedule(horizon, 2.0);
    std::vector<double> beta(horizon + 1, 0.0), abar(horizon + 1, 1.0);
    const auto f = [&](int t) {
      const double c = std::cos((static_cast<double>(t) / horizon + 0.008) / 1.008 * std::numbers::pi / 2.0);
      return c * c;
    };
    for (int t = 1; t <= horizon; ++t) {
      beta[t] = std::min(1.0 - f(t) / f(t - 1), 0.999);
      abar[t] = abar[t - 1] * (1.0 - beta[t]);
    }
    double gamma_err = 0.0, mean_err = 0.0, var_err = 0.0, step_err = 0.0, dlim_err = 0.0;
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (int trial = 0; trial < 1000; ++trial) {
      const int t = static_cast<int>(rng.integer(1, horizon));
      const std::vector<double> a_seq(static_cast<std::size_t>(t), 2.0);
      const double ddpm_gamma = (1.0 - abar[t] / abar[t - 1]) / (1.0 - abar[t]);
      gamma_err = std::max(gamma_err, rel(gamma_t_factor(s, t, a_seq), ddpm_gamma));

      Vector y0(2), yt(2), eps(2), g(2);
      for (int j = 0; j < 2; ++j) {
        y0(j) = rng.normal();
        yt(j) = rng.normal();
        eps(j) = rng.normal();
        g(j) = rng.normal();
      }
      const BridgeDraw b = make_bridge_draw(s, t, rng);
      const BackwardPosterior post = backward_posterior(yt, y0, s, t, std::span<const BridgeDraw>(&b, 1));
      const double c0 = std::sqrt(abar[t - 1]) * beta[t] / (1.0 - abar[t]);
      const double ct = std::sqrt(1.0 - beta[t]) * (1.0 - abar[t - 1]) / (1.0 - abar[t]);
      const double ddpm_var = 2.0 * beta[t] * (1.0 - abar[t - 1]) / (1.0 - abar[t]);
      for (int j = 0; j < 2; ++j) {
        mean_err = std::max(mean_err, rel(post.mean(j), c0 * y0(j) + ct * yt(j)));
        var_err = std::max(var_err, rel(post.variance(j), ddpm_var));
      }

      // ancestral step with eps prediction and unit-variance-2 noise convention
      const Matrix y = yt;
      const Matrix e = eps;
      const Matrix gf = Matrix::Constant(2, 1, b.gamma_prime);
      const Matrix var = Matrix::Constant(2, 1, b.gamma_prime * b.sigma_prime_prev);
      const Matrix step = dlpm_step(s, t, y, e, gf, var, Matrix(g));
      const Matrix dlim = dlim_step(s, t, y, e);
      for (int j = 0; j < 2; ++j) {
        const double ref = (yt(j) - beta[t] / std::sqrt(1.0 - abar[t]) * eps(j)) / std::sqrt(1.0 - beta[t]) +
                           std::sqrt(ddpm_var) * g(j);
        step_err = std::max(step_err, rel(step(j, 0), ref));
        const double x0 = (yt(j) - std::sqrt(1.0 - abar[t]) * eps(j)) / std::sqrt(abar[t]);
        const double ddim = std::sqrt(abar[t - 1]) * x0 + std::sqrt(1.0 - abar[t - 1]) * eps(j);
        dlim_err = std::max(dlim_err, rel(dlim(j, 0), ddim));
      }
    }
    add_below("alpha=2: Gamma_t vs DDPM", gamma_err, 1e-12);
    add_below("alpha=2: posterior mean vs DDPM", mean_err, 1e-12);
    add_below("alpha=2: posterior variance vs DDPM", var_err, 1e-12);
    add_below("alpha=2: DLPM step vs DDPM ancestral step", step_err, 1e-12);
    add_below("alpha=2: DLIM step vs DDIM step", dlim_err, 1e-12);
  }

  void posterior_two_forms() {
    RandomStream rng = stream();
    const NoiseSchedule s = build_cosine_schedule(100, 1.7);
    const PositiveStableSampler m = mixing(1.7);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int t = static_cast<int>(rng.integer(1, 100));
      Vector y0(2), yt(2);
      for (int j = 0; j < 2; ++j) {
        y0(j) = rng.normal();
        yt(j) = 3.0 * rng.normal();
      }
      const BridgeDraw b = make_bridge_draw(s, t, rng, m);
      const BackwardPosterior post = backward_posterior(yt, y0, s, t, std::span<const BridgeDraw>(&b, 1));
      const double rho = s.gamma(t) * b.sigma_prime_prev;
      for (int j = 0; j < 2; ++j) {
        const double alt =
            s.gamma_cum(t - 1) * y0(j) + rho / b.sigma_prime * (yt(j) - s.gamma_cum(t) * y0(j));
        worst = std::max(worst, std::abs(post.mean(j) - alt) / std::max(1.0, std::abs(alt)));
      }
    }
    add_below("posterior mean: simplified vs direct form", worst, 1e-12);
  }

  VerifyOptions opt_;
  RandomStream root_;
  std::uint64_t next_key_ = 1;
  VerifyReport report_;
};

} // namespace

VerifyReport run_verification_suite(const VerifyOptions& options) { return Suite(options).run(); }

} // namespace dlpm
