// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dlpm/error.hpp"
#include "dlpm/sample.hpp"

using namespace dlpm;

namespace {

Matrix random_matrix(int rows, int cols, RandomStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

// Cumulative abar_t of the cosine betas, computed without the library schedule.
std::vector<double> cosine_abar(int horizon) {
  const auto f = [&](int t) { return std::pow(std::cos((static_cast<double>(t) / horizon + 0.008) / 1.008 * M_PI / 2.0), 2); };
  std::vector<double> abar(static_cast<std::size_t>(horizon) + 1, 1.0);
  for (int t = 1; t <= horizon; ++t)
    abar[static_cast<std::size_t>(t)] = abar[static_cast<std::size_t>(t - 1)] * (1.0 - std::min(1.0 - f(t) / f(t - 1), 0.999));
  return abar;
}

EpsPredictor zero_predictor() {
  return [](const Matrix& y, int) { return Matrix::Zero(y.rows(), y.cols()).eval(); };
}

EpsPredictor oracle_predictor(const NoiseSchedule& s, const Vector& point) {
  return [&s, point](const Matrix& y, int t) {
    return ((y.colwise() - s.gamma_cum(t) * point) / s.sigma_cum(t)).eval();
  };
}

SamplerConfig config_for(SamplerMethod m, int steps, int batch, std::uint64_t seed = 1) {
  SamplerConfig c;
  c.method = m;
  c.steps = steps;
  c.batch = batch;
  c.seed = seed;
  return c;
}

} // namespace

TEST_CASE("strided timesteps: examples") {
  std::vector<int> full(100);
  for (int i = 0; i < 100; ++i) full[static_cast<std::size_t>(i)] = 100 - i;
  CHECK(strided_timesteps(100, 100) == full);
  CHECK(strided_timesteps(100, 4) == std::vector<int>{100, 67, 34, 1});
  CHECK(strided_timesteps(100, 1) == std::vector<int>{100});
  CHECK(strided_timesteps(100, 2) == std::vector<int>{100, 1});
  CHECK_THROWS_AS(strided_timesteps(100, 101), ParameterError);
  CHECK_THROWS_AS(strided_timesteps(100, 0), ParameterError);
}

TEST_CASE("coarse schedule: stride cumulants are consistent") {
  for (double alpha : {1.7, 2.0}) {
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    const std::vector<int> ts = strided_timesteps(100, 7);
    const NoiseSchedule c = coarse_schedule(s, ts);
    REQUIRE(c.horizon() == 7);
    int prev = 0;
    for (int k = 1; k <= 7; ++k) {
      const int t = ts[static_cast<std::size_t>(7 - k)];
      CHECK(std::abs(c.gamma(k) * s.gamma_cum(prev) - s.gamma_cum(t)) < 1e-12);
      CHECK(std::abs(std::pow(s.sigma_cum(t), alpha) -
                     (std::pow(c.gamma(k), alpha) * std::pow(s.sigma_cum(prev), alpha) + std::pow(c.sigma(k), alpha))) < 1e-12);
      CHECK(std::abs(c.gamma_cum(k) - s.gamma_cum(t)) < 1e-12);
      CHECK(std::abs(c.sigma_cum(k) - s.sigma_cum(t)) < 1e-12);
      prev = t;
    }
  }
}

TEST_CASE("dlpm step: alpha = 2 is DDPM ancestral sampling") {
  const NoiseSchedule s = build_cosine_schedule(100, 2.0);
  const auto abar = cosine_abar(100);
  RandomStream rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const int t = static_cast<int>(rng.integer(2, 100));
    const Matrix y = random_matrix(2, 1, rng), e = random_matrix(2, 1, rng), g = random_matrix(2, 1, rng);
    const double ab = abar[static_cast<std::size_t>(t)], ab_prev = abar[static_cast<std::size_t>(t - 1)];
    const double beta = 1.0 - ab / ab_prev;
    // A = 2 everywhere: Gamma = sigma_t^2 / sigma_{1->t}^2, Sigma_{1->t-1} = 2 sigma_{1->t-1}^2.
    const double gamma_factor = s.sigma(t) * s.sigma(t) / (s.sigma_cum(t) * s.sigma_cum(t));
    const Matrix gf = Matrix::Constant(2, 1, gamma_factor);
    const Matrix var = Matrix::Constant(2, 1, gamma_factor * 2.0 * s.sigma_cum(t - 1) * s.sigma_cum(t - 1));
    const Matrix ours = dlpm_step(s, t, y, e, gf, var, g);
    const double ddpm_var = 2.0 * (1.0 - ab_prev) / (1.0 - ab) * beta;
    const Matrix ref = (y - beta / std::sqrt(1.0 - ab) * e) / std::sqrt(1.0 - beta) + std::sqrt(ddpm_var) * g;
    CHECK((ours - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dlim step: alpha = 2 is the DDIM update") {
  const NoiseSchedule s = build_cosine_schedule(100, 2.0);
  const auto abar = cosine_abar(100);
  RandomStream rng(2);
  for (int rep = 0; rep < 1000; ++rep) {
    const int t = static_cast<int>(rng.integer(1, 100));
    const Matrix y = random_matrix(2, 1, rng), e = random_matrix(2, 1, rng);
    const double ab = abar[static_cast<std::size_t>(t)], ab_prev = abar[static_cast<std::size_t>(t - 1)];
    const Matrix x0 = (y - std::sqrt(1.0 - ab) * e) / std::sqrt(ab);
    const Matrix ref = std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * e;
    CHECK((dlim_step(s, t, y, e) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dlim: one-step schedule") {
  const NoiseSchedule s = build_cosine_schedule(1, 1.7);
  const EpsPredictor eps = [](const Matrix& y, int) { return (0.5 * y).eval(); };
  Matrix latent(3, 2);
  latent << 1, 2, -3, 4, 0.5, -0.5;
  const Matrix out = dlim_sample(eps, s, config_for(SamplerMethod::dlim, 1, 3), latent);
  const Matrix ref = latent / s.gamma(1) - (s.sigma_cum(1) / s.gamma(1)) * 0.5 * latent;
  CHECK((out - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dlim: bitwise deterministic for a fixed latent") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsPredictor eps = [](const Matrix& y, int t) { return (y.array().sin() * (t / 100.0)).matrix().eval(); };
  RandomStream rng(3);
  const Matrix latent = draw_latent(s, config_for(SamplerMethod::dlim, 100, 50), 2, rng);
  const auto cfg = config_for(SamplerMethod::dlim, 25, 50);
  CHECK(dlim_sample(eps, s, cfg, latent) == dlim_sample(eps, s, cfg, latent));
}

TEST_CASE("dlim: full-step and unit-stride chains agree") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsPredictor eps = [](const Matrix& y, int t) { return (y.array().cos() * (t / 100.0)).matrix().eval(); };
  RandomStream rng(4);
  const Matrix latent = random_matrix(20, 2, rng);
  Matrix y = latent.transpose();
  for (int t = 100; t >= 1; --t) y = dlim_step(s, t, y, eps(y, t));
  const Matrix strided = dlim_sample(eps, s, config_for(SamplerMethod::dlim, 100, 20), latent);
  CHECK((strided - y.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero predictor and zero noise reduce to pure rescaling") {
  const NoiseSchedule s = NoiseSchedule::from_steps(1.7, {0.9, 0.8, 0.95}, {0.0, 0.0, 0.0}, ScheduleKind::scale_preserving);
  RandomStream rng(5);
  const Matrix latent = random_matrix(4, 2, rng);
  const Matrix out = dlim_sample(zero_predictor(), s, config_for(SamplerMethod::dlim, 3, 4), latent);
  CHECK((out - latent / s.gamma_cum(3)).cwiseAbs().maxCoeff() < 1e-14);

  Matrix y = latent.transpose();
  const Matrix zero = Matrix::Zero(2, 4);
  for (int k = 3; k >= 1; --k) y = dlpm_step(s, k, y, zero, Matrix::Ones(2, 4), zero, random_matrix(2, 4, rng));
  CHECK((y.transpose() - latent / s.gamma_cum(3)).cwiseAbs().maxCoeff() < 1e-14);

  const SampleResult r = dlpm_sample(zero_predictor(), s, config_for(SamplerMethod::dlpm, 3, 4), 2, rng);
  CHECK(r.samples.rows() == 4);
  CHECK(r.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dlpm: the analytic residual recovers a single point") {
  Vector point(2);
  point << 0.5, -0.25;
  for (double alpha : {1.7, 2.0}) {
    const NoiseSchedule s = build_cosine_schedule(100, alpha);
    for (int steps : {100, 25}) {
      RandomStream rng(6);
      const SampleResult r = dlpm_sample(oracle_predictor(s, point), s, config_for(SamplerMethod::dlpm, steps, 1000), 2, rng);
      REQUIRE(r.samples.rows() == 1000);
      CHECK(r.failed == 0);
      CHECK((r.samples.rowwise() - point.transpose()).rowwise().norm().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("dlim: the analytic residual recovers a single point") {
  Vector point(2);
  point << -1.0, 0.75;
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  RandomStream rng(7);
  const auto cfg = config_for(SamplerMethod::dlim, 10, 500);
  const Matrix out = dlim_sample(oracle_predictor(s, point), s, cfg, draw_latent(s, cfg, 2, rng));
  CHECK((out.rowwise() - point.transpose()).rowwise().norm().maxCoeff() < 1e-6);
}

TEST_CASE("dlpm: same seed, same samples") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsPredictor eps = [](const Matrix& y, int) { return (0.1 * y).eval(); };
  RandomStream a(8), b(8);
  const auto cfg = config_for(SamplerMethod::dlpm, 20, 100);
  CHECK(dlpm_sample(eps, s, cfg, 2, a).samples == dlpm_sample(eps, s, cfg, 2, b).samples);
}

TEST_CASE("dlpm: non-finite chains are rerun and then dropped") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  int calls = 0;
  const EpsPredictor eps = [&calls](const Matrix& y, int) {
    ++calls;
    Matrix e = Matrix::Zero(y.rows(), y.cols());
    e(0, 0) = std::numeric_limits<double>::quiet_NaN();  // first chain of every batch fails
    return e;
  };
  RandomStream rng(9);
  const SampleResult r = dlpm_sample(eps, s, config_for(SamplerMethod::dlpm, 5, 10), 2, rng);
  CHECK(r.restarted == 1);
  CHECK(r.failed == 1);
  CHECK(r.samples.rows() == 9);
  CHECK(r.samples.allFinite());
}

TEST_CASE("lim step: zero predictor, one stochastic step") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  RandomStream rng(10);
  const Matrix x = random_matrix(2, 5, rng), noise = random_matrix(2, 5, rng);
  const Matrix out = lim_step(s, 40, x, Matrix::Zero(2, 5), false, &noise);
  const double g = s.gamma(40);
  const Matrix ref = x / g + std::pow(1.0 / std::pow(g, 1.7) - 1.0, 1.0 / 1.7) * noise;
  CHECK((out - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lim step: deterministic row matches dlim to first order at alpha = 2") {
  // With eps shared (score = -eps / (2 sigma)) the two maps differ by O(beta^2),
  // so their relative gap shrinks linearly with beta.
  RandomStream rng(11);
  const Matrix x = random_matrix(2, 3, rng), e = random_matrix(2, 3, rng);
  for (double level : {0.2, 0.5, 0.9}) {
    std::vector<double> rel;
    for (double beta : {1e-3, 1e-4}) {
      const double b1 = level * level;
      const NoiseSchedule s = NoiseSchedule::from_steps(2.0, {std::sqrt(1 - b1), std::sqrt(1 - beta)},
                                                        {std::sqrt(b1), std::sqrt(beta)}, ScheduleKind::scale_preserving);
      const Matrix lim = lim_step(s, 2, x, e, true, nullptr);
      const Matrix dlim = dlim_step(s, 2, x, e);
      const double move = (dlim - x / s.gamma(2)).cwiseAbs().maxCoeff();
      rel.push_back((lim - dlim).cwiseAbs().maxCoeff() / move);
    }
    CHECK(rel[0] < 1e-2);
    CHECK(rel[1] < 0.15 * rel[0]);
  }
}

TEST_CASE("lim: reproducible, and restricted to scale-preserving schedules") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.8);
  const EpsPredictor eps = [](const Matrix& y, int) { return (0.1 * y).eval(); };
  for (bool det : {false, true}) {
    RandomStream a(12), b(12);
    const auto cfg = config_for(det ? SamplerMethod::lim_ode : SamplerMethod::lim, 20, 50);
    CHECK(lim_sample(eps, s, cfg, 2, a, det).samples == lim_sample(eps, s, cfg, 2, b, det).samples);
  }
  const NoiseSchedule se = build_schedule({ScheduleKind::scale_exploding, 100, 1.8});
  RandomStream rng(13);
  CHECK_THROWS_AS(lim_sample(eps, se, config_for(SamplerMethod::lim, 20, 5), 2, rng, false), ParameterError);
}

TEST_CASE("latent draws have scale sigma_{1->T}") {
  const NoiseSchedule s = build_cosine_schedule(100, 2.0);
  RandomStream rng(14);
  const Matrix z = draw_latent(s, config_for(SamplerMethod::dlim, 100, 200000), 2, rng);
  const double var = z.col(0).squaredNorm() / static_cast<double>(z.rows());
  CHECK(var == doctest::Approx(2.0 * s.sigma_cum(100) * s.sigma_cum(100)).epsilon(0.02));
}

TEST_CASE("run_sampler dispatch and sampler config") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  for (auto m : {SamplerMethod::dlpm, SamplerMethod::dlim, SamplerMethod::lim, SamplerMethod::lim_ode}) {
    CHECK(sampler_method_from_string(to_string(m)) == m);
    RandomStream rng(15);
    const SampleResult r = run_sampler(zero_predictor(), s, config_for(m, 10, 7), 2, rng);
    CHECK(r.samples.rows() == 7);
    CHECK(r.samples.cols() == 2);
  }
  CHECK_THROWS_AS(sampler_method_from_string("ddpm"), ParameterError);
  CHECK_THROWS_AS(config_for(SamplerMethod::dlpm, 101, 1).validate(s), ParameterError);
  CHECK_THROWS_AS(config_for(SamplerMethod::dlpm, 10, 0).validate(s), ParameterError);
}
