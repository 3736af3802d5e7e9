// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "dlpm/bridge.hpp"
#include "dlpm/error.hpp"
#include "dlpm/train.hpp"

using namespace dlpm;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<Vector> random_batch(int n, RandomStream& rng) {
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) out.push_back(vec2(0.3 * rng.normal(), 0.3 * rng.normal()));
  return out;
}

} // namespace

TEST_CASE("median of means: examples") {
  const std::vector<double> one{4.2};
  CHECK(median_of_means(one, 1) == 4.2);
  const std::vector<double> same(9, 2.5);
  CHECK(median_of_means(same, 3) == 2.5);
  const std::vector<double> three{0, 0, 0, 1, 1, 1, 100, 100, 100};
  CHECK(median_of_means(three, 3) == 1.0);
  CHECK(median_groups(three, 3) == std::vector<int>{1});
  const std::vector<double> even{1, 3, 5, 7};
  CHECK(median_of_means(even, 2) == 4.0);
  CHECK(median_groups(even, 2).size() == 2);
  CHECK_THROWS_AS(median_of_means(even, 3), ParameterError);
  CHECK_THROWS_AS(median_of_means(even, 0), ParameterError);
}

TEST_CASE("median of means: permuting whole groups leaves the value unchanged") {
  RandomStream rng(1);
  std::vector<double> v(25);
  for (double& x : v) x = rng.exponential();
  const double ref = median_of_means(v, 5);
  std::vector<int> order{3, 0, 4, 1, 2};
  std::vector<double> p;
  for (int g : order) p.insert(p.end(), v.begin() + g * 5, v.begin() + (g + 1) * 5);
  CHECK(median_of_means(p, 5) == doctest::Approx(ref).epsilon(1e-15));
}

TEST_CASE("per_draw_norm: zero model returns the normalized noise norm") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsModel zero(ModelDims{});
  const std::vector<BridgeDraw> b{bridge_from(s, 20, 0.8, 1.9)};
  const Vector g = vec2(0.3, -1.1);
  CHECK(per_draw_norm(zero, vec2(1, 1), 20, s, b, g) ==
        doctest::Approx(std::sqrt(b[0].sigma_prime) * g.norm() / s.sigma_cum(20)).epsilon(1e-14));
}

TEST_CASE("per_draw_norm: straight-line recomputation on a hand-built schedule") {
  const double alpha = 1.7;
  const std::vector<double> gam{0.9, 0.8, 0.7}, sig{0.3, 0.5, 0.6};
  const NoiseSchedule s = NoiseSchedule::from_steps(alpha, gam, sig, ScheduleKind::scale_preserving);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 17);
  const double a0 = 1.4, a1 = 0.6;
  const Vector y0 = vec2(0.2, -0.5), g = vec2(0.7, 0.1);

  const double sc2 = std::pow(std::pow(gam[1], alpha) * std::pow(sig[0], alpha) + std::pow(sig[1], alpha), 1.0 / alpha);
  const double sc3 = std::pow(std::pow(gam[2], alpha) * std::pow(sc2, alpha) + std::pow(sig[2], alpha), 1.0 / alpha);
  const double prev = sc2 * sc2 * a0;
  const double cur = sig[2] * sig[2] * a1 + gam[2] * gam[2] * prev;
  const Vector yt = gam[0] * gam[1] * gam[2] * y0 + std::sqrt(cur) * g;
  const Vector target = std::sqrt(cur) * g / sc3;
  const double expected = (model.forward(yt, 3, 3) - target).norm();

  const std::vector<BridgeDraw> b{bridge_from(s, 3, a0, a1)};
  CHECK(per_draw_norm(model, y0, 3, s, b, g) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batch_loss: M = 1 is the mean of independently recomputed per-item norms") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 2);
  RandomStream data_rng(3);
  const auto batch = random_batch(32, data_rng);
  TrainConfig cfg;
  const RandomStream rng(99);
  const BatchResult r = batch_loss(model, batch, s, cfg, rng);
  REQUIRE(r.terms.size() == 32);
  double acc = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    RandomStream item = rng.derive(k);
    const int t = static_cast<int>(item.integer(1, 100));
    const ForwardDraw d = marginal_sample(batch[k], s, t, item, Isotropy::isotropic);
    const double norm = (model.forward(d.yt, t, 100) - d.eps_target).norm();
    CHECK(r.terms[k].t == t);
    CHECK(r.terms[k].value == doctest::Approx(norm).epsilon(1e-12));
    acc += norm;
  }
  CHECK(r.loss == doctest::Approx(acc / 32).epsilon(1e-12));
  CHECK(r.skipped == 0);
}

TEST_CASE("batch_loss: the first item of a repeated batch has the single-item value") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 2);
  const std::vector<Vector> single{vec2(0.1, 0.2)};
  const std::vector<Vector> repeated(5, vec2(0.1, 0.2));
  const RandomStream rng(4);
  for (int m : {1, 3}) {
    TrainConfig cfg;
    cfg.mom_groups = m;
    const BatchResult a = batch_loss(model, single, s, cfg, rng);
    const BatchResult b = batch_loss(model, repeated, s, cfg, rng);
    CHECK(a.loss == b.terms[0].value);
    CHECK(b.terms[0].norm_samples.size() == static_cast<std::size_t>(m * m));
  }
}

TEST_CASE("batch_loss: alpha = 2 equals an L2-norm DDPM noise-matching loss") {
  const NoiseSchedule s = build_cosine_schedule(100, 2.0);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 8);
  RandomStream data_rng(5);
  const auto batch = random_batch(64, data_rng);
  const RandomStream rng(6);
  const BatchResult r = batch_loss(model, batch, s, TrainConfig{}, rng);

  // DDPM in its own variables: abar from the cosine betas, noise eps ~ N(0, 2 I).
  const auto f = [](int t) { return std::pow(std::cos((t / 100.0 + 0.008) / 1.008 * M_PI / 2.0), 2); };
  std::vector<double> abar(101, 1.0);
  for (int t = 1; t <= 100; ++t) abar[static_cast<std::size_t>(t)] = abar[static_cast<std::size_t>(t - 1)] * (1.0 - std::min(1.0 - f(t) / f(t - 1), 0.999));
  double acc = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    RandomStream item = rng.derive(k);
    const int t = static_cast<int>(item.integer(1, 100));
    const Vector g = marginal_sample(batch[k], s, t, item, Isotropy::isotropic).g;
    const double ab = abar[static_cast<std::size_t>(t)];
    const Vector eps = std::sqrt(2.0) * g;
    const Vector xt = std::sqrt(ab) * batch[k] + std::sqrt(1.0 - ab) * eps;
    acc += (model.forward(xt, t, 100) - eps).norm();
  }
  CHECK(r.loss == doctest::Approx(acc / 64).epsilon(1e-10));
}

TEST_CASE("batch_loss: gradient matches finite differences end to end") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 12);
  RandomStream data_rng(7);
  const auto batch = random_batch(16, data_rng);
  const RandomStream rng(8);
  for (int m : {1, 3}) {
    TrainConfig cfg;
    cfg.mom_groups = m;
    const BatchResult r = batch_loss(model, batch, s, cfg, rng);
    RandomStream pick(9);
    const double h = 1e-5;
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const auto i = static_cast<Eigen::Index>(pick.integer(0, model.params().size() - 1));
      EpsModel plus = model, minus = model;
      plus.params()(i) += h;
      minus.params()(i) -= h;
      const double fd = (batch_loss(plus, batch, s, cfg, rng).loss - batch_loss(minus, batch, s, cfg, rng).loss) / (2 * h);
      worst = std::max(worst, std::abs(fd - r.grads(i)) / std::max(1.0, std::abs(r.grads(i))));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("batch_loss: items beyond the input limit are skipped") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  const EpsModel model = EpsModel::initialized(ModelDims{}, 2);
  std::vector<Vector> batch{vec2(0.1, 0.1), vec2(1e300, 0.0), vec2(0.2, 0.0)};
  const BatchResult r = batch_loss(model, batch, s, TrainConfig{}, RandomStream(1));
  CHECK(r.skipped == 1);
  CHECK(r.terms.size() == 2);
  const std::vector<Vector> all_bad(3, vec2(1e300, 1e300));
  CHECK_THROWS_AS(batch_loss(model, all_bad, s, TrainConfig{}, RandomStream(1)), NumericError);
}

TEST_CASE("timestep sampling covers 1..T uniformly") {
  const RandomStream rng(10);
  std::vector<int> counts(101, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) ++counts[static_cast<std::size_t>(rng.derive(static_cast<std::uint64_t>(k)).integer(1, 100))];
  double chi2 = 0.0;
  for (int t = 1; t <= 100; ++t) {
    CHECK(counts[static_cast<std::size_t>(t)] > 0);
    const double e = n / 100.0;
    chi2 += std::pow(counts[static_cast<std::size_t>(t)] - e, 2) / e;
  }
  CHECK(std::abs(chi2 - 99.0) < 5.0 * std::sqrt(2.0 * 99.0));
}

TEST_CASE("train: zero steps leave the model unchanged") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  EpsModel model = EpsModel::initialized(ModelDims{}, 3);
  const Vector p0 = model.params();
  TrainConfig cfg;
  cfg.total_steps = 0;
  CHECK(train(model, Matrix::Zero(4, 2), s, cfg).empty());
  CHECK(model.params() == p0);
}

TEST_CASE("train: identical seeds give identical traces and parameters") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  RandomStream data_rng(4);
  Matrix data(50, 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) data(i) = data_rng.normal();
  TrainConfig cfg;
  cfg.total_steps = 20;
  cfg.batch_size = 64;
  cfg.seed = 77;
  EpsModel a = EpsModel::initialized(ModelDims{}, 1), b = a;
  const auto ta = train(a, data, s, cfg), tb = train(b, data, s, cfg);
  REQUIRE(ta.size() == 20);
  for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i].loss == tb[i].loss);
  CHECK(a.params() == b.params());
  cfg.seed = 78;
  EpsModel c = EpsModel::initialized(ModelDims{}, 1);
  CHECK(train(c, data, s, cfg)[0].loss != ta[0].loss);
}

TEST_CASE("train: periodic checkpoint hook") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  EpsModel model = EpsModel::initialized(ModelDims{}, 1);
  TrainConfig cfg;
  cfg.total_steps = 10;
  cfg.batch_size = 8;
  cfg.checkpoint_interval = 4;
  std::vector<std::int64_t> seen;
  train(model, Matrix::Zero(3, 2), s, cfg, [&](std::int64_t step, const EpsModel&) { seen.push_back(step); });
  CHECK(seen == std::vector<std::int64_t>{4, 8});
}

TEST_CASE("train: aborts after two consecutive failed steps") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  EpsModel model = EpsModel::initialized(ModelDims{}, 1);
  TrainConfig cfg;
  cfg.total_steps = 10;
  cfg.batch_size = 4;
  const Matrix data = Matrix::Constant(2, 2, 1e300);
  try {
    train(model, data, s, cfg);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    REQUIRE(e.trace().size() == 2);
    CHECK(std::isnan(e.trace()[1].loss));
    CHECK(e.trace()[1].skipped == 4);
  }
}

TEST_CASE("train: single-point data is learned") {
  const NoiseSchedule s = build_cosine_schedule(100, 1.7);
  EpsModel model = EpsModel::initialized(ModelDims{}, 5);
  TrainConfig cfg;
  cfg.total_steps = 2000;
  cfg.batch_size = 256;
  cfg.seed = 3;
  Matrix data(1, 2);
  data << 0.5, -0.25;
  const auto trace = train(model, data, s, cfg);
  const auto mean = [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += trace[i].loss;
    return acc / static_cast<double>(hi - lo);
  };
  const double initial = mean(0, 10), final = mean(trace.size() - 100, trace.size());
  MESSAGE("single point: initial " << initial << ", final " << final);
  CHECK(final < 0.25 * initial);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.mom_groups = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = TrainConfig{};
  cfg.lr = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
