// SPDX-License-Identifier: Apache-2.0
#include "dlpm/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dlpm/error.hpp"
#include "dlpm/stable.hpp"

namespace dlpm {

void TrainConfig::validate() const {
  require(batch_size >= 1, "batch_size must be at least 1");
  require(total_steps >= 0, "total_steps must be nonnegative");
  require(lr > 0.0 && std::isfinite(lr), "learning rate must be positive");
  require(mom_groups >= 1, "median-of-means needs M >= 1");
  require(checkpoint_interval >= 0, "checkpoint interval must be nonnegative");
  require(input_limit > 0.0, "input limit must be positive");
}

double per_draw_norm(const EpsModel& model, const Vector& y0, int t, const NoiseSchedule& schedule,
                     std::span<const BridgeDraw> bridges, const Vector& g) {
  const ForwardDraw draw =
      forward_from(y0, schedule, t, std::vector<BridgeDraw>(bridges.begin(), bridges.end()), g);
  return (model.forward(draw.yt, t, schedule.horizon()) - draw.eps_target).norm();
}

namespace {

std::vector<double> group_means(std::span<const double> values, int groups) {
  require(groups >= 1, "median-of-means needs M >= 1");
  const auto m = static_cast<std::size_t>(groups);
  require(values.size() == m * m, "median-of-means expects exactly M^2 values");
  std::vector<double> means(m, 0.0);
  for (std::size_t g = 0; g < m; ++g)
    means[g] = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(g * m),
                               values.begin() + static_cast<std::ptrdiff_t>((g + 1) * m), 0.0) /
               static_cast<double>(m);
  return means;
}

} // namespace

std::vector<int> median_groups(std::span<const double> values, int groups) {
  const std::vector<double> means = group_means(values, groups);
  std::vector<int> order(means.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return means[static_cast<std::size_t>(a)] < means[static_cast<std::size_t>(b)];
  });
  const std::size_t mid = order.size() / 2;
  if (order.size() % 2 == 1) return {order[mid]};
  return {order[mid - 1], order[mid]};
}

double median_of_means(std::span<const double> values, int groups) {
  const std::vector<double> means = group_means(values, groups);
  double acc = 0.0;
  const std::vector<int> sel = median_groups(values, groups);
  for (int g : sel) acc += means[static_cast<std::size_t>(g)];
  return acc / static_cast<double>(sel.size());
}

BatchResult batch_loss(const EpsModel& model, std::span<const Vector> batch,
                       const NoiseSchedule& schedule, const TrainConfig& config,
                       const RandomStream& rng) {
  require(!batch.empty(), "training batch must be nonempty");
  config.validate();
  const int d = model.dims().input_dim;
  const int horizon = schedule.horizon();
  const int draws = config.mom_groups * config.mom_groups;
  const PositiveStableSampler mixing(schedule.alpha());

  BatchResult result;
  std::vector<ForwardDraw> kept_draws;
  std::vector<int> kept_t;
  kept_draws.reserve(batch.size() * static_cast<std::size_t>(draws));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    require(batch[k].size() == d, "data dimension does not match the model");
    RandomStream item = rng.derive(k);
    const int t = static_cast<int>(item.integer(1, horizon));
    std::vector<ForwardDraw> local;
    bool guarded = false;
    for (int r = 0; r < draws; ++r) {
      ForwardDraw fd = marginal_sample(batch[k], schedule, t, item, config.isotropy, mixing);
      if (!fd.yt.allFinite() || fd.yt.cwiseAbs().maxCoeff() > config.input_limit) guarded = true;
      local.push_back(std::move(fd));
    }
    if (guarded) {
      ++result.skipped;
      continue;
    }
    kept_t.push_back(t);
    for (auto& fd : local) kept_draws.push_back(std::move(fd));
  }
  const std::size_t kept = kept_t.size();
  if (kept == 0) throw NumericError("every item in the batch exceeded the input limit");

  const auto cols = static_cast<Eigen::Index>(kept_draws.size());
  Matrix y(d, cols);
  Matrix target(d, cols);
  std::vector<int> ts(kept_draws.size());
  for (Eigen::Index c = 0; c < cols; ++c) {
    const ForwardDraw& fd = kept_draws[static_cast<std::size_t>(c)];
    y.col(c) = fd.yt;
    target.col(c) = fd.eps_target;
    ts[static_cast<std::size_t>(c)] = fd.t;
  }
  ForwardCache cache;
  const Matrix residual = model.forward_batch(y, ts, horizon, &cache) - target;
  const Eigen::RowVectorXd norms = residual.colwise().norm();

  Matrix d_out = Matrix::Zero(d, cols);
  result.terms.reserve(kept);
  double total = 0.0;
  for (std::size_t i = 0; i < kept; ++i) {
    const Eigen::Index base = static_cast<Eigen::Index>(i) * draws;
    LossTerm term;
    term.t = kept_t[i];
    term.norm_samples.assign(norms.data() + base, norms.data() + base + draws);
    term.value = median_of_means(term.norm_samples, config.mom_groups);
    total += term.value;
    const std::vector<int> sel = median_groups(term.norm_samples, config.mom_groups);
    const double w = 1.0 / (static_cast<double>(kept) * config.mom_groups * static_cast<double>(sel.size()));
    for (int g : sel)
      for (int r = 0; r < config.mom_groups; ++r) {
        const Eigen::Index c = base + g * config.mom_groups + r;
        if (norms(c) > 0.0) d_out.col(c) = (w / norms(c)) * residual.col(c);
      }
    result.terms.push_back(std::move(term));
  }
  result.loss = total / static_cast<double>(kept);
  if (!std::isfinite(result.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss over " << kept << " items (" << result.skipped << " skipped)";
    throw NumericError(msg.str());
  }
  result.grads = model.backward_batch(cache, d_out);
  return result;
}

std::vector<TraceRow> train(EpsModel& model, const Matrix& data, const NoiseSchedule& schedule,
                            const TrainConfig& config, const CheckpointHook& on_checkpoint) {
  config.validate();
  require(data.rows() >= 1, "training data must be nonempty");
  require(data.cols() == model.dims().input_dim, "data dimension does not match the model");
  const RandomStream root(config.seed);
  AdamState adam;
  const AdamConfig adam_config{config.lr};
  std::vector<TraceRow> trace;
  trace.reserve(static_cast<std::size_t>(config.total_steps));
  std::vector<Vector> batch(static_cast<std::size_t>(config.batch_size));
  int failures = 0;
  for (std::int64_t step = 1; step <= config.total_steps; ++step) {
    RandomStream step_rng = root.derive(static_cast<std::uint64_t>(step));
    for (auto& item : batch) item = data.row(step_rng.integer(0, data.rows() - 1)).transpose();
    try {
      const BatchResult br = batch_loss(model, batch, schedule, config, step_rng);
      if (!br.grads.allFinite()) throw NumericError("non-finite gradient");
      adam_step(model, br.grads, adam, adam_config);
      trace.push_back({step, br.loss, br.skipped});
      failures = 0;
    } catch (const NumericError& e) {
      trace.push_back({step, std::numeric_limits<double>::quiet_NaN(), config.batch_size});
      if (++failures >= 2)
        throw TrainingAborted(std::string("training diverged at step ") + std::to_string(step) + ": " +
                                  e.what(),
                              trace);
    }
    if (on_checkpoint && config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0)
      on_checkpoint(step, model);
  }
  return trace;
}

} // namespace dlpm
