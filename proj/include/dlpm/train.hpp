// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dlpm/bridge.hpp"
#include "dlpm/model.hpp"
#include "dlpm/random.hpp"
#include "dlpm/schedule.hpp"

namespace dlpm {

struct TrainConfig {
  int batch_size = 1024;
  std::int64_t total_steps = 10000;
  double lr = 5e-3;
  int mom_groups = 1;  ///< M; each item uses M^2 draws, M = 1 is a plain mean
  Isotropy isotropy = Isotropy::isotropic;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 0;  ///< 0 disables periodic checkpoints
  double input_limit = 1e8;              ///< items with any |y_t| coordinate above are skipped

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Loss contribution of one item at one timestep.
struct LossTerm {
  int t = 1;
  double value = 0.0;
  std::vector<double> norm_samples;
};

/// ||eps_model(y_t) - sqrt(Sigma'_t) g / sigma_{1->t}|| with
/// y_t = gamma_{1->t} y0 + sqrt(Sigma'_t) g.
double per_draw_norm(const EpsModel& model, const Vector& y0, int t, const NoiseSchedule& schedule,
                     std::span<const BridgeDraw> bridges, const Vector& g);

/// Median of the means of M contiguous groups of size M. With an even M the
/// two central group means are averaged.
double median_of_means(std::span<const double> values, int groups);

/// Indices of the group(s) realising the median: one for odd M, two for even M.
std::vector<int> median_groups(std::span<const double> values, int groups);

struct BatchResult {
  double loss = 0.0;  ///< mean over kept items of the median-of-means norm
  Vector grads;
  int skipped = 0;
  std::vector<LossTerm> terms;  ///< one per kept item
};

/// Draws per item t ~ U{1..T}, M^2 independent bridge/Gaussian pairs and
/// reduces their norms by median-of-means. Gradients flow through the
/// median group only. Item k uses the stream rng.derive(k).
BatchResult batch_loss(const EpsModel& model, std::span<const Vector> batch,
                       const NoiseSchedule& schedule, const TrainConfig& config,
                       const RandomStream& rng);

struct TraceRow {
  std::int64_t step = 0;
  double loss = 0.0;
  int skipped = 0;
};

class TrainingAborted : public std::runtime_error {
public:
  TrainingAborted(const std::string& what, std::vector<TraceRow> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

private:
  std::vector<TraceRow> trace_;
};

using CheckpointHook = std::function<void(std::int64_t step, const EpsModel& model)>;

/// Runs total_steps of batch_loss + Adam on rows of `data` (n x d) drawn
/// uniformly with replacement. Steps with a non-finite loss are not applied;
/// two in a row throw TrainingAborted carrying the trace so far.
std::vector<TraceRow> train(EpsModel& model, const Matrix& data, const NoiseSchedule& schedule,
                            const TrainConfig& config, const CheckpointHook& on_checkpoint = {});

} // namespace dlpm
