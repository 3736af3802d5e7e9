// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlpm/types.hpp"

namespace dlpm {

struct ModelDims {
  int input_dim = 2;
  int hidden = 64;
  int blocks = 4;
  int time_dim = 32;

  bool operator==(const ModelDims&) const = default;
};

/// Intermediate activations kept by a batched forward pass for backprop.
struct ForwardCache {
  Matrix x;                     // d x N
  std::vector<int> time_column; // sample -> column of the per-timestep matrices
  Matrix embed, t1, t2, temb;   // time path, time_dim x U
  std::vector<Matrix> h_in, z1, a1, z2;  // per block, hidden x N
  Matrix h_out;                 // hidden x N
};

/// Time-conditioned MLP predicting the noise residual eps_t(y).
///
/// Time t is rescaled to t / T, embedded with a width-32 sinusoidal code and
/// passed through two 32x32 layers. The input goes through a d->64 layer,
/// then four residual blocks
///
///   a1 = silu(W1 h + b1) + P temb + p,   h' = h + silu(W2 a1 + b2),
///
/// and a final 64->d layer. All weights live in one flat parameter vector.
class EpsModel {
public:
  EpsModel() = default;
  explicit EpsModel(ModelDims dims);

  /// Kaiming-uniform initialisation (bound 1/sqrt(fan_in)) from `seed`.
  static EpsModel initialized(ModelDims dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  static std::size_t parameter_count(const ModelDims& dims);

  const Vector& params() const { return params_; }
  Vector& params() { return params_; }

  /// Single evaluation; throws on non-finite input or t outside [1, T].
  Vector forward(const Vector& y, int t, int horizon) const;

  /// Batched evaluation of the columns of y (d x N). Fills `cache` when given.
  Matrix forward_batch(const Matrix& y, std::span<const int> ts, int horizon,
                       ForwardCache* cache = nullptr) const;

  /// Parameter gradient of sum_k <d_out_k, f(y_k)> for the cached batch.
  Vector backward_batch(const ForwardCache& cache, const Matrix& d_out) const;

private:
  struct Layer {
    std::size_t weight = 0;  // offset, column-major rows x cols
    std::size_t bias = 0;
    int rows = 0;
    int cols = 0;
  };
  void build_layout();
  Eigen::Map<const Matrix> weight(const Layer& l) const;
  Eigen::Map<const Vector> bias(const Layer& l) const;

  ModelDims dims_;
  Vector params_;
  Layer input_, time1_, time2_, output_;
  std::vector<Layer> fc1_, fc2_, proj_;
};

/// Sinusoidal embedding of t / T (scaled by 1000), width `width`.
Vector time_embedding(int t, int horizon, int width);

/// One item of a weighted norm-loss batch.
struct TrainingExample {
  Vector y;
  int t = 1;
  Vector target;
  double weight = 1.0;
};

struct GradientBundle {
  double loss = 0.0;
  Vector grads;
};

/// Weighted mean norm loss sum_k w_k ||f(y_k, t_k) - target_k|| / sum_k w_k
/// and its exact gradient. A zero residual contributes a zero subgradient.
GradientBundle backward(const EpsModel& model, std::span<const TrainingExample> batch, int horizon);

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t step = 0;
};

struct AdamConfig {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard bias-corrected Adam update of the model parameters in place.
void adam_step(EpsModel& model, const Vector& grads, AdamState& state, const AdamConfig& config);

} // namespace dlpm
