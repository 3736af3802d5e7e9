// SPDX-License-Identifier: Apache-2.0
#include "dlpm/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dlpm/error.hpp"
#include "dlpm/random.hpp"

namespace dlpm {

namespace {

Matrix silu(const Matrix& z) { return (z.array() / (1.0 + (-z.array()).exp())).matrix(); }

// d silu / dz = s (1 + z (1 - s)), s = sigmoid(z)
Matrix silu_grad(const Matrix& z) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (s * (1.0 + z.array() * (1.0 - s))).matrix();
}

} // namespace

Vector time_embedding(int t, int horizon, int width) {
  const int half = width / 2;
  const double x = 1000.0 * static_cast<double>(t) / static_cast<double>(horizon);
  Vector e = Vector::Zero(width);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    e(i) = std::sin(x * freq);
    e(half + i) = std::cos(x * freq);
  }
  return e;
}

EpsModel::EpsModel(ModelDims dims) : dims_(dims) {
  require(dims.input_dim >= 1 && dims.hidden >= 1 && dims.blocks >= 0 && dims.time_dim >= 2,
          "invalid model dimensions");
  build_layout();
  params_ = Vector::Zero(static_cast<Eigen::Index>(parameter_count(dims)));
}

void EpsModel::build_layout() {
  std::size_t offset = 0;
  const auto add = [&](int rows, int cols) {
    Layer l{offset, offset + static_cast<std::size_t>(rows * cols), rows, cols};
    offset = l.bias + static_cast<std::size_t>(rows);
    return l;
  };
  const int d = dims_.input_dim, h = dims_.hidden, e = dims_.time_dim;
  input_ = add(h, d);
  time1_ = add(e, e);
  time2_ = add(e, e);
  fc1_.clear();
  fc2_.clear();
  proj_.clear();
  for (int b = 0; b < dims_.blocks; ++b) {
    fc1_.push_back(add(h, h));
    fc2_.push_back(add(h, h));
    proj_.push_back(add(h, e));
  }
  output_ = add(d, h);
}

std::size_t EpsModel::parameter_count(const ModelDims& m) {
  const auto lin = [](std::size_t out, std::size_t in) { return out * in + out; };
  const std::size_t d = m.input_dim, h = m.hidden, e = m.time_dim;
  return lin(h, d) + 2 * lin(e, e) + static_cast<std::size_t>(m.blocks) * (2 * lin(h, h) + lin(h, e)) +
         lin(d, h);
}

EpsModel EpsModel::initialized(ModelDims dims, std::uint64_t seed) {
  EpsModel model(dims);
  RandomStream rng(seed);
  std::vector<Layer> layers{model.input_, model.time1_, model.time2_};
  for (int b = 0; b < dims.blocks; ++b) {
    layers.push_back(model.fc1_[static_cast<std::size_t>(b)]);
    layers.push_back(model.fc2_[static_cast<std::size_t>(b)]);
    layers.push_back(model.proj_[static_cast<std::size_t>(b)]);
  }
  layers.push_back(model.output_);
  for (const Layer& l : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.cols));
    for (std::size_t i = l.weight; i < l.bias + static_cast<std::size_t>(l.rows); ++i)
      model.params_(static_cast<Eigen::Index>(i)) = rng.uniform_open(-bound, bound);
  }
  return model;
}

Eigen::Map<const Matrix> EpsModel::weight(const Layer& l) const {
  return {params_.data() + l.weight, l.rows, l.cols};
}

Eigen::Map<const Vector> EpsModel::bias(const Layer& l) const { return {params_.data() + l.bias, l.rows}; }

Vector EpsModel::forward(const Vector& y, int t, int horizon) const {
  require(y.size() == dims_.input_dim, "input dimension mismatch");
  require(y.allFinite(), "model input must be finite");
  const int ts[1] = {t};
  return forward_batch(Matrix(y), ts, horizon).col(0);
}

Matrix EpsModel::forward_batch(const Matrix& y, std::span<const int> ts, int horizon,
                               ForwardCache* cache) const {
  require(y.rows() == dims_.input_dim, "input dimension mismatch");
  require(static_cast<std::size_t>(y.cols()) == ts.size(), "one timestep per column required");
  require(horizon >= 1, "horizon must be positive");

  // Evaluate the time path once per distinct timestep.
  std::map<int, int> columns;
  for (int t : ts) {
    require(t >= 1 && t <= horizon, "timestep out of range [1, T]");
    columns.emplace(t, 0);
  }
  Matrix embed(dims_.time_dim, static_cast<Eigen::Index>(columns.size()));
  int next = 0;
  for (auto& [t, col] : columns) {
    col = next++;
    embed.col(col) = time_embedding(t, horizon, dims_.time_dim);
  }
  std::vector<int> time_column(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) time_column[k] = columns.at(ts[k]);

  const Matrix t1 = (weight(time1_) * embed).colwise() + bias(time1_);
  const Matrix t2 = (weight(time2_) * silu(t1)).colwise() + bias(time2_);
  const Matrix temb = silu(t2);

  Matrix h = (weight(input_) * y).colwise() + bias(input_);
  const Eigen::Index n = y.cols();
  if (cache) {
    cache->x = y;
    cache->time_column = time_column;
    cache->embed = embed;
    cache->t1 = t1;
    cache->t2 = t2;
    cache->temb = temb;
    cache->h_in.assign(static_cast<std::size_t>(dims_.blocks), Matrix());
    cache->z1 = cache->a1 = cache->z2 = cache->h_in;
  }
  for (std::size_t b = 0; b < fc1_.size(); ++b) {
    const Matrix p = (weight(proj_[b]) * temb).colwise() + bias(proj_[b]);
    Matrix z1 = (weight(fc1_[b]) * h).colwise() + bias(fc1_[b]);
    Matrix a1 = silu(z1);
    for (Eigen::Index k = 0; k < n; ++k) a1.col(k) += p.col(time_column[static_cast<std::size_t>(k)]);
    Matrix z2 = (weight(fc2_[b]) * a1).colwise() + bias(fc2_[b]);
    Matrix h_next = h + silu(z2);
    if (cache) {
      cache->h_in[b] = std::move(h);
      cache->z1[b] = std::move(z1);
      cache->a1[b] = std::move(a1);
      cache->z2[b] = std::move(z2);
    }
    h = std::move(h_next);
  }
  Matrix out = (weight(output_) * h).colwise() + bias(output_);
  if (cache) cache->h_out = std::move(h);
  return out;
}

Vector EpsModel::backward_batch(const ForwardCache& cache, const Matrix& d_out) const {
  require(d_out.rows() == dims_.input_dim && d_out.cols() == cache.x.cols(),
          "output gradient shape mismatch");
  Vector grads = Vector::Zero(params_.size());
  const auto gw = [&](const Layer& l) { return Eigen::Map<Matrix>(grads.data() + l.weight, l.rows, l.cols); };
  const auto gb = [&](const Layer& l) { return Eigen::Map<Vector>(grads.data() + l.bias, l.rows); };

  gw(output_).noalias() = d_out * cache.h_out.transpose();
  gb(output_) = d_out.rowwise().sum();
  Matrix dh = weight(output_).transpose() * d_out;
  Matrix d_temb = Matrix::Zero(cache.temb.rows(), cache.temb.cols());

  for (std::size_t bi = fc1_.size(); bi-- > 0;) {
    const Matrix dz2 = (dh.array() * silu_grad(cache.z2[bi]).array()).matrix();
    gw(fc2_[bi]).noalias() = dz2 * cache.a1[bi].transpose();
    gb(fc2_[bi]) = dz2.rowwise().sum();
    const Matrix da1 = weight(fc2_[bi]).transpose() * dz2;

    Matrix dp = Matrix::Zero(dims_.hidden, cache.temb.cols());
    for (Eigen::Index k = 0; k < da1.cols(); ++k) dp.col(cache.time_column[static_cast<std::size_t>(k)]) += da1.col(k);
    gw(proj_[bi]).noalias() = dp * cache.temb.transpose();
    gb(proj_[bi]) = dp.rowwise().sum();
    d_temb.noalias() += weight(proj_[bi]).transpose() * dp;

    const Matrix dz1 = (da1.array() * silu_grad(cache.z1[bi]).array()).matrix();
    gw(fc1_[bi]).noalias() = dz1 * cache.h_in[bi].transpose();
    gb(fc1_[bi]) = dz1.rowwise().sum();
    dh.noalias() += weight(fc1_[bi]).transpose() * dz1;
  }

  gw(input_).noalias() = dh * cache.x.transpose();
  gb(input_) = dh.rowwise().sum();

  const Matrix dt2 = (d_temb.array() * silu_grad(cache.t2).array()).matrix();
  gw(time2_).noalias() = dt2 * silu(cache.t1).transpose();
  gb(time2_) = dt2.rowwise().sum();
  const Matrix dt1 = ((weight(time2_).transpose() * dt2).array() * silu_grad(cache.t1).array()).matrix();
  gw(time1_).noalias() = dt1 * cache.embed.transpose();
  gb(time1_) = dt1.rowwise().sum();
  return grads;
}

GradientBundle backward(const EpsModel& model, std::span<const TrainingExample> batch, int horizon) {
  require(!batch.empty(), "gradient batch must be nonempty");
  const int d = model.dims().input_dim;
  Matrix y(d, static_cast<Eigen::Index>(batch.size()));
  std::vector<int> ts(batch.size());
  double total_weight = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    require(batch[k].y.size() == d && batch[k].target.size() == d, "example dimension mismatch");
    y.col(static_cast<Eigen::Index>(k)) = batch[k].y;
    ts[k] = batch[k].t;
    total_weight += batch[k].weight;
  }
  require(total_weight > 0.0, "batch weights must have a positive sum");
  ForwardCache cache;
  const Matrix out = model.forward_batch(y, ts, horizon, &cache);
  Matrix d_out = Matrix::Zero(d, out.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const Vector r = out.col(col) - batch[k].target;
    const double norm = r.norm();
    const double w = batch[k].weight / total_weight;
    loss += w * norm;
    if (norm > 0.0) d_out.col(col) = (w / norm) * r;
  }
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss over a batch of " << batch.size() << " examples";
    throw NumericError(msg.str());
  }
  return {loss, model.backward_batch(cache, d_out)};
}

void adam_step(EpsModel& model, const Vector& grads, AdamState& state, const AdamConfig& config) {
  Vector& p = model.params();
  require(grads.size() == p.size(), "gradient length must match parameter count");
  if (state.m.size() != p.size()) {
    state.m = Vector::Zero(p.size());
    state.v = Vector::Zero(p.size());
    state.step = 0;
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  p.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

} // namespace dlpm
