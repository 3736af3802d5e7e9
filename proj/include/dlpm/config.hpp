// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlpm/model.hpp"
#include "dlpm/sample.hpp"
#include "dlpm/schedule.hpp"
#include "dlpm/train.hpp"

namespace dlpm {

enum class DatasetKind { stable2d, gaussian_grid, single_point, file };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct EvalConfig {
  double xi = 0.95;
  int k = 3;
  int n_eval = 10000;
  bool operator==(const EvalConfig&) const = default;
};

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::stable2d;
  std::string dataset_path;           ///< for `file`
  std::vector<double> point{0.5, -0.25};  ///< for `single_point`
  int n_train = 32000;
  ScheduleSpec schedule{ScheduleKind::scale_preserving, 100, 1.7};
  ModelDims model;
  TrainConfig train;
  SamplerConfig sampler;
  EvalConfig eval;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 0;

  /// Sets the top-level seed and the derived train/sampler seeds.
  void apply_seed(std::uint64_t s);
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

} // namespace dlpm
