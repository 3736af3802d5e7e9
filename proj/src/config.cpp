// SPDX-License-Identifier: Apache-2.0
#include "dlpm/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dlpm/error.hpp"
#include "dlpm/random.hpp"

namespace dlpm {

using ojson = nlohmann::ordered_json;

std::string to_string(DatasetKind kind) {
  switch (kind) {
  case DatasetKind::stable2d: return "stable2d";
  case DatasetKind::gaussian_grid: return "gaussian_grid";
  case DatasetKind::single_point: return "single_point";
  case DatasetKind::file: return "file";
  }
  return "stable2d";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "stable2d") return DatasetKind::stable2d;
  if (name == "gaussian_grid") return DatasetKind::gaussian_grid;
  if (name == "single_point") return DatasetKind::single_point;
  if (name == "file") return DatasetKind::file;
  throw ParameterError("unknown dataset '" + name + "'");
}

namespace {

std::string to_string(Isotropy iso) { return iso == Isotropy::isotropic ? "isotropic" : "nonisotropic"; }

Isotropy isotropy_from_string(const std::string& name) {
  if (name == "isotropic") return Isotropy::isotropic;
  if (name == "nonisotropic") return Isotropy::nonisotropic;
  throw ParameterError("unknown isotropy '" + name + "'");
}

} // namespace

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  train.seed = mix_seed(s, 1);
  sampler.seed = mix_seed(s, 2);
}

void ExperimentConfig::validate() const {
  require(n_train >= 1, "n_train must be positive");
  require(schedule.horizon >= 1, "horizon T must be at least 1");
  require(schedule.alpha > 0.0 && schedule.alpha <= 2.0, "alpha must lie in (0, 2]");
  require(sampler.steps >= 1 && sampler.steps <= schedule.horizon, "sampler steps must lie in [1, T]");
  require(sampler.batch >= 1, "sampler batch must be positive");
  require(eval.xi > 0.0 && eval.xi < 1.0, "eval xi must lie in (0, 1)");
  require(eval.k >= 1 && eval.n_eval > eval.k, "eval needs k >= 1 and n_eval > k");
  require(model.input_dim >= 1, "model input dimension must be positive");
  train.validate();
  if (dataset == DatasetKind::file) require(!dataset_path.empty(), "dataset 'file' needs dataset_path");
  if (dataset == DatasetKind::single_point)
    require(static_cast<int>(point.size()) == model.input_dim, "single point must match input_dim");
  if (dataset == DatasetKind::stable2d || dataset == DatasetKind::gaussian_grid)
    require(model.input_dim == 2, "2D datasets need input_dim = 2");
  if (sampler.method == SamplerMethod::lim || sampler.method == SamplerMethod::lim_ode)
    require(schedule.kind == ScheduleKind::scale_preserving, "LIM needs a scale-preserving schedule");
}

std::string ExperimentConfig::to_json() const {
  ojson j;
  j["dataset"] = to_string(dataset);
  j["dataset_path"] = dataset_path;
  j["point"] = point;
  j["n_train"] = n_train;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["schedule"] = {{"kind", to_string(schedule.kind)}, {"T", schedule.horizon}, {"alpha", schedule.alpha}};
  j["model"] = {{"input_dim", model.input_dim},
                {"hidden", model.hidden},
                {"blocks", model.blocks},
                {"time_dim", model.time_dim}};
  j["train"] = {{"batch_size", train.batch_size},
                {"total_steps", train.total_steps},
                {"lr", train.lr},
                {"mom_groups", train.mom_groups},
                {"isotropy", to_string(train.isotropy)},
                {"seed", train.seed},
                {"checkpoint_interval", train.checkpoint_interval},
                {"input_limit", train.input_limit}};
  j["sampler"] = {{"method", to_string(sampler.method)},
                  {"steps", sampler.steps},
                  {"seed", sampler.seed},
                  {"batch", sampler.batch},
                  {"isotropy", to_string(sampler.isotropy)}};
  j["eval"] = {{"xi", eval.xi}, {"k", eval.k}, {"n_eval", eval.n_eval}};
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    // Missing keys keep their defaults; a given seed also derives the sub-seeds
    // unless those are given explicitly.
    if (j.contains("seed")) c.apply_seed(j.at("seed").get<std::uint64_t>());
    if (j.contains("dataset")) c.dataset = dataset_kind_from_string(j.at("dataset").get<std::string>());
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    if (j.contains("point")) c.point = j.at("point").get<std::vector<double>>();
    c.n_train = j.value("n_train", c.n_train);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.contains("kind")) c.schedule.kind = schedule_kind_from_string(s.at("kind").get<std::string>());
      c.schedule.horizon = s.value("T", c.schedule.horizon);
      c.schedule.alpha = s.value("alpha", c.schedule.alpha);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.input_dim = m.value("input_dim", c.model.input_dim);
      c.model.hidden = m.value("hidden", c.model.hidden);
      c.model.blocks = m.value("blocks", c.model.blocks);
      c.model.time_dim = m.value("time_dim", c.model.time_dim);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.total_steps = t.value("total_steps", c.train.total_steps);
      c.train.lr = t.value("lr", c.train.lr);
      c.train.mom_groups = t.value("mom_groups", c.train.mom_groups);
      if (t.contains("isotropy")) c.train.isotropy = isotropy_from_string(t.at("isotropy").get<std::string>());
      c.train.seed = t.value("seed", c.train.seed);
      c.train.checkpoint_interval = t.value("checkpoint_interval", c.train.checkpoint_interval);
      c.train.input_limit = t.value("input_limit", c.train.input_limit);
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      if (s.contains("method")) c.sampler.method = sampler_method_from_string(s.at("method").get<std::string>());
      c.sampler.steps = s.value("steps", c.sampler.steps);
      c.sampler.seed = s.value("seed", c.sampler.seed);
      c.sampler.batch = s.value("batch", c.sampler.batch);
      if (s.contains("isotropy")) c.sampler.isotropy = isotropy_from_string(s.at("isotropy").get<std::string>());
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval.xi = e.value("xi", c.eval.xi);
      c.eval.k = e.value("k", c.eval.k);
      c.eval.n_eval = e.value("n_eval", c.eval.n_eval);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

} // namespace dlpm
