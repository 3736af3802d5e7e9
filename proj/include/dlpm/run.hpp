// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dlpm/config.hpp"
#include "dlpm/eval.hpp"
#include "dlpm/random.hpp"
#include "dlpm/verify.hpp"

namespace dlpm {

/// Process-wide setup: keeps large temporaries off mmap and applies the
/// DLPM_THREADS thread count (default 1) to the linear-algebra backend.
void configure_process();

/// Append-only description of one run directory, persisted as run.json.
struct RunRecord {
  std::string config_json;
  std::vector<std::string> checkpoints;
  std::string loss_trace;
  std::vector<std::string> samples;
  std::vector<MetricsReport> metrics;
  std::map<std::string, double> timings;  ///< seconds

  std::string to_json() const;
  static RunRecord from_json(const std::string& text);
  static RunRecord load(const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;
};

/// Training set of config.n_train rows (n x d).
Matrix build_training_data(const ExperimentConfig& config);

/// Held-out reference set of `n` rows drawn with a seed independent of the
/// training draw (the file itself for `file`).
Matrix build_reference_data(const ExperimentConfig& config, std::size_t n);

/// Trains from scratch and writes config.json, loss.csv, checkpoint.txt
/// (plus periodic checkpoints) and run.json into config.output_dir.
RunRecord cmd_train(const ExperimentConfig& config, std::ostream& log);

struct SampleRequest {
  std::filesystem::path run_dir;
  std::optional<SamplerMethod> method;
  std::optional<int> steps;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> latent;  ///< CSV, used by dlim
  std::optional<std::filesystem::path> out;
};

/// Writes the samples CSV and a `<csv>.meta.json` sidecar; returns the CSV path.
std::filesystem::path cmd_sample(const SampleRequest& request, std::ostream& log);

/// Metrics of a samples CSV against held-out data; appended to run.json and
/// written next to the samples as `<csv>.metrics.json`.
MetricsReport cmd_eval(const std::filesystem::path& run_dir, const std::filesystem::path& samples,
                       std::ostream& log);

/// Runs the verification suite and prints its table; true when all pass.
bool cmd_verify(const VerifyOptions& options, std::ostream& out);

} // namespace dlpm
