// SPDX-License-Identifier: Apache-2.0
// Command-line front end: train, sample, eval, verify.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dlpm/config.hpp"
#include "dlpm/error.hpp"
#include "dlpm/run.hpp"
#include "dlpm/train.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising Levy probabilistic models: training, sampling, evaluation, verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto* train = app.add_subcommand("train", "train a model and write a run directory");
  train->add_option("--config", config_path, "experiment config (JSON)");
  train->add_option("--seed", seed, "run seed (overrides the config)");
  train->add_option("--out", out, "run directory (overrides output_dir)");

  std::string run_dir, method, latent;
  std::optional<int> steps, count;
  auto* sample = app.add_subcommand("sample", "generate samples from a trained run");
  sample->add_option("--run", run_dir, "run directory")->required();
  sample->add_option("--method", method, "dlpm | dlim | lim | lim_ode");
  sample->add_option("--steps", steps, "number of backward steps");
  sample->add_option("--n", count, "number of samples");
  sample->add_option("--latent", latent, "latent CSV for dlim");
  sample->add_option("--seed", seed, "sampler seed");
  sample->add_option("--out", out, "output CSV");

  std::string samples;
  auto* eval = app.add_subcommand("eval", "evaluate a samples CSV against held-out data");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--samples", samples, "samples CSV")->required();

  dlpm::VerifyOptions vopt;
  std::optional<double> corrupt_ca;
  auto* verify = app.add_subcommand("verify", "run the statistical verification suite");
  verify->add_option("--seed", vopt.seed, "suite seed");
  verify->add_option("--scale", vopt.size_scale, "sample-size multiplier")->check(CLI::PositiveNumber);
  verify->add_option("--corrupt-ca", corrupt_ca)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  dlpm::configure_process();
  try {
    if (*train) {
      dlpm::ExperimentConfig config =
          config_path.empty() ? dlpm::ExperimentConfig{} : dlpm::ExperimentConfig::load(config_path);
      if (seed) config.apply_seed(*seed);
      if (!out.empty()) config.output_dir = out;
      dlpm::cmd_train(config, std::cout);
    } else if (*sample) {
      dlpm::SampleRequest req;
      req.run_dir = run_dir;
      if (!method.empty()) req.method = dlpm::sampler_method_from_string(method);
      req.steps = steps;
      req.n = count;
      req.seed = seed;
      if (!latent.empty()) req.latent = latent;
      if (!out.empty()) req.out = out;
      dlpm::cmd_sample(req, std::cout);
    } else if (*eval) {
      dlpm::cmd_eval(run_dir, samples, std::cout);
    } else if (*verify) {
      vopt.corrupt_ca = corrupt_ca;
      return dlpm::cmd_verify(vopt, std::cout) ? kOk : kFailure;
    }
  } catch (const dlpm::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dlpm::TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
