// SPDX-License-Identifier: Apache-2.0
#include "dlpm/run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dlpm/checkpoint.hpp"
#include "dlpm/datasets.hpp"
#include "dlpm/error.hpp"
#include "dlpm/sample.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace dlpm {

namespace {

constexpr std::uint64_t kTrainDataKey = 3;
constexpr std::uint64_t kReferenceKey = 4;
constexpr std::uint64_t kInitKey = 5;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix generate(const ExperimentConfig& config, std::size_t n, RandomStream& rng) {
  switch (config.dataset) {
  case DatasetKind::stable2d: return gen_stable2d(n, rng);
  case DatasetKind::gaussian_grid: return gen_gaussian_grid(n, rng).points;
  case DatasetKind::single_point:
    return gen_single_point(n, Eigen::Map<const Vector>(config.point.data(),
                                                        static_cast<Eigen::Index>(config.point.size())));
  case DatasetKind::file: {
    Matrix m = load_csv(config.dataset_path);
    require(m.cols() == config.model.input_dim, "data file width must equal input_dim");
    return m;
  }
  }
  throw ParameterError("unknown dataset");
}

void write_loss_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "step,loss,skipped\n";
  for (const auto& r : trace) out << r.step << ',' << format_double(r.loss) << ',' << r.skipped << '\n';
}

} // namespace

void configure_process() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  int threads = 1;
  if (const char* env = std::getenv("DLPM_THREADS")) threads = std::max(1, std::atoi(env));
  Eigen::setNbThreads(threads);
}

std::string RunRecord::to_json() const {
  ojson j;
  j["config"] = ojson::parse(config_json.empty() ? "{}" : config_json);
  j["checkpoints"] = checkpoints;
  j["loss_trace"] = loss_trace;
  j["samples"] = samples;
  j["metrics"] = ojson::array();
  for (const auto& m : metrics) j["metrics"].push_back(ojson::parse(m.to_json()));
  j["timings"] = ojson::object();
  for (const auto& [k, v] : timings) j["timings"][k] = v;
  return j.dump(2) + "\n";
}

RunRecord RunRecord::from_json(const std::string& text) {
  try {
    const auto j = ojson::parse(text);
    RunRecord r;
    r.config_json = j.at("config").dump(2);
    r.checkpoints = j.value("checkpoints", std::vector<std::string>{});
    r.loss_trace = j.value("loss_trace", "");
    r.samples = j.value("samples", std::vector<std::string>{});
    const ojson metrics = j.value("metrics", ojson::array());
    for (const auto& m : metrics) r.metrics.push_back(MetricsReport::from_json(m.dump()));
    const ojson timings = j.value("timings", ojson::object());
    for (const auto& [k, v] : timings.items()) r.timings[k] = v.get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("run record: ") + e.what());
  }
}

RunRecord RunRecord::load(const fs::path& run_dir) { return from_json(read_text(run_dir / "run.json")); }

void RunRecord::save(const fs::path& run_dir) const { write_text(run_dir / "run.json", to_json()); }

Matrix build_training_data(const ExperimentConfig& config) {
  RandomStream rng = RandomStream(config.seed).derive(kTrainDataKey);
  return generate(config, static_cast<std::size_t>(config.n_train), rng);
}

Matrix build_reference_data(const ExperimentConfig& config, std::size_t n) {
  RandomStream rng = RandomStream(config.seed).derive(kReferenceKey);
  return generate(config, n, rng);
}

RunRecord cmd_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  write_text(dir / "config.json", config.to_json());

  RunRecord record;
  record.config_json = config.to_json();
  const auto t0 = std::chrono::steady_clock::now();
  const Matrix data = build_training_data(config);
  const NoiseSchedule schedule = build_schedule(config.schedule);
  EpsModel model = EpsModel::initialized(config.model, RandomStream(config.seed).derive(kInitKey).seed());

  const auto save_ckpt = [&](const fs::path& path, std::int64_t step, const EpsModel& m) {
    save_checkpoint(path, Checkpoint{m, config.schedule, config.seed, step});
    record.checkpoints.push_back(fs::relative(path, dir).string());
  };
  CheckpointHook hook;
  if (config.train.checkpoint_interval > 0) {
    fs::create_directories(dir / "checkpoints");
    hook = [&](std::int64_t step, const EpsModel& m) {
      save_ckpt(dir / "checkpoints" / ("step_" + std::to_string(step) + ".txt"), step, m);
    };
  }
  log << "training " << to_string(config.dataset) << " alpha=" << config.schedule.alpha
      << " steps=" << config.train.total_steps << " batch=" << config.train.batch_size << "\n";
  std::vector<TraceRow> trace;
  try {
    trace = train(model, data, schedule, config.train, hook);
  } catch (const TrainingAborted& e) {
    write_loss_trace(dir / "loss.csv", e.trace());
    record.loss_trace = "loss.csv";
    record.timings["train_seconds"] = seconds_since(t0);
    record.save(dir);
    throw;
  }
  write_loss_trace(dir / "loss.csv", trace);
  record.loss_trace = "loss.csv";
  save_ckpt(dir / "checkpoint.txt", config.train.total_steps, model);
  record.timings["train_seconds"] = seconds_since(t0);
  record.save(dir);
  if (!trace.empty())
    log << "final loss " << trace.back().loss << " after " << trace.back().step << " steps ("
        << record.timings["train_seconds"] << " s)\n";
  return record;
}

fs::path cmd_sample(const SampleRequest& req, std::ostream& log) {
  const fs::path dir = req.run_dir;
  const ExperimentConfig config = ExperimentConfig::load((dir / "config.json").string());
  if (!fs::exists(dir / "checkpoint.txt")) throw FormatError("missing checkpoint in " + dir.string());
  const Checkpoint ckpt = load_checkpoint(dir / "checkpoint.txt");
  const NoiseSchedule schedule = build_schedule(ckpt.schedule);

  SamplerConfig sc = config.sampler;
  if (req.method) sc.method = *req.method;
  if (req.steps) sc.steps = *req.steps;
  if (req.n) sc.batch = *req.n;
  if (req.seed) sc.seed = *req.seed;
  std::optional<Matrix> latent;
  if (req.latent) {
    latent = load_csv(*req.latent);
    require(latent->cols() == ckpt.model.dims().input_dim, "latent width must equal the model dimension");
    sc.batch = static_cast<int>(latent->rows());
  }
  sc.validate(schedule);

  const auto t0 = std::chrono::steady_clock::now();
  RandomStream rng(sc.seed);
  const SampleResult res =
      run_sampler(model_predictor(ckpt.model, schedule.horizon()), schedule, sc, ckpt.model.dims().input_dim, rng, latent);
  const double secs = seconds_since(t0);

  const fs::path out =
      req.out ? *req.out : dir / ("samples_" + to_string(sc.method) + "_" + std::to_string(sc.steps) + ".csv");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::vector<std::string> header;
  for (int j = 0; j < ckpt.model.dims().input_dim; ++j) header.push_back("x" + std::to_string(j));
  write_csv(out, res.samples, header);

  ojson meta;
  meta["method"] = to_string(sc.method);
  meta["alpha"] = ckpt.schedule.alpha;
  meta["T"] = ckpt.schedule.horizon;
  meta["steps"] = sc.steps;
  meta["seed"] = sc.seed;
  meta["n"] = res.samples.rows();
  meta["checkpoint"] = (dir / "checkpoint.txt").string();
  meta["checkpoint_step"] = ckpt.step;
  meta["latent"] = req.latent ? req.latent->string() : "";
  meta["restarted"] = res.restarted;
  meta["failed"] = res.failed;
  write_text(out.string() + ".meta.json", meta.dump(2) + "\n");

  RunRecord record = RunRecord::load(dir);
  record.samples.push_back(out.string());
  record.timings["sample_seconds_" + to_string(sc.method) + "_" + std::to_string(sc.steps)] = secs;
  record.save(dir);
  log << "wrote " << res.samples.rows() << " samples to " << out.string() << " (" << secs << " s";
  if (res.restarted) log << ", " << res.restarted << " restarted, " << res.failed << " failed";
  log << ")\n";
  return out;
}

MetricsReport cmd_eval(const fs::path& run_dir, const fs::path& samples, std::ostream& log) {
  const ExperimentConfig config = ExperimentConfig::load((run_dir / "config.json").string());
  const Matrix gen = load_csv(samples);
  require(gen.rows() >= 1, "no samples to evaluate");
  const Matrix real = build_reference_data(config, static_cast<std::size_t>(config.eval.n_eval));
  require(gen.cols() == real.cols(), "sample width does not match the dataset");

  MetricsReport rep;
  rep.dataset = to_string(config.dataset);
  rep.alpha = config.schedule.alpha;
  rep.seed = config.seed;
  rep.n_real = real.rows();
  rep.n_gen = gen.rows();
  const fs::path meta_path = samples.string() + ".meta.json";
  if (fs::exists(meta_path)) {
    const auto meta = ojson::parse(read_text(meta_path));
    rep.method = meta.value("method", "");
    rep.steps = meta.value("steps", 0);
  }
  const bool want_msle = config.dataset != DatasetKind::gaussian_grid;
  const bool want_pr = config.dataset != DatasetKind::stable2d;
  if (want_msle) {
    try {
      rep.msle = msle(real, gen, config.eval.xi);
    } catch (const std::exception& e) {
      log << "msle unavailable: " << e.what() << "\n";
    }
  }
  if (want_pr) {
    try {
      const PrecisionRecall pr = precision_recall(real, gen, config.eval.k);
      rep.precision = pr.precision;
      rep.recall = pr.recall;
      rep.f1 = f1_pr(pr.precision, pr.recall);
    } catch (const std::exception& e) {
      log << "precision/recall unavailable: " << e.what() << "\n";
    }
  }
  write_text(samples.string() + ".metrics.json", rep.to_json() + "\n");
  if (fs::exists(run_dir / "run.json")) {
    RunRecord record = RunRecord::load(run_dir);
    record.metrics.push_back(rep);
    record.save(run_dir);
  }
  log << rep.to_json() << "\n";
  return rep;
}

bool cmd_verify(const VerifyOptions& options, std::ostream& out) {
  const VerifyReport report = run_verification_suite(options);
  report.print(out);
  return report.all_pass();
}

} // namespace dlpm
