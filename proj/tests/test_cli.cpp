// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unistd.h>

#include "dlpm/checkpoint.hpp"
#include "dlpm/config.hpp"
#include "dlpm/datasets.hpp"
#include "dlpm/error.hpp"
#include "dlpm/run.hpp"
#include "dlpm/stats.hpp"

using namespace dlpm;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory removed at scope exit.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("dlpm_test_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const fs::path& out, DatasetKind kind = DatasetKind::stable2d) {
  ExperimentConfig c;
  c.dataset = kind;
  c.n_train = 2000;
  c.train.total_steps = 30;
  c.train.batch_size = 64;
  c.sampler.batch = 200;
  c.eval.n_eval = 500;
  c.output_dir = out.string();
  c.apply_seed(11);
  return c;
}

} // namespace

TEST_CASE("stable2d: shape and scale") {
  RandomStream rng(1);
  CHECK(gen_stable2d(1, rng).rows() == 1);
  CHECK(gen_stable2d(1, rng).cols() == 2);
  CHECK(gen_stable2d(32000, rng).rows() == 32000);
  const double med = stats::median(stats::row_norms(gen_stable2d(100000, rng)));
  MESSAGE("stable2d median norm " << med);
  CHECK(med > 0.05);
  CHECK(med < 0.1);
  CHECK_THROWS_AS(gen_stable2d(0, rng), ParameterError);
}

TEST_CASE("gaussian grid: weights, means and component frequencies") {
  const auto& w = grid_weights();
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(0.01 / 0.7));
  CHECK(w[8] == doctest::Approx(0.2 / 0.7));
  CHECK(grid_mean(0) == std::array<double, 2>{-1.0, -1.0});
  CHECK(grid_mean(4) == std::array<double, 2>{0.0, 0.0});
  CHECK(grid_mean(8) == std::array<double, 2>{1.0, 1.0});

  RandomStream rng(2);
  const std::size_t n = 100000;
  const LabeledData d = gen_gaussian_grid(n, rng);
  CHECK(d.points.rows() == static_cast<Eigen::Index>(n));
  std::array<double, 9> count{};
  for (int l : d.labels) count[static_cast<std::size_t>(l)] += 1.0;
  for (std::size_t c = 0; c < 9; ++c) {
    const double sd = std::sqrt(n * w[c] * (1.0 - w[c]));
    CHECK(std::abs(count[c] - n * w[c]) < 3.0 * sd);
  }
  CHECK(gen_gaussian_grid(32000, rng).points.rows() == 32000);
}

TEST_CASE("gaussian grid: zero spread puts points on the means") {
  RandomStream rng(3);
  const LabeledData d = gen_gaussian_grid(500, rng, 0.0);
  for (Eigen::Index i = 0; i < 500; ++i) {
    const auto m = grid_mean(d.labels[static_cast<std::size_t>(i)]);
    CHECK(d.points(i, 0) == m[0]);
    CHECK(d.points(i, 1) == m[1]);
  }
}

TEST_CASE("dataset generators are pure functions of (n, seed)") {
  RandomStream a(4), b(4);
  CHECK(gen_stable2d(100, a) == gen_stable2d(100, b));
  CHECK(gen_gaussian_grid(100, a).points == gen_gaussian_grid(100, b).points);
  Vector p(2);
  p << 0.5, -0.25;
  const Matrix s = gen_single_point(3, p);
  CHECK(s.rows() == 3);
  CHECK(s.row(2) == p.transpose());
}

TEST_CASE("csv: bit-exact round trip and malformed input") {
  ScratchDir dir("csv");
  RandomStream rng(5);
  const Matrix x = gen_stable2d(50, rng);
  write_csv(dir.path / "x.csv", x, {"x0", "x1"});
  CHECK(load_csv(dir.path / "x.csv") == x);
  CHECK(slurp(dir.path / "x.csv").rfind("x0,x1\n", 0) == 0);
  {
    std::ofstream bad(dir.path / "bad.csv");
    bad << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(load_csv(dir.path / "bad.csv"), FormatError);
  CHECK_THROWS_AS(load_csv(dir.path / "missing.csv"), FormatError);
}

TEST_CASE("config: JSON round trip is idempotent") {
  ExperimentConfig c;
  c.dataset = DatasetKind::gaussian_grid;
  c.schedule.alpha = 1.85;
  c.train.mom_groups = 3;
  c.sampler.method = SamplerMethod::lim_ode;
  c.sampler.steps = 25;
  c.eval.xi = 0.9;
  c.apply_seed(1234);
  const std::string once = c.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(once);
  CHECK(back == c);
  CHECK(back.to_json() == once);
}

TEST_CASE("config: defaults, partial documents and validation") {
  const ExperimentConfig d;
  CHECK(d.n_train == 32000);
  CHECK(d.schedule.horizon == 100);
  CHECK(d.train.batch_size == 1024);
  CHECK(d.train.lr == 5e-3);
  CHECK(d.train.total_steps == 10000);
  CHECK(d.sampler.batch == 10000);

  const ExperimentConfig p = ExperimentConfig::from_json(R"({"schedule": {"alpha": 2.0}, "seed": 5})");
  CHECK(p.schedule.alpha == 2.0);
  CHECK(p.schedule.horizon == 100);
  CHECK(p.seed == 5);
  CHECK(p.train.seed != p.sampler.seed);

  ExperimentConfig bad;
  bad.sampler.steps = 101;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"dataset": "mnist"})"), ParameterError);
  CHECK_THROWS(ExperimentConfig::from_json("{not json"));
}

TEST_CASE("run: train writes a reproducible run directory") {
  ScratchDir dir("train");
  const ExperimentConfig c = small_config(dir.path / "a");
  std::ostringstream log;
  const RunRecord rec = cmd_train(c, log);
  const fs::path a = dir.path / "a";
  for (const char* f : {"config.json", "loss.csv", "checkpoint.txt", "run.json"}) CHECK(fs::exists(a / f));
  CHECK(rec.checkpoints == std::vector<std::string>{"checkpoint.txt"});

  const Checkpoint ck = load_checkpoint(a / "checkpoint.txt");
  CHECK(ck.step == 30);
  CHECK(ck.schedule == c.schedule);
  CHECK(checkpoint_to_text(ck) == slurp(a / "checkpoint.txt"));
  CHECK(ExperimentConfig::load((a / "config.json").string()) == c);

  ExperimentConfig c2 = c;
  c2.output_dir = (dir.path / "b").string();
  cmd_train(c2, log);
  CHECK(slurp(a / "loss.csv") == slurp(dir.path / "b" / "loss.csv"));
  CHECK(slurp(a / "checkpoint.txt") == slurp(dir.path / "b" / "checkpoint.txt"));

  const RunRecord back = RunRecord::load(a);
  CHECK(back.loss_trace == "loss.csv");
  CHECK(back.timings.count("train_seconds") == 1);
}

TEST_CASE("run: sampling with a fixed latent is byte-identical") {
  ScratchDir dir("sample");
  const ExperimentConfig c = small_config(dir.path / "run");
  std::ostringstream log;
  cmd_train(c, log);
  RandomStream rng(6);
  write_csv(dir.path / "latent.csv", 0.3 * gen_stable2d(100, rng), {"x0", "x1"});

  SampleRequest req;
  req.run_dir = dir.path / "run";
  req.method = SamplerMethod::dlim;
  req.latent = dir.path / "latent.csv";
  req.out = dir.path / "one.csv";
  cmd_sample(req, log);
  req.out = dir.path / "two.csv";
  cmd_sample(req, log);
  CHECK(slurp(dir.path / "one.csv") == slurp(dir.path / "two.csv"));
  CHECK(load_csv(dir.path / "one.csv").rows() == 100);

  for (int steps : {25, 100}) {
    SampleRequest r;
    r.run_dir = dir.path / "run";
    r.method = SamplerMethod::dlim;
    r.steps = steps;
    const fs::path out = cmd_sample(r, log);
    CHECK(out.filename() == "samples_dlim_" + std::to_string(steps) + ".csv");
    CHECK(slurp(out.string() + ".meta.json").find("\"steps\": " + std::to_string(steps)) != std::string::npos);
    CHECK(load_csv(out).rows() == 200);
  }
  CHECK(RunRecord::load(dir.path / "run").samples.size() == 4);

  SampleRequest missing;
  missing.run_dir = dir.path / "nowhere";
  CHECK_THROWS(cmd_sample(missing, log));
}

TEST_CASE("run: evaluating the held-out data against itself") {
  ScratchDir dir("eval");
  std::ostringstream log;
  for (auto kind : {DatasetKind::stable2d, DatasetKind::gaussian_grid}) {
    ExperimentConfig c = small_config(dir.path / to_string(kind), kind);
    c.eval.n_eval = 2000;
    cmd_train(c, log);
    const fs::path held = dir.path / (to_string(kind) + "_held.csv");
    write_csv(held, build_reference_data(c, 2000), {"x0", "x1"});
    const MetricsReport rep = cmd_eval(c.output_dir, held, log);
    if (kind == DatasetKind::stable2d) {
      REQUIRE(rep.msle.has_value());
      CHECK(*rep.msle < 0.01);
      CHECK(!rep.f1.has_value());
    } else {
      REQUIRE(rep.f1.has_value());
      CHECK(*rep.f1 > 0.95);
      CHECK(!rep.msle.has_value());
    }
    CHECK(fs::exists(held.string() + ".metrics.json"));
    CHECK(RunRecord::load(c.output_dir).metrics.size() == 1);
  }
  {
    std::ofstream empty(dir.path / "empty.csv");
    empty << "x0,x1\n";
  }
  CHECK_THROWS(cmd_eval(dir.path / "stable2d", dir.path / "empty.csv", log));
}

TEST_CASE("run: single-point training reduces the loss by at least 75%") {
  ScratchDir dir("point");
  ExperimentConfig c = small_config(dir.path / "run", DatasetKind::single_point);
  c.train.total_steps = 2000;
  c.train.batch_size = 256;
  std::ostringstream log;
  cmd_train(c, log);
  std::ifstream in(dir.path / "run" / "loss.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> loss;
  while (std::getline(in, line)) loss.push_back(std::stod(line.substr(line.find(',') + 1)));
  REQUIRE(loss.size() == 2000);
  const double first = std::accumulate(loss.begin(), loss.begin() + 10, 0.0) / 10;
  const double last = std::accumulate(loss.end() - 100, loss.end(), 0.0) / 100;
  CHECK(last <= 0.25 * first);
}

TEST_CASE("run record: JSON round trip") {
  RunRecord r;
  r.config_json = ExperimentConfig{}.to_json();
  r.checkpoints = {"checkpoint.txt"};
  r.loss_trace = "loss.csv";
  r.samples = {"a.csv"};
  MetricsReport m;
  m.msle = 0.5;
  r.metrics.push_back(m);
  r.timings["train_seconds"] = 1.5;
  const RunRecord back = RunRecord::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(back.metrics.size() == 1);
  CHECK(back.timings.at("train_seconds") == 1.5);
}
