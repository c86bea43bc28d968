#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "fgsa/error.hpp"
#include "fgsa/pipeline.hpp"
#include "oracles.hpp"

using namespace fgsa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const char* kMinimal = R"(version: 1
seed: 1234
data:
  model: additive_sine
  output_dims: 30
  doe: {size: 30}
gp: {starts: 2}
analysis: {n_pf: 200, n_z: 4, n_x: 3, totals: true}
)";

}  // namespace

TEST_CASE("config parsing") {
  const PipelineConfig c = parse_config(kMinimal);
  CHECK(c.run.seed == 1234);
  CHECK(c.run.totals);
  CHECK(c.index_sets.size() == 2);
  CHECK(c.data.output_dims == 30);

  const PipelineConfig named = parse_config(R"(version: 1
space:
  variables:
    - {name: a, lower: 0, upper: 1}
    - {name: b, lower: 0, upper: 1}
data: {model: interaction, coefficient: 2}
analysis:
  indices: [b, [a, b]]
  mode: per-trajectory
  covariance: fixed
)");
  CHECK(named.index_sets.size() == 2);
  CHECK(named.index_sets[1].size() == 2);
  CHECK(named.run.sampling.mode == SamplingMode::PerTrajectory);
  CHECK(named.run.covariance == CovarianceMode::Fixed);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error_line("version: 1\ndata: {model: additive_sine}\nanalysis:\n  n_pf: 10\n  colour: red\n") == 5);
  CHECK(config_error_line("version: 2\ndata: {model: additive_sine}\n") == 1);
  CHECK(config_error_line("version: 1\ndata: {model: additive_sine}\nanalysis:\n  n_pf: many\n") == 4);
  CHECK(config_error_line("version: 1\ndata:\n  model: additive_sine\n  doe_csv: d.csv\n") == 3);
  CHECK(config_error_line("version: 1\ndata: {model: additive_sine}\nanalysis:\n  indices: [x7]\n") == 4);
  CHECK(config_error_line("version: 1\ndata: {model: additive_sine}\nvalidation:\n  training: [0, 1]\n"
                          "  validation: [1, 2]\n") == 5);
  CHECK(config_error_line("version: 1\ndata: [unclosed\n") > 0);
  CHECK_THROWS_AS(parse_config(""), ConfigError);
}

TEST_CASE("run writes all artifacts deterministically") {
  const fs::path dir = oracle::temp_dir("run");
  PipelineConfig cfg = parse_config(kMinimal);
  cfg.output = dir / "a";
  cmd_run(cfg);
  for (const char* f : {"maps_summary.csv", "gsi_summary.csv", "gsi_samples.csv", "attribution.csv", "manifest.json"})
    CHECK(fs::exists(cfg.output / f));
  const auto manifest = nlohmann::json::parse(slurp(cfg.output / "manifest.json"));
  CHECK(manifest["seeds"]["master"] == 1234);
  CHECK(manifest["config"] == kMinimal);

  PipelineConfig again = cfg;
  again.output = dir / "b";
  cmd_run(again);
  for (const char* f : {"maps_summary.csv", "gsi_summary.csv", "gsi_samples.csv", "attribution.csv"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

  // per-trajectory streaming gives the same numbers
  PipelineConfig streamed = cfg;
  streamed.output = dir / "c";
  streamed.run.sampling.mode = SamplingMode::PerTrajectory;
  cmd_run(streamed);
  CHECK(slurp(dir / "a" / "gsi_samples.csv") == slurp(dir / "c" / "gsi_samples.csv"));
}

TEST_CASE("single-point sweep matches a plain run") {
  const fs::path dir = oracle::temp_dir("sweep");
  PipelineConfig cfg = parse_config(kMinimal);
  cfg.output = dir / "run";
  cmd_run(cfg);
  cfg.output = dir / "sweep";
  cfg.sweep_n_pf = {200};
  cmd_sweep(cfg);
  CHECK(slurp(dir / "run" / "gsi_samples.csv") == slurp(dir / "sweep" / "n_pf_200" / "gsi_samples.csv"));
  CHECK(fs::exists(dir / "sweep" / "sweep_summary.csv"));
  cfg.sweep_n_pf.clear();
  CHECK_THROWS_AS(cmd_sweep(cfg), ConfigError);
  cfg.sweep_doe_sizes = {500};
  CHECK_THROWS_AS(cmd_sweep(cfg), ConfigError);
}

TEST_CASE("fit then run from persisted surrogates reproduces the run") {
  const fs::path dir = oracle::temp_dir("fit");
  PipelineConfig cfg = parse_config(kMinimal);
  cfg.output = dir / "fitted";
  cmd_fit(cfg);
  cfg.output = dir / "direct";
  cmd_run(cfg);
  cfg.output = dir / "loaded";
  cfg.surrogates = dir / "fitted";
  cmd_run(cfg);
  CHECK(slurp(dir / "direct" / "gsi_samples.csv") == slurp(dir / "loaded" / "gsi_samples.csv"));
}

TEST_CASE("bench reports both algorithms honestly") {
  BenchConfig b;
  b.output_dims = 1;
  b.components = 1;
  b.n_pf = 200;
  b.n_z = 2;
  b.n_x = 2;
  const BenchReport r = run_bench(b, 1);
  CHECK(r.max_difference <= 1e-12);
  CHECK(r.speedup() > 0.0);
  const fs::path dir = oracle::temp_dir("bench");
  PipelineConfig cfg;
  cfg.bench = b;
  cfg.output = dir;
  cmd_bench(cfg);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["reference_scale"]["cost_dw"] == 983040000ULL);
  CHECK(manifest["reference_scale"]["ratio"].get<double>() == doctest::Approx(220.8).epsilon(1e-3));
}

TEST_CASE("validate splits the data and writes percentiles") {
  const fs::path dir = oracle::temp_dir("validate");
  PipelineConfig cfg = parse_config(kMinimal);
  cfg.output = dir;
  cfg.validation.count = 10;
  cfg.validation.n_z = 5;
  cmd_validate(cfg);
  CHECK(fs::exists(dir / "q2_percentiles.csv"));
  cfg.validation.count = 0;
  cfg.validation.training = {0, 1, 2, 3, 4};
  cfg.validation.validation = {4, 5, 6};
  CHECK_THROWS_AS(cmd_validate(cfg), ConfigError);
}

TEST_CASE("csv data with five inputs and 5001 outputs") {
  const fs::path dir = oracle::temp_dir("csvdata");
  const InputSpace space = InputSpace::unit_cube(5);
  const DesignMatrix doe = concatenate(mc_sample(space, 130, 1), lhs_sample(space, 96, 2));
  FunctionalOutputs out;
  out.values.resize(226, 5001);
  for (int l = 0; l < 5001; ++l) {
    const double t = l / 5000.0;
    const Eigen::MatrixXd& x = doe.points();
    out.values.col(l) = (x.col(0) * t + x.col(1).array().square().matrix() * (1 - t) +
                         0.3 * (x.col(2).array() * (3.0 * t)).sin().matrix() + 0.1 * x.col(3) * t * t)
                            .eval();
  }
  write_design(doe, dir / "doe.csv");
  write_outputs(out, dir / "outputs.csv");
  std::ofstream(dir / "cfg.yaml") << R"(version: 1
space:
  variables:
    - {name: x1, lower: 0, upper: 1}
    - {name: x2, lower: 0, upper: 1}
    - {name: x3, lower: 0, upper: 1}
    - {name: x4, lower: 0, upper: 1}
    - {name: x5, lower: 0, upper: 1}
data: {doe_csv: doe.csv, outputs_csv: outputs.csv}
gp: {starts: 2}
analysis: {n_pf: 300, n_z: 3, n_x: 3, indices: [x1, x5]}
output: out
)";
  const PipelineConfig cfg = load_config(dir / "cfg.yaml");
  cmd_run(cfg);
  CHECK(fs::exists(dir / "out" / "maps_summary.csv"));
}
