#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fgsa/basis.hpp"
#include "fgsa/errquant.hpp"
#include "fgsa/gp.hpp"
#include "fgsa/models_io.hpp"
#include "fgsa/validation.hpp"

namespace fgsa {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kConfigVersion = 1;

/// Where training data comes from: a built-in model evaluated on a generated
/// DoE, or a pair of CSV files.
struct DataSource {
  enum class Kind { Model, Csv };
  Kind kind = Kind::Model;

  std::string model = "additive_sine";  // additive_sine | interaction
  int output_dims = 100;
  double coefficient = 1.0;
  int doe_size = 200;
  std::string doe_method = "lhs";  // lhs | mc | mc+lhs
  int mc_size = 0;                 // MC part of an mc+lhs design

  std::filesystem::path doe_csv;
  std::filesystem::path outputs_csv;
};

struct ValidationConfig {
  int count = 0;  // last `count` rows held out when no explicit indices are given
  std::vector<int> training;
  std::vector<int> validation;
  int n_z = 100;
};

struct BenchConfig {
  int output_dims = 4096;
  int components = 10;
  int n_pf = 1000;
  int n_z = 10;
  int n_x = 10;
  int repeats = 1;
};

struct PipelineConfig {
  InputSpace space = InputSpace::unit_cube(2);
  DataSource data;
  PcaCriterion basis;
  GpOptions gp;
  std::optional<std::filesystem::path> surrogates;  // directory written by `fit`
  RunConfig run;
  std::vector<IndexSet> index_sets;
  double memory_budget_mb = 2048.0;
  std::vector<int> sweep_doe_sizes;
  std::vector<int> sweep_n_pf;
  ValidationConfig validation;
  BenchConfig bench;
  std::filesystem::path output = "fgsa_out";
  std::string source_text;  // verbatim config, echoed in manifests
};

/// Parses a YAML config. Errors carry the offending line.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

struct TrainingData {
  DesignMatrix doe;
  FunctionalOutputs outputs;
};

TrainingData prepare_data(const PipelineConfig& cfg);

struct Surrogate {
  BasisExpansion basis;
  VectorGp vgp;
};

Surrogate fit_surrogate(const PipelineConfig& cfg, const TrainingData& data);

struct IndexResult {
  IndexDistribution dist;
  double seconds = 0.0;
};

/// Basis-derived estimation for every configured index set.
std::vector<IndexResult> analyze(const PipelineConfig& cfg, const Surrogate& s, std::vector<std::string>* warnings);

struct BenchReport {
  int p = 0, m = 0, n_pf = 0, n_z = 0, n_x = 0;
  double seconds_bd = 0.0;
  double seconds_dw = 0.0;
  std::uint64_t flops_bd = 0;
  std::uint64_t flops_dw = 0;
  double max_difference = 0.0;  // between the two algorithms' maps
  CostPrediction predicted;

  double speedup() const { return seconds_dw / seconds_bd; }
  double measured_ratio() const { return static_cast<double>(flops_dw) / static_cast<double>(flops_bd); }
};

/// Times basis-derived vs dimension-wise estimation on synthetic
/// pre-sampled trajectories (GP sampling excluded).
BenchReport run_bench(const BenchConfig& bench, Seed seed);

// Verbs. Each writes its artifacts under cfg.output.
void cmd_run(const PipelineConfig& cfg);
void cmd_sweep(const PipelineConfig& cfg);
void cmd_bench(const PipelineConfig& cfg);
void cmd_validate(const PipelineConfig& cfg);
void cmd_fit(const PipelineConfig& cfg);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fgsa
