#include "fgsa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "fgsa/error.hpp"

namespace fgsa {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

int line_of(const YAML::Node& n) {
  const YAML::Mark mark = n.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!map.IsMap()) throw ConfigError("'" + section + "' must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in '" + section + "'", line_of(kv.first));
  }
}

template <class T>
T as(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    if constexpr (std::is_same_v<T, int>) throw ConfigError(what + " must be an integer", line_of(n));
    if constexpr (std::is_same_v<T, double>) throw ConfigError(what + " must be a number", line_of(n));
    if constexpr (std::is_same_v<T, bool>) throw ConfigError(what + " must be true or false", line_of(n));
    throw ConfigError(what + " has an invalid value", line_of(n));
  }
}

template <class T>
void read(const YAML::Node& map, const char* key, T& out, const std::string& section) {
  if (const YAML::Node n = map[key]) out = as<T>(n, section + "." + key);
}

template <class T>
std::vector<T> read_list(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) throw ConfigError(what + " must be a list", line_of(n));
  std::vector<T> out;
  for (const auto& item : n) out.push_back(as<T>(item, what + " entry"));
  return out;
}

void require(bool ok, const std::string& msg, const YAML::Node& n) {
  if (!ok) throw ConfigError(msg, line_of(n));
}

InputSpace parse_space(const YAML::Node& node) {
  check_keys(node, {"variables", "dims"}, "space");
  if (const YAML::Node dims = node["dims"]) {
    require(!node["variables"], "give either space.dims or space.variables", dims);
    const int d = as<int>(dims, "space.dims");
    require(d >= 1, "space.dims must be positive", dims);
    return InputSpace::unit_cube(d);
  }
  const YAML::Node vars = node["variables"];
  require(vars && vars.IsSequence() && vars.size() > 0, "space.variables must be a non-empty list", vars ? vars : node);
  std::vector<VariableBounds> bounds;
  std::vector<std::string> names;
  for (const auto& v : vars) {
    check_keys(v, {"name", "lower", "upper"}, "space.variables");
    VariableBounds b;
    std::string name = "x" + std::to_string(bounds.size() + 1);
    read(v, "name", name, "space.variables");
    read(v, "lower", b.lower, "space.variables");
    read(v, "upper", b.upper, "space.variables");
    require(b.lower < b.upper, "variable '" + name + "': lower must be below upper", v);
    require(std::find(names.begin(), names.end(), name) == names.end(), "duplicate variable name '" + name + "'", v);
    bounds.push_back(b);
    names.push_back(name);
  }
  return InputSpace(std::move(bounds), std::move(names));
}

int variable_index(const InputSpace& space, const YAML::Node& n) {
  const auto name = as<std::string>(n, "analysis.indices entry");
  const int idx = space.find(name);
  if (idx < 0) throw ConfigError("unknown variable '" + name + "'", line_of(n));
  return idx;
}

std::vector<IndexSet> parse_indices(const YAML::Node& node, const InputSpace& space) {
  std::vector<IndexSet> sets;
  if (!node || node.IsNull() || (node.IsScalar() && node.as<std::string>() == "all")) {
    for (int i = 0; i < space.dims(); ++i) sets.push_back(IndexSet::single(i, space.dims()));
    return sets;
  }
  require(node.IsSequence() && node.size() > 0, "analysis.indices must be 'all' or a non-empty list", node);
  for (const auto& item : node) {
    if (item.IsSequence()) {
      std::vector<int> vars;
      for (const auto& v : item) vars.push_back(variable_index(space, v));
      require(!vars.empty(), "empty index group", item);
      sets.emplace_back(vars, space.dims());
    } else {
      sets.push_back(IndexSet::single(variable_index(space, item), space.dims()));
    }
  }
  return sets;
}

void parse_data(const YAML::Node& node, DataSource& data, const fs::path& base) {
  check_keys(node, {"model", "output_dims", "coefficient", "doe", "doe_csv", "outputs_csv"}, "data");
  const bool has_model = static_cast<bool>(node["model"]);
  const bool has_csv = node["doe_csv"] || node["outputs_csv"];
  require(has_model != has_csv, "data needs exactly one source: 'model' or 'doe_csv' + 'outputs_csv'", node);
  if (has_csv) {
    data.kind = DataSource::Kind::Csv;
    require(node["doe_csv"] && node["outputs_csv"], "CSV data needs both doe_csv and outputs_csv", node);
    data.doe_csv = base / as<std::string>(node["doe_csv"], "data.doe_csv");
    data.outputs_csv = base / as<std::string>(node["outputs_csv"], "data.outputs_csv");
    require(!node["doe"] && !node["output_dims"], "doe/output_dims apply to model data only", node);
    return;
  }
  data.kind = DataSource::Kind::Model;
  data.model = as<std::string>(node["model"], "data.model");
  require(data.model == "additive_sine" || data.model == "interaction",
          "data.model must be additive_sine or interaction", node["model"]);
  read(node, "output_dims", data.output_dims, "data");
  require(data.output_dims >= 1, "data.output_dims must be positive", node);
  read(node, "coefficient", data.coefficient, "data");
  if (const YAML::Node doe = node["doe"]) {
    check_keys(doe, {"size", "method", "mc_size"}, "data.doe");
    read(doe, "size", data.doe_size, "data.doe");
    read(doe, "method", data.doe_method, "data.doe");
    read(doe, "mc_size", data.mc_size, "data.doe");
    require(data.doe_size >= 2, "data.doe.size must be at least 2", doe);
    require(data.doe_method == "lhs" || data.doe_method == "mc" || data.doe_method == "mc+lhs",
            "data.doe.method must be lhs, mc or mc+lhs", doe);
    if (data.doe_method == "mc+lhs")
      require(data.mc_size >= 1 && data.doe_size - data.mc_size >= 2,
              "mc+lhs needs 1 <= mc_size <= size - 2", doe);
  }
}

void parse_analysis(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node,
             {"indices", "totals", "n_pf", "n_z", "n_x", "mode", "covariance", "factorization", "memory_budget_mb",
              "keep_components"},
             "analysis");
  RunConfig& run = cfg.run;
  read(node, "totals", run.totals, "analysis");
  read(node, "n_pf", run.n_pf, "analysis");
  read(node, "n_z", run.n_z, "analysis");
  read(node, "n_x", run.n_x, "analysis");
  read(node, "keep_components", run.keep_components, "analysis");
  read(node, "memory_budget_mb", cfg.memory_budget_mb, "analysis");
  require(run.n_pf >= 2, "analysis.n_pf must be at least 2", node);
  require(run.n_z >= 1, "analysis.n_z must be at least 1", node);
  require(run.n_x >= 1, "analysis.n_x must be at least 1", node);
  if (const YAML::Node n = node["mode"]) {
    const auto v = as<std::string>(n, "analysis.mode");
    require(v == "batch" || v == "per-trajectory", "analysis.mode must be batch or per-trajectory", n);
    run.sampling.mode = v == "batch" ? SamplingMode::Batch : SamplingMode::PerTrajectory;
  }
  if (const YAML::Node n = node["covariance"]) {
    const auto v = as<std::string>(n, "analysis.covariance");
    require(v == "empirical" || v == "fixed", "analysis.covariance must be empirical or fixed", n);
    run.covariance = v == "fixed" ? CovarianceMode::Fixed : CovarianceMode::Empirical;
  }
  if (const YAML::Node n = node["factorization"]) {
    const auto v = as<std::string>(n, "analysis.factorization");
    require(v == "auto" || v == "dense" || v == "low-rank", "analysis.factorization must be auto, dense or low-rank", n);
    run.sampling.factorization = v == "auto" ? Factorization::Auto
                                 : v == "dense" ? Factorization::Dense
                                                : Factorization::LowRank;
  }
  cfg.index_sets = parse_indices(node["indices"], cfg.space);
}

std::vector<int> positive_list(const YAML::Node& n, const std::string& what, int minimum) {
  auto v = read_list<int>(n, what);
  require(!v.empty(), what + " must not be empty", n);
  for (int x : v) require(x >= minimum, what + " entries must be at least " + std::to_string(minimum), n);
  return v;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  if (!root || root.IsNull()) throw ConfigError("config is empty");
  check_keys(root,
             {"version", "seed", "threads", "output", "space", "data", "basis", "gp", "analysis", "sweep",
              "validation", "bench"},
             "config");

  PipelineConfig cfg;
  cfg.source_text = text;
  int version = kConfigVersion;
  read(root, "version", version, "config");
  require(version == kConfigVersion, "unsupported config version " + std::to_string(version), root["version"]);
  if (const YAML::Node n = root["seed"]) {
    try {
      cfg.run.seed = n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError("seed must be a non-negative integer", line_of(n));
    }
  }
  read(root, "threads", cfg.run.threads, "config");
  require(cfg.run.threads >= 1, "threads must be positive", root);
  if (const YAML::Node n = root["output"]) cfg.output = base_dir / as<std::string>(n, "output");

  if (const YAML::Node d = root["data"]) {
    parse_data(d, cfg.data, base_dir);
  } else {
    throw ConfigError("missing 'data' section");
  }
  if (const YAML::Node s = root["space"]) {
    cfg.space = parse_space(s);
  } else if (cfg.data.kind == DataSource::Kind::Csv) {
    throw ConfigError("CSV data needs a 'space' section declaring the input variables");
  } else {
    cfg.space = InputSpace::unit_cube(2);
  }
  if (cfg.data.kind == DataSource::Kind::Model && cfg.space.dims() != 2)
    throw ConfigError("the built-in models take 2 inputs, space declares " + std::to_string(cfg.space.dims()),
                      line_of(root["space"]));

  if (const YAML::Node b = root["basis"]) {
    check_keys(b, {"criterion", "threshold", "components"}, "basis");
    std::string criterion = b["components"] && !b["threshold"] ? "fixed" : "variance";
    read(b, "criterion", criterion, "basis");
    if (criterion == "fixed") {
      int count = 0;
      read(b, "components", count, "basis");
      require(count >= 1, "basis.components must be positive for a fixed criterion", b);
      cfg.basis = PcaCriterion::fixed(count);
    } else if (criterion == "variance") {
      double tau = 0.99;
      read(b, "threshold", tau, "basis");
      require(tau > 0.0 && tau <= 1.0, "basis.threshold must be in (0, 1]", b);
      cfg.basis = PcaCriterion::variance(tau);
    } else {
      throw ConfigError("basis.criterion must be fixed or variance", line_of(b["criterion"]));
    }
  }

  if (const YAML::Node g = root["gp"]) {
    check_keys(g, {"starts", "max_iterations", "surrogates"}, "gp");
    read(g, "starts", cfg.gp.starts, "gp");
    read(g, "max_iterations", cfg.gp.max_iterations, "gp");
    require(cfg.gp.starts >= 1 && cfg.gp.max_iterations >= 1, "gp.starts and gp.max_iterations must be positive", g);
    if (const YAML::Node s = g["surrogates"]) cfg.surrogates = base_dir / as<std::string>(s, "gp.surrogates");
  }

  if (const YAML::Node a = root["analysis"]) {
    parse_analysis(a, cfg);
  } else {
    cfg.index_sets = parse_indices(YAML::Node(), cfg.space);
  }

  if (const YAML::Node s = root["sweep"]) {
    check_keys(s, {"doe_sizes", "n_pf"}, "sweep");
    if (s["doe_sizes"]) cfg.sweep_doe_sizes = positive_list(s["doe_sizes"], "sweep.doe_sizes", 2);
    if (s["n_pf"]) cfg.sweep_n_pf = positive_list(s["n_pf"], "sweep.n_pf", 2);
  }

  if (const YAML::Node v = root["validation"]) {
    check_keys(v, {"count", "training", "validation", "n_z"}, "validation");
    read(v, "count", cfg.validation.count, "validation");
    read(v, "n_z", cfg.validation.n_z, "validation");
    if (v["training"]) cfg.validation.training = read_list<int>(v["training"], "validation.training");
    if (v["validation"]) cfg.validation.validation = read_list<int>(v["validation"], "validation.validation");
    require(cfg.validation.n_z >= 1, "validation.n_z must be positive", v);
    std::set<int> train(cfg.validation.training.begin(), cfg.validation.training.end());
    if (v["validation"])
      for (const auto& item : v["validation"])
        if (train.count(item.as<int>()))
          throw ConfigError("row " + item.as<std::string>() + " is in both the training and validation sets",
                            line_of(item));
  }

  if (const YAML::Node b = root["bench"]) {
    check_keys(b, {"output_dims", "components", "n_pf", "n_z", "n_x", "repeats"}, "bench");
    BenchConfig& bc = cfg.bench;
    read(b, "output_dims", bc.output_dims, "bench");
    read(b, "components", bc.components, "bench");
    read(b, "n_pf", bc.n_pf, "bench");
    read(b, "n_z", bc.n_z, "bench");
    read(b, "n_x", bc.n_x, "bench");
    read(b, "repeats", bc.repeats, "bench");
    require(bc.output_dims >= 1 && bc.components >= 1 && bc.components <= bc.output_dims,
            "bench needs 1 <= components <= output_dims", b);
    require(bc.n_pf >= 2 && bc.n_z >= 1 && bc.n_x >= 1 && bc.repeats >= 1, "bench sizes must be positive", b);
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------- data

TrainingData prepare_data(const PipelineConfig& cfg) {
  const DataSource& src = cfg.data;
  if (src.kind == DataSource::Kind::Csv) {
    DesignMatrix doe = read_design(src.doe_csv, cfg.space);
    FunctionalOutputs out = read_outputs(src.outputs_csv, doe.rows());
    return {std::move(doe), std::move(out)};
  }
  const TestModel model = src.model == "interaction" ? TestModel::interaction(src.output_dims, src.coefficient)
                                                     : TestModel::additive_sine(src.output_dims);
  const Seed seed = derive_seed(cfg.run.seed, {stream::kDoe});
  DesignMatrix doe = src.doe_method == "lhs" ? lhs_sample(cfg.space, src.doe_size, seed)
                     : src.doe_method == "mc"
                         ? mc_sample(cfg.space, src.doe_size, seed)
                         : concatenate(mc_sample(cfg.space, src.mc_size, derive_seed(seed, {1})),
                                       lhs_sample(cfg.space, src.doe_size - src.mc_size, derive_seed(seed, {2})));
  FunctionalOutputs out = model.evaluate(doe);
  return {std::move(doe), std::move(out)};
}

Surrogate fit_surrogate(const PipelineConfig& cfg, const TrainingData& data) {
  if (cfg.surrogates) {
    const fs::path dir = *cfg.surrogates;
    BasisExpansion basis = load_basis(dir / "basis");
    DesignMatrix doe = read_design(dir / "doe.csv", cfg.space);
    VectorGp vgp = load_surrogates(dir / "surrogates.json", doe, basis);
    return {std::move(basis), std::move(vgp)};
  }
  BasisExpansion basis = fit_pca(data.outputs, cfg.basis);
  VectorGp vgp = fit_vector_gp(data.doe, basis, cfg.gp, cfg.run.threads);
  return {std::move(basis), std::move(vgp)};
}

std::vector<IndexResult> analyze(const PipelineConfig& cfg, const Surrogate& s, std::vector<std::string>* warnings) {
  const int locations = (cfg.run.totals ? 3 : 2) * cfg.run.n_pf;
  const double mb = trajectory_storage_bytes(s.basis.size(), cfg.run.n_z, locations) / (1024.0 * 1024.0);
  if (cfg.run.sampling.mode == SamplingMode::Batch && mb > cfg.memory_budget_mb) {
    std::ostringstream msg;
    msg << "batch mode holds " << std::lround(mb) << " MB of trajectories (budget " << cfg.memory_budget_mb
        << " MB); per-trajectory mode keeps one trajectory per thread";
    if (warnings) warnings->push_back(msg.str());
    std::cerr << "warning: " << msg.str() << '\n';
  }
  std::vector<IndexResult> out;
  for (const IndexSet& u : cfg.index_sets) {
    const auto t0 = std::chrono::steady_clock::now();
    IndexDistribution dist = run_algorithm3(s.vgp, s.basis, cfg.space, u, cfg.run);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back({std::move(dist), secs});
  }
  return out;
}

// ---------------------------------------------------------------- emitters

namespace {

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

const char* kBoxHeader = "median,q1,q3,whisker_low,whisker_high,p5,p95,outliers,count,missing";

void write_box(std::ostream& out, const BoxplotSummary& s) {
  out << format_number(s.median) << ',' << format_number(s.q1) << ',' << format_number(s.q3) << ','
      << format_number(s.whisker_low) << ',' << format_number(s.whisker_high) << ',' << format_number(s.p5) << ','
      << format_number(s.p95) << ',' << s.outliers << ',' << s.count << ',' << s.missing;
}

bool out_of_range(double v, double slack) { return !std::isnan(v) && (v < -slack || v > 1.0 + slack); }

// Number of values of a (trajectory, replicate) slice outside [-slack, 1 + slack].
template <class Get>
int count_out_of_range(int n_z, int per_traj, double slack, Get get) {
  int c = 0;
  for (int j = 0; j < n_z; ++j)
    for (int b = 0; b < per_traj; ++b) c += out_of_range(get(j, b), slack);
  return c;
}

struct Emitted {
  std::vector<std::string> files;
};

void write_run_artifacts(const fs::path& dir, const InputSpace& space, const std::vector<double>& grid,
                         const std::vector<IndexResult>& results, Emitted& emitted) {
  fs::create_directories(dir);
  auto maps = open_csv(dir / "maps_summary.csv");
  auto gsis = open_csv(dir / "gsi_summary.csv");
  auto samples = open_csv(dir / "gsi_samples.csv");
  auto attr = open_csv(dir / "attribution.csv");
  maps << "index,kind,scope,dimension,grid," << kBoxHeader << ",out_of_range\n";
  gsis << "index,kind,scope," << kBoxHeader << ",out_of_range\n";
  samples << "index,kind,trajectory,replicate,value,out_of_range\n";
  attr << "index,kind,target,grid,metamodel_share,estimation_share,defined\n";

  for (const IndexResult& r : results) {
    const IndexDistribution& dist = r.dist;
    const std::string label = dist.index_set.label(space);
    const double slack = range_slack(dist.n_pf);
    for (const IndexEstimates& est : dist.estimates) {
      const std::string kind = to_string(est.kind);
      const DistributionSummary meta = summarize(est, dist.n_x, Scope::MetamodelOnly);
      const DistributionSummary overall = summarize(est, dist.n_x, Scope::Overall);
      for (Scope scope : {Scope::MetamodelOnly, Scope::Overall}) {
        const DistributionSummary& s = scope == Scope::MetamodelOnly ? meta : overall;
        const int per_traj = scope == Scope::MetamodelOnly ? 1 : dist.n_x;
        for (std::size_t l = 0; l < s.maps.size(); ++l) {
          maps << label << ',' << kind << ',' << to_string(scope) << ',' << l << ','
               << (grid.size() == s.maps.size() ? format_number(grid[l]) : std::string()) << ',';
          write_box(maps, s.maps[l]);
          maps << ',' << count_out_of_range(dist.n_z, per_traj, slack, [&](int j, int b) {
            return est.maps(static_cast<Eigen::Index>(l), IndexDistribution::column(j, b, dist.n_x));
          }) << '\n';
        }
        gsis << label << ',' << kind << ',' << to_string(scope) << ',';
        write_box(gsis, s.gsi);
        gsis << ',' << count_out_of_range(dist.n_z, per_traj, slack, [&](int j, int b) { return est.gsi(j, b); })
             << '\n';
      }
      for (int j = 0; j < dist.n_z; ++j)
        for (int b = 0; b < dist.n_x; ++b)
          samples << label << ',' << kind << ',' << j << ',' << b << ',' << format_number(est.gsi(j, b)) << ','
                  << out_of_range(est.gsi(j, b), slack) << '\n';

      const std::vector<Attribution> a = error_attribution(meta.maps, overall.maps);
      for (std::size_t l = 0; l < a.size(); ++l)
        attr << label << ',' << kind << ',' << l << ','
             << (grid.size() == a.size() ? format_number(grid[l]) : std::string()) << ','
             << format_number(a[l].metamodel_share) << ',' << format_number(a[l].estimation_share) << ','
             << a[l].defined << '\n';
      const Attribution g = error_attribution(meta.gsi, overall.gsi);
      attr << label << ',' << kind << ",gsi,," << format_number(g.metamodel_share) << ','
           << format_number(g.estimation_share) << ',' << g.defined << '\n';
    }
  }
  for (const char* f : {"maps_summary.csv", "gsi_summary.csv", "gsi_samples.csv", "attribution.csv"})
    emitted.files.push_back((dir / f).string());
}

const char* mode_name(SamplingMode m) { return m == SamplingMode::Batch ? "batch" : "per-trajectory"; }
const char* covariance_name(CovarianceMode m) { return m == CovarianceMode::Fixed ? "fixed" : "empirical"; }
const char* factorization_name(Factorization f) {
  switch (f) {
    case Factorization::Dense:
      return "dense";
    case Factorization::LowRank:
      return "low-rank";
    default:
      return "auto";
  }
}

Json manifest_base(const PipelineConfig& cfg, const std::string& command) {
  Json j;
  j["tool"] = "fgsa";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_version"] = kConfigVersion;
  j["config"] = cfg.source_text;
  j["effective"] = {{"seed", cfg.run.seed},
                    {"threads", cfg.run.threads},
                    {"mode", mode_name(cfg.run.sampling.mode)},
                    {"covariance", covariance_name(cfg.run.covariance)},
                    {"factorization", factorization_name(cfg.run.sampling.factorization)},
                    {"n_pf", cfg.run.n_pf},
                    {"n_z", cfg.run.n_z},
                    {"n_x", cfg.run.n_x},
                    {"totals", cfg.run.totals}};
  j["versions"] = {{"fgsa", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__},
                   {"cxx", __cplusplus}};
  return j;
}

Json surrogate_json(const Surrogate& s) {
  Json j;
  j["components"] = s.basis.size();
  j["output_dims"] = s.basis.output_dims();
  j["explained_ratio"] = s.basis.explained_ratio();
  j["doe_rows"] = s.vgp.design().rows();
  Json gps = Json::array();
  for (const auto& gp : s.vgp.components()) {
    const auto& p = gp.params();
    gps.push_back({{"lengthscales", std::vector<double>(p.lengthscales.data(), p.lengthscales.data() + p.lengthscales.size())},
                   {"signal_variance", p.signal_variance},
                   {"nugget", p.nugget},
                   {"jitter", gp.jitter()},
                   {"log_likelihood", gp.log_likelihood()}});
  }
  j["gp"] = gps;
  return j;
}

Json seeds_json(const PipelineConfig& cfg, const RunConfig& run) {
  Json seeds;
  seeds["master"] = run.seed;
  seeds["doe"] = derive_seed(run.seed, {stream::kDoe});
  Json per = Json::array();
  for (const IndexSet& u : cfg.index_sets)
    per.push_back({{"index", u.label(cfg.space)},
                   {"pf_design", derive_seed(run.seed, {stream::kPfDesign, u.key()})},
                   {"trajectories", trajectory_seed(u, run)}});
  seeds["index_sets"] = per;
  return seeds;
}

void write_json(const Json& j, const fs::path& path) {
  auto out = open_csv(path);
  out << j.dump(2) << '\n';
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- commands

void cmd_run(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData data = prepare_data(cfg);
  const Surrogate s = fit_surrogate(cfg, data);
  const double fit_secs = elapsed(t0);
  std::vector<std::string> warnings;
  const std::vector<IndexResult> results = analyze(cfg, s, &warnings);

  Emitted emitted;
  write_run_artifacts(cfg.output, cfg.space, data.outputs.grid, results, emitted);
  Json m = manifest_base(cfg, "run");
  m["seeds"] = seeds_json(cfg, cfg.run);
  m["surrogate"] = surrogate_json(s);
  Json timings;
  timings["fit_seconds"] = fit_secs;
  for (std::size_t i = 0; i < results.size(); ++i)
    timings["analysis_seconds"][cfg.index_sets[i].label(cfg.space)] = results[i].seconds;
  timings["total_seconds"] = elapsed(t0);
  m["timings"] = timings;
  m["warnings"] = warnings;
  emitted.files.push_back((cfg.output / "manifest.json").string());
  m["files"] = emitted.files;
  write_json(m, cfg.output / "manifest.json");
}

void cmd_sweep(const PipelineConfig& cfg) {
  if (cfg.sweep_doe_sizes.empty() && cfg.sweep_n_pf.empty())
    throw ConfigError("sweep needs sweep.doe_sizes and/or sweep.n_pf");
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData master = prepare_data(cfg);
  for (int n : cfg.sweep_doe_sizes)
    if (n > master.doe.rows())
      throw ConfigError("sweep DoE size " + std::to_string(n) + " exceeds the master design (" +
                        std::to_string(master.doe.rows()) + " rows)");
  if (cfg.surrogates && !cfg.sweep_doe_sizes.empty())
    throw ConfigError("a DoE sweep refits surrogates; remove gp.surrogates");

  auto combined = open_csv(cfg.output / "sweep_summary.csv");
  combined << "sweep,value,index,kind,scope,statistic,result\n";
  Json m = manifest_base(cfg, "sweep");
  m["seeds"] = seeds_json(cfg, cfg.run);
  Json points = Json::array();
  std::vector<std::string> warnings;

  // (sweep, index, kind, scope) -> (values, IQRs) for the trend table
  struct Trend {
    std::vector<double> x, iqr;
  };
  std::map<std::string, Trend> trends;

  auto run_point = [&](const std::string& sweep, int value, const PipelineConfig& point_cfg, const TrainingData& data) {
    const auto tp = std::chrono::steady_clock::now();
    const Surrogate s = fit_surrogate(point_cfg, data);
    const std::vector<IndexResult> results = analyze(point_cfg, s, &warnings);
    const fs::path dir = cfg.output / (sweep + "_" + std::to_string(value));
    Emitted emitted;
    write_run_artifacts(dir, cfg.space, data.outputs.grid, results, emitted);
    for (const IndexResult& r : results) {
      const std::string label = r.dist.index_set.label(cfg.space);
      for (const IndexEstimates& est : r.dist.estimates)
        for (Scope scope : {Scope::MetamodelOnly, Scope::Overall}) {
          const BoxplotSummary g = summarize(est, r.dist.n_x, scope).gsi;
          const std::string key = sweep + "," + std::to_string(value) + "," + label + "," + to_string(est.kind) +
                                  "," + to_string(scope) + ",";
          const std::pair<const char*, double> stats[] = {
              {"median", g.median}, {"q1", g.q1}, {"q3", g.q3}, {"whisker_low", g.whisker_low},
              {"whisker_high", g.whisker_high}, {"p5", g.p5}, {"p95", g.p95}, {"iqr", g.iqr()}};
          for (const auto& [name, v] : stats) combined << key << name << ',' << format_number(v) << '\n';
          Trend& t = trends[sweep + "," + label + "," + to_string(est.kind) + "," + to_string(scope)];
          t.x.push_back(value);
          t.iqr.push_back(g.iqr());
        }
    }
    points.push_back({{"sweep", sweep},
                      {"value", value},
                      {"directory", dir.string()},
                      {"surrogate", surrogate_json(s)},
                      {"seconds", elapsed(tp)}});
  };

  for (int n : cfg.sweep_doe_sizes) {
    TrainingData subset{master.doe.head(n), master.outputs.head(n)};
    run_point("doe", n, cfg, subset);
  }
  for (int npf : cfg.sweep_n_pf) {
    PipelineConfig point = cfg;
    point.run.n_pf = npf;
    run_point("n_pf", npf, point, master);
  }

  auto trend_csv = open_csv(cfg.output / "sweep_trends.csv");
  trend_csv << "sweep,index,kind,scope,points,spearman_iqr,first_iqr,last_iqr\n";
  for (const auto& [key, t] : trends)
    trend_csv << key << ',' << t.x.size() << ',' << format_number(t.x.size() > 1 ? spearman(t.x, t.iqr) : NAN) << ','
              << format_number(t.iqr.front()) << ',' << format_number(t.iqr.back()) << '\n';

  m["points"] = points;
  m["warnings"] = warnings;
  m["timings"] = {{"total_seconds", elapsed(t0)}};
  write_json(m, cfg.output / "manifest.json");
}

BenchReport run_bench(const BenchConfig& bc, Seed seed) {
  const int p = bc.components, m = bc.output_dims, n = bc.n_pf;
  if (p < 1 || p > m || n < 2 || bc.n_z < 1 || bc.n_x < 1) throw InvalidArgument("invalid bench sizes");
  Rng rng = make_rng(derive_seed(seed, {stream::kSynthetic}));
  std::normal_distribution<double> normal;
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd x(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) x(i, j) = normal(rng);
    return x;
  };
  // orthonormal synthetic basis with a decaying spectrum
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(m, p));
  const Eigen::MatrixXd v = (qr.householderQ() * Eigen::MatrixXd::Identity(m, p)).transpose();
  Eigen::VectorXd scale(p);
  for (int q = 0; q < p; ++q) scale(q) = 1.0 / (1.0 + q);
  const BasisExpansion basis(Eigen::VectorXd::Zero(m), v, gaussian(50, p) * scale.asDiagonal());
  std::vector<Eigen::MatrixXd> draws;
  for (int j = 0; j < bc.n_z; ++j) draws.push_back(gaussian(2 * n, p) * scale.asDiagonal());

  RunConfig cfg;
  cfg.n_pf = n;
  cfg.n_z = bc.n_z;
  cfg.n_x = bc.n_x;
  cfg.seed = seed;
  const IndexSet u = IndexSet::single(0, 1);

  BenchReport r;
  r.p = p;
  r.m = m;
  r.n_pf = n;
  r.n_z = bc.n_z;
  r.n_x = bc.n_x;
  r.seconds_bd = r.seconds_dw = std::numeric_limits<double>::infinity();
  std::optional<IndexDistribution> bd, dw;
  for (int rep = 0; rep < bc.repeats; ++rep) {
    OpCounter cb, cd;
    auto t0 = std::chrono::steady_clock::now();
    bd.emplace(run_algorithm3(draws, basis, u, cfg, &cb));
    r.seconds_bd = std::min(r.seconds_bd, elapsed(t0));
    t0 = std::chrono::steady_clock::now();
    dw.emplace(run_algorithm2_dimensionwise(draws, basis, u, cfg, &cd));
    r.seconds_dw = std::min(r.seconds_dw, elapsed(t0));
    r.flops_bd = cb.flops;
    r.flops_dw = cd.flops;
  }
  const Eigen::MatrixXd& a = bd->get(IndexKind::Closed).maps;
  const Eigen::MatrixXd& b = dw->get(IndexKind::Closed).maps;
  r.max_difference = (a - b).cwiseAbs().maxCoeff();
  r.predicted = predicted_costs(p, n, m);
  return r;
}

void cmd_bench(const PipelineConfig& cfg) {
  const BenchReport r = run_bench(cfg.bench, cfg.run.seed);
  const CostPrediction reference = predicted_costs(10, 5000, 4096);
  auto out = open_csv(cfg.output / "bench.csv");
  out << "p,m,n_pf,n_z,n_x,seconds_dw,seconds_bd,speedup,flops_dw,flops_bd,measured_op_ratio,predicted_cost_dw,"
         "predicted_cost_bd,predicted_ratio,lower_bound_ratio,max_map_difference\n";
  out << r.p << ',' << r.m << ',' << r.n_pf << ',' << r.n_z << ',' << r.n_x << ',' << format_number(r.seconds_dw)
      << ',' << format_number(r.seconds_bd) << ',' << format_number(r.speedup()) << ',' << r.flops_dw << ','
      << r.flops_bd << ',' << format_number(r.measured_ratio()) << ',' << r.predicted.cost_dw << ','
      << r.predicted.cost_bd << ',' << format_number(r.predicted.ratio()) << ','
      << format_number(r.predicted.lower_bound_ratio) << ',' << format_number(r.max_difference) << '\n';

  Json m = manifest_base(cfg, "bench");
  m["bench"] = {{"p", r.p},
                {"m", r.m},
                {"n_pf", r.n_pf},
                {"n_z", r.n_z},
                {"n_x", r.n_x},
                {"seconds_dw", r.seconds_dw},
                {"seconds_bd", r.seconds_bd},
                {"speedup", r.speedup()},
                {"flops_dw", r.flops_dw},
                {"flops_bd", r.flops_bd},
                {"measured_op_ratio", r.measured_ratio()},
                {"predicted", {{"cost_dw", r.predicted.cost_dw},
                               {"cost_bd", r.predicted.cost_bd},
                               {"ratio", r.predicted.ratio()},
                               {"lower_bound_ratio", r.predicted.lower_bound_ratio}}},
                {"max_map_difference", r.max_difference}};
  m["reference_scale"] = {{"p", 10},
                          {"n_pf", 5000},
                          {"m", 4096},
                          {"cost_dw", reference.cost_dw},
                          {"cost_bd", reference.cost_bd},
                          {"ratio", reference.ratio()},
                          {"lower_bound_ratio", reference.lower_bound_ratio}};
  write_json(m, cfg.output / "manifest.json");
  std::cout << "dimension-wise " << r.seconds_dw << " s, basis-derived " << r.seconds_bd << " s, speedup "
            << r.speedup() << "x (predicted flop ratio " << r.predicted.ratio() << ")\n";
}

void cmd_validate(const PipelineConfig& cfg) {
  const TrainingData data = prepare_data(cfg);
  const int n = data.doe.rows();
  std::vector<int> train = cfg.validation.training, valid = cfg.validation.validation;
  if (valid.empty()) {
    const int count = cfg.validation.count;
    if (count < 2 || count > n - 2)
      throw ConfigError("validation needs explicit indices or 2 <= validation.count <= rows - 2");
    for (int i = n - count; i < n; ++i) valid.push_back(i);
  }
  if (train.empty()) {
    std::set<int> v(valid.begin(), valid.end());
    for (int i = 0; i < n; ++i)
      if (!v.count(i)) train.push_back(i);
  }
  for (const auto* list : {&train, &valid})
    for (int i : *list)
      if (i < 0 || i >= n) throw ConfigError("row index " + std::to_string(i) + " is outside the data");
  std::set<int> t(train.begin(), train.end());
  for (int i : valid)
    if (t.count(i)) throw ConfigError("row " + std::to_string(i) + " is in both the training and validation sets");

  PipelineConfig fit_cfg = cfg;
  fit_cfg.surrogates.reset();
  const TrainingData training{data.doe.select(train), data.outputs.select(train)};
  const Surrogate s = fit_surrogate(fit_cfg, training);
  const DesignMatrix vdoe = data.doe.select(valid);
  const FunctionalOutputs vout = data.outputs.select(valid);
  SamplingOptions opts = cfg.run.sampling;
  opts.threads = cfg.run.threads;
  const Q2Report report = q2_trajectory_report(s.vgp, s.basis, vdoe, vout, cfg.validation.n_z,
                                               derive_seed(cfg.run.seed, {stream::kValidation}), opts);
  write_q2_report(report, cfg.output / "q2_percentiles.csv", data.outputs.grid);
  Json m = manifest_base(cfg, "validate");
  m["training_rows"] = train;
  m["validation_rows"] = valid;
  m["surrogate"] = surrogate_json(s);
  m["q2_median_of_medians"] = [&] {
    std::vector<double> v;
    for (Eigen::Index l = 0; l < report.p50.size(); ++l)
      if (!std::isnan(report.p50(l))) v.push_back(report.p50(l));
    std::sort(v.begin(), v.end());
    return v.empty() ? NAN : percentile_sorted(v, 50.0);
  }();
  write_json(m, cfg.output / "manifest.json");
}

void cmd_fit(const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig fit_cfg = cfg;
  fit_cfg.surrogates.reset();
  const TrainingData data = prepare_data(cfg);
  const Surrogate s = fit_surrogate(fit_cfg, data);
  save_basis(s.basis, cfg.output / "basis");
  write_design(data.doe, cfg.output / "doe.csv");
  save_surrogates(s.vgp, cfg.output / "surrogates.json", "doe.csv");
  Json m = manifest_base(cfg, "fit");
  m["surrogate"] = surrogate_json(s);
  m["timings"] = {{"total_seconds", elapsed(t0)}};
  write_json(m, cfg.output / "manifest.json");
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t k = i;
      while (k + 1 < order.size() && x[order[k + 1]] == x[order[i]]) ++k;
      for (std::size_t t = i; t <= k; ++t) r[order[t]] = 0.5 * static_cast<double>(i + k) + 1.0;
      i = k + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const Eigen::Map<const Eigen::VectorXd> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Eigen::VectorXd> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Eigen::VectorXd xc = x.array() - x.mean(), yc = y.array() - y.mean();
  const double den = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return den > 0.0 ? xc.dot(yc) / den : 0.0;
}

}  // namespace fgsa
