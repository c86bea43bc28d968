#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fgsa/error.hpp"
#include "fgsa/pipeline.hpp"

namespace {

enum class Verb { Run, Sweep, Bench, Validate, Fit };

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string mode;
  std::string covariance;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "YAML run configuration");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", o.mode, "trajectory sampling mode")->check(CLI::IsMember({"batch", "per-trajectory"}));
  cmd->add_option("--covariance", o.covariance, "covariance used in the index denominators")
      ->check(CLI::IsMember({"empirical", "fixed"}));
}

fgsa::PipelineConfig resolve(const Overrides& o) {
  fgsa::PipelineConfig cfg = o.config.empty() ? fgsa::PipelineConfig{} : fgsa::load_config(o.config);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seed) cfg.run.seed = *o.seed;
  if (o.threads) cfg.run.threads = *o.threads;
  if (!o.mode.empty())
    cfg.run.sampling.mode = o.mode == "batch" ? fgsa::SamplingMode::Batch : fgsa::SamplingMode::PerTrajectory;
  if (!o.covariance.empty())
    cfg.run.covariance = o.covariance == "fixed" ? fgsa::CovarianceMode::Fixed : fgsa::CovarianceMode::Empirical;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional global sensitivity analysis with GP error quantification"};
  app.set_version_flag("--version", fgsa::kVersion);
  app.require_subcommand(1);

  Overrides o;
  Verb verb = Verb::Run;
  const std::pair<const char*, const char*> verbs[] = {
      {"run", "fit the surrogate and estimate index distributions"},
      {"sweep", "repeat the run over DoE sizes and/or PF sample sizes"},
      {"bench", "time basis-derived vs dimension-wise estimation"},
      {"validate", "Q2 of GP trajectories on held-out rows"},
      {"fit", "fit and persist the basis and GP surrogates"}};
  for (std::size_t i = 0; i < std::size(verbs); ++i) {
    CLI::App* cmd = app.add_subcommand(verbs[i].first, verbs[i].second);
    add_common(cmd, o, verbs[i].first != std::string("bench"));
    cmd->callback([&verb, i] { verb = static_cast<Verb>(i); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const fgsa::PipelineConfig cfg = resolve(o);
    switch (verb) {
      case Verb::Run:
        fgsa::cmd_run(cfg);
        break;
      case Verb::Sweep:
        fgsa::cmd_sweep(cfg);
        break;
      case Verb::Bench:
        fgsa::cmd_bench(cfg);
        break;
      case Verb::Validate:
        fgsa::cmd_validate(cfg);
        break;
      case Verb::Fit:
        fgsa::cmd_fit(cfg);
        break;
    }
  } catch (const fgsa::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
