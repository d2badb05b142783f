#include <CLI11.hpp>
#include <iostream>

#include "fracspec/errors.hpp"
#include "fracspec/experiment.hpp"

using namespace fracspec;

namespace {

int load(const std::string& path, ExperimentConfig& cfg) {
  try {
    cfg = load_experiment_config(path);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::Io ? kExitIo : kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional source-to-solution spectral lab"};
  app.require_subcommand(1);
  std::string config_path, out_dir, summary_path;
  std::uint64_t seed = 0;
  bool seed_given = false, verbose = false;

  auto* build = app.add_subcommand("build-model", "build the configured model and export model.csv");
  auto* run = app.add_subcommand("run", "run the full pipeline");
  auto* report = app.add_subcommand("report", "print a summary.json as a table");
  for (auto* sub : {build, run}) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "seed for randomized sanity checks")->each([&](const std::string&) { seed_given = true; });
    sub->add_flag("--verbose", verbose, "progress messages");
  }
  report->add_option("summary", summary_path, "summary.json path");
  report->add_option("--out", out_dir, "directory holding summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*report) {
    if (summary_path.empty()) summary_path = (out_dir.empty() ? std::string(".") : out_dir) + "/summary.json";
    return report_summary(summary_path, std::cout, std::cerr);
  }

  ExperimentConfig cfg;
  if (int rc = load(config_path, cfg); rc != kExitOk) return rc;
  if (seed_given) cfg.seed = seed;
  if (out_dir.empty()) out_dir = cfg.output_dir;

  if (*build) {
    try {
      return build_model_files(cfg, out_dir, std::cout);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return e.kind() == ErrorKind::Io ? kExitIo : kExitPipeline;
    }
  }
  RunOutcome r = run_experiment(cfg, out_dir, std::cerr, verbose);
  if (r.exit_code == kExitOk || r.exit_code == kExitAcceptance)
    for (const auto& ch : r.summary["checks"])
      std::cout << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>() << "\n";
  return r.exit_code;
}
