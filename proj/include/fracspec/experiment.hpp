#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracspec/model.hpp"
#include "fracspec/probes.hpp"
#include "json.hpp"

namespace fracspec {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitPipeline = 3, kExitAcceptance = 4 };

struct Tolerances {
  double zeta = 1e-8;
  double eigenvalue = 1e-6;
  double trace = 1e-5;
  double nd_relation = 1e-10;
  double dtn_unit = 1e-5;   // lambda <= 1
  double dtn_large = 1e-4;  // lambda > 1
  double alpha_one = 1e-8;
  double inverse = 1e-9;
  double carlson = 1e-9;
  double cluster = 1e-6;
};

struct ExperimentConfig {
  ModelConfig model;
  double alpha = 0.5;
  int max_m = 14;
  int K_target = 6;
  std::vector<MollifierSpec> sources;
  std::vector<double> dtn_lambdas{1.0, 10.0, 100.0};
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  Tolerances tol;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
// Io error when the file cannot be read, Config error when it does not validate.
ExperimentConfig load_experiment_config(const std::string& path);

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

// Runs the whole pipeline and writes moments.csv, spectrum.csv, dtn.csv and
// summary.json into out_dir.
RunOutcome run_experiment(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log,
                          bool verbose = false);

// Writes model.csv for the configured model.
int build_model_files(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

// Human-readable table of a summary file.
int report_summary(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace fracspec
