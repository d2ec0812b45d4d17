#pragma once

#include <string>
#include <vector>

#include "cilab/flow.hpp"
#include "cilab/schedule.hpp"

namespace cilab {

struct ConfigError : ParameterError {
  using ParameterError::ParameterError;
};

struct ProfileSpec {
  std::string kind = "constant";  // constant, anchored, family
  double value = 1.0;             // constant
  double m = 0.8, theta = 2e-4;   // anchored: kappa = lambda_bar^{2 alpha} (1 - theta)
  double K = 4.0;                 // family
  int count = 2;
  int index = 0;                  // family member used by init / iterate
};

struct GalerkinSpec {
  int K = 8;
  double horizon = 0.1;
  double tol = 1e-10;
  std::string initial = "random";  // random, start, or a snapshot path
  double amplitude = 1.0;          // random data: target sqrt of int |w|^2
};

struct RunConfig {
  std::string task;
  ScheduleParams schedule;
  int grid_n = 64;
  double dealias = 2.0 / 3.0;
  ProfileSpec profile;
  int lambda_bar = 0;  // override, 0 = automatic
  std::vector<double> times{0.0};
  std::string output_dir = "ci-lab-out";
  std::string snapshot_dir;  // default output_dir/snapshots
  std::string diagnostics;   // default output_dir/diagnostics.csv
  std::string summary;       // default output_dir/summary.json
  bool step_diagnostics = true;
  bool ledger = false;
  SampleMode sample_mode = SampleMode::automatic;
  Rk4Config rk4;
  GalerkinSpec galerkin;
  std::vector<std::string> snapshots;  // diagnose inputs
};

const std::vector<std::string>& known_tasks();

// Field-level validation; throws ConfigError naming the field.
RunConfig parse_config(const std::string& json_text, const std::string& task);
RunConfig load_config(const std::string& path, const std::string& task);

}  // namespace cilab
