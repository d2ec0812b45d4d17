#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cilab/beltrami.hpp"
#include "cilab/config.hpp"
#include "cilab/profile.hpp"
#include "cilab/schedule.hpp"
#include "cilab/start_triple.hpp"
#include "cilab/step.hpp"

namespace cilab {

enum ExitCode { kExitOk = 0, kExitInvariant = 1, kExitConfig = 2, kExitRuntime = 3 };

/// An invariant measured during a run. Only asserted checks decide the
/// exit code; the rest are logged.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool asserted = true;
  bool pass = true;
};

struct RunReport {
  int exit_code = kExitOk;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  nlohmann::json summary;
};

/// Families, profiles and the schedule built from E1/E2 over every profile.
struct Setup {
  BeltramiFamily fam;
  FourierGrid grid;
  std::vector<ProfilePtr> profiles;
  int chosen = 0;  // profile used by init / iterate
  ParameterSchedule s;
  LambdaBarChoice lambda_bar;  // empty until select_lambda_bar runs
  std::string note;            // set when the choice fell back to the grid cap
};

Setup prepare_schedule(const RunConfig& cfg);
/// prepare_schedule plus the lambda_bar choice over the anchors met by
/// cfg.times. Without a step to follow (for_step false) a desk run that
/// finds no lambda_bar inside the r0 ball falls back to min(formula, kmax).
Setup prepare(const RunConfig& cfg, bool for_step = true);

StepConfig step_config(const RunConfig& cfg);

RunReport run(const RunConfig& cfg);

// `ci-lab <task> --config <path> [--strict] [--seed N]`; returns the exit code.
int cli_main(int argc, char** argv);

}  // namespace cilab
