#pragma once

#include <string>
#include <vector>

#include "cilab/beltrami.hpp"

namespace cilab {

struct ScheduleParams {
  double a = 2.0, b = 1.1, c = 2.6;
  double alpha = 0.15;
  double epsilon = 0.01;
  int q_max = 1;
  bool strict = false;
  unsigned long long seed = 1;
};

// lhs <= rhs is the passing direction (both may be logarithms).
struct Condition {
  std::string group;  // "abc", "abc_2", "lambdamu_2", "deltalambda", "start"
  std::string name;
  int q = -1;
  double lhs = 0.0, rhs = 0.0;
  bool log_domain = false;
  bool pass = false;
};

/// Per-stage frequencies and amplitudes plus every feasibility inequality.
///
/// Quantities that overflow doubles are kept as natural logarithms; the
/// integer rounding of lambda_q and mu only applies while they fit in 2^52.
struct ParameterSchedule {
  ScheduleParams p;
  double beta = 0.0;
  double eta = 0.0, M = 0.0, r0 = 0.0;
  double C_bar = 0.0, C_tilde = 0.0;
  double a0 = 0.0;
  double C0 = 1.0;
  double E1 = 0.0, E2 = 0.0;
  double lambda_bar_formula = 0.0;  // C0 max{...} before rounding
  std::vector<Condition> conditions;

  double log_delta(int q) const;
  double delta(int q) const;
  double log_lambda(int q) const;
  double lambda(int q) const;
  double log_mu(int q) const;
  double mu(int q) const;
  double log_ell(int q) const;
  double ell(int q) const;

  bool feasible() const;
  std::vector<std::string> failures() const;
  // Hash of the inputs that determine every field of the schedule.
  std::string hash() const;
};

/// Builds the schedule for the given family-wide bounds E1 >= ||e||_{C1},
/// E2 >= ||e||_{C2}. In strict mode any failed condition throws
/// InfeasibleError listing the failures.
ParameterSchedule make_schedule(const ScheduleParams& params, const BeltramiFamily& fam, double E1, double E2);

// Smallest a (doubling then bisection) with the delta/lambda ordering and
// delta_{q+2} <= delta_{q+1}/2 for q <= q_max.
double a0_search(double b, double c, int q_max);

/// C0 max{a^{b/(1-2 alpha)}, E1 a^b, E2 a^{-(c-1)b+1/2}} rounded up; this is
/// independent of the individual profile, so every family member shares it.
double family_mode_lambda_bar(double E1, double E2, const ParameterSchedule& s);

// Table used by the schedule_report task.
std::string schedule_table(const ParameterSchedule& s, int q_last);

}  // namespace cilab
