#pragma once

#include <vector>

#include "cilab/schedule.hpp"
#include "cilab/start_triple.hpp"

namespace cilab {

// chi with support (-3/4, 3/4) and sum_l chi(s - l)^2 = 1.
double cutoff(double s);
double cutoff_d1(double s);

struct EnergyWindowError : DomainError {
  int l;
  EnergyWindowError(const std::string& what, int slice) : DomainError(what), l(slice) {}
};

struct TimeSliceData {
  int l = 0;
  double anchor = 0.0;  // l / mu
  double rho = 0.0;
  int parity = 0;       // l mod 2
  double chi(double t, double mu) const { return cutoff(mu * t - l); }
  double chi_d1(double t, double mu) const { return mu * cutoff_d1(mu * t - l); }
};

/// rho_l = (e(l/mu)(1 - delta_{q+2}) - int |v_q(l/mu)|^2) / (3 (2pi)^3) for
/// the requested slices (all of 0..mu when empty). Throws EnergyWindowError
/// on rho_l <= 0.
std::vector<TimeSliceData> time_slices(const StateEvaluator& state, const ParameterSchedule& s,
                                       const std::vector<int>& which = {});

// Slices with chi_l(t) != 0.
std::vector<int> slices_at(double t, double mu);

}  // namespace cilab
