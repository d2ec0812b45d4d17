#pragma once

#include <string>
#include <vector>

#include "cilab/schedule.hpp"
#include "cilab/start_triple.hpp"

namespace cilab {

/// One measured-vs-bound entry of the inductive estimates at (q, t).
struct LedgerRow {
  int q = 0;
  double t = 0.0;
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  double ratio = 0.0;  // measured / bound
  bool pass() const { return measured <= bound; }
};

/// Estimates on w_q = v_q - v_{q-1}, the pressure increment, R_q in C^0
/// and C^1, the advective derivative of R_q and the time derivatives of
/// the increments. At q = 0 the increments are v_0 and p_0 themselves.
/// D_t R is a central difference of step fd_h plus v_q . grad R_q.
std::vector<LedgerRow> inductive_ledger(const StateEvaluator& state, const StateEvaluator* previous,
                                        const ParameterSchedule& s, double t, double fd_h = 1e-4);

struct EnergyGapRow {
  double t = 0.0;
  double e = 0.0;
  double energy = 0.0;       // int |v_q|^2
  double gap = 0.0;          // e (1 - delta_{q+1}) - energy
  double window = 0.0;       // delta_{q+1} e / 4
  bool inside = false;       // |gap| <= window
  double dissipation = 0.0;  // int |(-Delta)^{alpha/2} v_q|^2
};

struct EnergyGapReport {
  int q = 0;
  std::vector<EnergyGapRow> rows;
  // min over sampled s < t of 1/2 E(s) - 1/2 E(t) - int_s^t D (trapezoid);
  // negative values mean the sampled energy inequality fails.
  double inequality_margin = 0.0;
  int inequality_pairs = 0;
  int inequality_violations = 0;
};

EnergyGapReport energy_gap(const StateEvaluator& state, const ParameterSchedule& s, std::vector<double> times);

std::string ledger_csv(const std::vector<LedgerRow>& rows);

}  // namespace cilab
