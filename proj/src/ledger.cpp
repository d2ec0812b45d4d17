#include "cilab/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cilab/fft.hpp"
#include "cilab/norms.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {
namespace {

LedgerRow row(int q, double t, const std::string& name, double measured, double bound) {
  return {q, t, name, measured, bound, bound > 0.0 ? measured / bound : INFINITY};
}

// sup |dR/dt + v . grad R| with dR/dt supplied as a spectral field.
double advective_sup(const SpectralField& R_t, const SpectralField& v, const SpectralField& R) {
  const PhysicalField vp = to_physical(v);
  PhysicalField acc = to_physical(R_t);
  for (int j = 0; j < 3; ++j) {
    const PhysicalField dR = to_physical(partial(R, j));
    for (int c = 0; c < 6; ++c) acc[c] += vp[j] * dR[c];
  }
  return acc.magnitude().maxCoeff();
}

}  // namespace

std::vector<LedgerRow> inductive_ledger(const StateEvaluator& state, const StateEvaluator* previous,
                                        const ParameterSchedule& s, double t, double fd_h) {
  const int q = state.stage();
  if (q > 0 && !previous) throw ParameterError("inductive_ledger: stage q > 0 needs the previous stage");
  const double M = s.M, dq = s.delta(q), dq1 = s.delta(q + 1), lq = s.lambda(q);
  std::vector<LedgerRow> rows;

  SpectralField w = state.velocity(t), dp = state.pressure(t);
  SpectralField w_t = state.velocity_rate(t);
  const SpectralField p_plus = state.pressure(t + fd_h), p_minus = state.pressure(t - fd_h);
  SpectralField dp_t = (0.5 / fd_h) * (p_plus - p_minus);
  if (previous) {
    w -= previous->velocity(t);
    dp -= previous->pressure(t);
    w_t -= previous->velocity_rate(t);
    dp_t -= (0.5 / fd_h) * (previous->pressure(t + fd_h) - previous->pressure(t - fd_h));
  }
  rows.push_back(row(q, t, "v_C0", c_norm(w, 0), M * std::sqrt(dq)));
  rows.push_back(row(q, t, "v_C1", c_norm(w, 1), M * std::sqrt(dq) * lq));
  rows.push_back(row(q, t, "p_C0", c_norm(dp, 0), M * M * dq));
  rows.push_back(row(q, t, "p_C1", c_norm(dp, 1), M * M * dq * lq));

  const SpectralField R = state.stress(t);
  rows.push_back(row(q, t, "R_C0", c_norm(R, 0), s.eta * dq1));
  rows.push_back(row(q, t, "R_C1", c_norm(R, 1), M * dq1 * lq));
  const SpectralField R_t = (0.5 / fd_h) * (state.stress(t + fd_h) - state.stress(t - fd_h));
  rows.push_back(row(q, t, "R_Dt", advective_sup(R_t, state.velocity(t), R), M * dq1 * std::sqrt(dq) * lq));

  rows.push_back(row(q, t, "v_t_C0", sup_norm(w_t), std::sqrt(dq) * lq));
  rows.push_back(row(q, t, "p_t_C0", sup_norm(dp_t), dq * lq));
  return rows;
}

EnergyGapReport energy_gap(const StateEvaluator& state, const ParameterSchedule& s, std::vector<double> times) {
  std::sort(times.begin(), times.end());
  EnergyGapReport rep;
  rep.q = state.stage();
  const double d = s.delta(rep.q + 1);
  for (double t : times) {
    const SpectralField v = state.velocity(t);
    EnergyGapRow r;
    r.t = t;
    r.e = state.profile().e(t);
    r.energy = l2_squared(v);
    r.gap = r.e * (1.0 - d) - r.energy;
    r.window = 0.25 * d * r.e;
    r.inside = std::abs(r.gap) <= r.window;
    r.dissipation = dissipation_integral(v, s.p.alpha);
    rep.rows.push_back(r);
  }
  rep.inequality_margin = INFINITY;
  const auto& R = rep.rows;
  for (size_t i = 0; i < R.size(); ++i) {
    double diss = 0.0;
    for (size_t j = i + 1; j < R.size(); ++j) {
      diss += 0.5 * (R[j].t - R[j - 1].t) * (R[j].dissipation + R[j - 1].dissipation);
      const double margin = 0.5 * R[i].energy - 0.5 * R[j].energy - diss;
      rep.inequality_margin = std::min(rep.inequality_margin, margin);
      ++rep.inequality_pairs;
      if (margin < 0.0) ++rep.inequality_violations;
    }
  }
  if (rep.inequality_pairs == 0) rep.inequality_margin = 0.0;
  return rep;
}

std::string ledger_csv(const std::vector<LedgerRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "q,t,name,measured,bound,ratio,pass\n";
  for (const auto& r : rows)
    os << r.q << ',' << r.t << ',' << r.name << ',' << r.measured << ',' << r.bound << ',' << r.ratio << ','
       << (r.pass() ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace cilab
