#include "cilab/slices.hpp"

#include <cmath>
#include <sstream>

#include "cilab/profile.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {

// chi^2(s) = S((s + 3/4)/(1/2)) on s <= 0 and S((3/4 - s)/(1/2)) on s >= 0.
double cutoff(double s) {
  const double y = s <= 0.0 ? 2.0 * (s + 0.75) : 2.0 * (0.75 - s);
  return std::sqrt(smooth_step(y));
}

double cutoff_d1(double s) {
  const double y = s <= 0.0 ? 2.0 * (s + 0.75) : 2.0 * (0.75 - s);
  const double dy = s <= 0.0 ? 2.0 : -2.0;
  const double S = smooth_step(y);
  if (S <= 0.0) return 0.0;
  return smooth_step_d1(y) * dy / (2.0 * std::sqrt(S));
}

std::vector<int> slices_at(double t, double mu) {
  std::vector<int> out;
  for (int l = int(std::floor(mu * t - 0.75)); l <= int(std::ceil(mu * t + 0.75)); ++l)
    if (l >= 0 && l <= int(mu) && std::abs(mu * t - l) < 0.75) out.push_back(l);
  return out;
}

std::vector<TimeSliceData> time_slices(const StateEvaluator& state, const ParameterSchedule& s,
                                       const std::vector<int>& which) {
  const int q = state.stage();
  const double mu = s.mu(q);
  if (mu < 1.0) throw ParameterError("time_slices: mu must be >= 1");
  std::vector<int> ls = which;
  if (ls.empty())
    for (int l = 0; l <= int(mu); ++l) ls.push_back(l);
  std::vector<TimeSliceData> out;
  for (int l : ls) {
    TimeSliceData d;
    d.l = l;
    d.anchor = l / mu;
    d.parity = l % 2;
    const double e = state.profile().e(d.anchor);
    d.rho = (e * (1.0 - s.delta(q + 2)) - l2_squared(state.velocity(d.anchor))) / (3.0 * kTorusVolume);
    if (!(d.rho > 0.0)) {
      std::ostringstream o;
      o << "energy window violated at slice l = " << l << ": rho_l = " << d.rho;
      throw EnergyWindowError(o.str(), l);
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace cilab
