#pragma once

#include <memory>
#include <string>
#include <vector>

namespace cilab {

/// Prescribed energy e(t) on [0,1] with its first two derivatives.
class EnergyProfile {
 public:
  virtual ~EnergyProfile() = default;
  virtual double e(double t) const = 0;
  virtual double de(double t) const = 0;
  virtual double d2e(double t) const = 0;
  virtual std::string id() const = 0;

  // ||e||_{C^k} = sum_{j<=k} sup |e^(j)| over a dense sample of [0,1].
  double c1_norm() const { return c1_; }
  double c2_norm() const { return c2_; }
  double min_value() const { return min_; }
  double max_value() const { return max_; }

 protected:
  void measure(int samples = 20000);

 private:
  double c1_ = 0.0, c2_ = 0.0, min_ = 0.0, max_ = 0.0;
};

using ProfilePtr = std::shared_ptr<const EnergyProfile>;

ProfilePtr constant_profile(double value);

// e = m exp(-(kappa/(pi mu)) sin(2 pi mu t)); e'(l/mu) = -2 kappa e(l/mu).
ProfilePtr anchored_profile(double m, double kappa, int mu);

/// Profiles sharing e(0) = 1 and e'(0) = -2K; member j carries a dip of depth
/// j*A0 centred at t = 1/(8K). Throws ParameterError when K <= 1,
/// count < 2 or the sampled constraints fail.
std::vector<ProfilePtr> profile_family(double K, int count);

// Height difference between consecutive family members at t = 1/(8K).
double family_bump_step(int count);

// Smooth step: 0 for x <= 0, 1 for x >= 1, S(x) + S(1-x) = 1.
double smooth_step(double x);
double smooth_step_d1(double x);
double smooth_step_d2(double x);

}  // namespace cilab
