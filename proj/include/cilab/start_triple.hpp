#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cilab/field.hpp"
#include "cilab/profile.hpp"
#include "cilab/schedule.hpp"

namespace cilab {

/// Time-continuous access to a stage (v_q, p_q, R_q) on a fixed grid.
class StateEvaluator {
 public:
  virtual ~StateEvaluator() = default;
  virtual int stage() const = 0;
  virtual const FourierGrid& grid() const = 0;
  virtual const EnergyProfile& profile() const = 0;
  virtual SpectralField velocity(double t) const = 0;
  virtual SpectralField pressure(double t) const = 0;
  virtual SpectralField stress(double t) const = 0;
  virtual SpectralField velocity_rate(double t) const = 0;  // d/dt v
};

using StatePtr = std::shared_ptr<const StateEvaluator>;

/// q = 0: v0 = (2pi)^{-3/2} sqrt(e(1-delta1)) (cos lb x3, sin lb x3, 0), p0 = 0 and
/// R0 = (2pi)^{-3/2} lb^{-1} F(t) [[0,0,s],[0,0,-c],[s,-c,0]] with
/// F = d/dt sqrt(E) + lb^{2 alpha} sqrt(E).
class StartTriple final : public StateEvaluator {
 public:
  StartTriple(const FourierGrid& grid, ProfilePtr profile, int lambda_bar, double delta1, double alpha);
  int stage() const override { return 0; }
  const FourierGrid& grid() const override { return grid_; }
  const EnergyProfile& profile() const override { return *profile_; }
  SpectralField velocity(double t) const override;
  SpectralField pressure(double t) const override;
  SpectralField stress(double t) const override;
  SpectralField velocity_rate(double t) const override;
  SpectralField stress_rate(double t) const;

  int lambda_bar() const { return lb_; }
  double amplitude(double t) const;  // (2pi)^{-3/2} sqrt(E)
  double forcing(double t) const;    // F(t)

 private:
  FourierGrid grid_;
  ProfilePtr profile_;
  int lb_;
  double delta1_, alpha_;
};

struct IterationState {
  int q = 0;
  StatePtr evaluator;
  std::vector<double> times;
};

IterationState start_triple(const ParameterSchedule& s, ProfilePtr profile, const FourierGrid& grid, int lambda_bar,
                            const std::vector<double>& times);

// sup |R_ell(., l/mu)| / rho_l at q = 0 (both closed form).
double anchor_ball_ratio(const ParameterSchedule& s, const EnergyProfile& e, int lambda_bar, int l);

struct LambdaBarChoice {
  int value = 0;
  double formula = 0.0;
  std::string rule;  // "override", "formula", "raised"
  double worst_ratio = 0.0;
};

/// Override wins. Otherwise the formula value is used when it fits the grid
/// and keeps every anchored stress inside the r0 ball; in desk mode the
/// search then walks upward from min(formula, kmax) to kmax. Strict mode
/// and an exhausted search throw InfeasibleError.
LambdaBarChoice select_lambda_bar(const ParameterSchedule& s, const std::vector<ProfilePtr>& profiles,
                                  const FourierGrid& grid, const std::vector<int>& anchors, int override_value);

// Slices whose cutoff support meets any of the given times.
std::vector<int> active_anchors(const ParameterSchedule& s, int q, const std::vector<double>& times);

}  // namespace cilab
