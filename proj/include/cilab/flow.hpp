#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "cilab/field.hpp"
#include "cilab/sampling.hpp"
#include "cilab/start_triple.hpp"

namespace cilab {

using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>>;

struct Rk4Config {
  double h_target = 0.05;  // step bound in units of 1/||v||_1
  int refine = 1;
  int min_steps = 4;
  int max_steps = 1 << 20;
};

/// v_ell(., s) and its time derivative.
class VelocityHistory {
 public:
  virtual ~VelocityHistory() = default;
  virtual SpectralField velocity(double s) const = 0;
  virtual SpectralField rate(double s) const = 0;
};

class MollifiedHistory final : public VelocityHistory {
 public:
  // Non-owning: the state must outlive the history.
  MollifiedHistory(const StateEvaluator& state, double ell) : state_(&state), ell_(ell) {}
  SpectralField velocity(double s) const override;
  SpectralField rate(double s) const override;

 private:
  const StateEvaluator* state_;
  double ell_;
};

// Time-independent field (rate zero).
class FrozenHistory final : public VelocityHistory {
 public:
  explicit FrozenHistory(SpectralField v) : v_(std::move(v)) {}
  SpectralField velocity(double) const override { return v_; }
  SpectralField rate(double) const override { return SpectralField(v_.grid(), Rank::vector3); }

 private:
  SpectralField v_;
};

struct FlowPlan {
  double t = 0.0, anchor = 0.0, h = 0.0;
  int steps = 0;
  // time of half-step j is t + j h / 2, j = 0 .. 2 steps
  double half_time(int j) const { return t + 0.5 * j * h; }
};

FlowPlan plan_flow(double t, double anchor, double v_c1, const Rk4Config& cfg);

// sum_k w |vhat_k| (1 + |k|): bound on ||v||_0 + ||Dv||_0.
double c1_bound(const SpectralField& v);

// True when every nonzero mode has k1 = k2 = 0.
bool depends_on_x3_only(const SpectralField& f);

/// Samplers of v_ell (with gradient) and its rate at the 2N+1 half-step times.
struct StageSamplers {
  FlowPlan plan;
  std::vector<FieldSampler> v, rate;
  bool x3_only = true;
};

StageSamplers stage_samplers(const VelocityHistory& hist, const FlowPlan& plan, bool with_rate,
                             SampleMode mode = SampleMode::automatic);

struct FlowPoint {
  Vec3 phi;
  Mat3 J;  // J_ij = d_j Phi_i
};

// Backward characteristic from (x, t) to the anchor time with the
// variational equation alongside.
FlowPoint integrate_flow(const StageSamplers& st, const Vec3& x);

// Same RK4 in dual numbers: phi and d phi / dt along the discrete scheme.
void integrate_flow_dual(const StageSamplers& st, const Vec3& x, Vec3& phi, Vec3& phi_t);

std::vector<FlowPoint> solve_flow(const VelocityHistory& hist, double anchor, double t, const std::vector<Vec3>& points,
                                  const Rk4Config& cfg, SampleMode mode = SampleMode::automatic);

}  // namespace cilab
