#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cilab/beltrami.hpp"
#include "cilab/flow.hpp"
#include "cilab/schedule.hpp"
#include "cilab/slices.hpp"
#include "cilab/start_triple.hpp"

namespace cilab {

struct StepConfig {
  Rk4Config rk4;
  SampleMode sample_mode = SampleMode::automatic;
  bool exact_time_derivative = true;  // d/dt of the discrete U (needed by the residual)
  bool diagnostics = true;            // piece norms, double-sum and corrector checks
  int diag_stride = 0;                // 0: about 32 samples per axis
  double lambda_override = 0.0;       // replaces lambda_{q+1} when > 0
  bool allow_reduction = true;        // reuse per-x3 data when fields depend on x3 only
};

struct SliceReport {
  int l = 0;
  double chi = 0.0;
  double rho = 0.0;
  int flow_steps = 0;
  double max_ball_ratio = 0.0;   // sup |R_{ell,l}/rho - Id|
  double min_coefficient = 0.0;  // min over points and pairs of c_p
  double transported_sup = 0.0;  // sup |R_{ell,l}(., t)|
  double anchor_sup = 0.0;       // sup |R_ell(., l/mu)|
  double tolerance = 0.0;        // off-grid allowance in the max principle
  bool max_principle = true;
};

/// U = sum chi_l (i a_kl / lam) (k x B_k)/|k|^2 e^{i lam k.Phi_l}; w = curl U.
struct Perturbation {
  double t = 0.0;
  int lambda = 0;
  bool reduced = false;
  SpectralField U;
  SpectralField U_t;        // transport identities (D_t a = 0, D_t phase = 0)
  SpectralField U_t_exact;  // derivative of the discrete U (empty if not requested)
  SpectralField w_o;        // principal part from pointwise samples
  SpectralField S;          // sum chi_l^2 R_{ell,l} (traceless part only)
  std::vector<SliceReport> slices;
  // diagnostics on a strided subsample
  std::vector<Index> sample_index;
  std::vector<Vec3> sample_corrector;  // pointwise corrector formula
  double double_sum_abs = 0.0;
  double double_sum_rel = 0.0;  // relative to sup |w_o|^2 on the sample
  int opposite_parity_pairs = 0;
  double wo_sup_pointwise = 0.0;
};

Perturbation build_perturbation(const StateEvaluator& state, const ParameterSchedule& s, const BeltramiFamily& fam,
                                double t, const StepConfig& cfg);

struct Assembly {
  double t = 0.0;
  SpectralField v, p, stress;
  SpectralField v_t;  // d/dt v_{q+1} when the exact derivative was built
  SpectralField w, w_c;
  std::array<double, 7> piece_sup{};  // R^0 .. R^6
  double stress_sup = 0.0;
  double trace_defect = 0.0;       // sup |tr R| / sup |R|
  double divergence_defect = 0.0;  // sup |div v| / (lam sup |v|)
  double increment_defect = 0.0;   // max coefficient of v_{q+1} - v_q - w_o - w_c
  double residual_sup = 0.0, residual_rel = 0.0;
  double corrector_mismatch = 0.0;  // pointwise formula vs w - w_o, relative
  double energy = 0.0;              // int |v_{q+1}|^2
  double w_sup = 0.0, wo_sup = 0.0, wc_sup = 0.0;
  double seconds = 0.0;
};

/// The large arrays of pert (U, U_t, U_t_exact, S) are released as they are
/// consumed; w_o, the slice reports and the sample diagnostics survive.
Assembly assemble_reynolds(const StateEvaluator& state, const ParameterSchedule& s, Perturbation& pert,
                           const StepConfig& cfg);

// d_t v + div(v (x) v) + grad p + (-Delta)^alpha v - div R, dealiased.
SpectralField fracnsr_residual(const SpectralField& v, const SpectralField& v_t, const SpectralField& p,
                               const SpectralField& R, double alpha);

/// Stage q+1 evaluated on demand: every query assembles the step at that
/// time (results cached per time).
class IteratedState final : public StateEvaluator {
 public:
  IteratedState(StatePtr prev, ParameterSchedule s, BeltramiFamily fam, StepConfig cfg);
  int stage() const override { return prev_->stage() + 1; }
  const FourierGrid& grid() const override { return prev_->grid(); }
  const EnergyProfile& profile() const override { return prev_->profile(); }
  SpectralField velocity(double t) const override { return at(t)->v; }
  SpectralField pressure(double t) const override { return at(t)->p; }
  SpectralField stress(double t) const override { return at(t)->stress; }
  SpectralField velocity_rate(double t) const override;
  std::shared_ptr<const Assembly> at(double t) const;
  const StateEvaluator& previous() const { return *prev_; }

 private:
  StatePtr prev_;
  ParameterSchedule s_;
  BeltramiFamily fam_;
  StepConfig cfg_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const Assembly>> cache_;
};

IterationState iterate_once(const IterationState& state, const ParameterSchedule& s, const BeltramiFamily& fam,
                            const StepConfig& cfg);

}  // namespace cilab
