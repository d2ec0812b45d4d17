#include "cilab/start_triple.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cilab/mollifier.hpp"

namespace cilab {

namespace {
const double kNorm = std::pow(kTwoPi, -1.5);
}

StartTriple::StartTriple(const FourierGrid& grid, ProfilePtr profile, int lambda_bar, double delta1, double alpha)
    : grid_(grid), profile_(std::move(profile)), lb_(lambda_bar), delta1_(delta1), alpha_(alpha) {
  if (lb_ < 1) throw ParameterError("start_triple: lambda_bar must be >= 1");
  if (lb_ > grid_.kmax()) {
    std::ostringstream o;
    o << "start_triple: lambda_bar = " << lb_ << " exceeds kmax = " << grid_.kmax();
    throw ResolutionError(o.str());
  }
}

double StartTriple::amplitude(double t) const { return kNorm * std::sqrt(profile_->e(t) * (1.0 - delta1_)); }

double StartTriple::forcing(double t) const {
  const double sE = std::sqrt(profile_->e(t) * (1.0 - delta1_));
  const double dsE = profile_->de(t) * (1.0 - delta1_) / (2.0 * sE);
  return dsE + std::pow(double(lb_), 2.0 * alpha_) * sE;
}

SpectralField StartTriple::velocity(double t) const {
  SpectralField v(grid_, Rank::vector3);
  const double A = amplitude(t);
  const Vec3i k(0, 0, lb_);
  v.set_coeff(k, 0, cplx(0.5 * A, 0.0));
  v.set_coeff(k, 1, cplx(0.0, -0.5 * A));
  return v;
}

SpectralField StartTriple::velocity_rate(double t) const {
  SpectralField v(grid_, Rank::vector3);
  const double e = profile_->e(t);
  const double dA = kNorm * std::sqrt(1.0 - delta1_) * profile_->de(t) / (2.0 * std::sqrt(e));
  const Vec3i k(0, 0, lb_);
  v.set_coeff(k, 0, cplx(0.5 * dA, 0.0));
  v.set_coeff(k, 1, cplx(0.0, -0.5 * dA));
  return v;
}

SpectralField StartTriple::pressure(double) const { return SpectralField(grid_, Rank::scalar); }

SpectralField StartTriple::stress(double t) const {
  SpectralField R(grid_, Rank::symtensor3);
  const double G = kNorm * forcing(t) / lb_;
  const Vec3i k(0, 0, lb_);
  R.set_coeff(k, sym_index(0, 2), cplx(0.0, -0.5 * G));  // G sin
  R.set_coeff(k, sym_index(1, 2), cplx(-0.5 * G, 0.0));  // -G cos
  return R;
}

SpectralField StartTriple::stress_rate(double t) const {
  const double e = profile_->e(t), de = profile_->de(t), d2e = profile_->d2e(t);
  const double s1 = std::sqrt(1.0 - delta1_);
  const double dsE = s1 * de / (2.0 * std::sqrt(e));
  const double d2sE = s1 * (d2e / (2.0 * std::sqrt(e)) - de * de / (4.0 * e * std::sqrt(e)));
  const double dG = kNorm * (d2sE + std::pow(double(lb_), 2.0 * alpha_) * dsE) / lb_;
  SpectralField R(grid_, Rank::symtensor3);
  const Vec3i k(0, 0, lb_);
  R.set_coeff(k, sym_index(0, 2), cplx(0.0, -0.5 * dG));
  R.set_coeff(k, sym_index(1, 2), cplx(-0.5 * dG, 0.0));
  return R;
}

IterationState start_triple(const ParameterSchedule& s, ProfilePtr profile, const FourierGrid& grid, int lambda_bar,
                            const std::vector<double>& times) {
  IterationState st;
  st.q = 0;
  st.evaluator = std::make_shared<StartTriple>(grid, std::move(profile), lambda_bar, s.delta(1), s.p.alpha);
  st.times = times;
  return st;
}

double anchor_ball_ratio(const ParameterSchedule& s, const EnergyProfile& e, int lambda_bar, int l) {
  const double mu = s.mu(0), t = l / mu;
  const double d1 = s.delta(1), d2 = s.delta(2);
  const double sE = std::sqrt(e.e(t) * (1.0 - d1));
  const double F = e.de(t) * (1.0 - d1) / (2.0 * sE) + std::pow(double(lambda_bar), 2.0 * s.p.alpha) * sE;
  const double sup = kNorm * std::sqrt(2.0) * std::abs(F) / lambda_bar * std::abs(mollifier_transform(s.ell(0) * lambda_bar));
  const double rho = e.e(t) * (d1 - d2) / (3.0 * kTorusVolume);
  return sup / rho;
}

std::vector<int> active_anchors(const ParameterSchedule& s, int q, const std::vector<double>& times) {
  const double mu = s.mu(q);
  std::set<int> out;
  for (double t : times)
    for (int l = 0; l <= int(mu); ++l)
      if (std::abs(mu * t - l) < 0.75) out.insert(l);
  return {out.begin(), out.end()};
}

LambdaBarChoice select_lambda_bar(const ParameterSchedule& s, const std::vector<ProfilePtr>& profiles,
                                  const FourierGrid& grid, const std::vector<int>& anchors, int override_value) {
  auto worst = [&](int lb) {
    double w = 0.0;
    for (const auto& p : profiles)
      for (int l : anchors) w = std::max(w, anchor_ball_ratio(s, *p, lb, l));
    return w;
  };
  LambdaBarChoice c;
  c.formula = family_mode_lambda_bar(s.E1, s.E2, s);
  if (override_value > 0) {
    if (s.p.strict) throw ParameterError("lambda_bar override is not allowed in strict mode");
    c.value = override_value;
    c.rule = "override";
    c.worst_ratio = worst(c.value);
    return c;
  }
  const int K = grid.kmax();
  if (c.formula <= K && worst(int(c.formula)) <= s.r0) {
    c.value = int(c.formula);
    c.rule = "formula";
    c.worst_ratio = worst(c.value);
    return c;
  }
  if (s.p.strict) {
    std::ostringstream o;
    o << "strict mode: formula lambda_bar = " << c.formula << " is not admissible on a grid with kmax = " << K;
    throw InfeasibleError(o.str());
  }
  for (int lb = int(std::min<double>(c.formula, K)); lb <= K; ++lb) {
    if (lb < 1) continue;
    const double w = worst(lb);
    if (w <= s.r0) {
      c.value = lb;
      c.rule = "raised";
      c.worst_ratio = w;
      return c;
    }
  }
  throw InfeasibleError("no lambda_bar up to kmax keeps the anchored stresses inside the r0 ball");
}

}  // namespace cilab
