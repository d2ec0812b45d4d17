#include "cilab/profile.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "cilab/grid.hpp"

namespace cilab {

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double f = std::exp(-1.0 / x), g = std::exp(-1.0 / (1.0 - x));
  return f / (f + g);
}

namespace {

// f(x) = exp(-1/x) and its derivatives, zero for x <= 0.
double f0(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double f1(double x) { return x > 0.0 ? f0(x) / (x * x) : 0.0; }
double f2(double x) { return x > 0.0 ? f0(x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x)) : 0.0; }

// int_0^x S(u) du for x in [0,1]; I(1) = 1/2 by the symmetry of S.
double step_integral(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 0.5 + (x - 1.0);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(smooth_step, 0.0, x, 15, 1e-14);
}

// Bump of height 1 at x = 1 with support (0, 2), flat to all orders at 0.
double bump(double x, int d) {
  const double u = x - 1.0;
  if (std::abs(u) >= 1.0) return 0.0;
  const double q = 1.0 - u * u;
  const double B = std::exp(1.0 - 1.0 / q);
  if (d == 0) return B;
  if (d == 1) return B * (-2.0 * u / (q * q));
  return B * (4.0 * u * u / (q * q * q * q) - 2.0 / (q * q) - 8.0 * u * u / (q * q * q));
}

class ConstantProfile final : public EnergyProfile {
 public:
  explicit ConstantProfile(double v) : v_(v) { measure(); }
  double e(double) const override { return v_; }
  double de(double) const override { return 0.0; }
  double d2e(double) const override { return 0.0; }
  std::string id() const override {
    std::ostringstream o;
    o.precision(17);
    o << "constant:" << v_;
    return o.str();
  }

 private:
  double v_;
};

class AnchoredProfile final : public EnergyProfile {
 public:
  AnchoredProfile(double m, double kappa, int mu) : m_(m), kappa_(kappa), mu_(mu) { measure(); }
  double e(double t) const override { return m_ * std::exp(-kappa_ / (kPi * mu_) * std::sin(kTwoPi * mu_ * t)); }
  double de(double t) const override { return -2.0 * kappa_ * e(t) * std::cos(kTwoPi * mu_ * t); }
  double d2e(double t) const override {
    const double w = kTwoPi * mu_;
    return -2.0 * kappa_ * (de(t) * std::cos(w * t) - w * e(t) * std::sin(w * t));
  }
  std::string id() const override {
    std::ostringstream o;
    o.precision(17);
    o << "anchored:m=" << m_ << ",kappa=" << kappa_ << ",mu=" << mu_;
    return o.str();
  }

 private:
  double m_, kappa_;
  int mu_;
};

// e' = -2K (1 - sigma) with sigma rising by p/K over [0, tau1] and by the
// rest over [T1, T1 + tau2]; so e' <= -2K + 2p on [0, T1] and e' = 0 after.
class FamilyProfile final : public EnergyProfile {
 public:
  FamilyProfile(double K, int j, int count) : K_(K), j_(j), count_(count) {
    p_ = 0.5;
    T1_ = 1.0 / (4.0 * K);
    tau1_ = T1_ / 8.0;
    tau2_ = 7.0 * p_ / (32.0 * K * (K - p_));
    tb_ = 1.0 / (8.0 * K);
    height_ = j * family_bump_step(count);
    measure();
  }
  double base(double t) const {
    return 1.0 - 2.0 * K_ * t + 2.0 * p_ * tau1_ * step_integral(t / tau1_) +
           2.0 * (K_ - p_) * tau2_ * step_integral((t - T1_) / tau2_);
  }
  double e(double t) const override { return base(t) - height_ * bump(t / tb_, 0); }
  double de(double t) const override {
    const double sigma = p_ / K_ * smooth_step(t / tau1_) + (1.0 - p_ / K_) * smooth_step((t - T1_) / tau2_);
    return -2.0 * K_ * (1.0 - sigma) - height_ * bump(t / tb_, 1) / tb_;
  }
  double d2e(double t) const override {
    const double ds = p_ / K_ * smooth_step_d1(t / tau1_) / tau1_ + (1.0 - p_ / K_) * smooth_step_d1((t - T1_) / tau2_) / tau2_;
    return 2.0 * K_ * ds - height_ * bump(t / tb_, 2) / (tb_ * tb_);
  }
  std::string id() const override {
    std::ostringstream o;
    o.precision(17);
    o << "family:K=" << K_ << ",member=" << j_ << "/" << count_;
    return o.str();
  }

 private:
  double K_;
  int j_, count_;
  double p_, T1_, tau1_, tau2_, tb_, height_;
};

}  // namespace

double smooth_step_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double g = f0(x) + f0(1.0 - x);
  return (f1(x) * f0(1.0 - x) + f0(x) * f1(1.0 - x)) / (g * g);
}

double smooth_step_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double g = f0(x) + f0(1.0 - x);
  const double dg = f1(x) - f1(1.0 - x);
  const double N = f1(x) * f0(1.0 - x) + f0(x) * f1(1.0 - x);
  const double dN = f2(x) * f0(1.0 - x) - f0(x) * f2(1.0 - x);
  return (dN * g - 2.0 * N * dg) / (g * g * g);
}

void EnergyProfile::measure(int samples) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  min_ = 1e300;
  max_ = -1e300;
  for (int i = 0; i <= samples; ++i) {
    const double t = double(i) / samples;
    const double v = e(t);
    s0 = std::max(s0, std::abs(v));
    s1 = std::max(s1, std::abs(de(t)));
    s2 = std::max(s2, std::abs(d2e(t)));
    min_ = std::min(min_, v);
    max_ = std::max(max_, v);
  }
  c1_ = s0 + s1;
  c2_ = s0 + s1 + s2;
}

ProfilePtr constant_profile(double value) {
  if (!(value >= 0.5 && value <= 1.0)) throw ParameterError("constant profile must lie in [1/2, 1]");
  return std::make_shared<ConstantProfile>(value);
}

ProfilePtr anchored_profile(double m, double kappa, int mu) {
  if (mu < 1 || !(m > 0.0) || !(kappa >= 0.0)) throw ParameterError("anchored profile: need m > 0, kappa >= 0, mu >= 1");
  auto p = std::make_shared<AnchoredProfile>(m, kappa, mu);
  if (p->min_value() < 0.5 || p->max_value() > 1.0)
    throw ParameterError("anchored profile leaves [1/2, 1]; reduce kappa or adjust m");
  return p;
}

double family_bump_step(int count) { return count >= 2 ? 0.01 / (count - 1) : 0.0; }

std::vector<ProfilePtr> profile_family(double K, int count) {
  if (!(K > 1.0)) throw ParameterError("profile_family: K must exceed 1");
  if (count < 2) throw ParameterError("profile_family: count must be at least 2");
  std::vector<ProfilePtr> out;
  for (int j = 0; j < count; ++j) {
    auto p = std::make_shared<FamilyProfile>(K, j, count);
    if (p->min_value() < 0.5 || p->max_value() > 1.0 + 1e-15)
      throw ParameterError("profile_family: member leaves [1/2, 1]");
    if (p->c1_norm() > 2.0 * K + 2.0) throw ParameterError("profile_family: C1 norm exceeds 2K + 2");
    for (int i = 0; i <= 10000; ++i) {
      const double t = double(i) / 10000 / (4.0 * K);
      if (p->de(t) > -2.0 * K + 2.0) throw ParameterError("profile_family: e' exceeds -2K + 2 on [0, 1/(4K)]");
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace cilab
