#pragma once

#include <functional>
#include <random>

#include "cilab/fft.hpp"
#include "cilab/field.hpp"

namespace cilab::testing {

// Collocation samples of an analytic scalar, transformed to coefficients.
inline SpectralField scalar_field(const FourierGrid& g, const std::function<double(const Vec3&)>& f) {
  Eigen::ArrayXd v(g.num_points());
  for (Index i = 0; i < g.num_points(); ++i) v[i] = f(g.point(i));
  return from_physical(g, v);
}

inline SpectralField vector_field(const FourierGrid& g, const std::function<Vec3(const Vec3&)>& f) {
  PhysicalField p(g, Rank::vector3);
  for (Index i = 0; i < g.num_points(); ++i) {
    const Vec3 u = f(g.point(i));
    for (int c = 0; c < 3; ++c) p[c][i] = u[c];
  }
  return from_physical(p);
}

// Random real field with |k|_inf <= kcut, coefficients decaying like 1/(1+|k|^2).
inline SpectralField random_field(const FourierGrid& g, Rank r, int kcut, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  SpectralField f(g, r);
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    if (std::max({std::abs(k1), std::abs(k2), k3}) > kcut) return;
    const double s = 1.0 / (1.0 + k1 * k1 + k2 * k2 + k3 * k3);
    for (int c = 0; c < f.components(); ++c) f.coeffs()(idx, c) = s * cplx(n01(rng), n01(rng));
  });
  f.coeffs().row(g.mode_index(0, 0, 0)).setZero();
  f.enforce_reality();
  return f;
}

inline double max_abs(const SpectralField& f) { return to_physical(f).magnitude().maxCoeff(); }

}  // namespace cilab::testing
