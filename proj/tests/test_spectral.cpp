#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "cilab/beltrami.hpp"
#include "cilab/mollifier.hpp"
#include "cilab/norms.hpp"
#include "cilab/sampling.hpp"
#include "cilab/spectral_ops.hpp"
#include "helpers.hpp"

using namespace cilab;
using namespace cilab::testing;

namespace {

SpectralField beltrami_pair(const BeltramiFamily& fam, int parity, int i, cplx a, int lam, const FourierGrid& g) {
  const Vec3i k = fam.direction(parity, i).k;
  return make_beltrami_wave({{k, a}, {Vec3i(-k), std::conj(a)}}, fam, lam, g);
}

}  // namespace

TEST_CASE("grid keeps the dealiased cube below Nyquist") {
  CHECK(FourierGrid(16).kmax() == 5);
  CHECK(FourierGrid(16, 1.0).kmax() == 7);
  CHECK(FourierGrid(4).kmax() == 1);
  CHECK_THROWS_AS(FourierGrid(2), ParameterError);
  CHECK_THROWS_AS(FourierGrid(15), ParameterError);
  CHECK_THROWS_AS(FourierGrid(16, 0.0), ParameterError);
  const FourierGrid g(12);
  for (Index idx : {Index(0), Index(17), g.num_modes() - 1}) {
    const Vec3i k = g.mode(idx);
    CHECK(g.mode_index(k[0], k[1], k[2]) == idx);
  }
}

TEST_CASE("transforms round-trip and stay real") {
  const FourierGrid g(16);
  std::mt19937_64 rng(3);
  const SpectralField f = random_field(g, Rank::symtensor3, g.kmax(), rng);
  const SpectralField h = from_physical(to_physical(f));
  CHECK((h.coeffs() - f.coeffs()).abs().maxCoeff() < 1e-14);
  CHECK(h.reality_defect() < 1e-15);
  // Plancherel against the collocation average
  const PhysicalField p = to_physical(f);
  double direct = 0.0;
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    direct += (i == j ? 1.0 : 2.0) * p[c].square().sum();
  }
  direct *= kTorusVolume / double(g.num_points());
  double sym = 0.0;
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    sym += (i == j ? 1.0 : 2.0) * l2_squared(f.component(c));
  }
  CHECK(std::abs(direct - sym) <= 1e-12 * sym);
}

TEST_CASE("fractional laplacian symbol") {
  const FourierGrid g(16);
  const SpectralField c1 = scalar_field(g, [](const Vec3& x) { return std::cos(x[0]); });
  for (double a : {0.15, 0.5, 0.9})
    CHECK((fractional_laplacian(c1, a).coeffs() - c1.coeffs()).abs().maxCoeff() < 1e-15);
  const SpectralField k0 = scalar_field(g, [](const Vec3&) { return 3.5; });
  CHECK(fractional_laplacian(k0, 0.3).coeffs().abs().maxCoeff() == 0.0);
  const SpectralField c2 = scalar_field(g, [](const Vec3& x) { return std::cos(2.0 * x[2]); });
  CHECK((fractional_laplacian(c2, 0.5).coeffs() - 2.0 * c2.coeffs()).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(fractional_laplacian(c1, 0.0), ParameterError);
  CHECK_THROWS_AS(fractional_laplacian(c1, 1.5), ParameterError);
}

TEST_CASE("leray projection") {
  const FourierGrid g(16);
  const SpectralField grad = vector_field(g, [](const Vec3& x) {
    const double c = std::cos(x[0] + 2.0 * x[1]);
    return Vec3(c, 2.0 * c, 0.0);
  });
  CHECK(leray_project(grad).coeffs().abs().maxCoeff() < 1e-15);

  const SpectralField mixed = vector_field(g, [](const Vec3& x) { return Vec3(std::sin(x[1]), 0.0, std::cos(x[2])); });
  const SpectralField keep = vector_field(g, [](const Vec3& x) { return Vec3(std::sin(x[1]), 0.0, 0.0); });
  CHECK((leray_project(mixed).coeffs() - keep.coeffs()).abs().maxCoeff() < 1e-15);

  const BeltramiFamily fam = build_families();
  const SpectralField W = beltrami_pair(fam, kEven, 0, cplx(0.7, -0.2), 2, g);
  CHECK((leray_project(W).coeffs() - W.coeffs()).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(leray_project(keep.component(0)), RankError);
}

TEST_CASE("mode truncation") {
  const FourierGrid g(16);
  const SpectralField inner = scalar_field(g, [](const Vec3& x) { return std::cos(x[0] + x[1]); });  // |k| = 1.41
  const SpectralField outer = scalar_field(g, [](const Vec3& x) { return std::sin(3.0 * x[2]); });   // |k| = 3
  CHECK((truncate_modes(inner + outer, 100.0).coeffs() - (inner + outer).coeffs()).abs().maxCoeff() == 0.0);
  CHECK(truncate_modes(outer, 2.0).coeffs().abs().maxCoeff() < 1e-15);
  CHECK((truncate_modes(inner + outer, 2.0).coeffs() - inner.coeffs()).abs().maxCoeff() < 1e-15);
}

TEST_CASE("mollifier transform against an independent quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  auto bump = [](double r) { return r >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - r * r)); };
  const double Z = 4.0 * kPi * ts.integrate([&](double r) { return r * r * bump(r); }, 0.0, 1.0);
  CHECK(mollifier_mass() == doctest::Approx(Z).epsilon(1e-12));
  for (double xi : {0.1, 1.0, 7.3, 40.0}) {
    const double ref = 4.0 * kPi / (Z * xi) * ts.integrate([&](double r) { return r * bump(r) * std::sin(xi * r); }, 0.0, 1.0);
    CHECK(std::abs(mollifier_transform(xi) - ref) < 1e-12);
  }
  CHECK(mollifier_transform(0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mollify") {
  const FourierGrid g(16);
  const SpectralField k0 = scalar_field(g, [](const Vec3&) { return 2.0; });
  CHECK((mollify(k0, 0.3).coeffs() - k0.coeffs()).abs().maxCoeff() < 1e-15);

  const SpectralField c1 = scalar_field(g, [](const Vec3& x) { return std::cos(x[0]); });
  const SpectralField m = mollify(c1, 0.1);
  CHECK(std::abs(m.coeff({1, 0, 0}, 0) - mollifier_transform(0.1) * c1.coeff({1, 0, 0}, 0)) < 1e-15);

  std::mt19937_64 rng(5);
  const SpectralField f = random_field(g, Rank::vector3, g.kmax(), rng);
  double last = INFINITY;
  for (double ell : {0.1, 0.01, 0.001}) {
    const double d = std::sqrt(l2_squared(mollify(f, ell) - f));
    CHECK(d < last);
    last = d;
  }
  CHECK_THROWS_AS(mollify(f, 0.0), ParameterError);
}

TEST_CASE("derivatives") {
  const FourierGrid g(16);
  const SpectralField s = scalar_field(g, [](const Vec3& x) { return std::sin(x[0]); });
  const SpectralField gs = differentiate(s, DiffKind::grad);
  const SpectralField ref = vector_field(g, [](const Vec3& x) { return Vec3(std::cos(x[0]), 0.0, 0.0); });
  CHECK((gs.coeffs() - ref.coeffs()).abs().maxCoeff() < 1e-15);

  const SpectralField shear = vector_field(g, [](const Vec3& x) { return Vec3(std::sin(x[1]), 0.0, 0.0); });
  CHECK(differentiate(shear, DiffKind::div).coeffs().abs().maxCoeff() < 1e-15);

  const BeltramiFamily fam = build_families();
  for (int lam : {1, 2}) {
    const SpectralField W = beltrami_pair(fam, kOdd, 2, cplx(0.3, 0.4), lam, g);
    const SpectralField cw = differentiate(W, DiffKind::curl);
    const double eig = lam * fam.lambda_bar_geom;
    CHECK((cw.coeffs() - eig * W.coeffs()).abs().maxCoeff() < 1e-13);
  }
  CHECK_THROWS_AS(differentiate(s, DiffKind::curl), RankError);
}

TEST_CASE("off-grid sampling") {
  const FourierGrid g(16);
  const SpectralField c1 = scalar_field(g, [](const Vec3& x) { return std::cos(x[0]); });
  const Vec3 x(kPi / 3.0, 0.0, 0.0);
  CHECK(std::abs(sample_offgrid(c1, {x}, SampleMode::exact_sum)[0][0] - 0.5) < 1e-14);
  // cubic Lagrange on the 2x padded grid: h^4 / 24 sized
  CHECK(std::abs(sample_offgrid(c1, {x}, SampleMode::interp)[0][0] - 0.5) < 1e-4);
  CHECK(sample_offgrid(c1, {}, SampleMode::exact_sum).empty());

  std::mt19937_64 rng(11);
  const SpectralField f = random_field(g, Rank::vector3, 3, rng);
  std::vector<Vec3> nodes;
  for (Index i : {Index(0), Index(77), Index(1234), g.num_points() - 1}) nodes.push_back(g.point(i));
  const PhysicalField p = to_physical(f);
  for (SampleMode mode : {SampleMode::exact_sum, SampleMode::interp}) {
    const auto vals = sample_offgrid(f, nodes, mode);
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Index i = (m == 0 ? 0 : m == 1 ? 77 : m == 2 ? 1234 : g.num_points() - 1);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(vals[m][c] - p[c][i]) < 1e-13);
    }
  }
}

TEST_CASE("interpolated sampling converges at fourth order") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<Vec3> pts(100);
  for (auto& x : pts) x = Vec3(u(rng), u(rng), u(rng));
  // one smooth field, carried on successively finer grids
  const FourierGrid g0(16);
  const SpectralField f0 = random_field(g0, Rank::scalar, 4, rng);
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const FourierGrid g(n);
    SpectralField f(g, Rank::scalar);
    g0.for_each_mode([&](Index idx, int k1, int k2, int k3) { f.coeffs()(g.mode_index(k1, k2, k3), 0) = f0.coeffs()(idx, 0); });
    const auto ex = sample_offgrid(f, pts, SampleMode::exact_sum);
    const auto ip = sample_offgrid(f, pts, SampleMode::interp);
    double e = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) e = std::max(e, std::abs(ex[i][0] - ip[i][0]));
    err.push_back(e);
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(std::log2(err[1] / err[2]) > 3.5);
}

TEST_CASE("norm estimators") {
  const FourierGrid g(64);
  const SpectralField k0 = scalar_field(g, [](const Vec3&) { return -1.25; });
  const NormReport nk = norms(k0, 0.3, {0.3, 1.0, 1.3});
  CHECK(nk.c0 == doctest::Approx(1.25).epsilon(1e-12));
  for (const auto& [order, value] : nk.seminorms) CHECK(value < 1e-12);

  const SpectralField c1 = scalar_field(g, [](const Vec3& x) { return std::cos(x[0]); });
  CHECK(std::abs(holder_seminorm(c1, 1.0) - 1.0) <= 0.02);
  const NormReport nc = norms(c1, 0.15, {});
  CHECK(nc.plancherel_l2 == doctest::Approx(0.5 * kTorusVolume).epsilon(1e-12));
  CHECK(nc.plancherel_dissipation == doctest::Approx(0.5 * kTorusVolume).epsilon(1e-12));

  const SpectralField c4 = scalar_field(g, [](const Vec3& x) { return std::cos(4.0 * x[0]); });
  for (double a : {0.15, 0.3}) {
    const double ratio = holder_seminorm(c4, a) / holder_seminorm(c1, a);
    CHECK(std::abs(ratio / std::pow(4.0, a) - 1.0) <= 0.03);
  }
  CHECK_THROWS_AS(holder_seminorm(c1, 3.2), ParameterError);
}
