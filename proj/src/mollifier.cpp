#include "cilab/mollifier.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>

#include "cilab/grid.hpp"

namespace cilab {
namespace {

double bump(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r * r));
}

double radial_integral(double xi) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [xi](double r) {
    // sin(xi r)/(xi r) keeps the small-xi limit exact.
    const double x = xi * r;
    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    return r * r * sinc * bump(r);
  };
  // Panels of at most half an oscillation; the bump is flat near r = 1, so
  // a shallow adaptive rule per panel is enough.
  const int panels = std::max(1, int(std::ceil(xi / kPi)));
  double sum = 0.0;
  for (int i = 0; i < panels; ++i)
    sum += gauss_kronrod<double, 61>::integrate(f, double(i) / panels, double(i + 1) / panels, 6, 1e-13);
  return 4.0 * kPi * sum;
}

}  // namespace

double mollifier_mass() {
  static const double z = radial_integral(0.0);
  return z;
}

double mollifier_kernel(double r) { return bump(r) / mollifier_mass(); }

double mollifier_transform(double xi) { return radial_integral(std::abs(xi)) / mollifier_mass(); }

}  // namespace cilab
