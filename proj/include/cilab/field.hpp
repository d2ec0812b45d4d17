#pragma once

#include <complex>
#include <vector>

#include "cilab/grid.hpp"

namespace cilab {

using cplx = std::complex<double>;

// matrix3 is an internal rank for full (non-symmetric) Jacobians.
enum class Rank { scalar, vector3, symtensor3, matrix3 };

inline int num_components(Rank r) {
  switch (r) {
    case Rank::scalar: return 1;
    case Rank::vector3: return 3;
    case Rank::symtensor3: return 6;
    case Rank::matrix3: return 9;
  }
  return 0;
}
const char* rank_name(Rank r);

/// Fourier coefficients of a real field on the retained half cube.
///
/// coeffs() is (num_modes x components); coefficient of e^{ik.x} with the
/// convention f(x) = sum_k fhat_k e^{ik.x}.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const FourierGrid& grid, Rank rank);

  const FourierGrid& grid() const { return grid_; }
  Rank rank() const { return rank_; }
  int components() const { return num_components(rank_); }

  Eigen::ArrayXXcd& coeffs() { return c_; }
  const Eigen::ArrayXXcd& coeffs() const { return c_; }

  // Any retained k (k3 may be negative); conjugate symmetry is applied.
  cplx coeff(const Vec3i& k, int comp) const;
  // Sets k and, where stored, its conjugate partner -k.
  void set_coeff(const Vec3i& k, int comp, cplx value);
  void add_coeff(const Vec3i& k, int comp, cplx value);

  // Re-impose coeff(-k) = conj(coeff(k)) on the k3 = 0 plane.
  void enforce_reality();
  // Largest |coeff(-k) - conj(coeff(k))| on the k3 = 0 plane.
  double reality_defect() const;

  double max_amplitude() const;
  Index active_modes() const;  // modes with any nonzero component

  SpectralField component(int comp) const;  // scalar field
  void set_component(int comp, const SpectralField& s);

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);

 private:
  FourierGrid grid_;
  Rank rank_ = Rank::scalar;
  Eigen::ArrayXXcd c_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Multiplicity of a stored mode in the full-spectrum sum: the k3 > 0 half
// stands for itself and its conjugate.
inline double mode_weight(int k3) { return k3 == 0 ? 1.0 : 2.0; }

/// Collocation values, component-major; point index (i1*n + i2)*n + i3.
struct PhysicalField {
  FourierGrid grid;
  Rank rank = Rank::scalar;
  std::vector<Eigen::ArrayXd> comp;

  PhysicalField() = default;
  PhysicalField(const FourierGrid& g, Rank r)
      : grid(g), rank(r), comp(num_components(r), Eigen::ArrayXd::Zero(g.num_points())) {}
  Eigen::ArrayXd& operator[](int c) { return comp[c]; }
  const Eigen::ArrayXd& operator[](int c) const { return comp[c]; }
  // Pointwise Euclidean (vector) or Frobenius (tensor) magnitude.
  Eigen::ArrayXd magnitude() const;
};

}  // namespace cilab
