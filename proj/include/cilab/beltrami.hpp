#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cilab/field.hpp"

namespace cilab {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using CVec3 = Eigen::Vector3cd;

// Plain bilinear cross product; Eigen's cross conjugates complex results.
inline CVec3 cross(const CVec3& a, const CVec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct BeltramiDirection {
  Vec3i k;
  Vec3 A;    // A.k = 0, |A| = 1/sqrt(2), A_{-k} = A_k
  CVec3 B;   // A + i khat x A
};

// Affine solver: c = inverse * sym6(R); gamma_k = sqrt(c_pair(k)).
struct PairSystem {
  Mat6 matrix;    // column p = sym6(Id - khat_p khat_p)
  Mat6 inverse;
  double condition = 0.0;
  Vec6 baseline;  // c(Id)
};

enum Parity { kEven = 0, kOdd = 1 };

/// The two disjoint direction families on the shell |k|^2 = 5.
/// Each family lists 12 directions ordered as (k_0, -k_0, k_1, -k_1, ...).
struct BeltramiFamily {
  double lambda_bar_geom = 0.0;
  std::array<std::vector<BeltramiDirection>, 2> families;
  std::array<PairSystem, 2> systems;
  double r0 = 0.0;

  int pairs() const { return 6; }
  const BeltramiDirection& direction(int parity, int i) const { return families[parity][i]; }
  // Affine pair coefficients c_p(R) (no positivity check).
  Vec6 coefficients(const Mat3& R, int parity) const { return systems[parity].inverse * sym6(R); }

  static Vec6 sym6(const Mat3& R) {
    Vec6 v;
    v << R(0, 0), 0.5 * (R(0, 1) + R(1, 0)), 0.5 * (R(0, 2) + R(2, 0)), R(1, 1), 0.5 * (R(1, 2) + R(2, 1)), R(2, 2);
    return v;
  }
};

BeltramiFamily build_families();

/// gamma_k for every k of the family; errors outside the r0 ball or on a
/// negative coefficient.
std::vector<std::pair<Vec3i, double>> geometric_decompose(const Mat3& R, const BeltramiFamily& fam, int parity);

// 1/2 sum_k gamma_k^2 (Id - khat khat^T)
Mat3 recompose(const std::vector<std::pair<Vec3i, double>>& gammas);

/// W = sum a_k B_k e^{i lam k.x} as a spectral field.
SpectralField make_beltrami_wave(const std::vector<std::pair<Vec3i, cplx>>& amplitudes, const BeltramiFamily& fam,
                                 int lam, const FourierGrid& grid);

// Beltrami vector for any k of either family.
const BeltramiDirection& find_direction(const BeltramiFamily& fam, const Vec3i& k, int* parity = nullptr);

// max over the r0 ball of sum_k gamma_k (sampled; seeded).
double max_gamma_sum(const BeltramiFamily& fam, int samples, unsigned long long seed);

// Largest radius at which sampled R stay positive (dense sampling oracle).
double empirical_positivity_radius(const BeltramiFamily& fam, int parity, int samples, unsigned long long seed);

// Structured-text fixture with vectors, A_k, system matrices and r0.
std::string family_fixture_json(const BeltramiFamily& fam);

}  // namespace cilab
