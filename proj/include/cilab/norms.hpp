#pragma once

#include <map>
#include <vector>

#include "cilab/field.hpp"

namespace cilab {

struct NormReport {
  double c0 = 0.0;
  std::map<double, double> seminorms;  // order m + alpha' -> [f]_{m+alpha'}
  double plancherel_l2 = 0.0;
  double plancherel_dissipation = 0.0;
};

/// Grid sup of |f|, Hoelder seminorms by dyadic difference quotients along
/// 13 axis/diagonal directions, and the Plancherel sums.
NormReport norms(const SpectralField& f, double alpha, const std::vector<double>& orders);

// [f]_{m+a} alone (m in {0,1,2}, a in [0,1)).
double holder_seminorm(const SpectralField& f, double order);

// sup over the grid of |f| (Euclidean / Frobenius across components).
double sup_norm(const SpectralField& f);

// Hoelder norm ||f||_m = sum_{j<=m} [f]_j with [f]_0 = sup|f|.
double c_norm(const SpectralField& f, int m);

}  // namespace cilab
