#include "cilab/inverse_divergence.hpp"

#include "cilab/fft.hpp"
#include "cilab/spectral_ops.hpp"

#include <algorithm>

namespace cilab {

namespace {

// Symbol of R at one mode, component c of the symmetric output.
template <class F>
void for_each_symbol(const SpectralField& v, F&& emit) {
  const auto& g = v.grid();
  const cplx I(0.0, 1.0);
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k[3] = {double(k1), double(k2), double(k3)};
    const double k2n = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2n == 0.0) return;
    cplx u[3], pu[3];
    for (int i = 0; i < 3; ++i) u[i] = -v.coeffs()(idx, i) / k2n;
    const cplx ku = k[0] * u[0] + k[1] * u[1] + k[2] * u[2];
    for (int i = 0; i < 3; ++i) pu[i] = u[i] - k[i] * ku / k2n;
    emit(idx, [&](int c) {
      const auto [i, j] = sym_pair(c);
      cplx t = 0.25 * I * (k[j] * pu[i] + k[i] * pu[j]) + 0.75 * I * (k[j] * u[i] + k[i] * u[j]);
      if (i == j) t -= 0.5 * I * ku;
      return t;
    });
  });
}

void require_vector(const SpectralField& v) {
  if (v.rank() != Rank::vector3) throw RankError("inverse_divergence: expected vector3");
}

}  // namespace

SpectralField inverse_divergence(const SpectralField& v) {
  require_vector(v);
  SpectralField out(v.grid(), Rank::symtensor3);
  for_each_symbol(v, [&](Index idx, auto&& sym) {
    for (int c = 0; c < 6; ++c) out.coeffs()(idx, c) = sym(c);
  });
  return out;
}

SpectralField inverse_divergence_component(const SpectralField& v, int c) {
  require_vector(v);
  SpectralField out(v.grid(), Rank::scalar);
  for_each_symbol(v, [&](Index idx, auto&& sym) { out.coeffs()(idx, 0) = sym(c); });
  return out;
}

InverseDivergenceCheck check_inverse_divergence(const SpectralField& v, const SpectralField& Rv) {
  InverseDivergenceCheck r;
  SpectralField centred = v;
  centred.coeffs().row(v.grid().mode_index(0, 0, 0)).setZero();
  const double scale = std::max(to_physical(centred).magnitude().maxCoeff(), 1e-300);
  const SpectralField d = differentiate(Rv, DiffKind::div) - centred;
  r.divergence_defect = to_physical(d).magnitude().maxCoeff() / scale;
  r.trace_defect = to_physical(trace(Rv), 0).abs().maxCoeff() / std::max(to_physical(Rv).magnitude().maxCoeff(), 1e-300);
  return r;
}

}  // namespace cilab
