#pragma once

#include "cilab/field.hpp"

namespace cilab {

/// The operator R: vector field -> symmetric trace-free tensor with
/// div(Rv) = v - mean(v). Per mode, with u = -vhat/|k|^2 and P the Leray
/// projector,
///   1/4 (ik (x) Pu + Pu (x) ik) + 3/4 (ik (x) u + u (x) ik) - 1/2 (ik.u) Id.
SpectralField inverse_divergence(const SpectralField& v);
// Component c (xx, xy, xz, yy, yz, zz) of Rv alone.
SpectralField inverse_divergence_component(const SpectralField& v, int c);

// Largest |trace| and |div R v - (v - mean)| relative to the input size.
struct InverseDivergenceCheck {
  double trace_defect = 0.0;
  double divergence_defect = 0.0;
};
InverseDivergenceCheck check_inverse_divergence(const SpectralField& v, const SpectralField& Rv);

}  // namespace cilab
