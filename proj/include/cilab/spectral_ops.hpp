#pragma once

#include "cilab/field.hpp"

namespace cilab {

enum class DiffKind { grad, div, curl, full_jacobian };

/// |k|^{2 alpha} fhat_k; the k = 0 coefficient is dropped.
SpectralField fractional_laplacian(const SpectralField& f, double alpha);

/// Id - k k^T/|k|^2 per mode, mean removed.
SpectralField leray_project(const SpectralField& v);

/// Zeroes coefficients with |k| > K.
SpectralField truncate_modes(const SpectralField& f, double K);

/// Multiplies coefficient k by psihat(ell k) (see mollifier.hpp).
SpectralField mollify(const SpectralField& f, double ell);

/// Exact multiplier derivatives: grad (scalar->vector, vector->matrix3),
/// div (vector->scalar, symtensor->vector row-wise), curl, full_jacobian.
SpectralField differentiate(const SpectralField& f, DiffKind kind);

// d/dx_j of every component (rank preserved).
SpectralField partial(const SpectralField& f, int j);

// (2pi)^3 sum |fhat_k|^2 over all components.
double l2_squared(const SpectralField& f);
// (2pi)^3 sum_k |k|^{2 alpha} |fhat_k|^2.
double dissipation_integral(const SpectralField& f, double alpha);
// (2pi)^3 sum_k Re(fhat_k conj(ghat_k)).
double l2_inner(const SpectralField& f, const SpectralField& g);

// Symmetric-tensor helpers on physical samples.
PhysicalField outer_sym(const PhysicalField& a, const PhysicalField& b);  // a (x) b + b (x) a
PhysicalField dot(const PhysicalField& a, const PhysicalField& b);        // scalar

// Trace of a symtensor field (scalar).
SpectralField trace(const SpectralField& t);

}  // namespace cilab
