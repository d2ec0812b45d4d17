#pragma once

#include "cilab/field.hpp"

namespace cilab {

// Inverse transform of one component onto the collocation grid.
Eigen::ArrayXd to_physical(const SpectralField& f, int comp);
PhysicalField to_physical(const SpectralField& f);

// Forward transform; modes outside the retained cube are discarded.
SpectralField from_physical(const FourierGrid& grid, const Eigen::ArrayXd& values);
SpectralField from_physical(const PhysicalField& f);

// Samples on a finer grid with the same coefficients (zero padding).
Eigen::ArrayXd to_physical_padded(const SpectralField& f, int comp, int n_fine);

}  // namespace cilab
