#pragma once

namespace cilab {

// Radial C-infinity bump psi(x) = exp(-1/(1-|x|^2)) / Z on the unit ball,
// normalised to unit mass.
double mollifier_kernel(double r);
double mollifier_mass();  // Z

// psihat(xi) = int psi(x) e^{-i xi.x} dx for |xi| = xi, by adaptive
// Gauss-Kronrod quadrature of the radial sine transform.
double mollifier_transform(double xi);

}  // namespace cilab
