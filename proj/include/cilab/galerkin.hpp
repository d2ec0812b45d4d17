#pragma once

#include <string>
#include <vector>

#include "cilab/field.hpp"

namespace cilab {

/// Divergence-free coefficients with |k| <= K, carried on a grid with
/// n >= 3K + 2 and no dealias cut, so quadratic products are alias-free.
struct GalerkinState {
  int K = 0;
  double t = 0.0;
  double alpha = 0.15;
  SpectralField w;
};

FourierGrid galerkin_grid(int K);

// P_K of a field from any grid (common modes copied, then projected).
GalerkinState galerkin_state(const SpectralField& v, int K, double alpha, double t = 0.0);

/// -P_K P div(w (x) w) - |k|^{2 alpha} w.
SpectralField galerkin_rhs(const GalerkinState& s);

struct GalerkinLedgerRow {
  double t = 0.0;
  double half_energy = 0.0;  // 1/2 int |w|^2
  double dissipated = 0.0;   // int_0^t int |(-Delta)^{alpha/2} w|^2
  double balance = 0.0;      // half_energy + dissipated - half_energy(0)
};

struct Trajectory {
  std::vector<GalerkinLedgerRow> ledger;  // one row per accepted step
  std::vector<GalerkinState> outputs;     // at the requested times
  GalerkinState final;
  int accepted = 0, rejected = 0;
  bool monotone = true;            // 1/2 |w|^2 never increased between steps
  double max_balance = 0.0;        // max |balance| / (1/2 |w(0)|^2)
  double max_divergence = 0.0;     // max |k . w_k| / max |w_k| over outputs
};

/// Integrating-factor (Lawson) RK4 with step-doubling error control on the
/// relative coefficient error. Throws AccuracyError on step underflow.
Trajectory integrate(const GalerkinState& s0, double T, double tol, std::vector<double> outputs = {});

struct Prolongation {
  Trajectory trajectory;
  double energy_loss = 0.0;  // 1 - |P_K v|^2 / |v|^2
  std::string warning;       // set when more than 10% of the energy is lost
};

// Galerkin continuation of a snapshot taken at time T0 over [T0, T0 + horizon].
Prolongation prolong(const SpectralField& v, double T0, int K, double alpha, double horizon, double tol,
                     std::vector<double> outputs = {});

// Seeded random divergence-free data on galerkin_grid(K), |k| <= K, with
// int |w|^2 = amplitude^2.
SpectralField random_solenoidal(int K, unsigned long long seed, double amplitude = 1.0);

// (int |a - b|^2)^{1/2} for fields on the same grid.
double l2_distance(const SpectralField& a, const SpectralField& b);

std::string galerkin_ledger_csv(const Trajectory& tr);

}  // namespace cilab
