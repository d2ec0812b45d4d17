#include "cilab/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cilab/fft.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {
namespace {

// -P_K P div(w (x) w)
SpectralField nonlinear(const SpectralField& w, int K) {
  const PhysicalField u = to_physical(w);
  PhysicalField uu(w.grid(), Rank::symtensor3);
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    uu[c] = u[i] * u[j];
  }
  SpectralField n = leray_project(differentiate(from_physical(uu), DiffKind::div));
  n *= -1.0;
  return truncate_modes(n, K);
}

// Per-mode factors exp(-tau |k|^{2 alpha}).
Eigen::ArrayXd decay_factors(const FourierGrid& g, double alpha, double tau) {
  Eigen::ArrayXd f(g.num_modes());
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k2n = double(k1) * k1 + double(k2) * k2 + double(k3) * k3;
    f[idx] = std::exp(-tau * std::pow(k2n, alpha));
  });
  return f;
}

SpectralField scaled(SpectralField f, const Eigen::ArrayXd& d) {
  f.coeffs().colwise() *= d.cast<cplx>();
  return f;
}

struct StepResult {
  SpectralField w;
  double dissipated = 0.0;
};

// One Lawson RK4 step of size h; the dissipation integral rides along as
// an extra component without a linear part.
StepResult lawson_step(const SpectralField& w, int K, double alpha, double h) {
  const FourierGrid& g = w.grid();
  const Eigen::ArrayXd E = decay_factors(g, alpha, h), Eh = decay_factors(g, alpha, 0.5 * h);
  auto D = [&](const SpectralField& u) { return dissipation_integral(u, alpha); };

  const SpectralField k1 = nonlinear(w, K);
  const SpectralField u2 = scaled(w + (0.5 * h) * k1, Eh);
  const SpectralField k2 = nonlinear(u2, K);
  const SpectralField u3 = scaled(w, Eh) + (0.5 * h) * k2;
  const SpectralField k3 = nonlinear(u3, K);
  const SpectralField u4 = scaled(w, E) + h * scaled(k3, Eh);
  const SpectralField k4 = nonlinear(u4, K);

  StepResult r;
  r.w = scaled(w, E) + (h / 6.0) * (scaled(k1, E) + 2.0 * scaled(k2 + k3, Eh) + k4);
  r.w.enforce_reality();
  r.dissipated = h / 6.0 * (D(w) + 2.0 * D(u2) + 2.0 * D(u3) + D(u4));
  return r;
}

double divergence_ratio(const SpectralField& w) {
  double dmax = 0.0;
  const auto& c = w.coeffs();
  w.grid().for_each_mode([&](Index idx, int k1, int k2, int k3) {
    dmax = std::max(dmax, std::abs(double(k1) * c(idx, 0) + double(k2) * c(idx, 1) + double(k3) * c(idx, 2)));
  });
  const double amp = w.max_amplitude();
  return amp > 0.0 ? dmax / amp : 0.0;
}

}  // namespace

FourierGrid galerkin_grid(int K) {
  if (K < 1) throw ParameterError("galerkin: K must be a positive integer");
  int n = 3 * K + 2;
  n += n % 2;
  return FourierGrid(std::max(n, 4), 1.0);
}

GalerkinState galerkin_state(const SpectralField& v, int K, double alpha, double t) {
  if (v.rank() != Rank::vector3) throw RankError("galerkin_state: expected a vector field");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("galerkin: alpha must lie in (0,1)");
  GalerkinState s;
  s.K = K;
  s.t = t;
  s.alpha = alpha;
  const FourierGrid g = galerkin_grid(K);
  s.w = SpectralField(g, Rank::vector3);
  const FourierGrid& src = v.grid();
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    if (!src.retained(k1, k2, k3)) return;
    for (int c = 0; c < 3; ++c) s.w.coeffs()(idx, c) = v.coeff({k1, k2, k3}, c);
  });
  s.w = truncate_modes(leray_project(s.w), K);
  s.w.enforce_reality();
  return s;
}

SpectralField galerkin_rhs(const GalerkinState& s) {
  return nonlinear(s.w, s.K) - fractional_laplacian(s.w, s.alpha);
}

Trajectory integrate(const GalerkinState& s0, double T, double tol, std::vector<double> outputs) {
  if (!(T > 0.0)) throw ParameterError("integrate: horizon must be positive");
  if (!(tol > 0.0)) throw ParameterError("integrate: tol must be positive");
  std::sort(outputs.begin(), outputs.end());
  Trajectory tr;
  GalerkinState s = s0;
  const double e0 = 0.5 * l2_squared(s.w);
  const double t_end = s0.t + T;
  double diss = 0.0, h = std::min(T, 0.05);
  const double h_min = 1e-10 * std::max(1.0, T);
  size_t next_out = 0;
  tr.ledger.push_back({s.t, e0, 0.0, 0.0});

  auto emit_outputs = [&](double upto) {
    while (next_out < outputs.size() && outputs[next_out] <= upto + 1e-14) {
      tr.outputs.push_back(s);
      tr.max_divergence = std::max(tr.max_divergence, divergence_ratio(s.w));
      ++next_out;
    }
  };
  emit_outputs(s.t);

  while (s.t < t_end - 1e-14) {
    double stop = t_end;
    if (next_out < outputs.size()) stop = std::min(stop, outputs[next_out]);
    const double step = std::min(h, stop - s.t);
    const StepResult big = lawson_step(s.w, s.K, s.alpha, step);
    const StepResult half1 = lawson_step(s.w, s.K, s.alpha, 0.5 * step);
    const StepResult half2 = lawson_step(half1.w, s.K, s.alpha, 0.5 * step);
    const double scale = std::max(s.w.max_amplitude(), half2.w.max_amplitude());
    double err = scale > 0.0 ? (half2.w - big.w).max_amplitude() / scale / 15.0 : 0.0;
    // the integrating factor makes the linear decay exact, so the
    // dissipation quadrature has to be controlled separately
    if (e0 > 0.0) err = std::max(err, std::abs(half1.dissipated + half2.dissipated - big.dissipated) / e0 / 15.0);
    if (err > tol) {
      ++tr.rejected;
      h = step * std::max(0.2, 0.9 * std::pow(tol / err, 0.2));
      if (h < h_min) throw AccuracyError("integrate: step size underflow (stiff truncation?)");
      continue;
    }
    const double e_old = 0.5 * l2_squared(s.w);
    s.w = half2.w;
    s.t += step;
    diss += half1.dissipated + half2.dissipated;
    const double e_new = 0.5 * l2_squared(s.w);
    if (e_new > e_old + 1e-14 * e0) tr.monotone = false;
    const double bal = e_new + diss - e0;
    tr.ledger.push_back({s.t, e_new, diss, bal});
    if (e0 > 0.0) tr.max_balance = std::max(tr.max_balance, std::abs(bal) / e0);
    ++tr.accepted;
    const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
    h = std::max(h, step) * std::clamp(grow, 0.2, 4.0);
    emit_outputs(s.t);
  }
  tr.final = s;
  tr.max_divergence = std::max(tr.max_divergence, divergence_ratio(s.w));
  return tr;
}

Prolongation prolong(const SpectralField& v, double T0, int K, double alpha, double horizon, double tol,
                     std::vector<double> outputs) {
  Prolongation p;
  const GalerkinState s0 = galerkin_state(v, K, alpha, T0);
  const double full = l2_squared(v);
  p.energy_loss = full > 0.0 ? 1.0 - l2_squared(s0.w) / full : 0.0;
  if (p.energy_loss > 0.1) {
    std::ostringstream os;
    os << "truncation at K=" << K << " keeps only " << 100.0 * (1.0 - p.energy_loss) << "% of the energy";
    p.warning = os.str();
  }
  p.trajectory = integrate(s0, horizon, tol, std::move(outputs));
  return p;
}

SpectralField random_solenoidal(int K, unsigned long long seed, double amplitude) {
  const FourierGrid g = galerkin_grid(K);
  SpectralField w(g, Rank::vector3);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    const double k2n = double(k1) * k1 + double(k2) * k2 + double(k3) * k3;
    if (k2n == 0.0 || k2n > double(K) * K) return;
    for (int c = 0; c < 3; ++c) w.coeffs()(idx, c) = cplx(nd(rng), nd(rng)) / (1.0 + k2n);
  });
  w.enforce_reality();
  w = truncate_modes(leray_project(w), K);
  const double e = l2_squared(w);
  if (e > 0.0) w *= amplitude / std::sqrt(e);
  return w;
}

double l2_distance(const SpectralField& a, const SpectralField& b) { return std::sqrt(l2_squared(a - b)); }

std::string galerkin_ledger_csv(const Trajectory& tr) {
  std::ostringstream os;
  os.precision(15);
  os << "t,half_energy,dissipated,balance\n";
  for (const auto& r : tr.ledger) os << r.t << ',' << r.half_energy << ',' << r.dissipated << ',' << r.balance << '\n';
  return os.str();
}

}  // namespace cilab
