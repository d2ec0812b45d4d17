#include <doctest.h>

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>

#include "cilab/config.hpp"
#include "cilab/inverse_divergence.hpp"
#include "cilab/ledger.hpp"
#include "cilab/norms.hpp"
#include "cilab/run.hpp"
#include "cilab/spectral_ops.hpp"
#include "cilab/step.hpp"
#include "helpers.hpp"

using namespace cilab;
using namespace cilab::testing;

namespace {

// Anchored desk setup: a=2, b=1.1, c=2.6, alpha=0.15 with lambda_bar 16.
RunConfig desk(int n) {
  RunConfig cfg = parse_config(R"({"a": 2.0, "b": 1.1, "c": 2.6, "alpha": 0.15, "epsilon": 0.01, "q_max": 1,
    "profile": {"kind": "anchored", "m": 0.8, "theta": 2e-4}, "lambda_bar": 16, "times": [0.43]})",
                               "iterate");
  cfg.grid_n = n;
  cfg.rk4.min_steps = 6;
  return cfg;
}

struct Desk {
  RunConfig cfg;
  Setup st;
  IterationState S;
  StepConfig sc;
  explicit Desk(int n) : cfg(desk(n)), st(prepare(cfg)) {
    S = start_triple(st.s, st.profiles[st.chosen], st.grid, st.lambda_bar.value, cfg.times);
    sc = step_config(cfg);
  }
};

// v = p = R = 0 with a constant profile.
class ZeroState final : public StateEvaluator {
 public:
  explicit ZeroState(const FourierGrid& g) : g_(g), e_(constant_profile(1.0)) {}
  int stage() const override { return 0; }
  const FourierGrid& grid() const override { return g_; }
  const EnergyProfile& profile() const override { return *e_; }
  SpectralField velocity(double) const override { return SpectralField(g_, Rank::vector3); }
  SpectralField pressure(double) const override { return SpectralField(g_, Rank::scalar); }
  SpectralField stress(double) const override { return SpectralField(g_, Rank::symtensor3); }
  SpectralField velocity_rate(double) const override { return SpectralField(g_, Rank::vector3); }

 private:
  FourierGrid g_;
  ProfilePtr e_;
};

double coeff_diff(const SpectralField& a, const SpectralField& b) { return (a.coeffs() - b.coeffs()).abs().maxCoeff(); }

}  // namespace

TEST_CASE("starting triple") {
  const FourierGrid g(32);
  ScheduleParams p;
  const BeltramiFamily fam = build_families();
  for (const auto& prof : {constant_profile(1.0), anchored_profile(0.8, std::pow(8.0, 0.3), 6)}) {
    const ParameterSchedule s = make_schedule(p, fam, prof->c1_norm(), prof->c2_norm());
    const StartTriple T(g, prof, 8, s.delta(1), p.alpha);
    for (int i = 0; i < 20; ++i) {
      const double t = i / 19.0;
      const SpectralField v = T.velocity(t), R = T.stress(t);
      CHECK(std::abs(l2_squared(v) - prof->e(t) * (1.0 - s.delta(1))) <= 1e-12);
      const double vs = sup_norm(v);
      CHECK(sup_norm(fracnsr_residual(v, T.velocity_rate(t), T.pressure(t), R, p.alpha)) <= 1e-8 * vs);
      CHECK(max_abs(differentiate(v, DiffKind::div)) < 1e-15);
      CHECK(max_abs(trace(R)) < 1e-15);
      // velocity_rate against a central difference
      const double h = 1e-6, tc = std::clamp(t, h, 1.0 - h);
      const SpectralField fd = (1.0 / (2.0 * h)) * (T.velocity(tc + h) - T.velocity(tc - h));
      CHECK(coeff_diff(fd, T.velocity_rate(tc)) < 1e-7);
    }
  }
  // constant energy: the time-derivative part of the stress vanishes
  const auto one = constant_profile(1.0);
  const StartTriple T(g, one, 8, 0.4665, 0.15);
  CHECK(T.stress_rate(0.3).coeffs().abs().maxCoeff() == 0.0);
  CHECK(T.forcing(0.3) == doctest::Approx(std::pow(8.0, 0.3) * std::sqrt(1.0 - 0.4665)).epsilon(1e-15));
  CHECK_THROWS_AS(StartTriple(g, one, 11, 0.4665, 0.15), ResolutionError);
}

TEST_CASE("time cutoffs and slices") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mu = 6.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    double sum = 0.0;
    for (int l = -1; l <= 7; ++l) sum += cutoff(mu * t - l) * cutoff(mu * t - l);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const auto act = slices_at(t, mu);
    for (int l = 0; l <= 6; ++l)
      if (cutoff(mu * t - l) != 0.0) CHECK(std::find(act.begin(), act.end(), l) != act.end());
  }
  CHECK(cutoff(0.75) == 0.0);
  CHECK(cutoff(0.0) == 1.0);

  const Desk d(96);
  const auto sl = time_slices(*d.S.evaluator, d.st.s);
  REQUIRE(sl.size() == size_t(d.st.s.mu(0)) + 1);
  for (const auto& x : sl) {
    // the starting triple sits exactly at e (1 - delta_1)
    const double e = d.S.evaluator->profile().e(x.anchor);
    CHECK(x.rho == doctest::Approx(e * (d.st.s.delta(1) - d.st.s.delta(2)) / (3.0 * kTorusVolume)).epsilon(1e-12));
    CHECK(x.parity == x.l % 2);
  }
  // too much energy for the next window
  const StartTriple hot(d.st.grid, d.st.profiles[0], 16, 0.1 * d.st.s.delta(2), 0.15);
  CHECK_THROWS_AS(time_slices(hot, d.st.s, {3}), EnergyWindowError);
}

TEST_CASE("backward characteristics") {
  const FourierGrid g(16);
  const std::vector<Vec3> pts{Vec3(0.1, 2.0, 4.0), Vec3(5.0, 1.0, 0.3)};
  Rk4Config cfg;
  const double anchor = 0.5, t = 0.75;

  const FrozenHistory zero(SpectralField(g, Rank::vector3));
  for (const auto& fp : solve_flow(zero, anchor, t, pts, cfg)) {
    CHECK((fp.J - Mat3::Identity()).norm() == 0.0);
  }
  const auto z = solve_flow(zero, anchor, t, pts, cfg);
  CHECK((z[0].phi - pts[0]).norm() == 0.0);

  const Vec3 u0(0.3, -1.2, 0.7);
  const FrozenHistory uniform(vector_field(g, [&](const Vec3&) { return u0; }));
  const auto tr = solve_flow(uniform, anchor, t, pts, cfg);
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK((tr[i].phi - (pts[i] - u0 * (t - anchor))).norm() < 1e-14);
    CHECK((tr[i].J - Mat3::Identity()).norm() < 1e-14);
  }
  // anchor time: identity
  const auto at = solve_flow(uniform, anchor, anchor, pts, cfg);
  CHECK((at[0].phi - pts[0]).norm() == 0.0);
  CHECK((at[0].J - Mat3::Identity()).norm() == 0.0);

  // shear: RK4 is exact because x2 is frozen along the characteristic
  const FrozenHistory shear(vector_field(g, [](const Vec3& x) { return Vec3(std::sin(x[1]), 0.0, 0.0); }));
  const auto sh = solve_flow(shear, anchor, t, pts, cfg, SampleMode::exact_sum);
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::abs(sh[i].phi[0] - (pts[i][0] - std::sin(pts[i][1]) * (t - anchor))) < 1e-13);
    CHECK(std::abs(sh[i].J(0, 1) + std::cos(pts[i][1]) * (t - anchor)) < 1e-13);
  }
}

TEST_CASE("characteristic solver converges at fourth order") {
  const FourierGrid g(16);
  auto abc = [](const Vec3& x) {
    return Vec3(std::sin(x[1]) + std::cos(x[2]), std::sin(x[2]) + std::cos(x[0]), std::sin(x[0]) + std::cos(x[1]));
  };
  const FrozenHistory hist(vector_field(g, abc));
  const double anchor = 0.0, t = 0.6;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<Vec3> pts(50);
  for (auto& x : pts) x = Vec3(u(rng), u(rng), u(rng));

  // reference: adaptive Dormand-Prince backwards from t to the anchor
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 3>;
  std::vector<Vec3> ref;
  for (const auto& x : pts) {
    State y{x[0], x[1], x[2]};
    auto rhs = [&](const State& s, State& ds, double) {
      const Vec3 v = abc(Vec3(s[0], s[1], s[2]));
      for (int i = 0; i < 3; ++i) ds[i] = v[i];
    };
    ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>()), rhs, y, t, anchor,
                            -1e-3);
    ref.emplace_back(y[0], y[1], y[2]);
  }
  std::vector<double> err;
  for (int refine : {1, 2, 4, 8}) {
    Rk4Config cfg;
    cfg.h_target = 1.0;
    cfg.min_steps = 2;
    cfg.refine = refine;
    const auto fl = solve_flow(hist, anchor, t, pts, cfg, SampleMode::exact_sum);
    double e = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      e = std::max(e, (fl[i].phi - ref[i]).norm());
      CHECK(fl[i].J.determinant() == doctest::Approx(1.0).epsilon(1e-2));
    }
    err.push_back(e);
  }
  for (size_t i = 1; i < err.size(); ++i) {
    INFO("errors " << err[i - 1] << " -> " << err[i]);
    CHECK(std::log2(err[i - 1] / err[i]) > 3.6);
  }
}

TEST_CASE("perturbation of the zero state is a pure Beltrami sum") {
  const Desk d(96);
  const ZeroState zs(d.st.grid);
  const double t = 0.43;
  Perturbation P = build_perturbation(zs, d.st.s, d.st.fam, t, d.sc);
  const double mu = d.st.s.mu(0);
  const int lam = P.lambda;
  SpectralField hand(d.st.grid, Rank::vector3);
  for (int l : slices_at(t, mu)) {
    const double rho = (1.0 - d.st.s.delta(2)) / (3.0 * kTorusVolume);
    const double chi = cutoff(mu * t - l);
    const int par = l % 2;
    std::vector<std::pair<Vec3i, cplx>> amps;
    for (int p = 0; p < 6; ++p) {
      const double a = chi * std::sqrt(rho) * std::sqrt(d.st.fam.systems[par].baseline[p]);
      amps.emplace_back(d.st.fam.direction(par, 2 * p).k, a);
      amps.emplace_back(d.st.fam.direction(par, 2 * p + 1).k, a);
    }
    hand += make_beltrami_wave(amps, d.st.fam, lam, d.st.grid);
  }
  CHECK(coeff_diff(P.w_o, hand) < 1e-14);
  // with constant amplitudes and Phi = x the corrector vanishes
  const SpectralField w = differentiate(P.U, DiffKind::curl);
  CHECK(max_abs(w - P.w_o) < 1e-14);
  CHECK(P.S.coeffs().abs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation invariants on the desk setup") {
  const Desk d(96);
  const double t = 0.43;
  Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
  CHECK(P.reduced);
  CHECK(P.double_sum_rel <= 1e-6);
  CHECK(P.opposite_parity_pairs == 0);
  for (const auto& sl : P.slices) {
    CHECK(sl.max_principle);
    CHECK(sl.transported_sup <= sl.anchor_sup + sl.tolerance);
    CHECK(sl.min_coefficient > 0.0);
  }
  CHECK(sup_norm(P.w_o) <= 0.5 * d.st.s.M * std::sqrt(d.st.s.delta(1)));

  // the per-x3 shortcut reproduces the general path
  StepConfig general = d.sc;
  general.allow_reduction = false;
  const Perturbation G = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, general);
  CHECK_FALSE(G.reduced);
  CHECK(coeff_diff(P.U, G.U) < 1e-13);
  CHECK(coeff_diff(P.w_o, G.w_o) < 1e-13);
  CHECK(coeff_diff(P.S, G.S) < 1e-13);
}

TEST_CASE("anchor time returns the mollified stress") {
  const Desk d(96);
  const double mu = d.st.s.mu(0), t = 3.0 / mu;
  const Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
  const SpectralField Rl = mollify(d.S.evaluator->stress(t), d.st.s.ell(0));
  CHECK(coeff_diff(P.S, Rl) <= 1e-12 * Rl.coeffs().abs().maxCoeff());
}

TEST_CASE("zero perturbation collapses the assembly") {
  const Desk d(96);
  const double t = 0.43;
  Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
  for (SpectralField* f : {&P.U, &P.U_t, &P.U_t_exact, &P.w_o}) f->coeffs().setZero();
  P.sample_index.clear();
  const SpectralField S = P.S;
  const Assembly A = assemble_reynolds(*d.S.evaluator, d.st.s, P, d.sc);
  const StateEvaluator& st = *d.S.evaluator;
  CHECK(coeff_diff(A.v, st.velocity(t)) == 0.0);
  CHECK(coeff_diff(A.p, st.pressure(t)) == 0.0);
  // R_q - R_ell + (R_ell - S) + R div S
  const SpectralField expect = st.stress(t) - S + inverse_divergence(differentiate(S, DiffKind::div));
  CHECK(coeff_diff(A.stress, expect) <= 1e-14);
  CHECK(A.piece_sup[0] == 0.0);
  CHECK(A.piece_sup[2] == 0.0);
  CHECK(A.piece_sup[3] == 0.0);
  CHECK(A.piece_sup[6] == 0.0);
}

TEST_CASE("one full step") {
  Desk d(96);
  const double t = 0.43;
  std::vector<double> res;
  for (int refine : {1, 2}) {
    d.sc.rk4.refine = refine;
    d.sc.diagnostics = refine == 1;
    Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
    const Assembly A = assemble_reynolds(*d.S.evaluator, d.st.s, P, d.sc);
    CHECK(A.divergence_defect <= 1e-8);
    CHECK(A.trace_defect <= 1e-8);
    CHECK(A.increment_defect <= 1e-12);
    CHECK(std::abs(A.p.coeff({0, 0, 0}, 0)) == 0.0);
    if (refine == 1) {
      // pieces add up to the stress
      double sum = 0.0;
      for (double x : A.piece_sup) sum += x;
      CHECK(A.stress_sup <= sum * (1.0 + 1e-12));
      CHECK(A.wo_sup > A.wc_sup);
    }
    res.push_back(A.residual_sup);
  }
  INFO("residuals " << res[0] << " " << res[1]);
  CHECK(res[1] < res[0] / 8.0);
}

TEST_CASE("iterated state and ledger") {
  Desk d(96);
  d.sc.diagnostics = false;
  const IterationState S1 = iterate_once(d.S, d.st.s, d.st.fam, d.sc);
  CHECK(S1.q == 1);
  const double t = 0.43;
  Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
  const Assembly A = assemble_reynolds(*d.S.evaluator, d.st.s, P, d.sc);
  CHECK(coeff_diff(S1.evaluator->velocity(t), A.v) == 0.0);
  CHECK(coeff_diff(S1.evaluator->stress(t), A.stress) == 0.0);

  const auto rows0 = inductive_ledger(*d.S.evaluator, nullptr, d.st.s, t);
  std::vector<std::string> names;
  for (const auto& r : rows0) {
    names.push_back(r.name);
    CHECK(r.q == 0);
    CHECK(r.bound > 0.0);
    CHECK(r.ratio == doctest::Approx(r.measured / r.bound));
  }
  for (const char* n : {"v_C0", "v_C1", "p_C0", "p_C1", "R_C0", "R_C1", "R_Dt", "v_t_C0", "p_t_C0"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  const std::string csv = ledger_csv(rows0);
  CHECK(csv.find("R_Dt") != std::string::npos);

  const EnergyGapReport g0 = energy_gap(*d.S.evaluator, d.st.s, {0.1, 0.43, 0.9});
  for (const auto& r : g0.rows) {
    CHECK(std::abs(r.gap) <= 1e-14);
    CHECK(r.inside);
  }
}

TEST_CASE("next-stage energy lands inside the window") {
  Desk d(96);
  d.sc.diagnostics = false;
  d.sc.exact_time_derivative = false;
  const double t = 0.43, e = d.S.evaluator->profile().e(t);
  for (double lam : {5.0, 10.0}) {
    d.sc.lambda_override = lam;
    Perturbation P = build_perturbation(*d.S.evaluator, d.st.s, d.st.fam, t, d.sc);
    const Assembly A = assemble_reynolds(*d.S.evaluator, d.st.s, P, d.sc);
    const double gap = e * (1.0 - d.st.s.delta(2)) - A.energy;
    INFO("lambda " << lam << " gap " << gap);
    CHECK(std::abs(gap) <= d.st.s.delta(2) * e / 4.0);
  }
}
