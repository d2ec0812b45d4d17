#include <doctest.h>

#include <cmath>
#include <random>

#include "cilab/beltrami.hpp"
#include "cilab/profile.hpp"
#include "cilab/schedule.hpp"
#include "cilab/start_triple.hpp"

using namespace cilab;

namespace {

const BeltramiFamily& families() {
  static const BeltramiFamily fam = build_families();
  return fam;
}

ScheduleParams desk(int q_max = 3) {
  ScheduleParams p;
  p.q_max = q_max;
  return p;
}

}  // namespace

TEST_CASE("desk schedule arithmetic") {
  const ParameterSchedule s = make_schedule(desk(), families(), 1.0, 1.0);
  // independent long-double evaluation
  const long double a = 2.0L, b = 1.1L, c = 2.6L;
  auto delta = [&](int q) { return std::pow(a, -std::pow(b, q)); };
  auto lambda = [&](int q) { return std::ceil(std::pow(a, c * std::pow(b, q + 1))); };
  CHECK(s.delta(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.delta(1) == doctest::Approx(double(delta(1))).epsilon(1e-14));
  CHECK(s.delta(1) == doctest::Approx(0.46651649576840370).epsilon(1e-14));
  CHECK(s.lambda(0) == doctest::Approx(8.0).epsilon(1e-14));
  for (int q = 0; q <= 3; ++q) {
    CHECK(s.lambda(q) == doctest::Approx(double(lambda(q))).epsilon(1e-14));
    CHECK(s.delta(q + 1) < s.delta(q));
    const long double mu = std::ceil(std::pow(delta(q + 1) * delta(q), 0.25L) * std::sqrt(lambda(q) * lambda(q + 1)));
    CHECK(s.mu(q) == doctest::Approx(double(mu)).epsilon(1e-14));
    const long double ell = std::pow(delta(q + 1), -0.125L) * std::pow(delta(q), 0.125L) * std::pow(lambda(q), -0.25L) *
                            std::pow(lambda(q + 1), -0.75L);
    CHECK(s.ell(q) == doctest::Approx(double(ell)).epsilon(1e-12));
  }
  CHECK(s.mu(0) == doctest::Approx(6.0));
  CHECK(s.ell(0) == doctest::Approx(0.115427).epsilon(1e-5));
  CHECK(s.beta == doctest::Approx(0.1 / 10.5).epsilon(1e-14));
  // desk mode records failures instead of throwing
  CHECK_FALSE(s.feasible());
  CHECK_FALSE(s.failures().empty());
  const std::string table = schedule_table(s, 3);
  CHECK(table.find("q,delta_q,lambda_q,mu_q,ell_q") != std::string::npos);
  CHECK(table.find("fail") != std::string::npos);
}

TEST_CASE("strict mode") {
  ScheduleParams p = desk(1);
  p.strict = true;
  CHECK_THROWS_AS(make_schedule(p, families(), 1.0, 1.0), InfeasibleError);

  p.a = 1e6;
  const ParameterSchedule s = make_schedule(p, families(), 3.0, 10.0);
  CHECK(s.feasible());
  // a^((c-1)b-1/2) >= C0 ||e||_C1 evaluated by hand in logs
  const double lhs = ((p.c - 1.0) * p.b - 0.5) * std::log(p.a);
  CHECK(lhs >= std::log(s.C0 * 3.0));
  for (const auto& c : s.conditions) {
    CHECK(c.pass);
    CHECK(c.lhs <= c.rhs + 1e-12);
  }
  // lambda_q beyond 2^52 is kept as a logarithm
  CHECK(std::isfinite(s.log_lambda(2)));
}

TEST_CASE("schedule parameter domain") {
  ScheduleParams p = desk(1);
  p.alpha = 0.6;
  CHECK_THROWS_AS(make_schedule(p, families(), 1.0, 1.0), ParameterError);
  p = desk(1);
  p.b = 1.0;
  CHECK_THROWS_AS(make_schedule(p, families(), 1.0, 1.0), ParameterError);
  p = desk(1);
  p.c = 2.4;
  CHECK_THROWS_AS(make_schedule(p, families(), 1.0, 1.0), ParameterError);
}

TEST_CASE("family lambda_bar branches") {
  const ParameterSchedule s = make_schedule(desk(1), families(), 1.0, 1.0);
  const double a = 2.0, b = 1.1, c = 2.6, al = 0.15;
  auto formula = [&](double E1, double E2) {
    return std::ceil(s.C0 * std::max({std::pow(a, b / (1.0 - 2.0 * al)), E1 * std::pow(a, b),
                                      E2 * std::pow(a, -(c - 1.0) * b + 0.5)}));
  };
  CHECK(family_mode_lambda_bar(1.0, 1.0, s) == formula(1.0, 1.0));
  // E1 dominating
  CHECK(family_mode_lambda_bar(10.0, 1.0, s) == std::ceil(s.C0 * 10.0 * std::pow(a, b)));
  // E2 large enough takes over
  const double big = family_mode_lambda_bar(1.0, 1e4, s);
  CHECK(big == std::ceil(s.C0 * 1e4 * std::pow(a, -(c - 1.0) * b + 0.5)));
  CHECK(family_mode_lambda_bar(1.0, 1e5, s) > big);
}

TEST_CASE("energy profiles") {
  CHECK(smooth_step(-0.5) == 0.0);
  CHECK(smooth_step(1.5) == 1.0);
  for (double x : {0.1, 0.37, 0.5, 0.81}) CHECK(smooth_step(x) + smooth_step(1.0 - x) == doctest::Approx(1.0).epsilon(1e-15));
  // derivative against central differences
  const double h = 1e-5;
  CHECK(smooth_step_d1(0.3) == doctest::Approx((smooth_step(0.3 + h) - smooth_step(0.3 - h)) / (2 * h)).epsilon(1e-7));

  const auto k = constant_profile(0.7);
  CHECK(k->e(0.4) == 0.7);
  CHECK(k->de(0.4) == 0.0);

  const double kappa = std::pow(16.0, 0.3) * (1.0 - 2e-4);
  const auto an = anchored_profile(0.8, kappa, 6);
  for (int l = 0; l <= 6; ++l) {
    const double t = l / 6.0;
    CHECK(an->de(t) == doctest::Approx(-2.0 * kappa * an->e(t)).epsilon(1e-12));
  }
  CHECK(an->de(0.2) == doctest::Approx((an->e(0.2 + h) - an->e(0.2 - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("profile family") {
  const double K = 4.0;
  const auto fam = profile_family(K, 3);
  REQUIRE(fam.size() == 3);
  for (const auto& p : fam) {
    CHECK(std::abs(p->e(0.0) - fam[0]->e(0.0)) <= 1e-14);
    CHECK(std::abs(p->de(0.0) - fam[0]->de(0.0)) <= 1e-14);
    CHECK(p->de(0.0) == doctest::Approx(-2.0 * K));
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= 10000; ++i) {
      const double e = p->e(i / 10000.0);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    CHECK(lo >= 0.5);
    CHECK(hi <= 1.0);
  }
  const double t = 1.0 / (8.0 * K);
  const double step = family_bump_step(3);
  CHECK(step > 0.0);
  CHECK(fam[0]->e(t) - fam[1]->e(t) == doctest::Approx(step).epsilon(1e-12));
  CHECK(fam[1]->e(t) - fam[2]->e(t) == doctest::Approx(step).epsilon(1e-12));
  CHECK(fam[0]->id() != fam[1]->id());
  CHECK_THROWS_AS(profile_family(1.0, 2), ParameterError);
  CHECK_THROWS_AS(profile_family(4.0, 1), ParameterError);
}

TEST_CASE("lambda_bar selection") {
  ScheduleParams p = desk(1);
  const auto prof = std::vector<ProfilePtr>{anchored_profile(0.8, std::pow(16.0, 0.3) * (1.0 - 2e-4), 6)};
  const ParameterSchedule s = make_schedule(p, families(), prof[0]->c1_norm(), prof[0]->c2_norm());
  const FourierGrid g(64);
  const auto over = select_lambda_bar(s, prof, g, {2}, 16);
  CHECK(over.value == 16);
  CHECK(over.rule == "override");
  CHECK(over.worst_ratio == doctest::Approx(anchor_ball_ratio(s, *prof[0], 16, 2)));

  // family members: the formula overshoots kmax and desk mode walks up to the first ball-safe value
  const auto members = profile_family(4.0, 2);
  double E1 = 0.0, E2 = 0.0;
  for (const auto& m : members) {
    E1 = std::max(E1, m->c1_norm());
    E2 = std::max(E2, m->c2_norm());
  }
  const ParameterSchedule sf = make_schedule(p, families(), E1, E2);
  const FourierGrid wide(256);
  REQUIRE(family_mode_lambda_bar(E1, E2, sf) > wide.kmax());
  const auto raised = select_lambda_bar(sf, members, wide, {0}, 0);
  CHECK(raised.rule == "raised");
  CHECK(raised.value == wide.kmax());
  CHECK(raised.worst_ratio <= sf.r0);
  CHECK(raised.worst_ratio > 0.0);
  CHECK_THROWS_AS(select_lambda_bar(sf, members, FourierGrid(128), {0}, 0), InfeasibleError);

  ParameterSchedule st = s;
  st.p.strict = true;
  CHECK_THROWS_AS(select_lambda_bar(st, prof, g, {2}, 16), ParameterError);
}
