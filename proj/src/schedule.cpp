#include "cilab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "cilab/snapshot.hpp"

namespace cilab {
namespace {

constexpr double kIntLimit = 4503599627370496.0;  // 2^52

// ceil with a guard against pow() landing a hair above an exact integer
double guarded_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, x)) return r;
  return std::ceil(x);
}

double log_of_rounded(double log_raw) {
  if (log_raw > std::log(kIntLimit)) return log_raw;
  return std::log(guarded_ceil(std::exp(log_raw)));
}

double log_sum(double x, double y) {
  const double m = std::max(x, y);
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

void add(ParameterSchedule& s, const std::string& group, const std::string& name, int q, double lhs, double rhs,
         bool logd) {
  Condition c;
  c.group = group;
  c.name = name;
  c.q = q;
  c.lhs = lhs;
  c.rhs = rhs;
  c.log_domain = logd;
  c.pass = lhs <= rhs * (logd ? 1.0 : 1.0 + 1e-14) + (logd ? 1e-12 * std::max(1.0, std::abs(rhs)) : 0.0);
  s.conditions.push_back(c);
}

// Probe schedule with only a, b, c set.
ParameterSchedule probe(double a, double b, double c) {
  ParameterSchedule s;
  s.p.a = a;
  s.p.b = b;
  s.p.c = c;
  return s;
}

bool ordering_holds(double a, double b, double c, int q_max) {
  const ParameterSchedule s = probe(a, b, c);
  for (int q = 0; q <= q_max + 1; ++q) {
    if (0.5 * s.log_delta(q) + 0.2 * s.log_lambda(q) > 0.5 * s.log_delta(q + 1) + 0.2 * s.log_lambda(q + 1) + 1e-12)
      return false;
    if (s.log_lambda(q) > 2.0 / (b + 1.0) * s.log_lambda(q + 1) + 1e-12) return false;
    if (s.log_delta(q + 2) > s.log_delta(q + 1) - std::log(2.0) + 1e-12) return false;
  }
  return true;
}

}  // namespace

double ParameterSchedule::log_delta(int q) const { return -std::pow(p.b, q) * std::log(p.a); }
double ParameterSchedule::delta(int q) const { return std::exp(log_delta(q)); }
double ParameterSchedule::log_lambda(int q) const { return log_of_rounded(p.c * std::pow(p.b, q + 1) * std::log(p.a)); }
double ParameterSchedule::lambda(int q) const { return std::exp(log_lambda(q)); }
double ParameterSchedule::log_mu(int q) const {
  return log_of_rounded(0.25 * (log_delta(q + 1) + log_delta(q)) + 0.5 * (log_lambda(q) + log_lambda(q + 1)));
}
double ParameterSchedule::mu(int q) const { return std::exp(log_mu(q)); }
double ParameterSchedule::log_ell(int q) const {
  return -0.125 * log_delta(q + 1) + 0.125 * log_delta(q) - 0.25 * log_lambda(q) - 0.75 * log_lambda(q + 1);
}
double ParameterSchedule::ell(int q) const { return std::exp(log_ell(q)); }

bool ParameterSchedule::feasible() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.pass; });
}

std::vector<std::string> ParameterSchedule::failures() const {
  std::vector<std::string> out;
  for (const auto& c : conditions)
    if (!c.pass) {
      std::ostringstream o;
      o << c.group << "/" << c.name;
      if (c.q >= 0) o << " (q=" << c.q << ")";
      o << ": " << c.lhs << " > " << c.rhs << (c.log_domain ? " [log]" : "");
      out.push_back(o.str());
    }
  return out;
}

std::string ParameterSchedule::hash() const {
  nlohmann::ordered_json j;
  j["a"] = p.a;
  j["b"] = p.b;
  j["c"] = p.c;
  j["alpha"] = p.alpha;
  j["epsilon"] = p.epsilon;
  j["q_max"] = p.q_max;
  j["E1"] = E1;
  j["E2"] = E2;
  j["C0"] = C0;
  return fnv1a_hex(j.dump());
}

double a0_search(double b, double c, int q_max) {
  double hi = 2.0;
  while (!ordering_holds(hi, b, c, q_max)) {
    hi *= 2.0;
    if (hi > 1e300) throw ParameterError("a0_search: no admissible a below 1e300");
  }
  double lo = hi / 2.0;
  if (lo < 1.0 + 1e-9 || ordering_holds(lo, b, c, q_max)) return hi == 2.0 ? 2.0 : lo;
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(lo * hi);
    (ordering_holds(mid, b, c, q_max) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

double log_lambda_bar_raw(double E1, double E2, const ParameterSchedule& s) {
  const double la = std::log(s.p.a), b = s.p.b, c = s.p.c, al = s.p.alpha;
  double m = b / (1.0 - 2.0 * al) * la;
  if (E1 > 0.0) m = std::max(m, std::log(E1) + b * la);
  if (E2 > 0.0) m = std::max(m, std::log(E2) + (-(c - 1.0) * b + 0.5) * la);
  return m;
}

// Starting-triple inequalities with unit constants; the lower
// bounds grow with C0, the upper bounds do not depend on it or shrink.
struct StartChecks {
  std::vector<Condition> lower, upper;
};

StartChecks start_checks(double log_lb, double E1, double E2, const ParameterSchedule& s) {
  ParameterSchedule tmp;
  const double al = s.p.alpha;
  const double ld1 = s.log_delta(1), ld0 = s.log_delta(0), ll0 = s.log_lambda(0);
  const double lE1 = std::log(std::max(E1, 1e-300)), lE2 = std::log(std::max(E2, 1e-300));
  add(tmp, "start", "una", 0, lE1 - ld1, log_lb, true);
  add(tmp, "start", "due", 0, -ld1 / (1.0 - 2.0 * al), log_lb, true);
  add(tmp, "start", "cinque", 0, lE2 - ld1 - 0.5 * ld0 - ll0, log_lb, true);
  add(tmp, "start", "sei", 0, (lE1 - ld1 - 0.5 * ld0 - ll0) / (1.0 - 2.0 * al), log_lb, true);
  StartChecks out;
  out.lower = tmp.conditions;
  tmp.conditions.clear();
  add(tmp, "start", "tre", 0, lE1, ld1 + ll0, true);
  add(tmp, "start", "quattro", 0, 2.0 * al * log_lb, ld1 + ll0, true);
  add(tmp, "start", "sette", 0, log_lb, 0.5 * ld0 + ll0, true);
  out.upper = tmp.conditions;
  return out;
}

}  // namespace

double family_mode_lambda_bar(double E1, double E2, const ParameterSchedule& s) {
  const double l = std::log(s.C0) + log_lambda_bar_raw(E1, E2, s);
  if (l > std::log(kIntLimit)) return std::exp(l);
  return guarded_ceil(std::exp(l));
}

ParameterSchedule make_schedule(const ScheduleParams& params, const BeltramiFamily& fam, double E1, double E2) {
  const double a = params.a, b = params.b, c = params.c, al = params.alpha;
  if (!(a > 1.0)) throw ParameterError("schedule: a must exceed 1");
  if (!(b > 1.0)) throw ParameterError("schedule: b must exceed 1");
  if (!(al > 0.0 && al < 0.5)) throw ParameterError("schedule: alpha must lie in (0, 1/2)");
  if (!(params.epsilon > 0.0)) throw ParameterError("schedule: epsilon must be positive");
  if (params.q_max < 0) throw ParameterError("schedule: q_max must be non-negative");
  const double c_min = al < 0.2 ? 2.5 : std::max(2.5, (3.0 - 2.0 * al) / (2.0 * (1.0 - 2.0 * al)));
  if (!(c > c_min)) throw ParameterError("schedule: c must exceed " + std::to_string(c_min) + " for this alpha");

  ParameterSchedule s;
  s.p = params;
  s.E1 = E1;
  s.E2 = E2;
  s.beta = (b - 1.0) / (5.0 * b + 5.0);
  s.r0 = fam.r0;
  s.C_bar = 0.0;
  for (int q = 0; q <= params.q_max; ++q)
    s.C_bar = std::max(s.C_bar, 3.0 * kTorusVolume / (1.0 - s.delta(q + 2) / s.delta(q + 1)));
  s.eta = s.r0 / (8.0 * s.C_bar);
  s.C_tilde = max_gamma_sum(fam, 4000, params.seed);
  s.M = 4.0 * s.C_tilde * 24.0;
  s.a0 = a0_search(b, c, params.q_max);

  // C0: smallest power of two for which every lower-bound inequality holds.
  const double lraw = log_lambda_bar_raw(E1, E2, s);
  StartChecks chk;
  for (int j = 0; j <= 64; ++j) {
    s.C0 = std::ldexp(1.0, j);
    chk = start_checks(std::log(s.C0) + lraw, E1, E2, s);
    if (std::all_of(chk.lower.begin(), chk.lower.end(), [](const Condition& x) { return x.pass; })) break;
  }
  s.lambda_bar_formula = std::exp(std::log(s.C0) + lraw);

  const double la = std::log(a), lC0 = std::log(s.C0);
  add(s, "abc_2", "b>1", -1, 1.0, b, false);
  add(s, "abc_2", "c>c_min", -1, c_min, c, false);
  add(s, "abc_2", "a>=a0", -1, std::log(s.a0), la, true);
  add(s, "abc_2", "a>=C0*E1", -1, lC0 + std::log(std::max(E1, 1e-300)), la, true);
  add(s, "abc_2", "a>=(C0*E2)^(1/((2c-1)b-1))", -1,
      (lC0 + std::log(std::max(E2, 1e-300))) / ((2.0 * c - 1.0) * b - 1.0), la, true);
  add(s, "abc", "a^((c-1)b-1/2)>=C0*E1", -1, lC0 + std::log(std::max(E1, 1e-300)), ((c - 1.0) * b - 0.5) * la, true);
  add(s, "abc", "a^((2c-1)b-1)>=C0*E2", -1, lC0 + std::log(std::max(E2, 1e-300)), ((2.0 * c - 1.0) * b - 1.0) * la, true);
  for (int q = 0; q <= params.q_max; ++q) {
    const double ld0 = s.log_delta(q), ld1 = s.log_delta(q + 1), ll0 = s.log_lambda(q), ll1 = s.log_lambda(q + 1);
    const double lmu = s.log_mu(q), lell = s.log_ell(q);
    add(s, "lambdamu_2", "delta^(1/2)lambda*ell/delta1^(1/2)<=1", q, 0.5 * ld0 + ll0 + lell - 0.5 * ld1, 0.0, true);
    add(s, "lambdamu_2", "delta^(1/2)lambda/mu+1/(ell*lambda1)<=lambda1^-beta", q,
        log_sum(0.5 * ld0 + ll0 - lmu, -lell - ll1), -s.beta * ll1, true);
    add(s, "lambdamu_2", "1/lambda1<=delta1^(1/2)/mu", q, -ll1, 0.5 * ld1 - lmu, true);
    add(s, "deltalambda", "delta^(1/2)lambda^(1/5) increasing", q, 0.5 * ld0 + 0.2 * ll0, 0.5 * ld1 + 0.2 * ll1, true);
    add(s, "deltalambda", "delta1<=delta", q, ld1, ld0, true);
    add(s, "deltalambda", "lambda<=lambda1^(2/(b+1))", q, ll0, 2.0 / (b + 1.0) * ll1, true);
  }
  for (const auto& x : chk.lower) s.conditions.push_back(x);
  for (const auto& x : chk.upper) s.conditions.push_back(x);

  if (params.strict && !s.feasible()) {
    std::ostringstream o;
    o << "schedule infeasible in strict mode:";
    for (const auto& f : s.failures()) o << "\n  " << f;
    throw InfeasibleError(o.str());
  }
  return s;
}

std::string schedule_table(const ParameterSchedule& s, int q_last) {
  std::ostringstream o;
  o << std::setprecision(6);
  o << "q,delta_q,lambda_q,mu_q,ell_q\n";
  for (int q = 0; q <= q_last; ++q)
    o << q << "," << s.delta(q) << "," << s.lambda(q) << "," << s.mu(q) << "," << s.ell(q) << "\n";
  o << "\ngroup,condition,q,lhs,rhs,log_domain,verdict\n";
  for (const auto& c : s.conditions)
    o << c.group << ",\"" << c.name << "\"," << c.q << "," << c.lhs << "," << c.rhs << "," << (c.log_domain ? 1 : 0)
      << "," << (c.pass ? "pass" : "fail") << "\n";
  return o.str();
}

}  // namespace cilab
