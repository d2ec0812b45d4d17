#include "cilab/flow.hpp"

#include <cmath>
#include <sstream>

#include "cilab/spectral_ops.hpp"

namespace cilab {

SpectralField MollifiedHistory::velocity(double s) const { return mollify(state_->velocity(s), ell_); }
SpectralField MollifiedHistory::rate(double s) const { return mollify(state_->velocity_rate(s), ell_); }

FlowPlan plan_flow(double t, double anchor, double v_c1, const Rk4Config& cfg) {
  if (cfg.refine < 1 || cfg.min_steps < 1 || !(cfg.h_target > 0.0)) throw ParameterError("rk4: refine, min_steps, h_target must be positive");
  FlowPlan p;
  p.t = t;
  p.anchor = anchor;
  const double span = std::abs(anchor - t);
  const double base = std::ceil(span * v_c1 / cfg.h_target);
  const double steps = double(cfg.refine) * std::max<double>(cfg.min_steps, base);
  if (!(steps <= cfg.max_steps)) {
    std::ostringstream o;
    o << "transport stiffness: " << steps << " characteristic steps needed (limit " << cfg.max_steps << ")";
    throw AccuracyError(o.str());
  }
  p.steps = int(steps);
  p.h = (anchor - t) / p.steps;
  return p;
}

double c1_bound(const SpectralField& v) {
  const auto& g = v.grid();
  double s = 0.0;
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    double a = 0.0;
    for (int c = 0; c < v.components(); ++c) a += std::norm(v.coeffs()(idx, c));
    if (a > 0.0) s += mode_weight(k3) * std::sqrt(a) * (1.0 + std::sqrt(double(k1 * k1 + k2 * k2 + k3 * k3)));
  });
  return s;
}

bool depends_on_x3_only(const SpectralField& f) {
  bool ok = true;
  f.grid().for_each_mode([&](Index idx, int k1, int k2, int) {
    if (!ok || (k1 == 0 && k2 == 0)) return;
    for (int c = 0; c < f.components(); ++c)
      if (f.coeffs()(idx, c) != cplx(0.0)) {
        ok = false;
        return;
      }
  });
  return ok;
}

StageSamplers stage_samplers(const VelocityHistory& hist, const FlowPlan& plan, bool with_rate, SampleMode mode) {
  StageSamplers st;
  st.plan = plan;
  for (int j = 0; j <= 2 * plan.steps; ++j) {
    const double s = plan.half_time(j);
    const SpectralField v = hist.velocity(s);
    st.x3_only = st.x3_only && depends_on_x3_only(v);
    st.v.emplace_back(v, mode, true);
    if (with_rate) {
      const SpectralField r = hist.rate(s);
      st.x3_only = st.x3_only && depends_on_x3_only(r);
      st.rate.emplace_back(r, mode, false);
    }
  }
  return st;
}

namespace {

void velocity_and_gradient(const FieldSampler& f, const Vec3& y, Vec3& v, Mat3& G) {
  double out[3], grad[9];
  f.eval(y.data(), out, grad);
  for (int i = 0; i < 3; ++i) {
    v[i] = out[i];
    for (int j = 0; j < 3; ++j) G(i, j) = grad[3 * i + j];
  }
}

}  // namespace

FlowPoint integrate_flow(const StageSamplers& st, const Vec3& x) {
  const double h = st.plan.h;
  Vec3 y = x;
  Mat3 J = Mat3::Identity();
  Vec3 k[4];
  Mat3 K[4];
  for (int m = 0; m < st.plan.steps; ++m) {
    Vec3 v;
    Mat3 G;
    velocity_and_gradient(st.v[2 * m], y, v, G);
    k[0] = v, K[0] = G * J;
    velocity_and_gradient(st.v[2 * m + 1], y + 0.5 * h * k[0], v, G);
    k[1] = v, K[1] = G * (J + 0.5 * h * K[0]);
    velocity_and_gradient(st.v[2 * m + 1], y + 0.5 * h * k[1], v, G);
    k[2] = v, K[2] = G * (J + 0.5 * h * K[1]);
    velocity_and_gradient(st.v[2 * m + 2], y + h * k[2], v, G);
    k[3] = v, K[3] = G * (J + h * K[2]);
    y += h / 6.0 * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
    J += h / 6.0 * (K[0] + 2.0 * K[1] + 2.0 * K[2] + K[3]);
  }
  return {y, J};
}

void integrate_flow_dual(const StageSamplers& st, const Vec3& x, Vec3& phi, Vec3& phi_t) {
  if (st.rate.size() != st.v.size()) throw ParameterError("integrate_flow_dual: stage samplers lack the velocity rate");
  using D1 = Eigen::Matrix<double, 1, 1>;
  const int N = st.plan.steps;
  const Dual h(st.plan.h, D1(-1.0 / N));  // h = (anchor - t)/N
  Dual y[3] = {Dual(x[0], D1(0.0)), Dual(x[1], D1(0.0)), Dual(x[2], D1(0.0))};
  auto stage = [&](int j, const Dual* p, Dual* out) {
    st.v[j].eval(p, out);
    const double sdot = 1.0 - 0.5 * j / N;  // d/dt of t + j h/2
    const double pv[3] = {p[0].value(), p[1].value(), p[2].value()};
    double r[3];
    st.rate[j].eval(pv, r);
    for (int i = 0; i < 3; ++i) out[i].derivatives()(0) += r[i] * sdot;
  };
  Dual k1[3], k2[3], k3[3], k4[3], p[3];
  for (int m = 0; m < N; ++m) {
    stage(2 * m, y, k1);
    for (int i = 0; i < 3; ++i) p[i] = y[i] + 0.5 * h * k1[i];
    stage(2 * m + 1, p, k2);
    for (int i = 0; i < 3; ++i) p[i] = y[i] + 0.5 * h * k2[i];
    stage(2 * m + 1, p, k3);
    for (int i = 0; i < 3; ++i) p[i] = y[i] + h * k3[i];
    stage(2 * m + 2, p, k4);
    for (int i = 0; i < 3; ++i) y[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  for (int i = 0; i < 3; ++i) {
    phi[i] = y[i].value();
    phi_t[i] = y[i].derivatives()(0);
  }
}

std::vector<FlowPoint> solve_flow(const VelocityHistory& hist, double anchor, double t, const std::vector<Vec3>& points,
                                  const Rk4Config& cfg, SampleMode mode) {
  const FlowPlan plan = plan_flow(t, anchor, c1_bound(hist.velocity(t)), cfg);
  const StageSamplers st = stage_samplers(hist, plan, false, mode);
  std::vector<FlowPoint> out(points.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < long(points.size()); ++i) out[i] = integrate_flow(st, points[i]);
  return out;
}

}  // namespace cilab
