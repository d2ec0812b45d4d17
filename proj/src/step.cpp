#include "cilab/step.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "cilab/fft.hpp"
#include "cilab/inverse_divergence.hpp"
#include "cilab/norms.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {
namespace {

using Mat63 = Eigen::Matrix<double, 6, 3>;
using D1 = Eigen::Matrix<double, 1, 1>;
const cplx kI(0.0, 1.0);

Mat3 sym_matrix(const Vec6& r) {
  Mat3 m;
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    m(i, j) = m(j, i) = r[c];
  }
  return m;
}

double frobenius(const Vec6& r) {
  return std::sqrt(r[0] * r[0] + r[3] * r[3] + r[5] * r[5] + 2.0 * (r[1] * r[1] + r[2] * r[2] + r[4] * r[4]));
}

struct SliceContext {
  TimeSliceData d;
  double chi = 0.0, chi_t = 0.0;
  double lam = 0.0;
  StageSamplers st;
  SpectralField anchor_field;
  FieldSampler anchor;
  const BeltramiFamily* fam = nullptr;
  bool exact_dt = false;
  // per pair: k, i (k x B)/(lam |k|^2), B
  std::array<Vec3, 6> k;
  std::array<CVec3, 6> uvec, bvec;
  std::array<std::array<std::vector<cplx>, 3>, 6> table;  // e^{i lam k_a x_a} per axis
};

struct PointData {
  Vec3 phi, phi_t, phi_t_exact = Vec3::Zero();
  Mat3 J;
  Vec6 R, c, a, a_t, a_t_exact = Vec6::Zero();
  Mat63 grad_a;
  double ball = 0.0;
};

PointData evaluate_point(const SliceContext& ctx, const Vec3& x, bool exact_dt) {
  PointData d;
  const FlowPoint fp = integrate_flow(ctx.st, x);
  d.phi = fp.phi;
  d.J = fp.J;
  double r[6], g[18];
  ctx.anchor.eval(d.phi.data(), r, g);
  const double rho = ctx.d.rho, srho = std::sqrt(rho);
  d.R = Vec6(r);
  d.ball = frobenius(d.R) / rho;
  const int par = ctx.d.parity;
  d.c = ctx.fam->coefficients(Mat3::Identity() - sym_matrix(d.R) / rho, par);
  const Vec6 gam = d.c.cwiseMax(0.0).cwiseSqrt();
  d.a = srho * gam;
  Mat63 dR;
  for (int c = 0; c < 6; ++c)
    for (int j = 0; j < 3; ++j) dR(c, j) = g[3 * c] * d.J(0, j) + g[3 * c + 1] * d.J(1, j) + g[3 * c + 2] * d.J(2, j);
  const Mat6& Ainv = ctx.fam->systems[par].inverse;
  const Mat63 dc = Ainv * (-dR / rho);
  for (int p = 0; p < 6; ++p) d.grad_a.row(p) = gam[p] > 0.0 ? Eigen::RowVector3d(srho * dc.row(p) / (2.0 * gam[p])) : Eigen::RowVector3d::Zero();
  double v[3];
  ctx.st.v[0].eval(x.data(), v);
  const Vec3 vx(v[0], v[1], v[2]);
  d.phi_t = -d.J * vx;
  d.a_t = -d.grad_a * vx;
  if (exact_dt) {
    Vec3 phi2, phit;
    integrate_flow_dual(ctx.st, x, phi2, phit);
    d.phi_t_exact = phit;
    const Dual pd[3] = {Dual(phi2[0], D1(phit[0])), Dual(phi2[1], D1(phit[1])), Dual(phi2[2], D1(phit[2]))};
    Dual rr[6];
    ctx.anchor.eval(pd, rr);
    Vec6 Rt;
    for (int c = 0; c < 6; ++c) Rt[c] = rr[c].derivatives()(0);
    const Vec6 ct = Ainv * (-Rt / rho);
    for (int p = 0; p < 6; ++p) d.a_t_exact[p] = gam[p] > 0.0 ? srho * ct[p] / (2.0 * gam[p]) : 0.0;
  }
  return d;
}

// Per-key coefficients multiplying e^{i lam k.x} for each pair.
struct KeyData {
  std::array<cplx, 6> cu, cdu, cad;
  Vec6 S;
  double ball, min_c, rsup;
  int min_p;
};

KeyData key_from_point(const SliceContext& ctx, const PointData& d, const Vec3& x) {
  KeyData kd;
  for (int p = 0; p < 6; ++p) {
    const Vec3& k = ctx.k[p];
    const cplx ph = std::exp(kI * (ctx.lam * k.dot(d.phi - x)));
    kd.cu[p] = ctx.chi * d.a[p] * ph;
    kd.cdu[p] = (ctx.chi_t * d.a[p] + ctx.chi * d.a_t[p] + ctx.chi * d.a[p] * kI * (ctx.lam * k.dot(d.phi_t))) * ph;
    kd.cad[p] = (ctx.chi_t * d.a[p] + ctx.chi * d.a_t_exact[p] + ctx.chi * d.a[p] * kI * (ctx.lam * k.dot(d.phi_t_exact))) * ph;
  }
  kd.S = ctx.chi * ctx.chi * d.R;
  kd.ball = d.ball;
  kd.min_c = d.c.minCoeff(&kd.min_p);
  kd.rsup = frobenius(d.R);
  return kd;
}

enum class Out { U, U_t, U_t_exact, Wo, S };

PhysicalField accumulate(const FourierGrid& g, const std::vector<SliceContext>& ctxs,
                         const std::vector<std::vector<KeyData>>& keys, bool reduced, Out which) {
  const int n = g.n();
  PhysicalField out(g, which == Out::S ? Rank::symtensor3 : Rank::vector3);
  const int nc = which == Out::S ? 6 : 3;
#pragma omp parallel for schedule(static)
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i3 = 0; i3 < n; ++i3) {
        const Index idx = (Index(i1) * n + i2) * n + i3;
        const Index key = reduced ? i3 : idx;
        double vals[6] = {0, 0, 0, 0, 0, 0};
        for (size_t b = 0; b < ctxs.size(); ++b) {
          const KeyData& kd = keys[b][key];
          if (which == Out::S) {
            for (int c = 0; c < 6; ++c) vals[c] += kd.S[c];
            continue;
          }
          const SliceContext& cx = ctxs[b];
          const auto& coef = which == Out::U ? kd.cu : which == Out::U_t ? kd.cdu : which == Out::U_t_exact ? kd.cad : kd.cu;
          for (int p = 0; p < 6; ++p) {
            const cplx z = coef[p] * cx.table[p][0][i1] * cx.table[p][1][i2] * cx.table[p][2][i3];
            const CVec3& vec = which == Out::Wo ? cx.bvec[p] : cx.uvec[p];
            for (int c = 0; c < 3; ++c) vals[c] += 2.0 * (z * vec[c]).real();
          }
        }
        for (int c = 0; c < nc; ++c) out[c][idx] = vals[c];
      }
  return out;
}

// Largest possible excess of the continuous sup over the grid sup.
double offgrid_allowance(const SpectralField& f) {
  const auto& g = f.grid();
  const double h = kTwoPi / g.n();
  double s = 0.0;
  g.for_each_mode([&](Index idx, int k1, int k2, int k3) {
    double a = 0.0;
    for (int c = 0; c < f.components(); ++c) {
      const auto [i, j] = f.rank() == Rank::symtensor3 ? sym_pair(c) : std::pair<int, int>{0, 0};
      a += (i == j ? 1.0 : 2.0) * std::norm(f.coeffs()(idx, c));
    }
    if (a > 0.0) s += mode_weight(k3) * std::sqrt(a) * double(k1 * k1 + k2 * k2 + k3 * k3);
  });
  return 0.375 * h * h * s;
}

}  // namespace

Perturbation build_perturbation(const StateEvaluator& state, const ParameterSchedule& s, const BeltramiFamily& fam,
                                double t, const StepConfig& cfg) {
  const int q = state.stage();
  const FourierGrid& g = state.grid();
  const int n = g.n();
  const double mu = s.mu(q), ell = s.ell(q);
  const double lam_d = cfg.lambda_override > 0.0 ? cfg.lambda_override : s.lambda(q + 1);
  if (!(lam_d < 1e9)) throw ResolutionError("lambda_{q+1} is not representable on any grid");
  const int lam = int(std::lround(lam_d));
  if (4.0 * lam * std::sqrt(5.0) > n || 2 * lam > g.kmax()) {
    std::ostringstream o;
    o << "aliasing guard: lambda_{q+1} = " << lam << " needs n >= " << std::ceil(4.0 * lam * std::sqrt(5.0))
      << " and kmax >= " << 2 * lam << " (grid n = " << n << ", kmax = " << g.kmax() << ")";
    throw ResolutionError(o.str());
  }

  Perturbation P;
  P.t = t;
  P.lambda = lam;
  const MollifiedHistory hist(state, ell);
  const double vc1 = c1_bound(hist.velocity(t));
  const auto slices = time_slices(state, s, slices_at(t, mu));

  std::vector<SliceContext> ctxs(slices.size());
  bool reduced = cfg.allow_reduction;
  for (size_t b = 0; b < slices.size(); ++b) {
    SliceContext& cx = ctxs[b];
    cx.d = slices[b];
    cx.chi = cx.d.chi(t, mu);
    cx.chi_t = cx.d.chi_d1(t, mu);
    cx.lam = lam;
    cx.fam = &fam;
    cx.exact_dt = cfg.exact_time_derivative;
    cx.st = stage_samplers(hist, plan_flow(t, cx.d.anchor, vc1, cfg.rk4), cfg.exact_time_derivative, cfg.sample_mode);
    cx.anchor_field = mollify(state.stress(cx.d.anchor), ell);
    cx.anchor = FieldSampler(cx.anchor_field, cfg.sample_mode, true);
    reduced = reduced && cx.st.x3_only && depends_on_x3_only(cx.anchor_field);
    for (int p = 0; p < 6; ++p) {
      const auto& dir = fam.direction(cx.d.parity, 2 * p);
      const Vec3 k = dir.k.cast<double>();
      cx.k[p] = k;
      cx.bvec[p] = dir.B;
      cx.uvec[p] = kI * cross(k.cast<cplx>(), dir.B) / (double(lam) * k.squaredNorm());
      for (int a = 0; a < 3; ++a) {
        cx.table[p][a].resize(n);
        for (int i = 0; i < n; ++i) cx.table[p][a][i] = std::exp(kI * (lam * k[a] * kTwoPi * i / n));
      }
    }
    if (cx.anchor.order() > 0) {
      // interpolation budget against the exact sum at a few points
      const FieldSampler exact(cx.anchor_field, SampleMode::exact_sum, false);
      double worst = 0.0, scale = 1e-300;
      for (int i = 0; i < 16; ++i) {
        const double x[3] = {0.37 + 0.41 * i, 1.3 + 0.77 * i, 2.9 + 0.29 * i};
        double a[6], b6[6];
        cx.anchor.eval(x, a);
        exact.eval(x, b6);
        for (int c = 0; c < 6; ++c) {
          worst = std::max(worst, std::abs(a[c] - b6[c]));
          scale = std::max(scale, std::abs(b6[c]));
        }
      }
      if (worst > 1e-6 * scale) throw AccuracyError("transported stress: interpolation error exceeds the 1e-6 budget");
    }
  }
  P.reduced = reduced;

  const Index nkeys = reduced ? n : g.num_points();
  if (double(nkeys) * ctxs.size() * sizeof(KeyData) > 2.5e9)
    throw InfeasibleError("perturbation kernel: per-point slice data exceeds the memory budget (fields not x3-reducible)");
  std::vector<std::vector<KeyData>> keys(ctxs.size(), std::vector<KeyData>(nkeys));
  for (size_t b = 0; b < ctxs.size(); ++b) {
    const SliceContext& cx = ctxs[b];
    auto& kv = keys[b];
#pragma omp parallel for schedule(dynamic, 64)
    for (Index key = 0; key < nkeys; ++key) {
      const Vec3 x = reduced ? Vec3(0.0, 0.0, kTwoPi * double(key) / n) : g.point(key);
      kv[key] = key_from_point(cx, evaluate_point(cx, x, cx.exact_dt), x);
    }
    SliceReport rep;
    rep.l = cx.d.l;
    rep.chi = cx.chi;
    rep.rho = cx.d.rho;
    rep.flow_steps = cx.st.plan.steps;
    rep.min_coefficient = 1e300;
    Index bad = -1;
    for (Index key = 0; key < nkeys; ++key) {
      const KeyData& kd = kv[key];
      rep.max_ball_ratio = std::max(rep.max_ball_ratio, kd.ball);
      rep.min_coefficient = std::min(rep.min_coefficient, kd.min_c);
      rep.transported_sup = std::max(rep.transported_sup, kd.rsup);
      if (bad < 0 && (kd.ball > s.r0 || kd.min_c < 0.0)) bad = key;
    }
    rep.anchor_sup = sup_norm(cx.anchor_field);
    rep.tolerance = offgrid_allowance(cx.anchor_field) + 1e-12 * rep.anchor_sup;
    rep.max_principle = rep.transported_sup <= rep.anchor_sup + rep.tolerance;
    P.slices.push_back(rep);
    if (bad >= 0) {
      const Vec3 x = reduced ? Vec3(0.0, 0.0, kTwoPi * double(bad) / n) : g.point(bad);
      const KeyData& kd = kv[bad];
      const int p = kd.min_p;
      std::ostringstream o;
      o << "amplitude domain: |R_{ell,l}/rho_l - Id| = " << kd.ball << " (r0 = " << s.r0 << "), min c = " << kd.min_c
        << " at l = " << cx.d.l << ", k = " << fam.direction(cx.d.parity, 2 * p).k.transpose() << ", x = " << x.transpose();
      throw DomainError(o.str());
    }
  }

  P.U = from_physical(accumulate(g, ctxs, keys, reduced, Out::U));
  P.U_t = from_physical(accumulate(g, ctxs, keys, reduced, Out::U_t));
  if (cfg.exact_time_derivative) P.U_t_exact = from_physical(accumulate(g, ctxs, keys, reduced, Out::U_t_exact));
  {
    PhysicalField wo = accumulate(g, ctxs, keys, reduced, Out::Wo);
    P.wo_sup_pointwise = wo.magnitude().maxCoeff();
    P.w_o = from_physical(wo);
  }
  P.S = from_physical(accumulate(g, ctxs, keys, reduced, Out::S));
  keys.clear();

  if (!cfg.diagnostics) return P;
  const int stride = cfg.diag_stride > 0 ? cfg.diag_stride : std::max(1, n / 32);
  std::vector<Index> sample;
  for (int i1 = 0; i1 < n; i1 += stride)
    for (int i2 = 0; i2 < n; i2 += stride)
      for (int i3 = 0; i3 < n; i3 += stride) sample.push_back((Index(i1) * n + i2) * n + i3);
  P.sample_index = sample;
  P.sample_corrector.assign(sample.size(), Vec3::Zero());
  std::vector<double> ds_abs(sample.size()), wo2(sample.size());
  std::vector<int> opp(sample.size(), 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (long si = 0; si < long(sample.size()); ++si) {
    const Vec3 x = g.point(sample[si]);
    struct Wave {
      double chi;
      CVec3 w;
      Vec3i k;
      int l;
    };
    std::vector<Wave> waves;
    Mat3 chiR = Mat3::Zero();
    Vec3 wc = Vec3::Zero();
    for (const auto& cx : ctxs) {
      const PointData d = evaluate_point(cx, x, false);
      chiR += cx.chi * cx.chi * (cx.d.rho * Mat3::Identity() - sym_matrix(d.R));
      for (int p = 0; p < 6; ++p) {
        const auto& dir = fam.direction(cx.d.parity, 2 * p);
        const Vec3& k = cx.k[p];
        const cplx e = std::exp(kI * (cx.lam * k.dot(d.phi)));
        const CVec3 wk = d.a[p] * dir.B * e;
        waves.push_back({cx.chi, wk, dir.k, cx.d.l});
        waves.push_back({cx.chi, wk.conjugate(), Vec3i(-dir.k), cx.d.l});
        const CVec3 lead = (kI / cx.lam) * Vec3(d.grad_a.row(p).transpose()).cast<cplx>() -
                           (d.a[p] * ((d.J.transpose() - Mat3::Identity()) * k)).cast<cplx>();
        const CVec3 kxB = cross(k.cast<cplx>(), dir.B) / k.squaredNorm();
        wc += 2.0 * (cx.chi * cross(lead, kxB) * e).real();
      }
    }
    Vec3 wo = Vec3::Zero();
    for (const auto& a : waves) wo += a.chi * a.w.real();
    Mat3 offdiag = Mat3::Zero();
    for (const auto& a : waves)
      for (const auto& b : waves) {
        if (b.k == -a.k) {
          if (b.l != a.l) ++opp[si];
          continue;
        }
        offdiag += (a.chi * b.chi * (a.w * b.w.transpose())).real();
      }
    ds_abs[si] = (wo * wo.transpose() - chiR - offdiag).norm();
    wo2[si] = wo.squaredNorm();
    P.sample_corrector[si] = wc;
  }
  const double wmax = *std::max_element(wo2.begin(), wo2.end());
  P.double_sum_abs = *std::max_element(ds_abs.begin(), ds_abs.end());
  P.double_sum_rel = P.double_sum_abs / std::max(wmax, 1e-300);
  for (int o : opp) P.opposite_parity_pairs += o;
  return P;
}

SpectralField fracnsr_residual(const SpectralField& v, const SpectralField& v_t, const SpectralField& p,
                               const SpectralField& R, double alpha) {
  const PhysicalField V = to_physical(v);
  SpectralField VV(v.grid(), Rank::symtensor3);
  for (int c = 0; c < 6; ++c) {
    const auto [i, j] = sym_pair(c);
    VV.coeffs().col(c) = from_physical(v.grid(), V[i] * V[j]).coeffs().col(0);
  }
  SpectralField r = v_t;
  r += differentiate(VV, DiffKind::div);
  r += differentiate(p, DiffKind::grad);
  r += fractional_laplacian(v, alpha);
  r -= differentiate(R, DiffKind::div);
  return r;
}

Assembly assemble_reynolds(const StateEvaluator& state, const ParameterSchedule& s, Perturbation& P,
                           const StepConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const double t = P.t, alpha = s.p.alpha;
  const int q = state.stage();
  const FourierGrid& g = state.grid();
  const double ell = s.ell(q);
  const Index np = g.num_points();
  Assembly A;
  A.t = t;

  // Every piece reaches the stress one tensor component at a time; the
  // pointwise |piece|^2 is kept alongside when diagnostics are on.
  struct Piece {
    int index;
    Eigen::ArrayXd frob;
  };
  auto open_piece = [&](int i) { return Piece{i, cfg.diagnostics ? Eigen::ArrayXd::Zero(np) : Eigen::ArrayXd()}; };
  auto feed = [&](Piece& pc, int c, const SpectralField& comp) {
    A.stress.coeffs().col(c) += comp.coeffs().col(0);
    if (!cfg.diagnostics) return;
    const auto [i, j] = sym_pair(c);
    pc.frob += (i == j ? 1.0 : 2.0) * to_physical(comp, 0).square();
  };
  auto close_piece = [&](Piece& pc) {
    if (cfg.diagnostics) A.piece_sup[pc.index] = std::sqrt(pc.frob.maxCoeff());
    pc.frob = Eigen::ArrayXd();
  };
  auto sym_piece = [&](int index, auto&& gen) {
    Piece pc = open_piece(index);
    Eigen::ArrayXd buf(np);
    for (int c = 0; c < 6; ++c) {
      const auto [i, j] = sym_pair(c);
      gen(i, j, buf);
      feed(pc, c, from_physical(g, buf));
    }
    close_piece(pc);
  };
  auto invdiv_piece = [&](int index, const SpectralField& arg) {
    Piece pc = open_piece(index);
    for (int c = 0; c < 6; ++c) feed(pc, c, inverse_divergence_component(arg, c));
    close_piece(pc);
  };
  // arg += div of the symmetric tensor produced by gen
  auto add_div = [&](SpectralField& arg, auto&& gen) {
    Eigen::ArrayXd buf(np);
    for (int c = 0; c < 6; ++c) {
      const auto [i, j] = sym_pair(c);
      gen(i, j, buf);
      const SpectralField d = differentiate(from_physical(g, buf), DiffKind::grad);
      arg.coeffs().col(i) += d.coeffs().col(j);
      if (i != j) arg.coeffs().col(j) += d.coeffs().col(i);
    }
  };

  // R^4 = R - R_ell and R^5 = R_ell - S; their sum R - S seeds the stress.
  SpectralField arg1 = differentiate(P.S, DiffKind::div);
  {
    SpectralField R0 = state.stress(t);
    Piece p4 = open_piece(4), p5 = open_piece(5);
    for (int c = 0; c < 6; ++c) {
      const SpectralField rc = R0.component(c);
      const SpectralField rl = mollify(rc, ell);
      const auto [i, j] = sym_pair(c);
      const double wt = i == j ? 1.0 : 2.0;
      if (cfg.diagnostics) {
        p4.frob += wt * to_physical(rc - rl, 0).square();
        p5.frob += wt * to_physical(rl - P.S.component(c), 0).square();
      }
      R0.coeffs().col(c) -= P.S.coeffs().col(c);
    }
    close_piece(p4);
    close_piece(p5);
    A.stress = std::move(R0);
  }
  P.S = SpectralField();

  A.w = differentiate(P.U, DiffKind::curl);
  P.U = SpectralField();
  A.v_t = state.velocity_rate(t);
  SpectralField arg0 = differentiate(P.U_t, DiffKind::curl);
  P.U_t = SpectralField();
  if (P.U_t_exact.coeffs().size()) {
    A.v_t += differentiate(P.U_t_exact, DiffKind::curl);
    P.U_t_exact = SpectralField();
  } else {
    A.v_t += arg0;
  }

  // v - v_ell stays spectral; only its physical image is needed later
  SpectralField dv = state.velocity(t);
  PhysicalField W = to_physical(A.w);
  {
    SpectralField vl = mollify(dv, ell);
    const PhysicalField VL = to_physical(vl);
    dv -= vl;
    vl = SpectralField();
    // R^0 = R(d_t w + div(v_ell (x) w + w (x) v_ell))
    add_div(arg0, [&](int i, int j, Eigen::ArrayXd& o) { o = VL[i] * W[j] + VL[j] * W[i]; });
  }
  invdiv_piece(0, arg0);
  arg0 = SpectralField();

  const PhysicalField Wo = to_physical(P.w_o);
  Eigen::ArrayXd o2 = Wo[0].square() + Wo[1].square() + Wo[2].square();
  // R^1 = R div(w_o (x) w_o - |w_o|^2/2 Id + S)
  add_div(arg1, [&](int i, int j, Eigen::ArrayXd& o) {
    o = Wo[i] * Wo[j];
    if (i == j) o -= 0.5 * o2;
  });
  invdiv_piece(1, arg1);
  arg1 = SpectralField();

  // W becomes the corrector w_c in place
  for (int m = 0; m < 3; ++m) W[m] -= Wo[m];
  PhysicalField& Wc = W;
  const Eigen::ArrayXd c2 = Wc[0].square() + Wc[1].square() + Wc[2].square();
  const Eigen::ArrayXd oc = Wo[0] * Wc[0] + Wo[1] * Wc[1] + Wo[2] * Wc[2];
  sym_piece(2, [&](int i, int j, Eigen::ArrayXd& o) {
    o = Wo[i] * Wc[j] + Wc[i] * Wo[j] + Wc[i] * Wc[j];
    if (i == j) o -= (c2 + 2.0 * oc) / 3.0;
  });
  SpectralField pinc;
  {
    const PhysicalField dV = to_physical(dv);
    dv = SpectralField();
    Eigen::ArrayXd dw = Eigen::ArrayXd::Zero(np);
    for (int m = 0; m < 3; ++m) dw += dV[m] * (Wo[m] + Wc[m]);
    sym_piece(3, [&](int i, int j, Eigen::ArrayXd& o) {
      o = (Wo[i] + Wc[i]) * dV[j] + dV[i] * (Wo[j] + Wc[j]);
      if (i == j) o -= 2.0 * dw / 3.0;
    });
    pinc = from_physical(g, 0.5 * o2 + c2 / 3.0 + 2.0 * oc / 3.0 + 2.0 * dw / 3.0);
  }
  if (!P.sample_index.empty()) {
    double diff = 0.0, scale = 1e-300;
    for (size_t si = 0; si < P.sample_index.size(); ++si) {
      const Index x = P.sample_index[si];
      const Vec3 wc(Wc[0][x], Wc[1][x], Wc[2][x]);
      diff = std::max(diff, (wc - P.sample_corrector[si]).norm());
      scale = std::max(scale, wc.norm());
    }
    A.corrector_mismatch = diff / scale;
  }
  W = PhysicalField();
  invdiv_piece(6, fractional_laplacian(A.w, alpha));

  A.w_c = A.w - P.w_o;
  A.v = state.velocity(t);
  A.v += A.w;
  A.p = state.pressure(t) - pinc;
  A.p.set_coeff({0, 0, 0}, 0, cplx(0.0));

  A.stress_sup = sup_norm(A.stress);
  A.trace_defect = sup_norm(trace(A.stress)) / std::max(A.stress_sup, 1e-300);
  const double vsup = sup_norm(A.v);
  A.divergence_defect = sup_norm(differentiate(A.v, DiffKind::div)) / std::max(P.lambda * vsup, 1e-300);
  {
    SpectralField inc = A.v;
    inc -= state.velocity(t);
    inc -= P.w_o;
    inc -= A.w_c;
    A.increment_defect = inc.coeffs().abs().maxCoeff();
  }
  A.energy = l2_squared(A.v);
  if (cfg.diagnostics) {
    A.w_sup = sup_norm(A.w);
    A.wo_sup = sup_norm(P.w_o);
    A.wc_sup = sup_norm(A.w_c);
  }

  const SpectralField r = fracnsr_residual(A.v, A.v_t, A.p, A.stress, alpha);
  A.residual_sup = sup_norm(r);
  A.residual_rel = A.residual_sup / std::max(vsup, 1e-300);
  A.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return A;
}

IteratedState::IteratedState(StatePtr prev, ParameterSchedule s, BeltramiFamily fam, StepConfig cfg)
    : prev_(std::move(prev)), s_(std::move(s)), fam_(std::move(fam)), cfg_(cfg) {}

std::shared_ptr<const Assembly> IteratedState::at(double t) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = cache_.find(t); it != cache_.end()) return it->second;
  Perturbation P = build_perturbation(*prev_, s_, fam_, t, cfg_);
  auto A = std::make_shared<const Assembly>(assemble_reynolds(*prev_, s_, P, cfg_));
  if (cache_.size() >= 4) cache_.erase(cache_.begin());
  cache_[t] = A;
  return A;
}

SpectralField IteratedState::velocity_rate(double t) const {
  if (!cfg_.exact_time_derivative) throw ParameterError("velocity_rate needs the exact time derivative enabled");
  return at(t)->v_t;
}

IterationState iterate_once(const IterationState& state, const ParameterSchedule& s, const BeltramiFamily& fam,
                            const StepConfig& cfg) {
  IterationState next;
  next.q = state.q + 1;
  next.evaluator = std::make_shared<IteratedState>(state.evaluator, s, fam, cfg);
  next.times = state.times;
  return next;
}

}  // namespace cilab
