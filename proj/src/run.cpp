#include "cilab/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "cilab/galerkin.hpp"
#include "cilab/ledger.hpp"
#include "cilab/norms.hpp"
#include "cilab/snapshot.hpp"
#include "cilab/spectral_ops.hpp"

namespace cilab {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kColumns{
    "q", "t", "profile", "e", "energy", "gap", "window", "inside", "dissipation", "v_sup", "div_defect",
    "trace_defect", "pressure_mean", "residual_rel", "stress_sup", "w_sup", "wo_sup", "wc_sup", "double_sum_rel",
    "corrector_mismatch", "increment_defect", "max_principle", "R0", "R1", "R2", "R3", "R4", "R5", "R6",
    "v_C0", "v_C1", "p_C0", "p_C1", "R_C0", "R_C1", "R_Dt", "v_t_C0", "p_t_C0"};

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

using Row = std::map<std::string, std::string>;

class Recorder {
 public:
  explicit Recorder(const RunConfig& cfg) : cfg_(cfg) {}

  void check(const std::string& name, double value, double tol, bool asserted = true) {
    Check c{name, value, tol, asserted, value <= tol};
    checks.push_back(c);
  }
  void warn(const std::string& w) { warnings.push_back(w); }

  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<Row> rows;
  std::vector<LedgerRow> ledger;
  json extra = json::object();

  void write_diagnostics() const {
    fs::create_directories(fs::path(cfg_.diagnostics).parent_path().empty() ? fs::path(".")
                                                                            : fs::path(cfg_.diagnostics).parent_path());
    std::ofstream out(cfg_.diagnostics);
    for (size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const auto& r : rows) {
      for (size_t i = 0; i < kColumns.size(); ++i) {
        auto it = r.find(kColumns[i]);
        out << (i ? "," : "") << (it == r.end() ? "" : it->second);
      }
      out << '\n';
    }
    if (!ledger.empty()) {
      std::ofstream lo((fs::path(cfg_.output_dir) / "ledger.csv").string());
      lo << ledger_csv(ledger);
    }
  }

 private:
  const RunConfig& cfg_;
};

std::string snapshot_path(const RunConfig& cfg, const std::string& quantity, int q, const std::string& tag, size_t ti) {
  std::ostringstream os;
  os << quantity << "_q" << q << "_" << tag << "_t" << ti << ".cins";
  return (fs::path(cfg.snapshot_dir) / os.str()).string();
}

void save(const RunConfig& cfg, const SpectralField& f, double t, int q, const std::string& quantity,
          const std::string& tag, size_t ti, const ParameterSchedule& s, const EnergyProfile& e) {
  SnapshotMeta m;
  m.stage = q;
  m.schedule_hash = s.hash();
  m.profile_id = e.id();
  m.quantity = quantity;
  write_snapshot(snapshot_path(cfg, quantity, q, tag, ti), f, t, s.p.alpha, m);
}

double trace_ratio(const SpectralField& R) {
  const double r = sup_norm(R);
  return r > 0.0 ? sup_norm(trace(R)) / r : 0.0;
}

double div_ratio(const SpectralField& v) {
  const double vs = c_norm(v, 1);
  return vs > 0.0 ? sup_norm(differentiate(v, DiffKind::div)) / vs : 0.0;
}

double pressure_mean(const SpectralField& p) { return std::abs(p.coeff({0, 0, 0}, 0)); }

void add_ledger(Recorder& rec, Row& row, const std::vector<LedgerRow>& lr, bool strict) {
  for (const auto& l : lr) {
    row[l.name] = num(l.ratio);
    rec.ledger.push_back(l);
    if (strict) rec.check("ledger_" + l.name + "_q" + std::to_string(l.q), l.ratio, 1.0, true);
  }
}

Row energy_row(const EnergyGapRow& g) {
  return {{"e", num(g.e)},         {"energy", num(g.energy)},     {"gap", num(g.gap)},
          {"window", num(g.window)}, {"inside", g.inside ? "1" : "0"}, {"dissipation", num(g.dissipation)}};
}

// Stage-0 rows and checks at every configured time.
void report_start(const RunConfig& cfg, const Setup& st, const IterationState& S, const std::string& tag,
                  Recorder& rec, bool write) {
  const StateEvaluator& ev = *S.evaluator;
  const auto gap = energy_gap(ev, st.s, cfg.times);
  const double d1 = st.s.delta(1);
  for (size_t i = 0; i < cfg.times.size(); ++i) {
    const double t = cfg.times[i];
    const SpectralField v = ev.velocity(t), p = ev.pressure(t), R = ev.stress(t), vt = ev.velocity_rate(t);
    if (write) {
      save(cfg, v, t, 0, "v", tag, i, st.s, ev.profile());
      save(cfg, p, t, 0, "p", tag, i, st.s, ev.profile());
      save(cfg, R, t, 0, "stress", tag, i, st.s, ev.profile());
      save(cfg, vt, t, 0, "v_t", tag, i, st.s, ev.profile());
    }
    const double target = ev.profile().e(t) * (1.0 - d1);
    const double e_err = std::abs(l2_squared(v) - target) / target;
    const double vsup = sup_norm(v);
    const double res = sup_norm(fracnsr_residual(v, vt, p, R, st.s.p.alpha)) / std::max(vsup, 1e-300);
    const std::string sfx = "_q0_" + tag + "_t" + std::to_string(i);
    rec.check("start_energy" + sfx, e_err, 1e-12);
    rec.check("start_residual" + sfx, res, 1e-8);
    rec.check("divergence" + sfx, div_ratio(v), 1e-8);
    rec.check("trace" + sfx, trace_ratio(R), 1e-8);
    rec.check("pressure_mean" + sfx, pressure_mean(p), 1e-8);
    const double g_tol = 1e-12 * target;
    rec.check("energy_gap" + sfx, std::abs(gap.rows[i].gap), g_tol, true);

    Row row = energy_row(gap.rows[i]);
    row["q"] = "0";
    row["t"] = num(t);
    row["profile"] = tag;
    row["v_sup"] = num(vsup);
    row["div_defect"] = num(div_ratio(v));
    row["trace_defect"] = num(trace_ratio(R));
    row["pressure_mean"] = num(pressure_mean(p));
    row["residual_rel"] = num(res);
    row["stress_sup"] = num(sup_norm(R));
    if (cfg.ledger) add_ledger(rec, row, inductive_ledger(ev, nullptr, st.s, t), st.s.p.strict);
    rec.rows.push_back(row);
  }
}

// One assembled step at time t with its rows and checks.
Assembly report_step(const RunConfig& cfg, const Setup& st, const IterationState& prev, const IterationState* next,
                     double t, size_t ti, const std::string& tag, Recorder& rec, bool write) {
  const StepConfig sc = step_config(cfg);
  const int q = prev.q + 1;
  Perturbation P = build_perturbation(*prev.evaluator, st.s, st.fam, t, sc);
  Assembly A = assemble_reynolds(*prev.evaluator, st.s, P, sc);
  const std::string sfx = "_q" + std::to_string(q) + "_" + tag + "_t" + std::to_string(ti);

  rec.check("divergence" + sfx, A.divergence_defect, 1e-8);
  rec.check("trace" + sfx, A.trace_defect, 1e-8);
  rec.check("increment" + sfx, A.increment_defect, 1e-12);
  rec.check("pressure_mean" + sfx, pressure_mean(A.p), 1e-8);
  bool maxp = true;
  for (const auto& sl : P.slices) maxp = maxp && sl.max_principle;
  rec.check("max_principle" + sfx, maxp ? 0.0 : 1.0, 0.0);
  if (sc.diagnostics) {
    rec.check("double_sum" + sfx, P.double_sum_rel, 1e-6);
    rec.check("parity_pairs" + sfx, P.opposite_parity_pairs, 0.0);
    rec.check("corrector_formula" + sfx, A.corrector_mismatch, 1e-6, false);
  }
  rec.check("residual" + sfx, A.residual_rel, INFINITY, false);

  if (write) {
    const EnergyProfile& e = prev.evaluator->profile();
    save(cfg, A.v, t, q, "v", tag, ti, st.s, e);
    save(cfg, A.p, t, q, "p", tag, ti, st.s, e);
    save(cfg, A.stress, t, q, "stress", tag, ti, st.s, e);
    if (A.v_t.coeffs().size()) save(cfg, A.v_t, t, q, "v_t", tag, ti, st.s, e);
  }

  const double e_t = prev.evaluator->profile().e(t), d = st.s.delta(q + 1);
  EnergyGapRow g;
  g.t = t;
  g.e = e_t;
  g.energy = A.energy;
  g.gap = e_t * (1.0 - d) - A.energy;
  g.window = 0.25 * d * e_t;
  g.inside = std::abs(g.gap) <= g.window;
  g.dissipation = dissipation_integral(A.v, st.s.p.alpha);
  rec.check("energy_window" + sfx, std::abs(g.gap), g.window, false);

  Row row = energy_row(g);
  row["q"] = std::to_string(q);
  row["t"] = num(t);
  row["profile"] = tag;
  row["v_sup"] = num(sup_norm(A.v));
  row["div_defect"] = num(A.divergence_defect);
  row["trace_defect"] = num(A.trace_defect);
  row["pressure_mean"] = num(pressure_mean(A.p));
  row["residual_rel"] = num(A.residual_rel);
  row["stress_sup"] = num(A.stress_sup);
  row["w_sup"] = num(A.w_sup);
  row["wo_sup"] = num(A.wo_sup);
  row["wc_sup"] = num(A.wc_sup);
  if (sc.diagnostics) {
    row["double_sum_rel"] = num(P.double_sum_rel);
    row["corrector_mismatch"] = num(A.corrector_mismatch);
  }
  row["increment_defect"] = num(A.increment_defect);
  row["max_principle"] = maxp ? "1" : "0";
  for (int k = 0; k < 7; ++k) row["R" + std::to_string(k)] = num(A.piece_sup[k]);
  if (cfg.ledger && next)
    add_ledger(rec, row, inductive_ledger(*next->evaluator, prev.evaluator.get(), st.s, t), st.s.p.strict);
  rec.rows.push_back(row);
  return A;
}

json schedule_json(const ParameterSchedule& s, int q_last) {
  json j;
  j["hash"] = s.hash();
  j["beta"] = s.beta;
  j["eta"] = s.eta;
  j["M"] = s.M;
  j["r0"] = s.r0;
  j["C_bar"] = s.C_bar;
  j["C_tilde"] = s.C_tilde;
  j["C0"] = s.C0;
  j["a0"] = s.a0;
  j["E1"] = s.E1;
  j["E2"] = s.E2;
  j["lambda_bar_formula"] = s.lambda_bar_formula;
  j["feasible"] = s.feasible();
  json stages = json::array();
  for (int q = 0; q <= q_last; ++q)
    stages.push_back({{"q", q},
                      {"log_delta", s.log_delta(q)},
                      {"log_lambda", s.log_lambda(q)},
                      {"log_mu", s.log_mu(q)},
                      {"log_ell", s.log_ell(q)}});
  j["stages"] = stages;
  json conds = json::array();
  for (const auto& c : s.conditions)
    conds.push_back({{"group", c.group}, {"name", c.name}, {"q", c.q}, {"lhs", c.lhs}, {"rhs", c.rhs},
                     {"log", c.log_domain}, {"pass", c.pass}});
  j["conditions"] = conds;
  return j;
}

json lambda_json(const LambdaBarChoice& c) {
  return {{"value", c.value}, {"formula", c.formula}, {"rule", c.rule}, {"worst_ratio", c.worst_ratio}};
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void task_init(const RunConfig& cfg, Recorder& rec) {
  const Setup st = prepare(cfg, false);
  if (!st.note.empty()) rec.warn(st.note);
  const auto S = start_triple(st.s, st.profiles[st.chosen], st.grid, st.lambda_bar.value, cfg.times);
  report_start(cfg, st, S, "p" + std::to_string(st.chosen), rec, true);
  rec.extra["schedule"] = schedule_json(st.s, 2);
  rec.extra["lambda_bar"] = lambda_json(st.lambda_bar);
}

void task_iterate(const RunConfig& cfg, Recorder& rec) {
  const Setup st = prepare(cfg);
  const std::string tag = "p" + std::to_string(st.chosen);
  IterationState S = start_triple(st.s, st.profiles[st.chosen], st.grid, st.lambda_bar.value, cfg.times);
  report_start(cfg, st, S, tag, rec, true);
  const StepConfig sc = step_config(cfg);
  json step_times = json::array();
  for (int q = 1; q <= st.s.p.q_max; ++q) {
    const IterationState next = iterate_once(S, st.s, st.fam, sc);
    for (size_t i = 0; i < cfg.times.size(); ++i) {
      const Assembly A = report_step(cfg, st, S, &next, cfg.times[i], i, tag, rec, true);
      step_times.push_back({{"q", q}, {"t", cfg.times[i]}, {"seconds", A.seconds}});
    }
    if (cfg.ledger) {
      const auto gap = energy_gap(*next.evaluator, st.s, cfg.times);
      rec.extra["energy_inequality_margin_q" + std::to_string(q)] = gap.inequality_margin;
    }
    S = next;
  }
  rec.extra["schedule"] = schedule_json(st.s, st.s.p.q_max + 1);
  rec.extra["lambda_bar"] = lambda_json(st.lambda_bar);
  rec.extra["step_seconds"] = step_times;
}

void task_galerkin(const RunConfig& cfg, Recorder& rec) {
  const auto& g = cfg.galerkin;
  const double alpha = cfg.schedule.alpha;
  SpectralField w0;
  double t0 = 0.0;
  if (g.initial == "random") {
    w0 = random_solenoidal(g.K, cfg.schedule.seed, g.amplitude);
  } else if (g.initial == "start") {
    const Setup st = prepare(cfg, false);
    if (!st.note.empty()) rec.warn(st.note);
    t0 = cfg.times.front();
    w0 = StartTriple(st.grid, st.profiles[st.chosen], st.lambda_bar.value, st.s.delta(1), alpha).velocity(t0);
  } else {
    const Snapshot snap = read_snapshot(g.initial);
    if (snap.field.rank() != Rank::vector3) throw ConfigError("config: field 'galerkin.initial' must be a velocity");
    w0 = snap.field;
    t0 = snap.time;
  }
  const Prolongation P = prolong(w0, t0, g.K, alpha, g.horizon, g.tol);
  if (!P.warning.empty()) rec.warn(P.warning);
  const Trajectory& tr = P.trajectory;
  fs::create_directories(cfg.output_dir);
  std::ofstream((fs::path(cfg.output_dir) / "galerkin_ledger.csv").string()) << galerkin_ledger_csv(tr);
  fs::create_directories(cfg.snapshot_dir);
  SnapshotMeta m;
  m.quantity = "galerkin_w";
  write_snapshot((fs::path(cfg.snapshot_dir) / "galerkin_final.cins").string(), tr.final.w, tr.final.t, alpha, m);

  rec.check("galerkin_monotone", tr.monotone ? 0.0 : 1.0, 0.0);
  rec.check("galerkin_balance", tr.max_balance, 1e-8);
  rec.check("galerkin_divergence", tr.max_divergence, 1e-12);
  rec.extra["galerkin"] = {{"K", g.K}, {"accepted", tr.accepted}, {"rejected", tr.rejected},
                           {"energy_loss", P.energy_loss}, {"t_end", tr.final.t}};
  for (const auto& l : tr.ledger)
    rec.rows.push_back({{"q", "-1"}, {"t", num(l.t)}, {"energy", num(2.0 * l.half_energy)}, {"dissipation", num(l.dissipated)}});
}

void task_demo(const RunConfig& cfg0, Recorder& rec) {
  RunConfig cfg = cfg0;
  cfg.profile.kind = "family";
  const double t_star = 1.0 / (8.0 * cfg.profile.K);
  cfg.times = {0.0, t_star};
  const Setup st = prepare(cfg);

  std::vector<std::string> v0_bytes, r0_bytes;
  for (size_t j = 0; j < st.profiles.size(); ++j) {
    const std::string tag = "p" + std::to_string(j);
    const auto S = start_triple(st.s, st.profiles[j], st.grid, st.lambda_bar.value, cfg.times);
    report_start(cfg, st, S, tag, rec, true);
    v0_bytes.push_back(read_bytes(snapshot_path(cfg, "v", 0, tag, 0)));
    r0_bytes.push_back(read_bytes(snapshot_path(cfg, "stress", 0, tag, 0)));
    report_step(cfg, st, S, nullptr, t_star, 1, tag, rec, true);
  }
  // step outputs come back from disk so only one assembly is resident at a time
  std::vector<SpectralField> v1;
  for (size_t j = 0; j < st.profiles.size(); ++j)
    v1.push_back(read_snapshot(snapshot_path(cfg, "v", 1, "p" + std::to_string(j), 1)).field);
  for (size_t j = 1; j < st.profiles.size(); ++j) {
    rec.check("t0_identical_v_p" + std::to_string(j), v0_bytes[j] == v0_bytes[0] ? 0.0 : 1.0, 0.0);
    rec.check("t0_identical_stress_p" + std::to_string(j), r0_bytes[j] == r0_bytes[0] ? 0.0 : 1.0, 0.0);
  }
  json seps = json::array();
  for (size_t i = 0; i < v1.size(); ++i)
    for (size_t j = i + 1; j < v1.size(); ++j) {
      const double rel = l2_distance(v1[i], v1[j]) / std::sqrt(l2_squared(v1[i]));
      // the check passes when the separation exceeds 1e-3, stored as its reciprocal
      rec.check("separation_p" + std::to_string(i) + "_p" + std::to_string(j), 1e-3 / rel, 1.0);
      seps.push_back({{"i", i}, {"j", j}, {"relative_l2", rel}});
    }
  rec.extra["separations"] = seps;
  rec.extra["t_star"] = t_star;
  rec.extra["lambda_bar"] = lambda_json(st.lambda_bar);
  rec.extra["schedule"] = schedule_json(st.s, 2);

  // Galerkin continuation of the two step outputs (logged only).
  if (cfg.galerkin.K > 0 && v1.size() >= 2) {
    const auto& g = cfg.galerkin;
    const Prolongation a = prolong(v1[0], t_star, g.K, st.s.p.alpha, g.horizon, g.tol);
    const Prolongation b = prolong(v1[1], t_star, g.K, st.s.p.alpha, g.horizon, g.tol);
    for (const auto* p : {&a, &b})
      if (!p->warning.empty()) rec.warn(p->warning);
    const double dist = l2_distance(a.trajectory.final.w, b.trajectory.final.w);
    rec.check("prolonged_distance_inverse", dist > 0.0 ? 1e-6 / dist : INFINITY, 1.0, false);
    rec.check("prolonged_monotone", (a.trajectory.monotone && b.trajectory.monotone) ? 0.0 : 1.0, 0.0, false);
    rec.extra["prolongation"] = {{"K", g.K},
                                 {"horizon", g.horizon},
                                 {"distance", dist},
                                 {"energy_loss", {a.energy_loss, b.energy_loss}}};
  }
}

void task_diagnose(const RunConfig& cfg, Recorder& rec) {
  std::optional<ParameterSchedule> s;
  try {
    s = prepare_schedule(cfg).s;
  } catch (const std::exception& e) {
    rec.warn(std::string("no schedule verdicts: ") + e.what());
  }
  const double alpha = cfg.schedule.alpha;
  std::vector<std::string> cols{"path", "quantity", "stage", "t", "rank", "c0", "c1", "holder_alpha", "holder_1",
                                "holder_1_alpha", "l2", "dissipation", "div_rel", "curl_eigen", "curl_residual",
                                "trace_rel", "R_C0_bound", "R_C0_pass", "residual_rel"};
  std::vector<std::map<std::string, std::string>> out;
  struct Key {
    int stage;
    double t;
    std::string profile;
    bool operator<(const Key& o) const { return std::tie(stage, t, profile) < std::tie(o.stage, o.t, o.profile); }
  };
  std::map<Key, std::map<std::string, Snapshot>> groups;
  for (const auto& path : cfg.snapshots) {
    Snapshot snap = read_snapshot(path);
    const SpectralField& f = snap.field;
    std::map<std::string, std::string> r;
    r["path"] = path;
    r["quantity"] = snap.meta.quantity;
    r["stage"] = std::to_string(snap.meta.stage);
    r["t"] = num(snap.time);
    r["rank"] = rank_name(f.rank());
    const NormReport nr = norms(f, alpha, {alpha, 1.0, 1.0 + alpha});
    r["c0"] = num(nr.c0);
    r["c1"] = num(c_norm(f, 1));
    r["holder_alpha"] = num(nr.seminorms.at(alpha));
    r["holder_1"] = num(nr.seminorms.at(1.0));
    r["holder_1_alpha"] = num(nr.seminorms.at(1.0 + alpha));
    r["l2"] = num(nr.plancherel_l2);
    r["dissipation"] = num(nr.plancherel_dissipation);
    if (f.rank() == Rank::vector3) {
      r["div_rel"] = num(div_ratio(f));
      const SpectralField cu = differentiate(f, DiffKind::curl);
      const double vv = l2_squared(f);
      const double lam = vv > 0.0 ? l2_inner(cu, f) / vv : 0.0;
      r["curl_eigen"] = num(lam);
      r["curl_residual"] = num(vv > 0.0 ? std::sqrt(l2_squared(cu - lam * f) / vv) : 0.0);
    }
    if (f.rank() == Rank::symtensor3) {
      r["trace_rel"] = num(trace_ratio(f));
      if (s) {
        const double bound = s->eta * s->delta(snap.meta.stage + 1);
        r["R_C0_bound"] = num(bound);
        r["R_C0_pass"] = nr.c0 <= bound ? "1" : "0";
        rec.check("R_C0_" + fs::path(path).filename().string(), nr.c0, bound, s->p.strict);
      }
    }
    groups[{snap.meta.stage, snap.time, snap.meta.profile_id}][snap.meta.quantity] = std::move(snap);
    out.push_back(r);
  }
  // fracNSR residual wherever v, v_t, p and stress share stage, time and profile
  for (auto& [key, g] : groups) {
    if (!(g.count("v") && g.count("v_t") && g.count("p") && g.count("stress"))) continue;
    const double vs = sup_norm(g["v"].field);
    const double res =
        sup_norm(fracnsr_residual(g["v"].field, g["v_t"].field, g["p"].field, g["stress"].field, alpha)) /
        std::max(vs, 1e-300);
    for (auto& r : out)
      if (r["stage"] == std::to_string(key.stage) && r["t"] == num(key.t)) r["residual_rel"] = num(res);
  }
  fs::path dp(cfg.diagnostics);
  if (!dp.parent_path().empty()) fs::create_directories(dp.parent_path());
  std::ofstream csv(cfg.diagnostics), dat(dp.replace_extension(".dat").string());
  dat << "#";
  for (size_t i = 0; i < cols.size(); ++i) {
    csv << (i ? "," : "") << cols[i];
    dat << ' ' << cols[i];
  }
  csv << '\n';
  dat << '\n';
  for (auto& r : out) {
    for (size_t i = 0; i < cols.size(); ++i) {
      const std::string v = r.count(cols[i]) ? r[cols[i]] : "";
      csv << (i ? "," : "") << v;
      dat << (i ? " " : "") << (v.empty() ? "nan" : v);
    }
    csv << '\n';
    dat << '\n';
  }
}

void task_schedule_report(const RunConfig& cfg, Recorder& rec) {
  const Setup st = prepare_schedule(cfg);
  const int q_last = std::max(3, st.s.p.q_max);
  fs::create_directories(cfg.output_dir);
  std::ofstream((fs::path(cfg.output_dir) / "schedule.csv").string()) << schedule_table(st.s, q_last);
  rec.extra["schedule"] = schedule_json(st.s, q_last);
  rec.extra["lambda_bar_formula"] = family_mode_lambda_bar(st.s.E1, st.s.E2, st.s);
  for (const auto& c : st.s.conditions)
    rec.check("condition_" + c.group + "_" + c.name + (c.q >= 0 ? "_q" + std::to_string(c.q) : ""), c.lhs - c.rhs,
              0.0, st.s.p.strict);
  std::cout << schedule_table(st.s, q_last);
}

}  // namespace

Setup prepare_schedule(const RunConfig& cfg) {
  Setup st;
  st.fam = build_families();
  st.grid = FourierGrid(cfg.grid_n, cfg.dealias);
  const auto& ps = cfg.profile;
  if (ps.kind == "constant") {
    st.profiles = {constant_profile(ps.value)};
  } else if (ps.kind == "anchored") {
    const ParameterSchedule pre = make_schedule(cfg.schedule, st.fam, 1.0, 1.0);
    const double kappa = std::pow(double(cfg.lambda_bar), 2.0 * cfg.schedule.alpha) * (1.0 - ps.theta);
    st.profiles = {anchored_profile(ps.m, kappa, int(pre.mu(0)))};
  } else {
    st.profiles = profile_family(ps.K, ps.count);
    st.chosen = ps.index;
  }
  double E1 = 0.0, E2 = 0.0;
  for (const auto& p : st.profiles) {
    E1 = std::max(E1, p->c1_norm());
    E2 = std::max(E2, p->c2_norm());
  }
  st.s = make_schedule(cfg.schedule, st.fam, E1, E2);
  return st;
}

Setup prepare(const RunConfig& cfg, bool for_step) {
  Setup st = prepare_schedule(cfg);
  try {
    st.lambda_bar = select_lambda_bar(st.s, st.profiles, st.grid, active_anchors(st.s, 0, cfg.times), cfg.lambda_bar);
  } catch (const InfeasibleError& e) {
    if (for_step || st.s.p.strict) throw;
    LambdaBarChoice& c = st.lambda_bar;
    c.formula = family_mode_lambda_bar(st.s.E1, st.s.E2, st.s);
    c.value = std::max(1, int(std::min<double>(c.formula, st.grid.kmax())));
    c.rule = "grid-capped";
    st.note = std::string(e.what()) + "; using lambda_bar = " + std::to_string(c.value);
  }
  return st;
}

StepConfig step_config(const RunConfig& cfg) {
  StepConfig sc;
  sc.rk4 = cfg.rk4;
  sc.sample_mode = cfg.sample_mode;
  sc.diagnostics = cfg.step_diagnostics;
  return sc;
}

RunReport run(const RunConfig& cfg) {
  Recorder rec(cfg);
  RunReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  std::string error;
  try {
    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.snapshot_dir);
    if (cfg.task == "init") task_init(cfg, rec);
    else if (cfg.task == "iterate") task_iterate(cfg, rec);
    else if (cfg.task == "galerkin") task_galerkin(cfg, rec);
    else if (cfg.task == "demo_nonuniqueness") task_demo(cfg, rec);
    else if (cfg.task == "diagnose") task_diagnose(cfg, rec);
    else if (cfg.task == "schedule_report") task_schedule_report(cfg, rec);
    if (cfg.task != "diagnose") rec.write_diagnostics();
    rep.exit_code = kExitOk;
    for (const auto& c : rec.checks)
      if (c.asserted && !c.pass) rep.exit_code = kExitInvariant;
  } catch (const ConfigError& e) {
    error = e.what();
    rep.exit_code = kExitConfig;
  } catch (const FormatError& e) {
    error = e.what();
    rep.exit_code = kExitConfig;
  } catch (const std::exception& e) {
    error = e.what();
    rep.exit_code = kExitRuntime;
  }
  rep.checks = rec.checks;
  rep.warnings = rec.warnings;

  json& j = rep.summary;
  j["task"] = cfg.task;
  j["exit_code"] = rep.exit_code;
  if (!error.empty()) j["error"] = error;
  j["strict"] = cfg.schedule.strict;
  j["seed"] = cfg.schedule.seed;
  j["grid_n"] = cfg.grid_n;
  json checks = json::array();
  for (const auto& c : rec.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"asserted", c.asserted},
                      {"pass", c.pass}});
  j["checks"] = checks;
  j["warnings"] = rec.warnings;
  for (auto it = rec.extra.begin(); it != rec.extra.end(); ++it) j[it.key()] = it.value();
  j["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    fs::path sp(cfg.summary);
    if (!sp.parent_path().empty()) fs::create_directories(sp.parent_path());
    std::ofstream(cfg.summary) << j.dump(2) << '\n';
  } catch (const std::exception&) {
  }
  return rep;
}

int cli_main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"ci-lab: convex integration laboratory"};
  std::string task, config;
  bool strict = false;
  unsigned long long seed = 0;
  app.add_option("task", task, "init | iterate | galerkin | demo_nonuniqueness | diagnose | schedule_report")
      ->required();
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_flag("--strict", strict, "refuse infeasible schedules and assert the ledger");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  RunConfig cfg;
  try {
    cfg = load_config(config, task);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  if (strict) cfg.schedule.strict = true;
  if (seed_opt->count()) cfg.schedule.seed = seed;
  const RunReport rep = run(cfg);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  int failed = 0;
  for (const auto& c : rep.checks)
    if (c.asserted && !c.pass) {
      std::cerr << "FAILED " << c.name << ": " << c.value << " > " << c.tolerance << '\n';
      ++failed;
    }
  if (rep.summary.contains("error")) std::cerr << "error: " << rep.summary["error"].get<std::string>() << '\n';
  std::cout << cfg.task << ": " << rep.checks.size() << " checks, " << failed << " failed, exit " << rep.exit_code
            << '\n';
  return rep.exit_code;
}

}  // namespace cilab
