#include "cilab/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cilab {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError("config: field '" + field + "' " + msg);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& prefix = "") {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(prefix + key, "has the wrong type");
  }
}

void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) fail(field, msg);
}

}  // namespace

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> t{"init", "iterate", "galerkin", "demo_nonuniqueness", "diagnose",
                                          "schedule_report"};
  return t;
}

RunConfig parse_config(const std::string& text, const std::string& task) {
  if (std::find(known_tasks().begin(), known_tasks().end(), task) == known_tasks().end())
    throw ConfigError("config: unknown task '" + task + "'");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig c;
  c.task = task;
  auto& p = c.schedule;
  read(j, "a", p.a);
  read(j, "b", p.b);
  read(j, "c", p.c);
  read(j, "alpha", p.alpha);
  read(j, "epsilon", p.epsilon);
  read(j, "q_max", p.q_max);
  read(j, "strict", p.strict);
  read(j, "seed", p.seed);
  read(j, "grid_n", c.grid_n);
  read(j, "dealias", c.dealias);
  read(j, "lambda_bar", c.lambda_bar);
  read(j, "times", c.times);
  read(j, "output_dir", c.output_dir);
  read(j, "snapshot_dir", c.snapshot_dir);
  read(j, "diagnostics", c.diagnostics);
  read(j, "summary", c.summary);
  read(j, "step_diagnostics", c.step_diagnostics);
  read(j, "ledger", c.ledger);
  read(j, "snapshots", c.snapshots);

  if (j.contains("sample_mode")) {
    std::string m;
    read(j, "sample_mode", m);
    if (m == "automatic") c.sample_mode = SampleMode::automatic;
    else if (m == "exact_sum") c.sample_mode = SampleMode::exact_sum;
    else if (m == "interp") c.sample_mode = SampleMode::interp;
    else fail("sample_mode", "must be automatic, exact_sum or interp");
  }
  if (j.contains("profile")) {
    const json& pj = j["profile"];
    check(pj.is_object(), "profile", "must be an object");
    auto& ps = c.profile;
    read(pj, "kind", ps.kind, "profile.");
    read(pj, "value", ps.value, "profile.");
    read(pj, "m", ps.m, "profile.");
    read(pj, "theta", ps.theta, "profile.");
    read(pj, "K", ps.K, "profile.");
    read(pj, "count", ps.count, "profile.");
    read(pj, "index", ps.index, "profile.");
  }
  if (j.contains("rk4")) {
    const json& rj = j["rk4"];
    check(rj.is_object(), "rk4", "must be an object");
    read(rj, "h_target", c.rk4.h_target, "rk4.");
    read(rj, "refine", c.rk4.refine, "rk4.");
    read(rj, "min_steps", c.rk4.min_steps, "rk4.");
    read(rj, "max_steps", c.rk4.max_steps, "rk4.");
  }
  if (j.contains("galerkin")) {
    const json& gj = j["galerkin"];
    check(gj.is_object(), "galerkin", "must be an object");
    read(gj, "K", c.galerkin.K, "galerkin.");
    read(gj, "horizon", c.galerkin.horizon, "galerkin.");
    read(gj, "tol", c.galerkin.tol, "galerkin.");
    read(gj, "initial", c.galerkin.initial, "galerkin.");
    read(gj, "amplitude", c.galerkin.amplitude, "galerkin.");
  }

  check(p.a > 1.0, "a", "must exceed 1");
  check(p.b > 1.0, "b", "must exceed 1");
  check(p.c > 2.5, "c", "must exceed 5/2");
  check(p.alpha > 0.0 && p.alpha < 0.5, "alpha", "must lie in (0, 1/2)");
  check(p.epsilon > 0.0, "epsilon", "must be positive");
  check(p.q_max >= 0, "q_max", "must be nonnegative");
  check(c.grid_n >= 4 && c.grid_n % 2 == 0, "grid_n", "must be an even integer >= 4");
  check(c.dealias > 0.0 && c.dealias <= 1.0, "dealias", "must lie in (0, 1]");
  check(c.lambda_bar >= 0, "lambda_bar", "must be nonnegative");
  check(!c.times.empty(), "times", "must not be empty");
  for (double t : c.times) check(t >= 0.0 && t <= 1.0, "times", "entries must lie in [0, 1]");
  const auto& ps = c.profile;
  check(ps.kind == "constant" || ps.kind == "anchored" || ps.kind == "family", "profile.kind",
        "must be constant, anchored or family");
  if (ps.kind == "constant") check(ps.value >= 0.5 && ps.value <= 1.0, "profile.value", "must lie in [1/2, 1]");
  if (ps.kind == "anchored") {
    check(ps.m > 0.0 && ps.m <= 1.0, "profile.m", "must lie in (0, 1]");
    check(ps.theta >= 0.0 && ps.theta < 1.0, "profile.theta", "must lie in [0, 1)");
    check(c.lambda_bar > 0, "lambda_bar", "is required by the anchored profile");
  }
  if (ps.kind == "family" || task == "demo_nonuniqueness") {
    check(ps.K > 1.0, "profile.K", "must exceed 1");
    check(ps.count >= 2, "profile.count", "must be at least 2");
    check(ps.index >= 0 && ps.index < ps.count, "profile.index", "must lie in [0, count)");
  }
  check(c.rk4.h_target > 0.0, "rk4.h_target", "must be positive");
  check(c.rk4.refine >= 1, "rk4.refine", "must be at least 1");
  check(c.rk4.min_steps >= 1, "rk4.min_steps", "must be at least 1");
  check(c.rk4.max_steps >= c.rk4.min_steps, "rk4.max_steps", "must be at least rk4.min_steps");
  check(c.galerkin.K >= 1, "galerkin.K", "must be a positive integer");
  check(c.galerkin.horizon > 0.0, "galerkin.horizon", "must be positive");
  check(c.galerkin.tol > 0.0, "galerkin.tol", "must be positive");
  if (task == "diagnose") check(!c.snapshots.empty(), "snapshots", "is required by diagnose");
  if (task == "iterate") check(p.q_max >= 1, "q_max", "must be at least 1 for iterate");

  if (c.snapshot_dir.empty()) c.snapshot_dir = (std::filesystem::path(c.output_dir) / "snapshots").string();
  if (c.diagnostics.empty()) c.diagnostics = (std::filesystem::path(c.output_dir) / "diagnostics.csv").string();
  if (c.summary.empty()) c.summary = (std::filesystem::path(c.output_dir) / "summary.json").string();
  return c;
}

RunConfig load_config(const std::string& path, const std::string& task) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), task);
}

}  // namespace cilab
