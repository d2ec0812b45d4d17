#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cilab/beltrami.hpp"
#include "cilab/config.hpp"
#include "cilab/norms.hpp"
#include "cilab/run.hpp"
#include "cilab/snapshot.hpp"
#include "helpers.hpp"

using namespace cilab;
using namespace cilab::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cilab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
  return p.string();
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ci-lab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(int(argv.size()), argv.data());
}

std::string message(const std::string& json, const std::string& task) {
  try {
    parse_config(json, task);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config validation names the field") {
  CHECK(message(R"({"alpha": 0.7})", "init").find("alpha") != std::string::npos);
  CHECK(message(R"({"b": 1.0})", "init").find("b") != std::string::npos);
  CHECK(message(R"({"grid_n": 7})", "init").find("grid_n") != std::string::npos);
  CHECK(message(R"({"profile": {"kind": "wavy"}})", "init").find("profile") != std::string::npos);
  CHECK(message(R"({"times": [1.5]})", "init").find("times") != std::string::npos);
  CHECK(message(R"({"a": "two"})", "init").find("a") != std::string::npos);
  CHECK(message(R"({})", "diagnose").find("snapshots") != std::string::npos);
  CHECK(message(R"({not json)", "init") != "");
  CHECK(message(R"({})", "fly") != "");
  CHECK(message(R"({"alpha": 0.2})", "init") == "");

  const fs::path d = scratch("config");
  CHECK(invoke({"init", "--config", write_text(d / "bad.json", R"({"alpha": 0.9})")}) == kExitConfig);
  CHECK(invoke({"init", "--config", (d / "missing.json").string()}) == kExitConfig);
  CHECK(invoke({"init"}) == kExitConfig);
  CHECK(invoke({"bogus", "--config", write_text(d / "ok.json", "{}")}) == kExitConfig);
}

TEST_CASE("schedule_report and init") {
  const fs::path d = scratch("init");
  const std::string out = (d / "out").string();
  const std::string cfg = write_text(d / "s.json", R"({"a": 2.0, "b": 1.1, "c": 2.6, "alpha": 0.15, "q_max": 1,
    "output_dir": ")" + out + R"("})");
  // desk parameters fail the conditions, which are logged only
  CHECK(invoke({"schedule_report", "--config", cfg}) == kExitOk);
  const std::string table = slurp(fs::path(out) / "schedule.csv");
  CHECK(table.find("q,delta_q,lambda_q,mu_q,ell_q") != std::string::npos);
  CHECK(table.find("\n0,0.5,8,6,") != std::string::npos);
  // strict turns them into a refusal
  CHECK(invoke({"schedule_report", "--config", cfg, "--strict"}) != kExitOk);

  RunConfig rc = parse_config(R"({"grid_n": 32, "lambda_bar": 4, "times": [0.0, 0.3, 0.9]})", "init");
  rc.output_dir = (d / "init").string();
  rc.snapshot_dir = (d / "init" / "snapshots").string();
  rc.diagnostics = (d / "init" / "diagnostics.csv").string();
  rc.summary = (d / "init" / "summary.json").string();
  const RunReport rep = run(rc);
  CHECK(rep.exit_code == kExitOk);
  int energy_checks = 0;
  for (const auto& c : rep.checks)
    if (c.name.rfind("start_energy", 0) == 0) {
      ++energy_checks;
      CHECK(c.value <= 1e-12);
    }
  CHECK(energy_checks == 3);
  CHECK(fs::exists(rc.summary));
  CHECK(fs::exists(rc.diagnostics));
  CHECK_FALSE(fs::is_empty(rc.snapshot_dir));
}

TEST_CASE("snapshots and diagnose") {
  const fs::path d = scratch("diagnose");
  const FourierGrid g(32);
  SnapshotMeta m;
  m.quantity = "v";
  const std::string zero = (d / "zero.cins").string();
  write_snapshot(zero, SpectralField(g, Rank::vector3), 0.25, 0.15, m);

  const BeltramiFamily fam = build_families();
  const Vec3i k = fam.direction(0, 2).k;
  const SpectralField W = make_beltrami_wave({{k, cplx(0.6, 0.2)}, {Vec3i(-k), cplx(0.6, -0.2)}}, fam, 2, g);
  const std::string bel = (d / "beltrami.cins").string();
  write_snapshot(bel, W, 0.25, 0.15, m);

  const Snapshot back = read_snapshot(bel);
  CHECK((back.field.coeffs() - W.coeffs()).abs().maxCoeff() == 0.0);
  CHECK(back.time == 0.25);
  CHECK(back.meta.quantity == "v");

  const std::string csv = (d / "diag.csv").string();
  const std::string cfg = write_text(d / "diag.json", R"({"snapshots": [")" + zero + R"(", ")" + bel +
                                                          R"("], "diagnostics": ")" + csv + R"(", "output_dir": ")" +
                                                          (d / "out").string() + R"("})");
  CHECK(invoke({"diagnose", "--config", cfg}) == kExitOk);
  std::istringstream rows(slurp(csv));
  std::string header, zrow, brow;
  std::getline(rows, header);
  std::getline(rows, zrow);
  std::getline(rows, brow);
  auto column = [&](const std::string& row, const std::string& name) {
    std::istringstream h(header), r(row);
    std::string hc, rcell;
    while (std::getline(h, hc, ',')) {
      std::getline(r, rcell, ',');
      if (hc == name) return rcell;
    }
    return std::string();
  };
  for (const char* c : {"c0", "c1", "holder_alpha", "l2", "dissipation"}) CHECK(std::stod(column(zrow, c)) == 0.0);
  CHECK(std::abs(std::stod(column(brow, "curl_eigen")) - 2.0 * std::sqrt(5.0)) <= 1e-10);
  CHECK(std::stod(column(brow, "curl_residual")) <= 1e-10);
  CHECK(std::stod(column(brow, "div_rel")) <= 1e-12);
  CHECK(fs::exists(fs::path(csv).replace_extension(".dat")));

  // truncate the coefficient block
  std::string bytes = slurp(bel);
  {
    std::ifstream in(bel, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  const std::string cut = (d / "cut.cins").string();
  std::ofstream(cut, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size() / 2));
  try {
    read_snapshot(cut);
    FAIL("truncated snapshot accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
  const std::string bad = (d / "bad.cins").string();
  std::ofstream(bad, std::ios::binary) << "CINZ";
  CHECK_THROWS_AS(read_snapshot(bad), FormatError);
  const std::string cfg2 = write_text(d / "diag2.json", R"({"snapshots": [")" + cut + R"("], "output_dir": ")" +
                                                            (d / "out2").string() + R"("})");
  CHECK(invoke({"diagnose", "--config", cfg2}) == kExitConfig);
}

TEST_CASE("galerkin task and seeds") {
  const fs::path d = scratch("galerkin");
  const std::string cfg = write_text(d / "g.json", R"({"alpha": 0.15, "seed": 3,
    "galerkin": {"K": 4, "horizon": 0.2, "tol": 1e-9}, "output_dir": ")" + (d / "out").string() + R"("})");
  CHECK(invoke({"galerkin", "--config", cfg}) == kExitOk);
  const Snapshot a = read_snapshot((d / "out" / "snapshots" / "galerkin_final.cins").string());
  CHECK(invoke({"galerkin", "--config", cfg, "--seed", "3"}) == kExitOk);
  const Snapshot b = read_snapshot((d / "out" / "snapshots" / "galerkin_final.cins").string());
  CHECK((a.field.coeffs() - b.field.coeffs()).abs().maxCoeff() == 0.0);
  CHECK(invoke({"galerkin", "--config", cfg, "--seed", "4"}) == kExitOk);
  const Snapshot c = read_snapshot((d / "out" / "snapshots" / "galerkin_final.cins").string());
  CHECK((a.field.coeffs() - c.field.coeffs()).abs().maxCoeff() > 0.0);
  CHECK(fs::exists(d / "out" / "galerkin_ledger.csv"));
}

TEST_CASE("thread cap") {
  ::setenv("CI_LAB_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  ::setenv("CI_LAB_THREADS", "zero", 1);
  CHECK(thread_cap() == 0);
  ::unsetenv("CI_LAB_THREADS");
  CHECK(thread_cap() == 0);
  apply_thread_cap();
}
