#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "reachot/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "reachot_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(REACHOT_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

json small_config() {
  return json::parse(R"({
    "system": {"name": "van_der_pol"},
    "grid": {"T": 3, "steps": 60},
    "ensemble": {"N": 6},
    "kernel": {"delta": 0.3},
    "epsilon": 0.05,
    "solver": {"max_iters": 15},
    "oracle": {"M": 400},
    "seed": 5
  })");
}

fs::path write_config(const std::string& name, const json& j) {
  fs::create_directories(kWork);
  const auto p = kWork / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string opts(const fs::path& cfg, const fs::path& out) {
  return "--config " + cfg.string() + " --out " + out.string();
}

}  // namespace

TEST(Cli, OptimizeWritesFixedSchemas) {
  const auto cfg = write_config("opt", small_config());
  const auto out = kWork / "opt";
  ASSERT_EQ(run("optimize " + opts(cfg, out) + " --threads 1"), 0);
  EXPECT_EQ(first_line(out / "terminal_points.csv"), "particle_id,x1,x2");
  EXPECT_EQ(first_line(out / "initial_points.csv"), "particle_id,x1,x2");
  EXPECT_EQ(first_line(out / "controls.csv"), "particle_id,step,t,u1");
  EXPECT_EQ(first_line(out / "history.csv"), "iter,total,control_energy,interaction_energy,step,grad_norm");
  const auto report = json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["command"], "optimize");
  EXPECT_EQ(report["config"]["seed"], 5);
  const auto hist = reachot::io::read_history_csv(out / "history.csv");
  ASSERT_FALSE(hist.empty());
  for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_LE(hist[i].total, hist[i - 1].total);
  EXPECT_EQ(report["final"]["total"].get<double>(), hist.back().total);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto cfg = write_config("det", small_config());
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "det_a") + " --threads 1"), 0);
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "det_b") + " --threads 1"), 0);
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "det_c") + " --threads 3"), 0);
  for (const char* f : {"terminal_points.csv", "initial_points.csv", "controls.csv", "history.csv"}) {
    EXPECT_EQ(slurp(kWork / "det_a" / f), slurp(kWork / "det_b" / f)) << f;
    EXPECT_EQ(slurp(kWork / "det_a" / f), slurp(kWork / "det_c" / f)) << f;
  }
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "det_d") + " --threads 1 --seed 6"), 0);
  EXPECT_NE(slurp(kWork / "det_a" / "controls.csv"), slurp(kWork / "det_d" / "controls.csv"));
}

TEST(Cli, MetricsRecomputeFromCsv) {
  const auto cfg = write_config("met", small_config());
  const auto out = kWork / "met";
  ASSERT_EQ(run("optimize " + opts(cfg, out)), 0);
  ASSERT_EQ(run("metrics --config " + cfg.string() + " --run " + out.string()), 0);
  const auto report = json::parse(slurp(out / "report.json"));
  const auto again = json::parse(slurp(out / "metrics.json"));
  for (const char* k : {"interaction_energy", "coverage", "nn_min", "nn_mean", "outside_frac", "c_hat"}) {
    EXPECT_NEAR(again["metrics"][k].get<double>(), report["metrics"][k].get<double>(), 1e-10) << k;
  }
  for (const char* k : {"control_energy", "interaction_energy", "total"}) {
    EXPECT_NEAR(again["breakdown"][k].get<double>(), report["final"][k].get<double>(), 1e-10) << k;
  }
  EXPECT_EQ(again["terminal_max_abs_diff"].get<double>(), 0.0);
  EXPECT_TRUE(again["feasible"].get<bool>());
}

TEST(Cli, SingleParticleSpendsNoControl) {
  auto j = small_config();
  j["ensemble"]["N"] = 1;
  j["solver"]["max_iters"] = 50;
  const auto cfg = write_config("one", j);
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "one")), 0);
  const auto report = json::parse(slurp(kWork / "one" / "report.json"));
  EXPECT_LE(report["final"]["control_energy"].get<double>(), 1e-8);
}

TEST(Cli, BaselineRuns) {
  const auto cfg = write_config("base", small_config());
  ASSERT_EQ(run("baseline " + opts(cfg, kWork / "base") + " --threads 1"), 0);
  ASSERT_EQ(run("baseline " + opts(cfg, kWork / "base2") + " --threads 2"), 0);
  EXPECT_EQ(slurp(kWork / "base" / "terminal_points.csv"), slurp(kWork / "base2" / "terminal_points.csv"));
  const auto report = json::parse(slurp(kWork / "base" / "report.json"));
  EXPECT_EQ(report["command"], "baseline");
  EXPECT_GT(report["final"]["control_energy"].get<double>(), 0.0);
}

TEST(Cli, ConfigErrorsExitTwo) {
  auto j = small_config();
  j["kernel"]["width"] = 0.3;
  const auto cfg = write_config("typo", j);
  EXPECT_EQ(run("optimize " + opts(cfg, kWork / "typo")), 2);
  EXPECT_EQ(run("optimize --config /nonexistent.json"), 2);
  EXPECT_EQ(run("optimize"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  const auto ok = write_config("ok", small_config());
  EXPECT_EQ(run("optimize " + opts(ok, kWork / "ok") + " --scheme midpoint"), 2);
  EXPECT_EQ(run("--version"), 0);
}

TEST(Cli, DivergenceExitsThreeWithPartialReport) {
  auto j = small_config();
  j["system"] = {{"name", "scalar_linear"}, {"params", {{"a", 1e40}}}};
  j["boxes"] = {{"omega", {{"lower", {0.5}}, {"upper", {1.0}}}}, {"u", {{"lower", {-1}}, {"upper", {1}}}}};
  const auto cfg = write_config("div", j);
  const auto out = kWork / "div";
  fs::remove_all(out);
  EXPECT_EQ(run("optimize " + opts(cfg, out)), 3);
  const auto report = json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["solver_status"], "diverged");
  EXPECT_TRUE(report.contains("error"));
}

TEST(Cli, GradcheckExitCodes) {
  auto j = small_config();
  j["grid"] = {{"T", 2}, {"steps", 20}};
  j["ensemble"]["N"] = 3;
  j["gradcheck"] = {{"tolerance", 1e-6}};
  const auto cfg = write_config("gc", j);
  EXPECT_EQ(run("gradcheck " + opts(cfg, kWork / "gc") + " --probes 40"), 0);
  const auto report = json::parse(slurp(kWork / "gc" / "gradcheck.json"));
  EXPECT_LE(report["max_rel_error"].get<double>(), 1e-6);
  EXPECT_EQ(report["probes"].size(), 40u);
  EXPECT_EQ(run("gradcheck " + opts(cfg, kWork / "gc") + " --corrupt-gradient 1e-3"), 1);

  j["grid"] = {{"T", 2}, {"steps", 5}, {"scheme", "euler"}};
  j["gradcheck"] = {{"tolerance", 1e-4}};
  EXPECT_EQ(run("gradcheck " + opts(write_config("gc_euler", j), kWork / "gc_euler")), 0);

  j["ensemble"]["N"] = 6;
  EXPECT_EQ(run("gradcheck " + opts(write_config("gc_big", j), kWork / "gc_big")), 2);
}

TEST(Cli, SweepMatchesSingleRunAndRejectsEmptyLists) {
  const auto cfg = write_config("sweep", small_config());
  const auto out = kWork / "sweep";
  ASSERT_EQ(run("sweep " + opts(cfg, out) + " --threads 1 --epsilons 0.05 --deltas 0.3"), 0);
  ASSERT_EQ(run("optimize " + opts(cfg, kWork / "sweep_ref") + " --threads 1"), 0);
  for (const char* f : {"terminal_points.csv", "controls.csv", "history.csv"}) {
    EXPECT_EQ(slurp(out / "eps0_delta0" / f), slurp(kWork / "sweep_ref" / f)) << f;
  }
  EXPECT_EQ(first_line(out / "sweep.csv"),
            "epsilon,delta,status,total,control_energy,interaction_energy,coverage,w1_uniform");
  EXPECT_EQ(run("sweep " + opts(cfg, kWork / "sweep_empty")), 2);
}
