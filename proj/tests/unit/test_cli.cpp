#include <gtest/gtest.h>

#include <bilictrl/cli.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace bilictrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bilictrl_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run_cli(cli::Command cmd, const fs::path& config, const fs::path& out, int jobs = 1) {
  cli::Options opt;
  opt.command = cmd;
  opt.config = config;
  opt.out = out;
  opt.jobs = jobs;
  std::ostringstream err;
  return cli::run(opt, err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
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

}  // namespace

TEST(CliExitCodes, CheckMuPassAndFail) {
  const fs::path d = scratch("checkmu");
  const fs::path ok = write_config(d, R"({"problem": "schrodinger", "mu": "x_squared", "check_mu": {"K": 50}})");
  EXPECT_EQ(run_cli(cli::Command::CheckMu, ok, d / "a"), 0);
  EXPECT_EQ(first_line(d / "a" / "weights.csv"), "k,coupling,w_k");
  const auto j = nlohmann::json::parse(slurp(d / "a" / "hypothesis.json"));
  EXPECT_TRUE(j["pass"].get<bool>());
  const fs::path bad = write_config(d, R"({"problem": "schrodinger", "mu": "sin_pi_x", "check_mu": {"K": 50}})");
  EXPECT_EQ(run_cli(cli::Command::CheckMu, bad, d / "b"), 4);
}

TEST(CliExitCodes, ConfigErrors) {
  const fs::path d = scratch("config");
  EXPECT_EQ(run_cli(cli::Command::Simulate, write_config(d, R"({"problem": "schrodinger", "bogus": 1})"), d / "o"), 3);
  EXPECT_EQ(run_cli(cli::Command::Simulate, write_config(d, R"({"problem": "schrodinger",)"), d / "o"), 3);
  EXPECT_EQ(run_cli(cli::Command::Simulate, write_config(d, R"({"problem": "heat"})"), d / "o"), 3);
  EXPECT_EQ(run_cli(cli::Command::Simulate, write_config(d, R"({"problem": "schrodinger", "T": -1})"), d / "o"), 3);
  EXPECT_EQ(run_cli(cli::Command::Simulate, d / "missing.json", d / "o"), 3);
  EXPECT_EQ(run_cli(cli::Command::Simulate,
                    write_config(d, R"({"problem": "schrodinger", "propagator": {"scheme": "euler"}})"), d / "o"),
            3);
  EXPECT_EQ(run_cli(cli::Command::Simulate, write_config(d, R"({"problem": "nls", "control": {"kind": "constant", "value": 5}})"),
                    d / "o"),
            3);
  const fs::path dup = write_config(d, R"({"problem": "schrodinger", "runs": [{"name": "a"}, {"name": "a"}]})");
  EXPECT_EQ(run_cli(cli::Command::Simulate, dup, d / "o"), 3);
}

TEST(CliExitCodes, GapConditionAndNonConvergence) {
  const fs::path d = scratch("gap");
  const fs::path gap = write_config(
      d, R"({"problem": "wave", "T": 1.5, "basis": {"N": 16}, "target": {"kind": "perturbation", "mode": 1}})");
  EXPECT_EQ(run_cli(cli::Command::Synthesize, gap, d / "g"), 4);
  EXPECT_TRUE(fs::exists(d / "g" / "error.json"));
  const fs::path cap = write_config(
      d, R"({"problem": "schrodinger", "basis": {"N": 16}, "target": {"kind": "perturbation", "mode": 3, "epsilon": 0.05},
            "synthesis": {"max_iters": 1, "tol": 1e-12}})");
  EXPECT_EQ(run_cli(cli::Command::Synthesize, cap, d / "c"), 2);
  EXPECT_TRUE(fs::exists(d / "c" / "report.json"));
}

TEST(CliOutputs, SimulateHeadersAndMoment) {
  const fs::path d = scratch("outputs");
  const fs::path s = write_config(
      d, R"({"problem": "schrodinger", "basis": {"N": 8}, "control": {"kind": "sine", "amplitude": 0.1, "frequency": 3},
            "propagator": {"snapshot_stride": 256}})");
  ASSERT_EQ(run_cli(cli::Command::Simulate, s, d / "s"), 0);
  EXPECT_EQ(first_line(d / "s" / "trajectory.csv").substr(0, 19), "t,norm_l2,norm_h3,r");
  EXPECT_TRUE(fs::exists(d / "s" / "final_state.json"));
  const fs::path m = write_config(
      d, R"({"problem": "schrodinger", "basis": {"N": 12}, "moment": {"family": "schrodinger", "K": 6, "target_kind": "random", "seed": 2}})");
  ASSERT_EQ(run_cli(cli::Command::Moment, m, d / "m"), 0);
  EXPECT_EQ(first_line(d / "m" / "control.csv"), "t,u");
  const auto j = nlohmann::json::parse(slurp(d / "m" / "moment.json"));
  EXPECT_LT(j["max_residual"].get<double>(), 1e-8);
}

TEST(CliOutputs, DeterministicAndIndependentOfJobs) {
  const fs::path d = scratch("determinism");
  const fs::path cfg = write_config(d, R"({"problem": "schrodinger", "basis": {"N": 12},
      "target": {"kind": "perturbation", "mode": 2}, "synthesis": {"max_iters": 6},
      "runs": [{"name": "e1", "target": {"epsilon": 0.001}}, {"name": "e2", "target": {"epsilon": 0.01}},
               {"name": "e3", "target": {"epsilon": 0.03}}]})");
  ASSERT_EQ(run_cli(cli::Command::Synthesize, cfg, d / "one", 1), 0);
  ASSERT_EQ(run_cli(cli::Command::Synthesize, cfg, d / "two", 2), 0);
  ASSERT_EQ(run_cli(cli::Command::Synthesize, cfg, d / "again", 1), 0);
  for (const char* run : {"e1", "e2", "e3"})
    for (const char* file : {"report.json", "control.csv"}) {
      const std::string a = slurp(d / "one" / run / file);
      EXPECT_FALSE(a.empty());
      EXPECT_EQ(a, slurp(d / "two" / run / file)) << run << "/" << file;
      EXPECT_EQ(a, slurp(d / "again" / run / file)) << run << "/" << file;
    }
  const auto summary = nlohmann::json::parse(slurp(d / "one" / "summary.json"));
  EXPECT_DOUBLE_EQ(summary["largest_converged_epsilon"].get<double>(), 0.03);
  EXPECT_EQ(slurp(d / "one" / "summary.json"), slurp(d / "two" / "summary.json"));
}

TEST(CliOutputs, SweepCombinesExitCodes) {
  std::vector<cli::RunResult> rs(3);
  rs[0].exit_code = 0;
  rs[1].exit_code = 2;
  rs[2].exit_code = 4;
  EXPECT_EQ(cli::combine_exit(rs), 4);
  rs[0].exit_code = 3;
  EXPECT_EQ(cli::combine_exit(rs), 3);
  rs = std::vector<cli::RunResult>(2);
  rs[1].exit_code = 2;
  EXPECT_EQ(cli::combine_exit(rs), 2);
}

TEST(Io, FloatsRoundTripAtSeventeenDigits) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const double x = d(rng) * std::pow(10.0, i % 17 - 8);
    EXPECT_EQ(std::stod(io::fmt(x)), x);
  }
  EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
  const std::string j = io::dump_json(io::json{{"a", 0.1}, {"b", std::nan("")}});
  EXPECT_NE(j.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(j.find("null"), std::string::npos);
}

TEST(Io, ControlCsvRoundTrip) {
  const fs::path d = scratch("io");
  const ControlSignal u = ControlSignal::from_function(1.5, 30, [](double t) { return std::sin(4.0 * t) / 3.0; });
  io::write_text(d / "u.csv", io::control_csv(u));
  const ControlSignal back = io::read_control_csv(d / "u.csv");
  EXPECT_EQ(back.samples, u.samples);
  EXPECT_DOUBLE_EQ(back.T, 1.5);
  io::write_text(d / "bad.csv", "t,u\n0,1\n0.5,2\n0.7,3\n");
  EXPECT_THROW(io::read_control_csv(d / "bad.csv"), Error);
}

TEST(Io, TablePotentialMatchesBuiltin) {
  std::vector<double> x, m;
  for (int i = 0; i <= 2000; ++i) {
    x.push_back(i / 2000.0);
    m.push_back(x.back() * x.back());
  }
  const PotentialSpec p = io::table_potential(x, m);
  const BasisSpec b = make_basis(Geometry::IntervalDirichlet, 8);
  const CouplingMatrix t = coupling_matrix(p, b);
  const CouplingMatrix r = coupling_matrix(potentials::x_squared(), b);
  EXPECT_LT((t.entries - r.entries).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(io::table_potential({0.0, 0.5}, {0.0, 1.0}), Error);
}
