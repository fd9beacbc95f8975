#include "qds3/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qds3;
using namespace qds3::cli;
namespace fs = std::filesystem;

namespace {

const std::string kCli = QDS3_CLI_PATH;
const std::string kConfigs = QDS3_CONFIG_DIR;

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / ("qds3_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_in_process(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  if (out) *out = o.str();
  return code;
}

const char* kValidQds = R"({"n_modes": 1, "n_max": 1, "t_final": 0.5, "dt": 0.1,
  "qds": {"delta": 0.3, "alpha": 0.1, "omega_c": 2.0}})";

}  // namespace

TEST(ParseCommand, Reparam) {
  const auto cfg = parse_command({"reparam", "--jpar", "0.2", "--jperp", "0.5"});
  EXPECT_EQ(cfg.command, Command::Reparam);
  EXPECT_DOUBLE_EQ(cfg.parameters.at("j_par").get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(cfg.parameters.at("j_perp").get<double>(), 0.5);
  EXPECT_FALSE(cfg.output_path.has_value());
}

TEST(ParseCommand, SimulateConfigPath) {
  const auto cfg = parse_command({"simulate", "--config", "sim.json"});
  EXPECT_EQ(cfg.command, Command::Simulate);
  ASSERT_TRUE(cfg.config_path.has_value());
  EXPECT_EQ(*cfg.config_path, "sim.json");
}

TEST(ParseCommand, TwoWordVerifyForm) {
  EXPECT_EQ(parse_command({"verify", "algebra"}).command, Command::VerifyAlgebra);
  EXPECT_EQ(parse_command({"verify", "ybe", "--seed", "3"}).command, Command::VerifyYbe);
  EXPECT_EQ(parse_command({"verify-smatrix"}).command, Command::VerifySmatrix);
}

TEST(ParseCommand, MissingRequiredFlag) { EXPECT_THROW(parse_command({"reparam"}), UsageError); }

TEST(ParseCommand, UnknownFlagAndCommand) {
  EXPECT_THROW(parse_command({"verify-ybe", "--bogus", "1"}), UsageError);
  EXPECT_THROW(parse_command({"frobnicate"}), UsageError);
  EXPECT_THROW(parse_command({}), UsageError);
}

TEST(ParseCommand, NonFiniteRejected) {
  EXPECT_THROW(parse_command({"reparam", "--jpar", "nan", "--jperp", "0.5"}), UsageError);
}

TEST(ParseCommand, Help) { EXPECT_THROW(parse_command({"--help"}), HelpRequested); }

TEST(LoadConfig, ValidQdsBlock) {
  const auto p = write_file("valid.json", kValidQds);
  const auto cfg = load_config(p.string());
  EXPECT_EQ(cfg.command, Command::Simulate);
  const auto s = parse_simulation_config(cfg.parameters);
  EXPECT_DOUBLE_EQ(s.qds.delta, 0.3);
  EXPECT_EQ(s.bath.modes.size(), 1u);
}

TEST(LoadConfig, NegativeAlphaRejected) {
  const auto p = write_file("alpha.json", R"({"qds": {"alpha": -0.1}})");
  EXPECT_THROW(load_config(p.string()), UsageError);
}

TEST(LoadConfig, BothBlocksRejected) {
  const auto p = write_file("both.json", R"({"qds": {}, "acs": {}})");
  EXPECT_THROW(load_config(p.string()), UsageError);
}

TEST(LoadConfig, UnknownKeysRejected) {
  EXPECT_THROW(load_config(write_file("u1.json", R"({"qds": {}, "extra": 1})").string()), UsageError);
  EXPECT_THROW(load_config(write_file("u2.json", R"({"qds": {"alfa": 1}})").string()), UsageError);
}

TEST(LoadConfig, ParseErrorMentionsPosition) {
  const auto p = write_file("broken.json", "{\n  \"qds\": {\n    \"alpha\": ,\n  }\n}\n");
  try {
    load_config(p.string());
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadConfig, MissingFileIsIoError) { EXPECT_THROW(load_config("/nonexistent/qds3.json"), IoError); }

TEST(LoadConfig, AcsBlockMapsToQds) {
  const auto cfg = load_config(kConfigs + "/sim_acs.json");
  const auto s = parse_simulation_config(cfg.parameters);
  EXPECT_NEAR(s.qds.omega_c, 2.0, 1e-15);
  EXPECT_NEAR(s.qds.eps3, 0.05, 1e-15);
}

TEST(Run, ResultJsonShape) {
  std::string out;
  EXPECT_EQ(run_in_process({"verify-algebra", "--samples", "10"}, &out), kExitPass);
  const auto j = Json::parse(out);
  EXPECT_EQ(j.at("command"), "verify-algebra");
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_TRUE(j.contains("inputs"));
  EXPECT_TRUE(j.at("residuals").contains("completeness"));
}

TEST(Run, ReparamOutOfDomainIsUsage) {
  EXPECT_EQ(run_in_process({"reparam", "--jpar", "0.6", "--jperp", "0.3"}), kExitUsage);
  EXPECT_EQ(run_in_process({"reparam", "--jpar", "0.3", "--jperp", "0.3"}), kExitUsage);
}

TEST(Run, ThreadEnvironment) {
  ::setenv("QDS3_THREADS", "abc", 1);
  EXPECT_EQ(run_in_process({"verify-algebra"}), kExitUsage);
  ::setenv("QDS3_THREADS", "1", 1);
  EXPECT_EQ(run_in_process({"verify-algebra", "--samples", "4"}), kExitPass);
  ::unsetenv("QDS3_THREADS");
}

// End-to-end: the built binary.

TEST(EndToEnd, HelpExitsZero) { EXPECT_EQ(run_cli("--help"), 0); }

TEST(EndToEnd, VerifyYbePasses) {
  const auto out = scratch() / "ybe.json";
  EXPECT_EQ(run_cli("verify ybe --seed 5 --out '" + out.string() + "'"), 0);
  EXPECT_TRUE(Json::parse(slurp(out)).at("pass").get<bool>());
}

TEST(EndToEnd, ThresholdViolationExitsOne) {
  const auto out = scratch() / "smx.json";
  EXPECT_EQ(run_cli("verify-smatrix --samples 10 --tol 1e-30 --out '" + out.string() + "'"), 1);
  EXPECT_FALSE(Json::parse(slurp(out)).at("pass").get<bool>());
}

TEST(EndToEnd, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("reparam"), 2);
  EXPECT_EQ(run_cli("verify-ybe --nope"), 2);
  EXPECT_EQ(run_cli("simulate --config '" + write_file("both2.json", R"({"qds": {}, "acs": {}})").string() + "'"), 2);
}

TEST(EndToEnd, IoErrorsExitThree) {
  EXPECT_EQ(run_cli("verify-algebra --out /nonexistent-dir/x.json"), 3);
  EXPECT_EQ(run_cli("simulate --config /nonexistent-dir/sim.json"), 3);
}

TEST(EndToEnd, DeterministicReruns) {
  const auto a = scratch() / "a.json", b = scratch() / "b.json";
  ASSERT_EQ(run_cli("verify-smatrix --seed 42 --samples 20 --out '" + a.string() + "'"), 0);
  ASSERT_EQ(run_cli("verify-smatrix --seed 42 --samples 20 --out '" + b.string() + "'"), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto c = scratch() / "c.json";
  ASSERT_EQ(run_cli("verify-smatrix --seed 43 --samples 20 --out '" + c.string() + "'"), 0);
  EXPECT_NE(slurp(a), slurp(c));
}

TEST(EndToEnd, SimulateCsv) {
  const auto a = scratch() / "sim_a.csv", b = scratch() / "sim_b.csv";
  const std::string cfg = kConfigs + "/sim_example.json";
  ASSERT_EQ(run_cli("simulate --config '" + cfg + "' --out '" + a.string() + "'"), 0);
  ASSERT_EQ(run_cli("simulate --config '" + cfg + "' --out '" + b.string() + "'"), 0);
  const std::string body = slurp(a);
  EXPECT_EQ(body.substr(0, body.find('\n')), "t,p1,p2,p3,lam3,lam8,re_c12,im_c12,norm,energy");
  EXPECT_EQ(body, slurp(b));
  EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 42);
}

TEST(EndToEnd, SimulateFromAcsBlock) {
  const auto out = scratch() / "acs.csv";
  EXPECT_EQ(run_cli("simulate --config '" + kConfigs + "/sim_acs.json' --out '" + out.string() + "'"), 0);
}
