#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using torus_coulomb::cli::json;
using torus_coulomb::cli::parse_and_dispatch;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome r;
  r.code = parse_and_dispatch(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content = "") {
  const auto p = std::filesystem::temp_directory_path() / ("torus_coulomb_cli_" + name);
  if (!content.empty()) std::ofstream(p) << content;
  return p;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Cli, BetaPrintsDerivedBetaStar) {
  const Outcome r = run({"dg", "--n", "4", "--beta", "3", "--sweeps", "1000"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("0.0833333"), std::string::npos) << r.err;
}

TEST(Cli, BothTemperaturesIsUsageError) {
  const Outcome r = run({"dg", "--n", "4", "--beta", "3", "--beta-star", "0.1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("beta"), std::string::npos);
}

TEST(Cli, MissingTemperatureIsUsageError) {
  EXPECT_EQ(run({"cg", "--n", "4", "--sweeps", "1000"}).code, 2);
}

TEST(Cli, UnknownFlagsAndSubcommands) {
  EXPECT_EQ(run({"dg", "--n", "4", "--beta", "1", "--bogus", "3"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"exact"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, BadSiteAndFormatAreUsageErrors) {
  EXPECT_EQ(run({"dg", "--n", "4", "--beta", "1", "--i", "1;2", "--sweeps", "1000"}).code, 2);
  EXPECT_EQ(run({"greens", "--n", "4", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"cg", "--n", "4", "--beta-star", "0.05", "--proposal", "wide"}).code, 2);
  EXPECT_EQ(run({"dg", "--n", "4", "--beta", "1", "--sweeps", "5"}).code, 2);
}

TEST(Cli, GreensCsvAndJson) {
  const Outcome csv = run({"greens", "--n", "4"});
  ASSERT_EQ(csv.code, 0);
  const auto rows = lines(csv.out);
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_EQ(rows[0], "dx,dy,g,g0_minus_g");
  EXPECT_EQ(rows[1].rfind("0,0,", 0), 0u);

  const Outcome js = run({"greens", "--n", "3", "--format", "json"});
  ASSERT_EQ(js.code, 0);
  const json j = json::parse(js.out);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["config"]["n"], 3);
  ASSERT_EQ(j["values"].size(), 9u);
  // N = 3: g(0) = 8/9 exactly
  EXPECT_NEAR(j["values"][0]["g"].get<double>(), 8.0 / 9.0, 1e-14);
}

TEST(Cli, DgCsvColumnsAndReproducibility) {
  const std::vector<std::string> args{"dg", "--n", "4", "--beta", "1", "--i", "1,1", "--j", "3,2",
                                      "--sweeps", "2000", "--seed", "5"};
  const Outcome a = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto rows = lines(a.out);
  EXPECT_EQ(rows[0], "observable,estimate,stderr,sweeps,seed");
  EXPECT_EQ(rows[1].rfind("O_ij,", 0), 0u);
  EXPECT_NE(rows[1].find(",2000,5"), std::string::npos);
  EXPECT_EQ(a.out, run(args).out);
}

TEST(Cli, JsonReportEmbedsResolvedConfig) {
  const Outcome r = run({"cg", "--n", "4", "--beta-star", "0.05", "--i", "1,0", "--j", "3,3", "--sweeps",
                     "2000", "--burn-in", "50", "--seed", "7", "--chains", "2", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["schema_version"], 1);
  const json& c = j["config"];
  EXPECT_EQ(c["subcommand"], "cg");
  EXPECT_DOUBLE_EQ(c["beta_star"].get<double>(), 0.05);
  EXPECT_DOUBLE_EQ(c["beta"].get<double>(), 5.0);
  EXPECT_EQ(c["i"], json::array({1, 0}));
  EXPECT_EQ(c["j"], json::array({3, 3}));
  EXPECT_EQ(c["sweeps"], 2000);
  EXPECT_EQ(c["burn_in"], 50);
  EXPECT_EQ(c["seed"], 7);
  EXPECT_EQ(c["chains"], 2);
  EXPECT_EQ(c["proposal"], "nn");
  EXPECT_TRUE(j["bounds_apply"].get<bool>());
  EXPECT_LT(j["lower_bound"].get<double>(), j["upper_bound"].get<double>());
}

TEST(Cli, CgWarnsAboveBoundRange) {
  const Outcome r = run({"cg", "--n", "4", "--beta-star", "0.2", "--sweeps", "1000"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = temp_file("run.cfg", "# comment\nn = 4\nbeta=2\nsweeps=1000\nseed=3\nformat=json\n");
  const Outcome a = run({"dg", "--config", cfg.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const json ja = json::parse(a.out);
  EXPECT_EQ(ja["config"]["sweeps"], 1000);
  EXPECT_EQ(ja["config"]["seed"], 3);

  const Outcome b = run({"dg", "--config", cfg.string(), "--sweeps", "2000", "--beta-star", "0.1"});
  ASSERT_EQ(b.code, 0) << b.err;
  const json jb = json::parse(b.out);
  EXPECT_EQ(jb["config"]["sweeps"], 2000);
  EXPECT_DOUBLE_EQ(jb["config"]["beta_star"].get<double>(), 0.1);
  EXPECT_EQ(jb["config"]["seed"], 3);
}

TEST(Cli, ConfigFileErrors) {
  const auto bad = temp_file("bad.cfg", "n=4\nbeta=1\nwobble=3\n");
  EXPECT_EQ(run({"dg", "--config", bad.string()}).code, 2);
  EXPECT_EQ(run({"dg", "--config", "/nonexistent/file.cfg"}).code, 2);
}

TEST(Cli, OutFileIsWritten) {
  const auto path = temp_file("greens.csv");
  std::filesystem::remove(path);
  const Outcome r = run({"greens", "--n", "3", "--out", path.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "dx,dy,g,g0_minus_g");
}

TEST(Cli, ExactDualityAndBudget) {
  const Outcome ok = run({"exact", "duality", "--n", "2", "--beta", "1", "--kx", "6", "--km", "4"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_LE(json::parse(ok.out)["relative_gap"].get<double>(), 1e-6);

  const Outcome big = run({"exact", "duality", "--n", "4", "--beta", "1", "--kx", "4", "--km", "4"});
  EXPECT_EQ(big.code, 2);
  EXPECT_NE(big.err.find("--budget-override"), std::string::npos) << big.err;
}

TEST(Cli, ExactCrossIdentity) {
  const Outcome r = run({"exact", "cross-identity", "--n", "2", "--beta-star", "0.25", "--i", "1,0", "--j",
                     "1,1", "--kx", "6", "--km", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LE(j["residual"].get<double>(), 1e-8);
  EXPECT_DOUBLE_EQ(j["config"]["beta"].get<double>(), 1.0);
}

TEST(Cli, ContoursSubcommands) {
  const Outcome e = run({"contours", "enumerate", "--n", "6", "--i", "1,1", "--j", "4,3", "--max-len", "6"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto rows = lines(e.out);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[4], "4,2,0,2,3888");
  EXPECT_EQ(rows[6].rfind("6,8,0,8,", 0), 0u);

  const Outcome x = run({"contours", "extract", "--n", "4", "--i", "1,1", "--j", "3,2", "--seed", "3"});
  ASSERT_EQ(x.code, 0) << x.err;
  const json jx = json::parse(x.out);
  EXPECT_TRUE(jx["kind"] == "loop" || jx["kind"] == "winding_pair");
  EXPECT_GE(jx["length"].get<int>(), 4);

  const Outcome v = run({"contours", "verify", "--n", "4", "--samples", "300"});
  EXPECT_EQ(v.code, 0) << v.err;
  EXPECT_TRUE(json::parse(v.out)["passed"].get<bool>());
  const Outcome vb = run({"contours", "verify", "--n", "6", "--samples", "100", "--beta", "1"});
  EXPECT_EQ(vb.code, 0) << vb.err;

  EXPECT_EQ(run({"contours", "extract", "--n", "3", "--i", "1,1", "--j", "0,2"}).code, 2);
}

TEST(Cli, VerifyQuick) {
  const Outcome r = run({"verify", "--quick"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  int pass_lines = 0;
  for (const auto& l : lines(r.out)) pass_lines += l.rfind("[PASS]", 0) == 0;
  EXPECT_EQ(pass_lines, 3);

  const Outcome j = run({"verify", "--quick", "--format", "json"});
  ASSERT_EQ(j.code, 0);
  const json o = json::parse(j.out);
  EXPECT_TRUE(o["passed"].get<bool>());
  EXPECT_EQ(o["criteria"].size(), 3u);
}

TEST(CliConfig, TokensFromKeyValueFile) {
  const auto p = temp_file("tokens.cfg", "beta_star = 0.1\n\nbudget-override=true\nquick=false\n--seed=4\n");
  const auto t = torus_coulomb::cli::read_config_tokens(p.string());
  EXPECT_EQ(t, (std::vector<std::string>{"--beta-star", "0.1", "--budget-override", "--seed", "4"}));
}
