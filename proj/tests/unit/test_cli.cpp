#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lattheta/cli.hpp"
#include "lattheta/errors.hpp"

namespace lattheta {
namespace {

struct Outcome {
  int status;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lattheta");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<double> column(const std::string& csv, std::size_t index) {
  std::vector<double> out;
  const auto ls = lines(csv);
  for (std::size_t i = 2; i < ls.size(); ++i) {
    if (ls[i].rfind("#", 0) == 0) continue;
    std::istringstream row(ls[i]);
    std::string field;
    for (std::size_t c = 0; c <= index; ++c) std::getline(row, field, ',');
    out.push_back(std::stod(field));
  }
  return out;
}

TEST(Grid, Forms) {
  EXPECT_EQ(Grid::parse("0.1:0.5:0.1").values, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}));
  EXPECT_EQ(Grid::parse("1,2.5,4").values, (std::vector<double>{1, 2.5, 4}));
  EXPECT_EQ(Grid::parse("3").values, (std::vector<double>{3}));
  EXPECT_EQ(Grid::parse("0.5:3:0.1").values.size(), 26u);
  for (const char* bad : {"", "1,1", "3,2", "1:2", "1:2:0", "1:0:0.5", "a,b", "1;2"}) {
    EXPECT_THROW(Grid::parse(bad), Error) << bad;
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.command = "theta";
  c.lattices = {"A2"};
  c.sigma2 = Grid::parse("0.1:1:0.1");
  c.seed = 9;
  c.c = {1, 2};
  const auto back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"bogus", 1}}), Error);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"K", "two"}}), Error);
}

TEST(Cli, ThetaHexagonal) {
  const auto r = invoke({"theta", "--lattice", "A2", "--sigma2", "0.1:3:0.1", "--modes", "exact,approx,baseline"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 32u);
  EXPECT_EQ(ls[0].rfind("# config: ", 0), 0u);
  EXPECT_EQ(ls[1], "sigma2,q,theta_exact,theta_approx,baseline,epsilon_exact,epsilon_approx,vnr");
  for (std::size_t c : {1u, 2u, 3u, 4u}) {
    const auto v = column(r.out, c);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]) << "column " << c;
  }
}

TEST(Cli, ConfigEchoReruns) {
  const auto first = invoke({"caf-decode", "--lattice", "Z1", "--sigma2", "0.05", "--seed", "4", "--trials", "20"});
  ASSERT_EQ(first.status, 0) << first.err;
  const std::string header = lines(first.out)[0].substr(10);
  const auto path = std::filesystem::temp_directory_path() / "lattheta_echo.json";
  std::ofstream(path) << header;
  const auto again = invoke({"caf-decode", "--config", path.string()});
  std::filesystem::remove(path);
  EXPECT_EQ(again.out, first.out);
}

TEST(Cli, Deterministic) {
  const std::vector<std::vector<std::string>> commands{
      {"caf-decode", "--K", "2", "--sigma2", "0.1", "--seed", "3", "--trials", "30"},
      {"caf-surface", "--sigma2", "0.2", "--seed", "5"},
      {"caf-rate", "--rho-db", "0:20:5", "--seed", "1", "--trials", "40"},
      {"thm2", "--trials", "100", "--seed", "7", "--c", "1,2,3"},
      {"sumlattice", "--K", "3", "--p", "1", "--seed", "2"},
      {"probe", "--K", "3", "--p", "2", "--seed", "0", "--trials", "3"},
  };
  for (const auto& cmd : commands) {
    const auto a = invoke(cmd), b = invoke(cmd);
    EXPECT_EQ(a.status, 0) << cmd[0] << ": " << a.err;
    EXPECT_EQ(a.out, b.out) << cmd[0];
    EXPECT_FALSE(a.out.empty()) << cmd[0];
  }
}

TEST(Cli, ThmSummary) {
  const auto r = invoke({"thm2", "--trials", "300", "--seed", "7", "--c", "1,2,3"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["summary"]["equivalent"], j["summary"]["non_degenerate"]);
  EXPECT_TRUE(j["summary"]["pass"].get<bool>());
  EXPECT_EQ(j["config"]["seed"], 7);
}

TEST(Cli, SumLatticeCloud) {
  const auto r = invoke({"sumlattice", "--K", "3", "--p", "1", "--seed", "2"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(lines(r.out)[1], "x1,x2");
  EXPECT_EQ(lines(r.out).size(), 3u + 81u);
}

TEST(Cli, FlatnessTables) {
  const auto r = invoke({"flatness", "--dim", "4", "--rho-db", "20"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 6u);
  const auto s = invoke({"flatness", "--lattice", "Z2,E8", "--sigma2", "0.5,1", "--mode", "approx"});
  ASSERT_EQ(s.status, 0) << s.err;
  EXPECT_EQ(lines(s.out).size(), 6u);
}

TEST(Cli, CatalogAndValidate) {
  const auto list = invoke({"catalog", "list"});
  ASSERT_EQ(list.status, 0);
  EXPECT_EQ(nlohmann::json::parse(list.out).size(), 17u);
  const auto show = invoke({"catalog", "show", "Lambda4_3"});
  ASSERT_EQ(show.status, 0);
  const auto j = nlohmann::json::parse(show.out);
  EXPECT_EQ(j["volume"], 10.0);
  EXPECT_EQ(j["generator"][1][1], -2.0);
  const auto v = invoke({"validate"});
  EXPECT_EQ(v.status, 0);
  EXPECT_TRUE(nlohmann::json::parse(v.out)["passed"].get<bool>());
}

TEST(Cli, SpecFileLattice) {
  const auto path = std::filesystem::temp_directory_path() / "lattheta_spec.json";
  std::ofstream(path) << R"({"name":"rect","dim":2,"generator":[[1,0],[0,2]]})";
  const auto r = invoke({"theta", "--lattice", path.string(), "--sigma2", "1", "--modes", "exact"});
  std::filesystem::remove(path);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(column(r.out, 2).size(), 1u);
}

TEST(Cli, ErrorRecords) {
  struct Case {
    std::vector<std::string> args;
    ErrorCode code;
  };
  const std::vector<Case> cases{
      {{"theta", "--lattice", "E7", "--sigma2", "1"}, ErrorCode::kUnknownLattice},
      {{"theta", "--lattice", "A2"}, ErrorCode::kConfigError},
      {{"theta", "--lattice", "A2", "--sigma2", "2,1"}, ErrorCode::kConfigError},
      {{"caf-decode", "--sigma2", "0.1"}, ErrorCode::kConfigError},
      {{"theta", "--bogus"}, ErrorCode::kConfigError},
      {{"caf-surface", "--lattice", "Leech", "--sigma2", "0.1", "--seed", "1"}, ErrorCode::kGeneratorUnavailable},
      {{"theta", "--lattice", "A2", "--sigma2", "1", "--out", "/nonexistent/dir/x.csv"}, ErrorCode::kIoError},
      {{"caf-decode", "--config", "/nonexistent/config.json"}, ErrorCode::kIoError},
  };
  for (const auto& c : cases) {
    const auto r = invoke(c.args);
    EXPECT_EQ(r.status, exit_code(c.code)) << c.args[0] << " " << r.err;
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"], std::string(to_string(c.code)));
    EXPECT_EQ(j["exit_code"], exit_code(c.code));
    EXPECT_TRUE(r.out.empty());
  }
}

TEST(Cli, ExitCodesDistinct) {
  std::set<int> seen;
  for (int i = 0; i <= static_cast<int>(ErrorCode::kIoError); ++i) {
    const int code = exit_code(static_cast<ErrorCode>(i));
    EXPECT_NE(code, 0);
    EXPECT_TRUE(seen.insert(code).second);
  }
}

}  // namespace
}  // namespace lattheta
