#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mdci/config.hpp"
#include "mdci/report.hpp"

using namespace mdci;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MDCI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const std::string kData = MDCI_TEST_DATA;

}  // namespace

TEST_CASE("config parser: values, arrays, comments") {
  const ConfigFile cf = ConfigFile::parse_string(
      "top = 1.5\n"
      "[sec]\n"
      "name = \"abc\" # trailing comment\n"
      "flag = true\n"
      "xs = [1, 2, 3.5]\n"
      "names = [\"a\", \"b\"]\n");
  CHECK(cf.get("", "top").number("top") == 1.5);
  CHECK(cf.get("sec", "name").str("name") == "abc");
  CHECK(cf.get("sec", "flag").boolean("flag"));
  CHECK(cf.get("sec", "xs").numbers("xs") == std::vector<double>{1.0, 2.0, 3.5});
  CHECK(cf.get("sec", "names").strings("names") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("config parser: errors carry line numbers") {
  try {
    ConfigFile::parse_string("a = 1\nb 2\n");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(e.line_number == 2);
  }
  CHECK_THROWS_AS(ConfigFile::parse_string("x = [1, \"a\"]\n"), config_error);
  CHECK_THROWS_AS(ConfigFile::parse_string("[open\n"), config_error);
  CHECK_THROWS_AS(ConfigFile::parse_string("k =\n"), config_error);
}

TEST_CASE("analysis config: covariance routes are exclusive") {
  CHECK_THROWS_AS(AnalysisConfig::from_file(kData + "/broken.toml"), config_error);
  const std::string both = std::filesystem::temp_directory_path().string() + "/both.toml";
  {
    std::ofstream out(both);
    out << "[estimate]\ntheta_hat = [1, 2]\nse = [0.1, 0.1]\nsigma_hat = [1, 0, 0, 1]\n";
  }
  CHECK_THROWS_AS(AnalysisConfig::from_file(both), config_error);
}

TEST_CASE("analysis config: t-statistics convert to standard errors") {
  const AnalysisConfig ac = AnalysisConfig::from_file(kData + "/mediation_full.toml");
  CHECK(ac.theta_hat == Vec{0.199, -0.119});
  const double se1 = 0.199 / 3.140;
  CHECK(ac.sigma_hat(0, 0) == Catch::Approx(se1 * se1).epsilon(1e-14));
  CHECK(ac.sigma_hat(0, 1) == 0.0);
  CHECK(ac.eta == Catch::Approx(0.005));
  CHECK(ac.methods.size() == 4);
}

TEST_CASE("ci table round-trips through the CSV exactly") {
  AnalysisConfig ac = AnalysisConfig::from_file(kData + "/mediation_1yr.toml");
  ac.out_dir = (std::filesystem::temp_directory_path() / "mdci_ci_roundtrip").string();
  std::ostringstream sink;
  const std::string path = run_ci_command(ac, sink);
  const auto rows = compute_ci_table(ac);
  const auto parsed = read_ci_csv(path);
  REQUIRE(rows.size() == parsed.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].method == parsed[i].method);
    CHECK(rows[i].estimate == parsed[i].estimate);  // exact: %.17g round trip
    CHECK(rows[i].lower == parsed[i].lower);
    CHECK(rows[i].upper == parsed[i].upper);
    CHECK(rows[i].length == parsed[i].length);
  }
  CHECK(sink.str().find("BN1") != std::string::npos);
}

TEST_CASE("cli: exit code contract") {
  // 0 on success
  const std::string out = (std::filesystem::temp_directory_path() / "mdci_cli_out").string();
  CHECK(run_cli("ci --config " + kData + "/mediation_1yr.toml --method BN1 --out " + out) == 0);
  // 2 on config errors
  CHECK(run_cli("ci --config " + kData + "/broken.toml") == 2);
  CHECK(run_cli("ci --config /nonexistent/file.toml") == 2);
  CHECK(run_cli("simulate --preset bogus") == 2);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  // 3 on numeric errors: sigma far outside the admissible eigenvalue range
  const std::string bad = (std::filesystem::temp_directory_path() / "bad_sigma.toml").string();
  {
    std::ofstream o(bad);
    o << "[estimate]\ntheta_hat = [1, 2]\nsigma_hat = [1e12, 0, 0, 1e12]\n";
  }
  CHECK(run_cli("ci --config " + bad) == 3);
}

TEST_CASE("cli: geometry and limitexp commands run") {
  CHECK(run_cli("geometry --rho 0 --tau 4 --theta1 0.5 --n-draws 50000 --threads 2") == 0);
  CHECK(run_cli("limitexp --n-draws 50000") == 0);
}

TEST_CASE("cli: ci output is reproducible byte for byte") {
  const auto dir1 = std::filesystem::temp_directory_path() / "mdci_rep1";
  const auto dir2 = std::filesystem::temp_directory_path() / "mdci_rep2";
  REQUIRE(run_cli("ci --config " + kData + "/mediation_full.toml --out " + dir1.string()) == 0);
  REQUIRE(run_cli("ci --config " + kData + "/mediation_full.toml --out " + dir2.string()) == 0);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(dir1 / "ci.csv") == slurp(dir2 / "ci.csv"));
  CHECK(!slurp(dir1 / "ci.csv").empty());
}
