#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clg/cli.hpp"

using namespace clg;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "clg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("clg_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("gamma mode") {
  const Invocation r = invoke({"--mode", "gamma"});
  CHECK(r.code == 0);
  CHECK(r.out == "6.689  8.25 dB\n");
  CHECK(invoke({"--mode", "gamma", "--packet-size", "2"}).out == "1.256  0.99 dB\n");
  const Invocation bad = invoke({"--mode", "gamma", "--packet-size", "1"});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("no positive root for M<2") != std::string::npos);
}

TEST_CASE("config JSON round trip") {
  cli::RunConfig c;
  c.mode = "dynamic";
  c.arrivals = {300, 700};
  c.seed = 99;
  c.rho = 0.02;
  const cli::RunConfig back = cli::from_json(cli::to_json(c));
  CHECK(cli::to_json(back) == cli::to_json(c));
  // A manifest carries the config under "config".
  const nlohmann::json manifest = {{"config", cli::to_json(c)}, {"version", "x"}};
  CHECK(cli::to_json(cli::from_json(manifest)) == cli::to_json(c));
  // Partial files keep the defaults for every other key.
  const cli::RunConfig partial = cli::from_json({{"users", 14}});
  CHECK(partial.users == 14);
  CHECK(partial.gain == 15);
  CHECK_THROWS_AS(cli::from_json({{"userz", 14}}), DomainError);
}

TEST_CASE("config resolution") {
  cli::RunConfig c;
  c.resolve();
  CHECK(c.horizon == 2000);
  CHECK(c.jobs >= 1);
  cli::RunConfig d;
  d.mode = "dynamic";
  d.resolve();
  CHECK(d.horizon == 2500);
  CHECK(d.arrivals == std::vector<std::int64_t>{1000, 1700});
  cli::RunConfig bad;
  bad.arrivals = {10};
  CHECK_THROWS_AS(bad.resolve(), DomainError);
  bad = {};
  bad.mode = "nope";
  CHECK_THROWS_AS(bad.resolve(), DomainError);
  bad = {};
  bad.rho = 2.0;
  CHECK_THROWS_AS(bad.resolve(), DomainError);
}

TEST_CASE("arrival list parsing") {
  CHECK(cli::parse_arrivals("1000,1700") == std::vector<std::int64_t>{1000, 1700});
  CHECK(cli::parse_arrivals("5") == std::vector<std::int64_t>{5});
  CHECK_THROWS_AS(cli::parse_arrivals("10,x"), DomainError);
  CHECK_THROWS_AS(cli::parse_arrivals("10.5"), DomainError);
}

TEST_CASE("static run writes the documented CSV and manifest") {
  const fs::path dir = scratch("static");
  const Invocation r = invoke({"--mode", "static", "--realizations", "2", "--horizon", "120",
                               "--seed", "7", "--out", dir.string(), "--jobs", "1"});
  REQUIRE(r.code == 0);
  std::ifstream csv(dir / "trajectory.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == cli::kTrajectoryHeader);
  CHECK(line ==
        "n,active_users,avg_utility_bit_per_joule,avg_sinr_db,avg_power_dbw,benchmark_utility,"
        "benchmark_sinr_db,benchmark_power_dbw");
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0] == std::to_string(rows + 1));
    CHECK(cells[1] == "8");
    for (std::size_t i = 2; i < cells.size(); ++i) {
      // %.9g: at most nine significant digits.
      int digits = 0;
      for (char ch : cells[i].substr(0, cells[i].find('e'))) digits += std::isdigit(ch) ? 1 : 0;
      CHECK(digits <= 9);
    }
    ++rows;
  }
  CHECK(rows == 120);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("config").at("horizon") == 120);
  CHECK(manifest.at("config").at("lambda") == 0.995);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("started_at"));
  CHECK(manifest.at("outputs").at("csv") == (dir / "trajectory.csv").string());
}

TEST_CASE("manifest reproduces the run and flags override files") {
  const fs::path a = scratch("manifest_a");
  const fs::path b = scratch("manifest_b");
  const fs::path c = scratch("manifest_c");
  REQUIRE(invoke({"--mode", "dynamic", "--arrivals", "60", "--realizations", "2", "--horizon",
                  "100", "--seed", "3", "--out", a.string(), "--jobs", "1"})
              .code == 0);
  REQUIRE(invoke({"--config", (a / "manifest.json").string(), "--out", b.string(), "--jobs", "2"})
              .code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  REQUIRE(invoke({"--config", (a / "manifest.json").string(), "--out", c.string(), "--seed", "4"})
              .code == 0);
  CHECK(slurp(a / "trajectory.csv") != slurp(c / "trajectory.csv"));
  const auto manifest = nlohmann::json::parse(slurp(c / "manifest.json"));
  CHECK(manifest.at("config").at("seed") == 4);
  CHECK(manifest.at("config").at("arrivals") == std::vector<int>{60});
}

TEST_CASE("benchmark mode") {
  const fs::path dir = scratch("benchmark");
  const Invocation r = invoke({"--mode", "benchmark", "--realizations", "3", "--out",
                               dir.string()});
  REQUIRE(r.code == 0);
  std::ifstream csv(dir / "benchmark.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == cli::kBenchmarkHeader);
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(split(line).size() == 8);
    CHECK(split(line)[1] == "1");
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("bad input is reported") {
  CHECK(invoke({"--mode", "static", "--rho", "0"}).code != 0);
  CHECK(invoke({"--mode", "fly"}).code != 0);
  CHECK(invoke({"--config", "/nonexistent/file.json"}).code != 0);
  CHECK(invoke({"--help"}).out.find("dBW") != std::string::npos);
}
