#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicke/cli.hpp"
#include "dicke/output.hpp"

using namespace dicke;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("dicke_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::size_t file_count(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

}  // namespace

TEST_CASE("cli: unknown flag is a config error and writes nothing") {
  TempDir d("unknown");
  CHECK(run({"bounds", "--seed", "1", "--bogus", "3", "--out", d.path.string()}) == cli::kExitConfig);
  CHECK(file_count(d.path) == 0);
  // kicked-top has no eps
  CHECK(run({"kicked-top", "--seed", "1", "--eps", "3", "--out", d.path.string()}) == cli::kExitConfig);
  CHECK(file_count(d.path) == 0);
}

TEST_CASE("cli: seed is mandatory") {
  TempDir d("seed");
  std::string err;
  CHECK(run({"bounds", "--out", d.path.string()}, &err) == cli::kExitConfig);
  CHECK(err.find("seed") != std::string::npos);
  CHECK(file_count(d.path) == 0);
}

TEST_CASE("cli: invalid values are rejected") {
  TempDir d("invalid");
  CHECK(run({"trajectory", "--seed", "1", "--rtol", "0.5", "--out", d.path.string()}) == cli::kExitConfig);
  CHECK(run({"moments", "--seed", "1", "--samples", "0", "--out", d.path.string()}) == cli::kExitConfig);
  CHECK(run({"bounds", "--seed", "1", "--format", "xml", "--out", d.path.string()}) == cli::kExitConfig);
  CHECK(file_count(d.path) == 0);
}

TEST_CASE("cli: bounds output") {
  TempDir d("bounds");
  REQUIRE(run({"bounds", "--seed", "1", "--out", d.path.string()}) == cli::kExitOk);
  const json j = json::parse(slurp(d.path / "bounds.json"));
  CHECK(j["result"]["asymptotic"]["I_min"].get<double>() == doctest::Approx(78.787).epsilon(1e-4));
  CHECK(j["result"]["asymptotic"]["I_max"].get<double>() == doctest::Approx(121.213).epsilon(1e-4));
  CHECK(j["result"]["trivial"]["I_min"].get<double>() == doctest::Approx(99.0));
  CHECK(j["meta"]["seed"].get<std::uint64_t>() == 1);
  CHECK(j["meta"]["config"]["eps"].get<double>() == 100.0);
}

TEST_CASE("cli: csv header echoes the configuration") {
  TempDir d("header");
  REQUIRE(run({"trajectory", "--seed", "7", "--gamma", "0", "--t-end", "5", "--out", d.path.string()}) ==
          cli::kExitOk);
  const std::string text = slurp(d.path / "trajectory.csv");
  std::istringstream in(text);
  std::string line, config, hash;
  std::vector<std::string> data;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# config: ", 0) == 0) config = line.substr(10);
    if (line.rfind("# config_hash: ", 0) == 0) hash = line.substr(15);
    if (!line.empty() && line[0] != '#') data.push_back(line);
  }
  REQUIRE(!config.empty());
  CHECK(text.find("# dicke " + std::string(out::kVersion)) == 0);
  CHECK(text.find("# seed: 7") != std::string::npos);
  CHECK(hash == out::hex64(out::fnv1a64(config)));
  const json echoed = json::parse(config);
  CHECK(echoed["gamma"].get<double>() == 0.0);
  CHECK(echoed["t_end"].get<double>() == 5.0);
  CHECK(echoed["command"] == "trajectory");

  // uncoupled: I is conserved exactly along the whole record
  REQUIRE(data.size() > 10);
  CHECK(data[0].rfind("t,I,", 0) == 0);
  auto second = [](const std::string& row) {
    const auto a = row.find(','), b = row.find(',', a + 1);
    return std::stod(row.substr(a + 1, b - a - 1));
  };
  const double i0 = second(data[1]);
  for (std::size_t k = 2; k < data.size(); ++k) CHECK(second(data[k]) == doctest::Approx(i0).epsilon(1e-9));
}

TEST_CASE("cli: reruns are byte identical") {
  TempDir a("rerun_a"), b("rerun_b");
  const std::vector<std::string> common = {"kicked-top", "--seed", "5", "--samples", "1000", "--steps", "5",
                                           "--lyap-steps", "10000", "--var-steps", "50"};
  auto with = [&](const fs::path& p) {
    auto v = common;
    v.push_back("--out");
    v.push_back(p.string());
    return v;
  };
  REQUIRE(run(with(a.path)) == cli::kExitOk);
  REQUIRE(run(with(b.path)) == cli::kExitOk);
  for (const auto& e : fs::directory_iterator(a.path)) {
    CHECK(slurp(e.path()) == slurp(b.path / e.path().filename()));
  }
  CHECK(file_count(a.path) == file_count(b.path));
}

TEST_CASE("cli: moments agree with the closed forms") {
  TempDir d("moments");
  REQUIRE(run({"moments", "--seed", "3", "--samples", "100000", "--out", d.path.string()}) == cli::kExitOk);
  const json j = json::parse(slurp(d.path / "moments.json"));
  for (const auto& m : j["result"]["moments"]) CHECK(std::abs(m["z_score"].get<double>()) < 4.0);
}

TEST_CASE("cli: config layering") {
  const json file = {{"seed", 9}, {"eps", 20.0}, {"gamma", 2.0}};
  SUBCASE("flags override the file") {
    const cli::RunConfig c = cli::resolve_config("moments", file, {{"gamma", 2.5}});
    CHECK(c.real("gamma") == 2.5);
    CHECK(c.real("eps") == 20.0);
    CHECK(c.seed() == 9);
  }
  SUBCASE("eps and delta_eps_rel replace each other") {
    const cli::RunConfig c = cli::resolve_config("moments", file, {{"delta_eps_rel", 0.3}});
    CHECK(!c.has("eps"));
    CHECK(c.real("delta_eps_rel") == 0.3);
    CHECK_THROWS_AS(cli::resolve_config("moments", {{"seed", 1}, {"eps", 1.0}, {"delta_eps_rel", 0.1}}, nullptr),
                    cli::ConfigError);
  }
  SUBCASE("unknown and foreign keys") {
    CHECK_THROWS_AS(cli::resolve_config("moments", {{"seed", 1}, {"colour", 1}}, nullptr), cli::ConfigError);
    CHECK_THROWS_AS(cli::resolve_config("moments", {{"seed", 1}, {"tau", 1.0}}, nullptr), cli::ConfigError);
  }
  SUBCASE("integer keys are normalised") {
    const cli::RunConfig c = cli::resolve_config("moments", {{"seed", 1}, {"samples", 1000.0}}, nullptr);
    CHECK(c.integer("samples") == 1000);
  }
  SUBCASE("every command has defaults") {
    for (const auto& name : cli::command_names()) CHECK(cli::command_defaults(name).is_object());
  }
}

TEST_CASE("cli: config file errors") {
  TempDir d("cfgfile");
  fs::create_directories(d.path);
  const fs::path bad = d.path / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(run({"bounds", "--seed", "1", "--config", bad.string(), "--out", (d.path / "o").string()}) ==
        cli::kExitConfig);
  const fs::path good = d.path / "good.json";
  std::ofstream(good) << R"({"seed": 4, "eps": 50})";
  REQUIRE(run({"bounds", "--config", good.string(), "--out", (d.path / "o").string()}) == cli::kExitOk);
  const json j = json::parse(slurp(d.path / "o" / "bounds.json"));
  CHECK(j["meta"]["seed"].get<std::uint64_t>() == 4);
  CHECK(j["result"]["eps"].get<double>() == 50.0);
}
