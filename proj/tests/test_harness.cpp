#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "fkent/errors.hpp"
#include "fkent/harness.hpp"
#include "fkent/parallel.hpp"

using namespace fkent;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    resolve_defaults(Command::estimate_top, parse_config(j));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json small(const std::string& family) {
  return json{{"system", {{"family", family}}},
              {"schedule", {{"n", {3, 4, 5}}}},
              {"seed", 11}};
}

ExperimentConfig small_top() {
  auto j = small("expanding");
  j["schedule"]["eps"] = {0.2, 0.1};
  j["budget"] = {{"candidates", 3000}, {"omega_samples", 2}};
  return parse_config(j);
}

ExperimentConfig small_local() {
  auto j = small("tent");
  j["schedule"]["delta"] = {0.3, 0.2};
  j["budget"] = {{"M", 20000}, {"base_points", 3}, {"omega_samples", 2}};
  return parse_config(j);
}

ExperimentConfig small_katok() {
  auto j = small("full_shift");
  j["schedule"]["eps"] = {0.3};
  j["budget"] = {{"M", 4000}, {"omega_samples", 2}};
  return parse_config(j);
}

std::string bodies(const Report& r) {
  std::string all;
  for (const auto& t : r.tables) all += t.name + "\n" + t.body();
  return all;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config errors name the field") {
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"budget", {{"samples", 3}}}})
            .find("budget.samples") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"schedule", {{"n", json::array()}}}})
            .find("schedule.n") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"schedule", {{"n", {4, 2, 6}}}}})
            .find("schedule.n") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"schedule", {{"eps", {0.1, 0.2}}}}})
            .find("schedule.eps") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "banana"}}}}).find("system.family") !=
        std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"driving", {{"p", {0.5, 0.6}}}}})
            .find("driving") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"budget", {{"M", -3}}}})
            .find("budget.M") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}, {"metrics", {"hamming"}}})
            .find("metrics") != std::string::npos);
  CHECK(config_error(json{{"seed", 1}}).find("system.family") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}, {"colour", "red"}}}})
            .find("system.colour") != std::string::npos);
  CHECK(config_error(json{{"system", {{"family", "expanding"}}}}).empty());
}

TEST_CASE("defaults per command") {
  auto base = parse_config(json{{"system", {{"family", "expanding"}}}});
  auto top = resolve_defaults(Command::estimate_top, base);
  CHECK(*top.n_values == std::vector<std::size_t>{8, 10, 12, 14});
  CHECK(*top.eps_values == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(*top.omega_samples == 8);
  CHECK(*top.metrics == std::vector<std::string>{"bowen"});
  CHECK(top.system.params == std::vector<int>{2, 3});
  CHECK(top.driving.p == std::vector<double>{0.5, 0.5});
  auto local = resolve_defaults(Command::compare_local, base);
  CHECK(*local.n_values == std::vector<std::size_t>{8, 10, 12});
  CHECK(*local.delta_values == std::vector<double>{0.2, 0.1});
  CHECK(*local.M == 1000000);
  CHECK(*local.metrics == std::vector<std::string>{"bowen", "fk"});
  auto katok = resolve_defaults(Command::estimate_katok, base);
  CHECK(*katok.n_values == std::vector<std::size_t>{8, 9, 10, 11, 12});
  CHECK(*katok.eps_values == std::vector<double>{0.3});
}

TEST_CASE("config round trip") {
  auto c = small_top();
  auto again = parse_config(to_json(c));
  CHECK(to_json(again) == to_json(c));
}

TEST_CASE("commands") {
  for (auto c : {Command::estimate_top, Command::estimate_local, Command::estimate_katok,
                 Command::compare_top, Command::compare_local, Command::compare_katok}) {
    CHECK(parse_command(to_string(c)) == c);
  }
  CHECK(to_string(Command::compare_top) == "compare-top");
  CHECK_THROWS(parse_command("estimate-everything"));
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv bodies") {
  CsvTable t{"demo", {"a", "b"}, {{"1", "2"}, {"3", "4"}}};
  CHECK(t.body() == "a,b\n1,2\n3,4\n");
}

TEST_CASE("reports are deterministic across runs and worker counts") {
  struct Case {
    Command command;
    ExperimentConfig config;
  };
  for (const auto& c : {Case{Command::compare_top, small_top()},
                        Case{Command::compare_local, small_local()},
                        Case{Command::compare_katok, small_katok()}}) {
    set_worker_count(1);
    auto a = run(c.command, c.config);
    auto b = run(c.command, c.config);
    set_worker_count(8);
    auto d = run(c.command, c.config);
    set_worker_count(0);
    CHECK(a.violations.empty());
    CHECK_FALSE(a.tables.empty());
    CHECK(bodies(a) == bodies(b));
    CHECK(bodies(a) == bodies(d));
    CHECK(a.json["estimates"] == d.json["estimates"]);
  }
}

TEST_CASE("reports are written with a header line") {
  auto dir = std::filesystem::temp_directory_path() / "fkent_harness_test";
  std::filesystem::remove_all(dir);
  auto r = run(Command::estimate_katok, small_katok());
  write_report(r, dir.string());
  CHECK(std::filesystem::exists(dir / "report.json"));
  for (const auto& t : r.tables) {
    std::ifstream in(dir / (t.name + ".csv"));
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    CHECK(text.rfind("# fkent ", 0) == 0);
    CHECK(text.substr(text.find('\n') + 1) == t.body());
  }
  std::ifstream in(dir / "report.json");
  auto j = json::parse(in);
  CHECK(j["command"] == "estimate-katok");
  std::filesystem::remove_all(dir);
}

TEST_CASE("selftest passes") {
  for (const auto& c : selftest(3)) {
    CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);
  }
}

}  // TEST_SUITE
