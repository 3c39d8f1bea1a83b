#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <doctest.h>

#include "fblopt/csv.hpp"
#include "fblopt/errors.hpp"
#include "fblopt/experiments.hpp"
#include "fblopt/scenario.hpp"

using namespace fblopt;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fblopt_cli_bench";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FBLOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string validation_message(const std::string& json) {
  try {
    parse_scenario(json);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("cli_bench") {
  TEST_CASE("csv round trip") {
    CsvTable t({"a", "b", "status"});
    t.add({{"a", 0.1}, {"b", std::string("x, \"y\"\nz")}, {"status", std::string("ok")}});
    t.add({{"a", -1e-300}, {"b", std::string("1")}, {"status", std::string("ok")}});
    t.add({{"a", std::numeric_limits<double>::max()}, {"status", std::string("ok")}});
    const CsvTable back = parse_csv(to_csv(t));
    CHECK(same_table(t, back));
    CHECK(back.number(0, "a") == 0.1);
    CHECK(back.text(1, "b") == "1");
    CHECK(std::isnan(back.number(2, "b")));
    CHECK(to_csv(back) == to_csv(t));
  }

  TEST_CASE("csv NaN policy") {
    CsvTable t({"x", "y", "status"});
    t.add({{"x", std::nan("")}, {"y", 2.0}, {"status", std::string("ok")}});
    CHECK(t.text(0, "status") == "ok; nan: x");
    const std::string csv = to_csv(t);
    CHECK(csv.find(",2,") != std::string::npos);
    CHECK(csv.find("\r\n,2,") != std::string::npos);
  }

  TEST_CASE("csv empty table is header only") {
    const CsvTable t({"a", "b"});
    CHECK(to_csv(t) == "\"a\",\"b\"\r\n");
    const fs::path p = scratch("empty.csv");
    emit_csv(t, p.string());
    CHECK(read_file(p) == "\"a\",\"b\"\r\n");
    CHECK(parse_csv(read_file(p)).size() == 0);
  }

  TEST_CASE("csv errors") {
    CsvTable t({"a"});
    CHECK_THROWS_AS(t.add({{"nope", 1.0}}), UsageError);
    CHECK_THROWS_AS(t.add_ordered({1.0, 2.0}), UsageError);
    CHECK_THROWS_AS(parse_csv("\"a\"\r\n\"unterminated\r\n"), ValidationError);
    CHECK_THROWS_AS(parse_csv("\"a\",\"b\"\r\n1\r\n"), ValidationError);
    CHECK_THROWS_AS(emit_csv(t, "/nonexistent-dir/x.csv"), IoError);
    CHECK(format_number(0.1) == "0.10000000000000001");
  }

  TEST_CASE("scenario defaults") {
    const Scenario s = parse_scenario(R"({"experiment":"allocate"})");
    CHECK(s.schema_version == kScenarioSchemaVersion);
    CHECK(s.problem.total_blocklength == 800.0);
    CHECK(s.problem.total_energy == 2400.0);
    CHECK(s.problem.payload_bits == std::vector<double>{480.0});
    CHECK(s.problem.noise_power == 0.01);
    CHECK(s.problem.eps_max == 0.1);
    CHECK(s.problem.snr_threshold == 1.0);
    const AllocationProblem a = s.problem.allocation();
    REQUIRE(a.gains.size() == 5);
    const std::vector<double> z = default_channel_gains(5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.gains[i] == doctest::Approx(z[i] / 0.01).epsilon(1e-15));
  }

  TEST_CASE("scenario validation names the field") {
    CHECK(validation_message(R"({"problem":{"foo":1}})").find("problem.foo") != std::string::npos);
    CHECK(validation_message(R"({"bar":1})").find("bar") != std::string::npos);
    CHECK(validation_message(R"({"problem":{"fading":{"mean":-1}}})").find("problem.fading.mean") !=
          std::string::npos);
    CHECK(validation_message(R"({"schema_version":99})").find("schema_version") != std::string::npos);
    CHECK(validation_message(R"({"experiment":"fig99"})").find("experiment") != std::string::npos);
    CHECK(validation_message(R"({"sweep":{"variable":"nope","values":[1]}})").find("sweep.variable") !=
          std::string::npos);
    CHECK(!validation_message("{not json").empty());
    CHECK_THROWS_AS(load_scenario(scratch("missing.json").string()), IoError);
  }

  TEST_CASE("experiment override uses the preset as base") {
    const Scenario s = parse_scenario(R"({"problem":{"total_energy":3000}})", std::string("fig5"));
    CHECK(s.experiment == "fig5");
    CHECK(s.problem.total_energy == 3000.0);
    REQUIRE(s.sweep);
    CHECK(s.sweep->variable == "total_blocklength");
    CHECK(s.sweep->values == std::vector<double>{600.0, 800.0, 1000.0});
  }

  TEST_CASE("fig5 objective decreases in M for each solver") {
    const CsvTable t = run_experiment(default_scenario("fig5"));
    for (const char* solver : {"joint", "rounded", "alternating"}) {
      std::vector<double> obj;
      for (std::size_t r = 0; r < t.size(); ++r) {
        if (t.text(r, "solver") == solver) obj.push_back(t.number(r, "objective"));
      }
      REQUIRE(obj.size() == 3);
      CHECK(obj[1] < obj[0]);
      CHECK(obj[2] < obj[1]);
    }
  }

  TEST_CASE("fig6 fixed-ratio payloads") {
    Scenario s = default_scenario("fig6");
    s.sweep = SweepSpec{"payload_bits", {480.0}};
    const CsvTable t = run_experiment(s);
    REQUIRE(t.size() > 0);
    const double expected[] = {384, 432, 480, 528, 576};
    for (int i = 0; i < 5; ++i) {
      CHECK(t.number(0, "payload_" + std::to_string(i + 1)) == doctest::Approx(expected[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("fig8 equal gains give unit ratios") {
    Scenario s = default_scenario("fig8");
    s.sweep = SweepSpec{"hop2_gain", {1.0}};
    const CsvTable t = run_experiment(s);
    REQUIRE(t.size() == 1);
    CHECK(std::abs(t.number(0, "blocklength_ratio") - 1.0) <= 1e-3);
    CHECK(std::abs(t.number(0, "power_ratio") - 1.0) <= 1e-3);
  }

  TEST_CASE("a failing sweep point keeps its row") {
    Scenario s = default_scenario("allocate");
    s.sweep = SweepSpec{"total_energy", {100.0, 2400.0}};
    const CsvTable t = run_experiment(s);
    REQUIRE(t.size() == 2);
    CHECK(t.text(0, "status").rfind("error: infeasible", 0) == 0);
    CHECK(std::isnan(t.number(0, "objective")));
    CHECK(t.text(1, "status") == "ok");
  }

  TEST_CASE("compare_solvers tiny instance") {
    AllocationProblem pr;
    pr.total_blocklength = 60;
    pr.total_energy = 120;
    pr.payload_bits = {20, 20};
    pr.gains = {3.0, 5.0};
    const CsvTable a = compare_solvers(pr, 3, 7, 2e7);
    const CsvTable b = compare_solvers(pr, 3, 7, 2e7);
    CHECK(to_csv(a) == to_csv(b));
    double joint = 0, integer = 0, rounded = 0, alternating = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      const std::string& solver = a.text(r, "solver");
      if (solver == "joint") joint = a.number(r, "objective");
      if (solver == "integer") integer = a.number(r, "objective");
      if (solver == "rounded") rounded = a.number(r, "objective");
      if (solver == "alternating") alternating = a.number(r, "objective");
    }
    CHECK(std::abs(integer - rounded) <= 1e-3 * rounded);
    CHECK(alternating >= joint - 1e-9);
  }

  TEST_CASE("compare_solvers skips the integer solver above the cap") {
    const CsvTable t = compare_solvers(default_scenario("compare").problem.allocation(), 1, 1, 2e7);
    bool skipped = false;
    for (std::size_t r = 0; r < t.size(); ++r) {
      if (t.text(r, "solver") == "integer") skipped = t.text(r, "status") == "skipped: cap";
    }
    CHECK(skipped);
  }

  TEST_CASE("cli exit codes") {
    const fs::path bad_field = scratch("bad_field.json");
    write_file(bad_field, R"({"problem":{"foo":1}})");
    const fs::path infeasible = scratch("infeasible.json");
    write_file(infeasible, R"({"experiment":"allocate","problem":{"total_energy":100}})");
    const fs::path ok = scratch("ok.json");
    write_file(ok, R"({"experiment":"eval"})");
    CHECK(run_cli("--no-such-flag") == 2);
    CHECK(run_cli("allocate --scenario " + scratch("missing.json").string()) == 5);
    CHECK(run_cli("allocate --scenario " + bad_field.string()) == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("run --scenario " + infeasible.string()) == 3);
    CHECK(run_cli("eval --scenario " + ok.string()) == 0);
    CHECK(run_cli("eval --scenario " + ok.string() + " --out /nonexistent-dir/x.csv") == 5);
  }

  TEST_CASE("cli output is reproducible") {
    const fs::path a = scratch("fig8_a.csv");
    const fs::path b = scratch("fig8_b.csv");
    REQUIRE(run_cli("experiment fig8 --seed 3 --out " + a.string()) == 0);
    REQUIRE(run_cli("experiment fig8 --seed 3 --out " + b.string()) == 0);
    CHECK(!read_file(a).empty());
    CHECK(read_file(a) == read_file(b));
  }
}
