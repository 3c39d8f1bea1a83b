// fblopt: scenario runner. Writes one CSV per invocation.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fblopt/csv.hpp"
#include "fblopt/errors.hpp"
#include "fblopt/experiments.hpp"
#include "fblopt/scenario.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> phi;
  std::optional<double> cap;
  bool timing = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--scenario", f.scenario, "JSON scenario file (defaults apply without one)");
  cmd->add_option("--out", f.out, "CSV output path; '-' or absent: scenario output, else stdout");
  cmd->add_option("--seed", f.seed, "RNG seed for Monte-Carlo and random solver inits");
  cmd->add_option("--phi", f.phi, "number of fading quantization states")->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--cap", f.cap, "integer enumeration cap")->check(CLI::PositiveNumber);
  cmd->add_flag("--timing", f.timing, "add wall-clock columns (output no longer reproducible)");
}

// status reads "error: <kind>: <message>".
int exit_code_for_status(const std::string& status) {
  using fblopt::ErrorKind;
  for (ErrorKind k : {ErrorKind::domain, ErrorKind::region, ErrorKind::usage, ErrorKind::validation,
                      ErrorKind::model, ErrorKind::infeasible, ErrorKind::numeric, ErrorKind::resource,
                      ErrorKind::io}) {
    if (status.rfind(std::string("error: ") + fblopt::to_string(k) + ":", 0) == 0) return fblopt::exit_code(k);
  }
  return 1;
}

int run(const std::string& experiment, const Flags& f, bool keep_scenario_experiment) {
  using namespace fblopt;
  Scenario sc;
  if (f.scenario.empty()) {
    sc = default_scenario(experiment);
  } else {
    sc = load_scenario(f.scenario, keep_scenario_experiment ? std::nullopt : std::optional<std::string>(experiment));
  }
  if (f.seed) sc.seed = *f.seed;
  if (f.phi) sc.problem.phi = *f.phi;
  if (f.cap) sc.problem.cap = *f.cap;

  RunOptions opt;
  opt.timing = f.timing;
  const CsvTable table = run_experiment(sc, opt);
  const std::string path = !f.out.empty() ? f.out : sc.output;
  if (path.empty() || path == "-") {
    write_csv(std::cout, table);
    std::cout.flush();
    if (!std::cout) throw IoError("write to standard output failed");
  } else {
    emit_csv(table, path);
  }
  std::size_t failed = 0;
  for (std::size_t r = 0; r < table.size(); ++r)
    if (table.text(r, "status").rfind("error", 0) == 0) ++failed;
  std::cerr << sc.experiment << ": " << table.size() << " rows, " << failed << " with errors\n";
  // Partial failures still exit 0; when every row failed the first row's class decides.
  if (table.size() == 0 || failed < table.size()) return 0;
  return exit_code_for_status(table.text(0, "status"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-blocklength resource allocation experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::string figure;
  std::string chosen;
  bool keep = false;

  for (const char* name : {"eval", "region", "allocate", "fading", "relay", "compare"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    add_flags(cmd, flags);
    cmd->callback([&chosen, name] { chosen = std::string(name) == "region" ? "region_map" : name; });
  }
  CLI::App* exp = app.add_subcommand("experiment", "run a figure preset");
  exp->add_option("figure", figure, "fig1 | fig2 | fig5 | fig6 | fig8")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig5", "fig6", "fig8"}));
  add_flags(exp, flags);
  exp->callback([&] { chosen = figure; });
  CLI::App* run_cmd = app.add_subcommand("run", "run the experiment named in the scenario");
  add_flags(run_cmd, flags);
  run_cmd->callback([&] { keep = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fblopt::exit_code(fblopt::ErrorKind::usage);
  }

  try {
    if (keep) {
      if (flags.scenario.empty()) throw fblopt::UsageError("run: --scenario is required");
      return run("", flags, true);
    }
    return run(chosen, flags, false);
  } catch (const fblopt::Error& e) {
    std::cerr << "fblopt: " << fblopt::to_string(e.kind()) << " error: " << e.what() << "\n";
    return fblopt::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fblopt: internal error: " << e.what() << "\n";
    return 1;
  }
}
