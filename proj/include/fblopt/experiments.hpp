#pragma once

#include <cstdint>
#include <string>

#include "fblopt/csv.hpp"
#include "fblopt/scenario.hpp"

namespace fblopt {

struct RunOptions {
  bool timing = false;  // adds a wall_seconds column; output is then not reproducible
  unsigned threads = 0;  // integer enumeration workers, 0: hardware concurrency
};

// Rows in sweep order. A failing sweep point keeps its row: status holds
// "error: <kind>: <message>" and the numeric cells it could not fill are empty.
CsvTable run_experiment(const Scenario& scenario, const RunOptions& options = {});

// Joint, rounded-joint, integer and alternating solutions of one problem. The
// alternating solver also runs from `seeds` random power vectors drawn from
// std::mt19937_64(seed); best, median and worst objectives are reported.
// The integer row reads "skipped: cap" when C(floor M, N) exceeds cap.
CsvTable compare_solvers(const AllocationProblem& problem, std::size_t seeds, std::uint64_t seed, double cap,
                         const RunOptions& options = {});

}  // namespace fblopt
