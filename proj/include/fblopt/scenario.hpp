#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fblopt/allocator.hpp"
#include "fblopt/fading.hpp"
#include "fblopt/relay.hpp"

namespace fblopt {

inline constexpr int kScenarioSchemaVersion = 1;

// Experiments: eval, region_map, allocate, fading, relay, compare, and the figure
// presets fig1, fig2, fig5, fig6, fig8.
const std::vector<std::string>& experiment_names();

// Scalar fields a sweep may vary.
const std::vector<std::string>& sweep_variables();

struct Axis {
  double from = 0.0;
  double to = 0.0;
  int count = 1;
  bool log_spacing = false;
  std::vector<double> values() const;
};

struct FadingSpec {
  std::string model = "rayleigh";  // rayleigh | point_mass | tabulated
  double mean = 1.0;
  double location = 1.0;
  std::vector<double> z;
  std::vector<double> pdf;
  FadingModel build() const;
};

// Shared problem description. Defaults: M = 800, E = 2400, D = 480, sigma^2 = 0.01,
// eps_max = 0.1, gamma_th = 1, five users at the chi-square(1) quantiles
// (i - 0.5) / 5 as channel gains.
struct ScenarioProblem {
  double total_blocklength = 800.0;
  double total_energy = 2400.0;
  std::vector<double> payload_bits{480.0};  // one value is shared by every user
  std::vector<double> payload_ratios;       // multiplies payload_bits[0] when set
  double noise_power = 0.01;
  double eps_max = 0.1;
  double snr_threshold = 1.0;
  std::vector<double> channel_gains;    // z_i; effective gain z_i / noise_power
  std::vector<double> effective_gains;  // used as is; excludes channel_gains
  std::string method = "joint";         // allocate: joint | integer | alternating | rounded

  // eval / fig1
  double blocklength = 400.0;
  double power = 3.0;
  double gain = 1.0;
  std::optional<double> snr;  // overrides power as snr / gain

  // region_map / fig2
  Axis rate_axis{0.05, 4.0, 40, false};
  Axis snr_axis{1.0, 30.0, 30, true};

  // fading
  FadingSpec fading;
  std::size_t phi = 32;
  std::size_t quad_points = 1000;
  std::size_t mc_samples = 100000;

  // relay / fig8
  std::vector<double> hop_gains{1.0, 1.0};

  // compare / fig5 / fig6
  std::size_t seeds = 8;
  double cap = 2e7;

  std::vector<double> user_gains() const;
  std::vector<double> user_payloads() const;
  AllocationProblem allocation() const;
  RelayProblem relay() const;
};

struct SweepSpec {
  std::string variable;
  std::vector<double> values;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string experiment = "allocate";
  ScenarioProblem problem;
  std::optional<SweepSpec> sweep;
  std::string output;  // empty: standard output
  std::uint64_t seed = 1;
};

// Chi-square(1) quantiles at (i - 0.5) / n: the default channel gains z_i.
std::vector<double> default_channel_gains(std::size_t users);

// ValidationError naming the field path on schema violations. A given experiment
// replaces the file's, and its presets are the base the file's fields override.
Scenario parse_scenario(const std::string& json_text, const std::optional<std::string>& experiment = std::nullopt);
// IoError when the file cannot be read.
Scenario load_scenario(const std::string& path, const std::optional<std::string>& experiment = std::nullopt);

// Scenario with every default filled in and the preset sweep for the experiment.
Scenario default_scenario(const std::string& experiment);

// Sets one sweepable field. ValidationError for unknown names.
void apply_sweep_value(ScenarioProblem& problem, const std::string& variable, double value);

}  // namespace fblopt
