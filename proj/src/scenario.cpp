#include "fblopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"

namespace fblopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "(root)" : path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) fail(path, "must be positive");
  return v;
}

std::size_t count_value(const json& j, const std::string& path, std::size_t lo) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "expected an integer");
  const long long v = j.get<long long>();
  if (v < static_cast<long long>(lo)) fail(path, "must be at least " + std::to_string(lo));
  return static_cast<std::size_t>(v);
}

std::vector<double> positive_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(positive(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Axis parse_axis(const json& j, const std::string& path, Axis axis) {
  reject_unknown(j, path, {"from", "to", "count", "spacing"});
  if (j.contains("from")) axis.from = number(j["from"], path + ".from");
  if (j.contains("to")) axis.to = number(j["to"], path + ".to");
  if (j.contains("count")) axis.count = static_cast<int>(count_value(j["count"], path + ".count", 1));
  if (j.contains("spacing")) {
    const std::string s = text(j["spacing"], path + ".spacing");
    if (s != "linear" && s != "log") fail(path + ".spacing", "expected \"linear\" or \"log\"");
    axis.log_spacing = s == "log";
  }
  if (axis.log_spacing && !(axis.from > 0.0 && axis.to > 0.0)) fail(path, "log spacing needs positive bounds");
  if (axis.count > 100000) fail(path + ".count", "at most 100000 points");
  return axis;
}

FadingSpec parse_fading(const json& j, const std::string& path) {
  reject_unknown(j, path, {"model", "mean", "location", "z", "pdf"});
  FadingSpec f;
  if (j.contains("model")) f.model = text(j["model"], path + ".model");
  if (f.model != "rayleigh" && f.model != "point_mass" && f.model != "tabulated") {
    fail(path + ".model", "expected rayleigh, point_mass or tabulated");
  }
  if (j.contains("mean")) f.mean = positive(j["mean"], path + ".mean");
  if (j.contains("location")) f.location = positive(j["location"], path + ".location");
  if (j.contains("z")) {
    if (!j["z"].is_array()) fail(path + ".z", "expected an array");
    for (std::size_t i = 0; i < j["z"].size(); ++i) f.z.push_back(number(j["z"][i], path + ".z[" + std::to_string(i) + "]"));
  }
  if (j.contains("pdf")) {
    if (!j["pdf"].is_array()) fail(path + ".pdf", "expected an array");
    for (std::size_t i = 0; i < j["pdf"].size(); ++i)
      f.pdf.push_back(number(j["pdf"][i], path + ".pdf[" + std::to_string(i) + "]"));
  }
  if (f.model == "tabulated") {
    try {
      (void)f.build();
    } catch (const ModelError& e) {
      fail(path, e.what());
    }
  }
  return f;
}

ScenarioProblem parse_problem(const json& j, ScenarioProblem p) {
  const std::string path = "problem";
  reject_unknown(j, path,
                 {"total_blocklength", "total_energy", "payload_bits", "payload_ratios", "noise_power", "eps_max",
                  "snr_threshold", "channel_gains", "effective_gains", "method", "blocklength", "power", "gain",
                  "snr", "rate_axis", "snr_axis", "fading", "phi", "quad_points", "mc_samples", "hop_gains",
                  "seeds", "cap"});
  auto key = [&](const char* k) { return path + "." + k; };
  if (j.contains("total_blocklength")) p.total_blocklength = positive(j["total_blocklength"], key("total_blocklength"));
  if (j.contains("total_energy")) p.total_energy = positive(j["total_energy"], key("total_energy"));
  if (j.contains("payload_bits")) {
    p.payload_bits = j["payload_bits"].is_array() ? positive_list(j["payload_bits"], key("payload_bits"))
                                                  : std::vector<double>{positive(j["payload_bits"], key("payload_bits"))};
  }
  if (j.contains("payload_ratios")) p.payload_ratios = positive_list(j["payload_ratios"], key("payload_ratios"));
  if (j.contains("noise_power")) p.noise_power = positive(j["noise_power"], key("noise_power"));
  if (j.contains("eps_max")) {
    p.eps_max = number(j["eps_max"], key("eps_max"));
    if (!(p.eps_max > 0.0 && p.eps_max < 0.5)) fail(key("eps_max"), "must lie in (0, 0.5)");
  }
  if (j.contains("snr_threshold")) p.snr_threshold = positive(j["snr_threshold"], key("snr_threshold"));
  if (j.contains("channel_gains") && j.contains("effective_gains")) {
    fail(key("effective_gains"), "give either channel_gains or effective_gains, not both");
  }
  if (j.contains("channel_gains")) p.channel_gains = positive_list(j["channel_gains"], key("channel_gains"));
  if (j.contains("effective_gains")) p.effective_gains = positive_list(j["effective_gains"], key("effective_gains"));
  if (j.contains("method")) {
    p.method = text(j["method"], key("method"));
    if (p.method != "joint" && p.method != "integer" && p.method != "alternating" && p.method != "rounded") {
      fail(key("method"), "expected joint, integer, alternating or rounded");
    }
  }
  if (j.contains("blocklength")) p.blocklength = positive(j["blocklength"], key("blocklength"));
  if (j.contains("power")) p.power = positive(j["power"], key("power"));
  if (j.contains("gain")) p.gain = positive(j["gain"], key("gain"));
  if (j.contains("snr")) p.snr = positive(j["snr"], key("snr"));
  if (j.contains("rate_axis")) p.rate_axis = parse_axis(j["rate_axis"], key("rate_axis"), p.rate_axis);
  if (j.contains("snr_axis")) p.snr_axis = parse_axis(j["snr_axis"], key("snr_axis"), p.snr_axis);
  if (j.contains("fading")) p.fading = parse_fading(j["fading"], key("fading"));
  if (j.contains("phi")) p.phi = count_value(j["phi"], key("phi"), 1);
  if (j.contains("quad_points")) p.quad_points = count_value(j["quad_points"], key("quad_points"), 16);
  if (j.contains("mc_samples")) p.mc_samples = count_value(j["mc_samples"], key("mc_samples"), 1);
  if (j.contains("hop_gains")) {
    p.hop_gains = positive_list(j["hop_gains"], key("hop_gains"));
    if (p.hop_gains.size() != 2) fail(key("hop_gains"), "expected exactly two gains");
  }
  if (j.contains("seeds")) p.seeds = count_value(j["seeds"], key("seeds"), 1);
  if (j.contains("cap")) p.cap = positive(j["cap"], key("cap"));

  const std::size_t users = p.user_gains().size();
  if (p.payload_ratios.empty()) {
    if (p.payload_bits.size() != 1 && p.payload_bits.size() != users) {
      fail(key("payload_bits"), std::to_string(p.payload_bits.size()) + " payloads for " + std::to_string(users) +
                                    " users");
    }
  } else {
    if (p.payload_bits.size() != 1) fail(key("payload_ratios"), "needs a single payload_bits value");
    if (p.payload_ratios.size() != users) {
      fail(key("payload_ratios"),
           std::to_string(p.payload_ratios.size()) + " ratios for " + std::to_string(users) + " users");
    }
  }
  return p;
}

SweepSpec parse_sweep(const json& j) {
  reject_unknown(j, "sweep", {"variable", "values", "from", "to", "count", "spacing"});
  if (!j.contains("variable")) fail("sweep.variable", "missing");
  SweepSpec s;
  s.variable = text(j["variable"], "sweep.variable");
  const auto& vars = sweep_variables();
  if (std::find(vars.begin(), vars.end(), s.variable) == vars.end()) {
    fail("sweep.variable", "'" + s.variable + "' is not a sweepable field");
  }
  const bool has_range = j.contains("from") || j.contains("to") || j.contains("count") || j.contains("spacing");
  if (j.contains("values")) {
    if (has_range) fail("sweep.values", "give either values or from/to/count, not both");
    if (!j["values"].is_array() || j["values"].empty()) fail("sweep.values", "expected a non-empty array");
    for (std::size_t i = 0; i < j["values"].size(); ++i)
      s.values.push_back(number(j["values"][i], "sweep.values[" + std::to_string(i) + "]"));
  } else {
    if (!j.contains("from") || !j.contains("to") || !j.contains("count")) {
      fail("sweep", "needs values or from, to and count");
    }
    json axis = j;
    axis.erase("variable");
    s.values = parse_axis(axis, "sweep", Axis{}).values();
  }
  return s;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"eval",    "region_map", "allocate", "fading", "relay", "compare",
                                              "fig1",    "fig2",       "fig5",     "fig6",   "fig8"};
  return names;
}

const std::vector<std::string>& sweep_variables() {
  static const std::vector<std::string> vars{"total_blocklength", "total_energy", "payload_bits", "noise_power",
                                             "eps_max",           "snr_threshold", "blocklength", "power",
                                             "gain",              "snr",          "phi",          "hop2_gain",
                                             "cap"};
  return vars;
}

std::vector<double> Axis::values() const {
  if (count < 1) throw ValidationError("axis: count must be at least 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = from;
    return out;
  }
  for (int k = 0; k < count; ++k) {
    const double f = static_cast<double>(k) / (count - 1);
    out[k] = log_spacing ? from * std::pow(to / from, f) : from + (to - from) * f;
  }
  out.back() = to;
  return out;
}

FadingModel FadingSpec::build() const {
  if (model == "rayleigh") return FadingModel::rayleigh_power(mean);
  if (model == "point_mass") return FadingModel::point_mass(location);
  if (model == "tabulated") return FadingModel::tabulated(z, pdf);
  throw ValidationError("problem.fading.model: unknown model '" + model + "'");
}

std::vector<double> ScenarioProblem::user_gains() const {
  if (!effective_gains.empty()) return effective_gains;
  std::vector<double> z = channel_gains.empty() ? default_channel_gains(5) : channel_gains;
  for (double& v : z) v /= noise_power;
  return z;
}

std::vector<double> ScenarioProblem::user_payloads() const {
  const std::size_t users = user_gains().size();
  if (!payload_ratios.empty()) {
    std::vector<double> d(payload_ratios.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = payload_ratios[i] * payload_bits.front();
    return d;
  }
  if (payload_bits.size() == 1) return std::vector<double>(users, payload_bits.front());
  return payload_bits;
}

AllocationProblem ScenarioProblem::allocation() const {
  AllocationProblem a;
  a.payload_bits = user_payloads();
  a.gains = user_gains();
  a.total_blocklength = total_blocklength;
  a.total_energy = total_energy;
  a.eps_max = eps_max;
  a.snr_threshold = snr_threshold;
  return a;
}

RelayProblem ScenarioProblem::relay() const {
  RelayProblem r;
  r.payload_bits = payload_bits.front();
  r.gains = {hop_gains[0], hop_gains[1]};
  r.total_blocklength = total_blocklength;
  r.total_energy = total_energy;
  r.eps_max = eps_max;
  r.snr_threshold = snr_threshold;
  return r;
}

std::vector<double> default_channel_gains(std::size_t users) {
  // z = X^2 with X standard normal: F(z) = u  <=>  sqrt(z) = Q^{-1}((1 - u) / 2).
  std::vector<double> z(users);
  for (std::size_t i = 0; i < users; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(users);
    const double x = q_inv(0.5 * (1.0 - u));
    z[i] = x * x;
  }
  return z;
}

Scenario parse_scenario(const std::string& json_text, const std::optional<std::string>& experiment) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("(root): invalid JSON: ") + e.what());
  }
  reject_unknown(root, "", {"schema_version", "experiment", "problem", "sweep", "output", "seed"});
  Scenario s;
  if (root.contains("schema_version")) {
    const auto v = count_value(root["schema_version"], "schema_version", 0);
    if (v != static_cast<std::size_t>(kScenarioSchemaVersion)) {
      fail("schema_version", "unsupported version " + std::to_string(v));
    }
  }
  if (root.contains("experiment")) {
    s.experiment = text(root["experiment"], "experiment");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), s.experiment) == names.end()) {
      fail("experiment", "unknown experiment '" + s.experiment + "'");
    }
  }
  if (experiment) s.experiment = *experiment;
  Scenario preset = default_scenario(s.experiment);
  s.problem = preset.problem;
  s.sweep = preset.sweep;
  if (root.contains("problem")) s.problem = parse_problem(root["problem"], s.problem);
  if (root.contains("sweep")) {
    s.sweep = root["sweep"].is_null() ? std::nullopt : std::optional<SweepSpec>(parse_sweep(root["sweep"]));
  }
  if (root.contains("output")) s.output = text(root["output"], "output");
  if (root.contains("seed")) s.seed = count_value(root["seed"], "seed", 0);
  return s;
}

Scenario load_scenario(const std::string& path, const std::optional<std::string>& experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read of scenario '" + path + "' failed");
  return parse_scenario(buf.str(), experiment);
}

Scenario default_scenario(const std::string& experiment) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw ValidationError("experiment: unknown experiment '" + experiment + "'");
  }
  Scenario s;
  s.experiment = experiment;
  if (experiment == "fig1") {
    s.problem.blocklength = 200.0;
    s.sweep = SweepSpec{"snr", Axis{0.5, 50.0, 41, true}.values()};
  } else if (experiment == "fading") {
    s.problem.blocklength = 200.0;
    s.problem.power = 0.2;
  } else if (experiment == "fig5") {
    s.sweep = SweepSpec{"total_blocklength", {600.0, 800.0, 1000.0}};
  } else if (experiment == "fig6") {
    s.problem.total_blocklength = 1000.0;
    s.problem.payload_ratios = {0.8, 0.9, 1.0, 1.1, 1.2};
    s.sweep = SweepSpec{"payload_bits", {300.0, 360.0, 420.0, 480.0, 540.0}};
  } else if (experiment == "fig8") {
    s.sweep = SweepSpec{"hop2_gain", Axis{0.5, 2.0, 9, true}.values()};
  }
  return s;
}

void apply_sweep_value(ScenarioProblem& p, const std::string& variable, double value) {
  auto need_positive = [&] {
    if (!(value > 0.0) || !std::isfinite(value)) throw ValidationError("sweep: " + variable + " must be positive");
  };
  auto need_count = [&](std::size_t lo) {
    if (!(value >= static_cast<double>(lo)) || value != std::floor(value) || value > 1e9) {
      throw ValidationError("sweep: " + variable + " must be an integer >= " + std::to_string(lo));
    }
    return static_cast<std::size_t>(value);
  };
  if (variable == "total_blocklength") {
    need_positive();
    p.total_blocklength = value;
  } else if (variable == "total_energy") {
    need_positive();
    p.total_energy = value;
  } else if (variable == "payload_bits") {
    need_positive();
    p.payload_bits = {value};
  } else if (variable == "noise_power") {
    need_positive();
    p.noise_power = value;
  } else if (variable == "eps_max") {
    if (!(value > 0.0 && value < 0.5)) throw ValidationError("sweep: eps_max must lie in (0, 0.5)");
    p.eps_max = value;
  } else if (variable == "snr_threshold") {
    need_positive();
    p.snr_threshold = value;
  } else if (variable == "blocklength") {
    need_positive();
    p.blocklength = value;
  } else if (variable == "power") {
    need_positive();
    p.power = value;
    p.snr.reset();
  } else if (variable == "gain") {
    need_positive();
    p.gain = value;
  } else if (variable == "snr") {
    need_positive();
    p.snr = value;
  } else if (variable == "phi") {
    p.phi = need_count(1);
  } else if (variable == "hop2_gain") {
    need_positive();
    p.hop_gains[1] = value;
  } else if (variable == "cap") {
    need_positive();
    p.cap = value;
  } else {
    throw ValidationError("sweep.variable: '" + variable + "' is not a sweepable field");
  }
}

}  // namespace fblopt
