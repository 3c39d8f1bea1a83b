#include "fblopt/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"
#include "fblopt/region.hpp"

namespace fblopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double flag(bool b) { return b ? 1.0 : 0.0; }

std::string error_status(const std::exception& e) {
  if (const auto* fe = dynamic_cast<const Error*>(&e)) return std::string("error: ") + to_string(fe->kind()) + ": " + fe->what();
  return std::string("error: internal: ") + e.what();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : " | ") + s;
  return out;
}

std::vector<std::string> numbered(const std::string& stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(stem + "_" + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& a, const std::vector<std::string>& b) { a.insert(a.end(), b.begin(), b.end()); }

void put_vector(CsvRow& row, const std::string& stem, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) row.emplace_back(stem + "_" + std::to_string(i + 1), v[i]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Columns "point", optional sweep column, experiment columns, optional wall_seconds, "status".
class Runner {
 public:
  Runner(const Scenario& sc, const RunOptions& opt, std::vector<std::string> columns) : sc_(sc), opt_(opt) {
    std::vector<std::string> all{"point"};
    if (sc.sweep) all.push_back(sweep_column());
    append(all, columns);
    if (opt.timing) all.push_back("wall_seconds");
    all.push_back("status");
    table_ = CsvTable(std::move(all));
  }

  // f(problem, emit) adds rows for one sweep point through emit(row, status).
  using Emit = std::function<void(CsvRow, std::string)>;
  using PointFn = std::function<void(const ScenarioProblem&, std::size_t index, const Emit&)>;

  CsvTable run(const PointFn& f) {
    const std::vector<double> values = sc_.sweep ? sc_.sweep->values : std::vector<double>{kNaN};
    for (std::size_t k = 0; k < values.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      auto emit = [&](CsvRow row, std::string status) {
        row.emplace_back("point", static_cast<double>(k));
        if (sc_.sweep) row.emplace_back(sweep_column(), values[k]);
        if (opt_.timing) row.emplace_back("wall_seconds", seconds_since(t0));
        row.emplace_back("status", std::move(status));
        table_.add(row);
      };
      try {
        ScenarioProblem p = sc_.problem;
        if (sc_.sweep) apply_sweep_value(p, sc_.sweep->variable, values[k]);
        f(p, k, emit);
      } catch (const std::exception& e) {
        emit({}, error_status(e));
      }
    }
    return std::move(table_);
  }

 private:
  std::string sweep_column() const { return "sweep_" + sc_.sweep->variable; }
  const Scenario& sc_;
  const RunOptions& opt_;
  CsvTable table_;
};

// ---- eval / fig1 ----

CsvTable run_eval(const Scenario& sc, const RunOptions& opt) {
  Runner r(sc, opt,
           {"blocklength", "power", "gain", "payload_bits", "snr", "rate", "capacity", "dispersion", "w", "eps",
            "eps_linear", "eps_unit_dispersion", "below_capacity", "cond_rate_ok", "cond_snr_ok", "in_region"});
  return r.run([](const ScenarioProblem& p, std::size_t, const Runner::Emit& emit) {
    const double power = p.snr ? *p.snr / p.gain : p.power;
    const LinkPoint pt(p.blocklength, power, p.gain, p.payload_bits.front());
    const auto cd = capacity_dispersion(pt.snr());
    const ConvexityVerdict v = convexity_condition(pt, p.eps_max, p.snr_threshold);
    emit({{"blocklength", pt.blocklength()},
          {"power", pt.power()},
          {"gain", pt.gain()},
          {"payload_bits", pt.payload_bits()},
          {"snr", pt.snr()},
          {"rate", pt.rate()},
          {"capacity", cd.capacity},
          {"dispersion", cd.dispersion},
          {"w", channel_w(pt)},
          {"eps", error_probability(pt)},
          {"eps_linear", error_linear(pt)},
          {"eps_unit_dispersion", error_unit_dispersion(pt)},
          {"below_capacity", flag(v.below_capacity)},
          {"cond_rate_ok", flag(v.cond_rate_ok)},
          {"cond_snr_ok", flag(v.cond_snr_ok)},
          {"in_region", flag(v.in_region)}},
         "ok");
  });
}

// ---- region_map / fig2 ----

CsvTable run_region_map(const Scenario& sc, const RunOptions& opt) {
  Runner r(sc, opt,
           {"rate", "snr", "blocklength", "eps", "below_capacity", "reliability_ok", "cond_rate_ok", "cond_snr_ok",
            "in_region", "delta6", "snr_bound"});
  return r.run([](const ScenarioProblem& p, std::size_t, const Runner::Emit& emit) {
    const double d = p.payload_bits.front();
    const auto rates = p.rate_axis.values();
    const auto snrs = p.snr_axis.values();
    for (double rate : rates) {
      for (double snr : snrs) {
        CsvRow row{{"rate", rate}, {"snr", snr}};
        try {
          if (!(rate > 0.0)) throw DomainError("rate must be positive");
          const LinkPoint pt = LinkPoint::at_snr(d / rate, snr, d);
          const ConvexityVerdict v = convexity_condition(pt, p.eps_max, p.snr_threshold);
          row.insert(row.end(), {{"blocklength", pt.blocklength()},
                                 {"eps", error_probability(pt)},
                                 {"below_capacity", flag(v.below_capacity)},
                                 {"reliability_ok", flag(v.reliability_ok)},
                                 {"cond_rate_ok", flag(v.cond_rate_ok)},
                                 {"cond_snr_ok", flag(v.cond_snr_ok)},
                                 {"in_region", flag(v.in_region)},
                                 {"delta6", v.delta6},
                                 {"snr_bound", v.snr_bound}});
          emit(std::move(row), "ok");
        } catch (const std::exception& e) {
          emit(std::move(row), error_status(e));
        }
      }
    }
  });
}

// ---- allocation helpers ----

Method parse_method(const std::string& s) {
  if (s == "joint") return Method::joint;
  if (s == "integer") return Method::integer;
  if (s == "alternating") return Method::alternating;
  if (s == "rounded") return Method::rounded;
  throw ValidationError("problem.method: unknown method '" + s + "'");
}

struct SkippedCap {};

AllocationResult run_method(const AllocationProblem& pr, Method m, double cap, unsigned threads) {
  switch (m) {
    case Method::joint: return solve_joint(pr);
    case Method::rounded: return round_solution(pr, solve_joint(pr));
    case Method::alternating: return solve_alternating(pr);
    case Method::integer:
      if (enumeration_count(pr.user_count(), pr.total_blocklength) > cap) throw SkippedCap{};
      return solve_integer(pr, IntegerOptions{cap, threads});
  }
  throw UsageError("unknown method");
}

CsvTable run_allocate(const Scenario& sc, const RunOptions& opt) {
  const std::size_t n = sc.problem.user_gains().size();
  std::vector<std::string> cols{"method", "objective"};
  append(cols, numbered("payload", n));
  append(cols, numbered("blocklength", n));
  append(cols, numbered("power", n));
  append(cols, numbered("error", n));
  append(cols, {"binding_blocklength", "binding_energy", "all_in_region", "iterations", "barrier_stages", "rounds",
                "warnings"});
  Runner r(sc, opt, cols);
  return r.run([&](const ScenarioProblem& p, std::size_t, const Runner::Emit& emit) {
    const AllocationProblem pr = p.allocation();
    const Method method = parse_method(p.method);
    CsvRow row{{"method", std::string(to_string(method))}};
    put_vector(row, "payload", pr.payload_bits);
    try {
      const RegionSummary region = validate(pr);
      const AllocationResult res = run_method(pr, method, p.cap, opt.threads);
      std::vector<std::string> warnings = res.warnings;
      for (const auto& w : region.warnings)
        if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
      row.emplace_back("objective", res.objective);
      put_vector(row, "blocklength", res.blocklength);
      put_vector(row, "power", res.power);
      put_vector(row, "error", res.error);
      row.insert(row.end(), {{"binding_blocklength", flag(res.binding.blocklength_budget)},
                             {"binding_energy", flag(res.binding.energy_budget)},
                             {"all_in_region", flag(region.all_in_region)},
                             {"iterations", static_cast<double>(res.stats.iterations)},
                             {"barrier_stages", static_cast<double>(res.stats.barrier_stages)},
                             {"rounds", static_cast<double>(res.rounds)},
                             {"warnings", join(warnings)}});
      emit(std::move(row), "ok");
    } catch (const SkippedCap&) {
      emit(std::move(row), "skipped: cap");
    } catch (const std::exception& e) {
      emit(std::move(row), error_status(e));
    }
  });
}

// ---- solver comparison ----

const std::vector<std::string>& compare_columns() {
  static const std::vector<std::string> cols{"solver", "objective", "iterations", "rounds", "runs"};
  return cols;
}

// One row per solver; the alternating statistics rows only when seeds > 0.
void compare_rows(const AllocationProblem& pr, std::size_t seeds, std::uint64_t seed, double cap,
                  const RunOptions& opt, const std::function<void(CsvRow, std::string)>& emit) {
  auto timed_row = [&](const std::string& name, const std::function<AllocationResult()>& solve) {
    CsvRow row{{"solver", name}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const AllocationResult res = solve();
      row.insert(row.end(), {{"objective", res.objective},
                             {"iterations", static_cast<double>(res.stats.iterations)},
                             {"rounds", static_cast<double>(res.rounds)},
                             {"runs", 1.0}});
      if (opt.timing) row.emplace_back("solver_seconds", seconds_since(t0));
      emit(std::move(row), "ok");
    } catch (const SkippedCap&) {
      emit(std::move(row), "skipped: cap");
    } catch (const std::exception& e) {
      emit(std::move(row), error_status(e));
    }
  };
  std::optional<AllocationResult> joint;
  timed_row("joint", [&] {
    joint = solve_joint(pr);
    return *joint;
  });
  timed_row("rounded", [&] {
    if (!joint) throw NumericError("no joint solution to round");
    return round_solution(pr, *joint);
  });
  timed_row("integer", [&] { return run_method(pr, Method::integer, cap, opt.threads); });
  timed_row("alternating", [&] { return solve_alternating(pr); });
  if (seeds == 0) return;

  std::mt19937_64 engine(seed);
  std::vector<double> objectives;
  std::size_t failures = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t s = 0; s < seeds; ++s) {
    std::vector<double> p(pr.user_count());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
      p[i] = std::max((0.25 + 1.5 * u) * pr.total_energy / pr.total_blocklength, 1.1 * pr.snr_threshold / pr.gains[i]);
    }
    try {
      objectives.push_back(solve_alternating(pr, p).objective);
    } catch (const Error&) {
      ++failures;
    }
  }
  std::sort(objectives.begin(), objectives.end());
  const double elapsed = seconds_since(t0);
  const std::string status =
      failures == 0 ? "ok" : "ok; " + std::to_string(failures) + " of " + std::to_string(seeds) + " inits failed";
  auto stat_row = [&](const std::string& name, std::size_t idx) {
    CsvRow row{{"solver", name}, {"runs", static_cast<double>(objectives.size())}};
    if (opt.timing) row.emplace_back("solver_seconds", elapsed);
    if (objectives.empty()) {
      emit(std::move(row), "error: infeasible: every random init failed");
      return;
    }
    row.emplace_back("objective", objectives[idx]);
    emit(std::move(row), status);
  };
  stat_row("alternating_best", 0);
  stat_row("alternating_median", objectives.empty() ? 0 : (objectives.size() - 1) / 2);
  stat_row("alternating_worst", objectives.empty() ? 0 : objectives.size() - 1);
}

CsvTable run_compare(const Scenario& sc, const RunOptions& opt, std::size_t seeds) {
  const std::size_t n = sc.problem.user_gains().size();
  std::vector<std::string> cols = compare_columns();
  if (opt.timing) cols.push_back("solver_seconds");
  append(cols, numbered("payload", n));
  Runner r(sc, opt, cols);
  return r.run([&](const ScenarioProblem& p, std::size_t k, const Runner::Emit& emit) {
    const AllocationProblem pr = p.allocation();
    compare_rows(pr, seeds, sc.seed + k, p.cap, opt, [&](CsvRow row, std::string status) {
      put_vector(row, "payload", pr.payload_bits);
      emit(std::move(row), std::move(status));
    });
  });
}

// ---- fading ----

CsvTable run_fading(const Scenario& sc, const RunOptions& opt) {
  Runner r(sc, opt,
           {"phi", "z_threshold", "active_states", "csi_objective", "csi_iterations", "avg_blocklength", "avg_power",
            "avg_objective", "avg_quadrature", "mc_mean", "mc_std_error", "mc_samples"});
  return r.run([&](const ScenarioProblem& p, std::size_t k, const Runner::Emit& emit) {
    const FadingModel model = p.fading.build();
    const double d = p.payload_bits.front();
    const double m_bar = p.blocklength;
    const double p_bar = p.power;
    CsvRow row{{"phi", static_cast<double>(p.phi)}};
    std::vector<std::string> errors;
    try {
      const double z_th = z_threshold(d, m_bar * static_cast<double>(p.phi), p_bar, p.noise_power);
      const QuantizedChannel ch = quantize(model, p.phi, z_th);
      const auto active = std::count_if(ch.states.begin(), ch.states.end(), [&](double z) { return z >= z_th; });
      row.insert(row.end(), {{"z_threshold", z_th}, {"active_states", static_cast<double>(active)}});
      const PerStateSolution sol =
          solve_per_state(ch, d, p.noise_power, PerStateBudget{m_bar, m_bar * p_bar}, p.eps_max, p.snr_threshold);
      row.insert(row.end(), {{"csi_objective", sol.objective},
                             {"csi_iterations", static_cast<double>(sol.stats.iterations)}});
    } catch (const std::exception& e) {
      errors.push_back("csi " + error_status(e));
    }
    try {
      const double m_lo = std::min(m_bar, d / 20.0);
      const AvgCsiBounds b{m_lo, m_bar, 1e-3 * p_bar, p_bar * m_bar / m_lo, m_bar * p_bar};
      const AvgCsiSolution avg = solve_avg_csi(model, d, p.noise_power, b, p.quad_points);
      const double quad = expected_error_avg(model, avg.blocklength, avg.power, d, p.noise_power, p.quad_points);
      const MonteCarloEstimate mc =
          monte_carlo_estimate(model, avg.blocklength, avg.power, d, p.noise_power, p.mc_samples, sc.seed + k);
      row.insert(row.end(), {{"avg_blocklength", avg.blocklength},
                             {"avg_power", avg.power},
                             {"avg_objective", avg.objective},
                             {"avg_quadrature", quad},
                             {"mc_mean", mc.mean},
                             {"mc_std_error", mc.std_error},
                             {"mc_samples", static_cast<double>(mc.samples)}});
    } catch (const std::exception& e) {
      errors.push_back("avg " + error_status(e));
    }
    emit(std::move(row), errors.empty() ? "ok" : join(errors));
  });
}

// ---- relay / fig8 ----

CsvTable run_relay(const Scenario& sc, const RunOptions& opt) {
  Runner r(sc, opt,
           {"hop_gain_1", "hop_gain_2", "blocklength_1", "blocklength_2", "power_1", "power_2", "error_1", "error_2",
            "overall", "additive", "cross_term", "blocklength_ratio", "power_ratio", "balanced_objective",
            "iterations", "warnings"});
  return r.run([](const ScenarioProblem& p, std::size_t, const Runner::Emit& emit) {
    const RelayProblem rp = p.relay();
    CsvRow row{{"hop_gain_1", rp.gains[0]}, {"hop_gain_2", rp.gains[1]}};
    const AllocationResult res = solve_relay(rp);
    const RelayGap gap = relay_gap(res);
    row.insert(row.end(), {{"blocklength_1", res.blocklength[0]},
                           {"blocklength_2", res.blocklength[1]},
                           {"power_1", res.power[0]},
                           {"power_2", res.power[1]},
                           {"error_1", res.error[0]},
                           {"error_2", res.error[1]},
                           {"overall", gap.overall},
                           {"additive", gap.additive},
                           {"cross_term", gap.cross_term},
                           {"blocklength_ratio", res.blocklength[0] / res.blocklength[1]},
                           {"power_ratio", res.power[0] / res.power[1]},
                           {"balanced_objective", balanced_split_objective(rp)},
                           {"iterations", static_cast<double>(res.stats.iterations)},
                           {"warnings", join(res.warnings)}});
    emit(std::move(row), "ok");
  });
}

}  // namespace

CsvTable run_experiment(const Scenario& sc, const RunOptions& options) {
  const std::string& e = sc.experiment;
  if (e == "eval" || e == "fig1") return run_eval(sc, options);
  if (e == "region_map" || e == "fig2") return run_region_map(sc, options);
  if (e == "allocate") return run_allocate(sc, options);
  if (e == "compare") return run_compare(sc, options, sc.problem.seeds);
  if (e == "fig5" || e == "fig6") return run_compare(sc, options, 0);
  if (e == "fading") return run_fading(sc, options);
  if (e == "relay" || e == "fig8") return run_relay(sc, options);
  throw ValidationError("experiment: unknown experiment '" + e + "'");
}

CsvTable compare_solvers(const AllocationProblem& problem, std::size_t seeds, std::uint64_t seed, double cap,
                         const RunOptions& options) {
  problem.check();
  std::vector<std::string> cols = compare_columns();
  if (options.timing) cols.push_back("solver_seconds");
  cols.push_back("status");
  CsvTable table(cols);
  compare_rows(problem, seeds, seed, cap, options, [&](CsvRow row, std::string status) {
    row.emplace_back("status", std::move(status));
    table.add(row);
  });
  return table;
}

}  // namespace fblopt
