#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fblopt/fbl_core.hpp"
#include "fblopt/region.hpp"
#include "fblopt/solver.hpp"

namespace fblopt {

// N users sharing a blocklength budget M and an energy budget E (sum m_i p_i).
// Gains are effective gains z_i / sigma^2; the normalized-power convention is gain = 1.
struct AllocationProblem {
  std::vector<double> payload_bits;
  std::vector<double> gains;
  double total_blocklength = 800.0;
  double total_energy = 2400.0;
  double eps_max = 0.1;
  double snr_threshold = 1.0;

  std::size_t user_count() const noexcept { return payload_bits.size(); }
  // UsageError on malformed input. snr_threshold below 1 is accepted (validate flags it).
  void check() const;
};

enum class Method { joint, integer, alternating, rounded };

const char* to_string(Method method) noexcept;

struct BindingFlags {
  bool blocklength_budget = false;
  bool energy_budget = false;
  std::vector<bool> reliability;  // eps_i at eps_max
  std::vector<bool> snr_floor;    // g_i p_i at snr_threshold
};

struct AllocationResult {
  Method method = Method::joint;
  std::vector<double> blocklength;
  std::vector<double> power;
  std::vector<double> error;
  double objective = 0.0;  // max_i error[i]
  BindingFlags binding;
  SolveStats stats;
  int rounds = 0;  // alternating rounds, or sub-problems solved by enumeration/rounding
  std::vector<std::string> warnings;
};

struct UserRegionReport {
  ConvexityVerdict verdict;    // at gamma = snr_threshold, r = D_i / M
  bool rate_condition_uniform;  // D_i / M above sup of delta6 over gamma >= max(snr_threshold, 1)
};

struct RegionSummary {
  std::vector<UserRegionReport> users;
  bool all_in_region = true;
  std::vector<std::string> warnings;
};

// Region check at the corner that binds the rate condition: lowest feasible rate
// (m_i = M) and the SNR floor. Flags only.
RegionSummary validate(const AllocationProblem& problem);

// Epigraph form over (a, b, t) with a = 1/m, b = sqrt(p).
AllocationResult solve_joint(const AllocationProblem& problem);

struct IntegerOptions {
  double cap = 2e7;      // maximum number of blocklength vectors
  unsigned threads = 0;  // 0: hardware concurrency
};

// Number of integer vectors with m_i >= 1 and sum <= floor(M): C(floor(M), N).
double enumeration_count(std::size_t users, double total_blocklength);

AllocationResult solve_integer(const AllocationProblem& problem, const IntegerOptions& options = {});

// Alternates blocklength and power sub-problems from p_init (default p_i = E/M).
AllocationResult solve_alternating(const AllocationProblem& problem, std::span<const double> p_init);
AllocationResult solve_alternating(const AllocationProblem& problem);

// Integer neighbourhood of result.blocklength, powers re-solved per candidate.
// Exhaustive over floor/ceil combinations up to 12 users, greedy beyond.
AllocationResult round_solution(const AllocationProblem& problem, const AllocationResult& result);

// Optimal powers at fixed blocklengths. InfeasibleError when the SNR floors and
// reliability targets cannot be met within the energy budget.
AllocationResult solve_power(const AllocationProblem& problem, std::span<const double> blocklength);

// Per-user errors, objective and binding flags for a given allocation.
AllocationResult evaluate_allocation(const AllocationProblem& problem,
                                     std::span<const double> blocklength,
                                     std::span<const double> power, Method method);

// Smallest blocklength with Q(w) <= eps at the given SNR (closed form in sqrt(m)).
double min_blocklength(double snr, double payload_bits, double eps);

// Convexity margins of the substituted Hessian (both >= 0 where eps <= 0.1, gamma >= 1):
// x2 = 2 w m dw/dp - 2 and x3 = 2 p m w dw/dm - 1.
struct SubstitutionMargins {
  double x2;
  double x3;
};
SubstitutionMargins substitution_margins(const LinkPoint& point);

}  // namespace fblopt
