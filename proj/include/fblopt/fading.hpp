#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "fblopt/solver.hpp"

namespace fblopt {

// Distribution of the channel power gain z (before division by the noise power).
class FadingModel {
 public:
  enum class Kind { rayleigh_power, point_mass, tabulated };

  // z exponential with the given mean (|h|^2 under Rayleigh fading).
  static FadingModel rayleigh_power(double mean);
  static FadingModel point_mass(double location);
  // Piecewise-linear pdf through (z_k, pdf_k); z strictly increasing, pdf >= 0,
  // trapezoid total within 1e-9 of 1. ModelError otherwise.
  static FadingModel tabulated(std::vector<double> z, std::vector<double> pdf);

  Kind kind() const noexcept { return kind_; }
  double mean() const noexcept { return param_; }      // rayleigh_power
  double location() const noexcept { return param_; }  // point_mass
  const std::vector<double>& table_z() const noexcept { return z_; }
  const std::vector<double>& table_pdf() const noexcept { return pdf_; }

  // Inverse CDF at u in (0, 1). ModelError beyond the tabulated support.
  double quantile(double u) const;
  double cdf(double z) const;

  // One draw; consumes exactly one engine output for every kind.
  double draw(std::mt19937_64& engine) const;

 private:
  FadingModel(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_ = 0.0;
  std::vector<double> z_;
  std::vector<double> pdf_;
  std::vector<double> cdf_;
};

// Gain below which even M_max channel uses at P_max cannot carry D bits:
// sigma^2 (2^{D/M_max} - 1) / P_max.
double z_threshold(double payload_bits, double m_max, double p_max, double noise_power);

// Equal-mass states z(phi) = F^{-1}((phi - 0.5)/Phi), each with weight 1/Phi.
struct QuantizedChannel {
  std::vector<double> states;  // ascending
  double z_threshold = 0.0;    // states below it are dropped (error 1)
  std::size_t size() const noexcept { return states.size(); }
  double weight() const noexcept { return 1.0 / static_cast<double>(states.size()); }
};

QuantizedChannel quantize(const FadingModel& model, std::size_t phi, double z_th = 0.0);

struct StatePolicy {
  std::vector<double> blocklength;
  std::vector<double> power;
};

// Sum of per-state errors times 1/Phi. Dropped states, and active states given no
// blocklength or power, contribute 1.
double expected_error_csi(const QuantizedChannel& channel, const StatePolicy& policy,
                          double payload_bits, double noise_power);

struct PerStateBudget {
  double mean_blocklength;  // sum_phi m(phi) / Phi <= this
  double mean_energy;       // sum_phi m(phi) p(phi) / Phi <= this
};

struct PerStateSolution {
  StatePolicy policy;  // dropped states hold m = p = 0
  double objective = 0.0;
  SolveStats stats;
};

// Perfect-CSI allocation over the active states, each with eps <= eps_max and
// SNR >= snr_threshold. InfeasibleError when the budgets cannot cover that.
PerStateSolution solve_per_state(const QuantizedChannel& channel, double payload_bits, double noise_power,
                                 const PerStateBudget& budget, double eps_max, double snr_threshold);

// E_z[eps] for one fixed (m, p); no drop rule. Integrated by parts in w, where it
// reads E = int F(z(w)) phi(w) dw, by Gauss-Legendre panels on |w| <= 38.5 using
// at most quad_points nodes.
double expected_error_avg(const FadingModel& model, double blocklength, double power, double payload_bits,
                          double noise_power, std::size_t quad_points);

struct AvgCsiBounds {
  double m_lo;
  double m_hi;
  double p_lo;
  double p_hi;
  double energy;  // m p <= energy
};

struct AvgCsiSolution {
  double blocklength = 0.0;
  double power = 0.0;
  double objective = 0.0;
  int rounds = 0;
};

// Coordinate descent with golden-section line searches in (m, e = m p).
AvgCsiSolution solve_avg_csi(const FadingModel& model, double payload_bits, double noise_power,
                             const AvgCsiBounds& bounds, std::size_t quad_points = 256);

struct MonteCarloEstimate {
  double mean;
  double std_error;
  std::size_t samples;
};

// std::mt19937_64 seeded with `seed`; each draw maps the top 53 bits to u in (0, 1).
MonteCarloEstimate monte_carlo_estimate(const FadingModel& model, double blocklength, double power,
                                        double payload_bits, double noise_power, std::size_t samples,
                                        std::uint64_t seed);

double monte_carlo_error(const FadingModel& model, double blocklength, double power, double payload_bits,
                         double noise_power, std::size_t samples, std::uint64_t seed);

}  // namespace fblopt
