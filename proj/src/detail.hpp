#pragma once

// Building blocks shared by the allocator, fading and relay solvers.

#include <functional>
#include <vector>

#include "fblopt/fbl_core.hpp"
#include "fblopt/solver.hpp"

namespace fblopt::detail {

// Curvature of eps in (a, b); false outside a, b > 0 or where eps is not finite.
bool curvature_ab(double a, double b, double gain, double payload_bits, ErrorCurvatureAB& out) noexcept;

// Curvature of eps in (m, p); false outside m, p > 0.
bool curvature_mp(double m, double p, double gain, double payload_bits, ErrorCurvatureMP& out) noexcept;

// eps(a_ia, b_ib) / scale - x_it, or - 1 when it < 0.
SmoothFunction error_term_ab(int ia, int ib, int it, double gain, double payload_bits, double scale);

// eps(m, p) / scale - x_it (or - 1). A negative im or ip fixes that variable at the given value.
SmoothFunction error_term_mp(int im, int ip, int it, double m_fixed, double p_fixed, double gain,
                             double payload_bits, double scale);

// sum_i 1/x_{idx_i} / budget - 1.
SmoothFunction inverse_sum_budget(std::vector<int> idx, double budget);

// sum_i x_{ib_i}^2 / x_{ia_i} / budget - 1.
SmoothFunction energy_budget_ab(std::vector<int> ia, std::vector<int> ib, double budget);

// sum_i c_i x_{idx_i} / budget - 1 over an n-dimensional vector.
SmoothFunction weighted_sum_budget(int n, const std::vector<int>& idx, const std::vector<double>& c,
                                   double budget);

// Strictly feasible (m, p) for sum m <= M, sum m p <= E, eps_i <= eps_max and the SNR
// floors: common power level where the floors allow, each user at half the reliability
// target, then scaled into the budgets. False when the level grid finds none.
bool interior_start(const std::vector<double>& gains, const std::vector<double>& payload_bits, double total_blocklength,
                    double total_energy, double eps_max, double snr_threshold, std::vector<double>& m,
                    std::vector<double>& p);

// Objectives spanning 1e-4 .. 1e-150 are solved in passes: each pass minimizes the
// program built for scale s = current objective, starting from the previous
// solution, until the relative change drops below 1e-9.
struct RescaledProblem {
  std::function<SmoothProgram(double scale)> build;
  std::function<double(const Vector& x)> objective;  // unscaled
  // Makes x strictly feasible for the program at the new scale (epigraph variable).
  std::function<void(Vector& x, double scale)> reseat;
};

SolveResult solve_rescaled(const RescaledProblem& problem, Vector x);

}  // namespace fblopt::detail
