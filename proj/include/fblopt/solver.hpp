#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fblopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Value at x; when grad is non-null it arrives sized n and zeroed, and the callee
// fills it. A non-finite return marks x as outside the function's domain.
using ValueGradFn = std::function<double(const Vector& x, Vector* grad)>;

// hess += weight * Hessian(x). Only rows/columns in the function's support may be touched.
using HessianFn = std::function<void(const Vector& x, double weight, Eigen::Ref<Matrix> hess)>;

struct SmoothFunction {
  ValueGradFn eval;
  HessianFn hessian;         // optional; finite differences of eval's gradient otherwise
  std::vector<int> support;  // coordinates the function depends on; empty means all
};

// Minimize objective subject to g_j(x) <= 0 and optional box bounds. Objective and
// constraints must be convex and C^2 on the open feasible set.
struct SmoothProgram {
  int dimension = 0;
  SmoothFunction objective;
  std::vector<SmoothFunction> constraints;
  std::vector<double> lower;  // empty, or one entry per coordinate (-inf allowed)
  std::vector<double> upper;
};

struct SolveStats {
  int iterations = 0;
  int barrier_stages = 0;
  double final_slack = 0.0;    // min_j -g_j(x*)
  double gradient_norm = 0.0;  // |grad f(x*)|
  double kkt_residual = 0.0;   // |grad f + sum_j lambda_j grad g_j| with lambda_j = 1/(-t g_j)
  double wall_seconds = 0.0;
  std::vector<double> stage_objectives;  // f at the end of each barrier stage
};

struct SolveResult {
  Vector x;
  SolveStats stats;
};

// g(x) = c.x + c0.
SmoothFunction linear_function(Vector coeffs, double offset);

// Phase I: minimizes s subject to g_j(x) <= s, s >= -1. Returns x with
// max_j g_j(x) <= -1e-9; InfeasibleError when the minimized slack exceeds -1e-12.
Vector find_feasible(const SmoothProgram& program, const Vector& hint);

// Log-barrier interior point from a strictly feasible x0 (UsageError otherwise).
// t_b starts at 1 and grows tenfold per stage until (#constraints)/t_b < 1e-8.
SolveResult minimize(const SmoothProgram& program, const Vector& x0);

// Worst relative deviation between the gradient reported by fn and central
// differences with per-coordinate step 1e-6 |x_i| (1e-6 at zero).
double check_gradient(const ValueGradFn& fn, const Vector& x);

}  // namespace fblopt
