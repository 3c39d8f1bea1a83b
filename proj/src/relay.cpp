#include "fblopt/relay.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "detail.hpp"
#include "fblopt/errors.hpp"

namespace fblopt {

void RelayProblem::check() const { as_allocation().check(); }

AllocationProblem RelayProblem::as_allocation() const {
  AllocationProblem p;
  p.payload_bits = {payload_bits, payload_bits};
  p.gains = {gains[0], gains[1]};
  p.total_blocklength = total_blocklength;
  p.total_energy = total_energy;
  p.eps_max = eps_max;
  p.snr_threshold = snr_threshold;
  return p;
}

double overall_error(double eps1, double eps2) {
  if (!(eps1 >= 0.0 && eps1 <= 1.0) || !(eps2 >= 0.0 && eps2 <= 1.0)) {
    throw DomainError("overall_error: probabilities must lie in [0, 1]");
  }
  if (eps1 == 1.0 || eps2 == 1.0) return 1.0;
  return eps1 + eps2 - eps1 * eps2;
}

RelayHessian relay_w_hessian(double w1, double w2) {
  if (!(w1 >= 1.2) || !(w2 >= 1.2)) throw RegionError("relay_w_hessian: requires w1, w2 >= 1.2");
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  RelayHessian h;
  h.matrix(0, 0) = (1.0 - q_func(w2)) * w1 * c * std::exp(-0.5 * w1 * w1);
  h.matrix(1, 1) = (1.0 - q_func(w1)) * w2 * c * std::exp(-0.5 * w2 * w2);
  h.matrix(0, 1) = h.matrix(1, 0) = -std::exp(-0.5 * (w1 * w1 + w2 * w2)) / (2.0 * std::numbers::pi);
  h.det = h.matrix(0, 0) * h.matrix(1, 1) - h.matrix(0, 1) * h.matrix(1, 0);
  return h;
}

AllocationResult solve_relay(const RelayProblem& problem) {
  const AllocationProblem ap = problem.as_allocation();
  ap.check();
  const double d = problem.payload_bits;
  const auto& g = problem.gains;
  // x = (a1, a2, b1, b2)
  const std::vector<int> a_idx{0, 1};
  const std::vector<int> b_idx{2, 3};

  auto hop_errors = [&](const Vector& v) {
    return std::array<double, 2>{error_probability(LinkPoint(1.0 / v(0), v(2) * v(2), g[0], d)),
                                 error_probability(LinkPoint(1.0 / v(1), v(3) * v(3), g[1], d))};
  };

  detail::RescaledProblem rp;
  rp.objective = [&](const Vector& v) {
    const auto e = hop_errors(v);
    return overall_error(e[0], e[1]);
  };
  rp.build = [&](double scale) {
    SmoothProgram prog;
    prog.dimension = 4;
    prog.objective.eval = [&, scale](const Vector& v, Vector* grad) {
      ErrorCurvatureAB c1;
      ErrorCurvatureAB c2;
      if (!detail::curvature_ab(v(0), v(2), g[0], d, c1) || !detail::curvature_ab(v(1), v(3), g[1], d, c2)) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      if (grad) {
        (*grad)(0) = (1.0 - c2.eps) * c1.d_a / scale;
        (*grad)(2) = (1.0 - c2.eps) * c1.d_b / scale;
        (*grad)(1) = (1.0 - c1.eps) * c2.d_a / scale;
        (*grad)(3) = (1.0 - c1.eps) * c2.d_b / scale;
      }
      return (c1.eps + c2.eps - c1.eps * c2.eps) / scale;
    };
    prog.objective.hessian = [&, scale](const Vector& v, double w, Eigen::Ref<Matrix> h) {
      ErrorCurvatureAB c1;
      ErrorCurvatureAB c2;
      if (!detail::curvature_ab(v(0), v(2), g[0], d, c1) || !detail::curvature_ab(v(1), v(3), g[1], d, c2)) return;
      const double k = w / scale;
      const double s1 = 1.0 - c2.eps;
      const double s2 = 1.0 - c1.eps;
      h(0, 0) += k * s1 * c1.d_aa;
      h(2, 2) += k * s1 * c1.d_bb;
      h(0, 2) += k * s1 * c1.d_ab;
      h(2, 0) += k * s1 * c1.d_ab;
      h(1, 1) += k * s2 * c2.d_aa;
      h(3, 3) += k * s2 * c2.d_bb;
      h(1, 3) += k * s2 * c2.d_ab;
      h(3, 1) += k * s2 * c2.d_ab;
      // -(grad eps1 grad eps2^T + transpose)
      const double g1[2] = {c1.d_a, c1.d_b};
      const double g2[2] = {c2.d_a, c2.d_b};
      const int i1[2] = {0, 2};
      const int i2[2] = {1, 3};
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
          h(i1[r], i2[c]) -= k * g1[r] * g2[c];
          h(i2[c], i1[r]) -= k * g1[r] * g2[c];
        }
      }
    };
    prog.constraints.push_back(detail::inverse_sum_budget(a_idx, problem.total_blocklength));
    prog.constraints.push_back(detail::energy_budget_ab(a_idx, b_idx, problem.total_energy));
    for (int i = 0; i < 2; ++i) {
      prog.constraints.push_back(detail::error_term_ab(i, 2 + i, -1, g[i], d, problem.eps_max));
      Vector c = Vector::Zero(4);
      c(2 + i) = -1.0 / std::sqrt(problem.snr_threshold / g[i]);
      SmoothFunction floor = linear_function(c, 1.0);
      floor.support = {2 + i};
      prog.constraints.push_back(std::move(floor));
    }
    return prog;
  };

  Vector x(4);
  std::vector<double> m_start;
  std::vector<double> p_start;
  if (!detail::interior_start(ap.gains, ap.payload_bits, ap.total_blocklength, ap.total_energy, ap.eps_max,
                              ap.snr_threshold, m_start, p_start)) {
    m_start.assign(2, 0.45 * problem.total_blocklength);
    p_start.resize(2);
    for (int i = 0; i < 2; ++i) {
      p_start[i] = std::max(0.9 * problem.total_energy / problem.total_blocklength, 1.1 * problem.snr_threshold / g[i]);
    }
  }
  for (int i = 0; i < 2; ++i) {
    x(i) = 1.0 / m_start[i];
    x(2 + i) = std::sqrt(p_start[i]);
  }
  const double s0 = rp.objective(x);
  if (!(s0 > 1e-300)) throw NumericError("solve_relay: error probability at the start point underflows");
  x = find_feasible(rp.build(s0), x);
  const SolveResult solved = detail::solve_rescaled(rp, x);

  const std::vector<double> m{1.0 / solved.x(0), 1.0 / solved.x(1)};
  const std::vector<double> p{solved.x(2) * solved.x(2), solved.x(3) * solved.x(3)};
  AllocationResult res = evaluate_allocation(ap, m, p, Method::joint);
  res.objective = overall_error(res.error[0], res.error[1]);
  res.stats = solved.stats;
  if (problem.eps_max > 0.1) {
    res.warnings.push_back("eps_max above 0.1: the w >= 1.2 region behind the convexity argument is not enforced");
  }
  return res;
}

RelayGap relay_gap(const AllocationResult& result) {
  if (result.error.size() != 2) throw UsageError("relay_gap: expects a two-hop result");
  const double e1 = result.error[0];
  const double e2 = result.error[1];
  const double overall = overall_error(e1, e2);
  return {overall, e1 + e2, e1 * e2};
}

double balanced_split_objective(const RelayProblem& problem) {
  problem.check();
  const double m = 0.5 * problem.total_blocklength;
  const double inv_sum = 1.0 / problem.gains[0] + 1.0 / problem.gains[1];
  double eps[2];
  for (int i = 0; i < 2; ++i) {
    const double energy = problem.total_energy * (1.0 / problem.gains[i]) / inv_sum;
    eps[i] = error_probability(LinkPoint(m, energy / m, problem.gains[i], problem.payload_bits));
  }
  return overall_error(eps[0], eps[1]);
}

}  // namespace fblopt
