#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "fblopt/allocator.hpp"
#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"
#include "fblopt/scenario.hpp"
#include "fblopt/solver.hpp"

using namespace fblopt;

namespace {

AllocationProblem make(std::vector<double> d, std::vector<double> g, double m, double e) {
  AllocationProblem p;
  p.payload_bits = std::move(d);
  p.gains = std::move(g);
  p.total_blocklength = m;
  p.total_energy = e;
  return p;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Two users with both budgets binding. For fixed m1 the min-max power split makes
// the errors equal, found by bisection on p1; a 200-point grid over m1 with
// refinement passes around the best node handles the outer search.
double grid_oracle_two_users(const AllocationProblem& pr, int refinements = 2) {
  const double M = pr.total_blocklength;
  const double E = pr.total_energy;
  auto eps = [&](int i, double m, double p) {
    return error_probability(LinkPoint(m, p, pr.gains[i], pr.payload_bits[i]));
  };
  auto inner = [&](double m1) {
    const double m2 = M - m1;
    double lo = 0.0;
    double hi = E / m1;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (eps(0, m1, mid) > eps(1, m2, (E - m1 * mid) / m2)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return std::max(eps(0, m1, hi), eps(1, m2, (E - m1 * hi) / m2));
  };
  double lo = 0.05 * M;
  double hi = 0.95 * M;
  double best = 1.0;
  for (int pass = 0; pass <= refinements; ++pass) {
    const int n = 200;
    double arg = lo;
    for (int i = 0; i <= n; ++i) {
      const double m1 = lo + (hi - lo) * i / n;
      const double v = inner(m1);
      if (v < best) {
        best = v;
        arg = m1;
      }
    }
    const double step = (hi - lo) / n;
    lo = arg - step;
    hi = arg + step;
  }
  return best;
}

std::vector<double> default_gains() {
  std::vector<double> g = default_channel_gains(5);
  for (double& z : g) z /= 0.01;
  return g;
}

}  // namespace

TEST_SUITE("allocator") {
  TEST_CASE("check rejects malformed problems") {
    CHECK_THROWS_AS(make({}, {}, 800, 2400).check(), UsageError);
    CHECK_THROWS_AS(make({480, 480}, {1}, 800, 2400).check(), UsageError);
    CHECK_THROWS_AS(make({480}, {1}, -1, 2400).check(), UsageError);
    CHECK_THROWS_AS(validate(make({}, {}, 800, 2400)), UsageError);
  }

  TEST_CASE("validate flags") {
    const RegionSummary ok = validate(make(std::vector<double>(5, 480), std::vector<double>(5, 100), 800, 2400));
    CHECK(ok.all_in_region);
    CHECK(ok.users.size() == 5);
    // r = 0.01 fails the rate condition.
    const RegionSummary bad = validate(make(std::vector<double>(2, 8), std::vector<double>(2, 100), 800, 2400));
    CHECK_FALSE(bad.all_in_region);
    CHECK_FALSE(bad.users[0].verdict.cond_rate_ok);
    CHECK_FALSE(bad.warnings.empty());
  }

  TEST_CASE("enumeration_count") {
    CHECK(enumeration_count(1, 10) == 10.0);
    CHECK(enumeration_count(2, 60) == 1770.0);
    CHECK(enumeration_count(3, 800) > 2e7);
  }

  TEST_CASE("min_blocklength") {
    const double m = min_blocklength(2.0, 480.0, 0.01);
    CHECK(error_probability(LinkPoint::at_snr(m, 2.0, 480.0)) == doctest::Approx(0.01).epsilon(1e-8));
  }

  TEST_CASE("substitution margins are non-negative in the reliable region") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> lm(std::log(100.0), std::log(3000.0));
    std::uniform_real_distribution<double> ls(0.0, std::log(50.0));
    int sampled = 0;
    for (int i = 0; i < 4000 && sampled < 500; ++i) {
      const LinkPoint pt = LinkPoint::at_snr(std::exp(lm(rng)), std::exp(ls(rng)), 480.0);
      const double eps = error_probability(pt);
      if (!(eps <= 0.1) || eps < 1e-250) continue;
      const SubstitutionMargins mg = substitution_margins(pt);
      CHECK(mg.x2 >= 0.0);
      CHECK(mg.x3 >= 0.0);
      const ValueGradFn f = [&](const Vector& x, Vector* g) {
        const ErrorCurvatureAB c = error_curvature_ab(x(0), x(1), 1.0, 480.0);
        if (g) *g << c.d_a, c.d_b;
        return c.eps;
      };
      Vector x(2);
      x << 1.0 / pt.blocklength(), std::sqrt(pt.power());
      CHECK(check_gradient(f, x) <= 1e-5);
      ++sampled;
    }
    CHECK(sampled == 500);
  }

  TEST_CASE("joint, single user exhausts both budgets") {
    const AllocationProblem pr = make({480}, {100}, 800, 24);
    const AllocationResult r = solve_joint(pr);
    CHECK(r.blocklength[0] == doctest::Approx(800.0).epsilon(1e-6));
    CHECK(r.power[0] == doctest::Approx(24.0 / 800.0).epsilon(1e-6));
    CHECK(r.binding.blocklength_budget);
    CHECK(r.binding.energy_budget);
    // Along the energy boundary p = E/m the error falls with m.
    double prev = 1.0;
    for (double m = 500; m <= 800; m += 10) {
      const double e = error_probability(LinkPoint(m, 24.0 / m, 100.0, 480.0));
      CHECK(e < prev);
      prev = e;
    }
    CHECK(r.objective == doctest::Approx(prev).epsilon(1e-6));
  }

  TEST_CASE("joint, identical users split evenly") {
    const AllocationProblem pr = make({480, 480}, {1, 1}, 800, 2400);
    const AllocationResult r = solve_joint(pr);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.blocklength[i] == doctest::Approx(400.0).epsilon(1e-3));
      CHECK(r.power[i] == doctest::Approx(3.0).epsilon(1e-3));
    }
    const double oracle = grid_oracle_two_users(pr);
    CHECK(rel_gap(r.objective, oracle) <= 1e-4);
    CHECK(r.objective <= oracle * (1 + 1e-6));
  }

  TEST_CASE("joint, asymmetric pair matches the grid oracle") {
    const AllocationProblem pr = make({300, 480}, {1.5, 0.8}, 800, 2400);
    const AllocationResult r = solve_joint(pr);
    const double oracle = grid_oracle_two_users(pr);
    CHECK(rel_gap(r.objective, oracle) <= 1e-3);
    CHECK(r.objective <= oracle * (1 + 1e-6));
  }

  TEST_CASE("joint, energy too small for the SNR floor") {
    CHECK_THROWS_AS(solve_joint(make({480}, {1}, 800, 100)), InfeasibleError);
  }

  TEST_CASE("joint objective decreases with the blocklength budget") {
    double prev = 1.0;
    for (double M : {600.0, 800.0, 1000.0}) {
      const AllocationResult r = solve_joint(make(std::vector<double>(5, 480), default_gains(), M, 2400));
      CHECK(r.objective < prev);
      CHECK(r.objective > 0.0);
      prev = r.objective;
    }
  }

  TEST_CASE("joint, default five users") {
    const AllocationResult r = solve_joint(make(std::vector<double>(5, 480), default_gains(), 800, 2400));
    CHECK(r.objective == doctest::Approx(5.0447e-87).epsilon(1e-3));
    double sum_m = 0.0;
    double sum_e = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      sum_m += r.blocklength[i];
      sum_e += r.blocklength[i] * r.power[i];
      CHECK(r.error[i] <= r.objective * (1 + 1e-6));
    }
    CHECK(sum_m <= 800.0 * (1 + 1e-9));
    CHECK(sum_e <= 2400.0 * (1 + 1e-9));
  }

  TEST_CASE("integer, single user takes the whole budget") {
    const AllocationProblem pr = make({10}, {1}, 10, 30);
    const AllocationResult r = solve_integer(pr);
    CHECK(r.blocklength[0] == 10.0);
    // Only blocklengths that can meet eps_max are solved.
    CHECK(r.rounds >= 1);
    CHECK(r.rounds <= 10);
    CHECK(r.method == Method::integer);
  }

  TEST_CASE("integer, cap exceeded") {
    CHECK_THROWS_AS(solve_integer(make({480, 480, 480}, {1, 1, 1}, 800, 2400)), ResourceError);
  }

  TEST_CASE("integer agrees with rounded joint") {
    const AllocationProblem pr = make({20, 20}, {1, 1}, 60, 120);
    const AllocationResult joint = solve_joint(pr);
    const AllocationResult integer = solve_integer(pr);
    const AllocationResult rounded = round_solution(pr, joint);
    CHECK(rel_gap(rounded.objective, integer.objective) <= 1e-3);
    CHECK(joint.objective <= integer.objective * (1 + 1e-6));
    for (double m : integer.blocklength) CHECK(m == std::round(m));
    for (double m : rounded.blocklength) CHECK(m == std::round(m));
  }

  TEST_CASE("round_solution neighbourhood") {
    const AllocationProblem pr = make({480, 480}, {1, 1}, 800, 2400);
    AllocationResult frac = evaluate_allocation(pr, std::vector<double>{399.6, 400.4}, std::vector<double>{3, 3},
                                                Method::joint);
    const AllocationResult r = round_solution(pr, frac);
    const bool expected = (r.blocklength[0] == 400.0 && r.blocklength[1] == 400.0) ||
                          (r.blocklength[0] == 399.0 && r.blocklength[1] == 400.0);
    CHECK(expected);
    CHECK(r.blocklength[0] + r.blocklength[1] <= 800.0);

    const AllocationResult exact = evaluate_allocation(pr, std::vector<double>{400, 400}, std::vector<double>{3, 3},
                                                       Method::joint);
    const AllocationResult same = round_solution(pr, exact);
    CHECK(same.blocklength == exact.blocklength);
    CHECK(same.objective == doctest::Approx(exact.objective).epsilon(1e-6));
  }

  TEST_CASE("alternating never beats joint") {
    const AllocationProblem pr = make({480, 480}, {1, 1}, 800, 2400);
    const AllocationResult joint = solve_joint(pr);
    const AllocationResult alt = solve_alternating(pr);
    CHECK(alt.objective >= joint.objective - 1e-9);
    CHECK(rel_gap(alt.objective, joint.objective) <= 1e-6);
    CHECK(alt.rounds >= 1);
    CHECK_THROWS_AS(solve_alternating(pr, std::vector<double>{0.5, 3}), UsageError);
  }

  TEST_CASE("alternating from random starts on an asymmetric pair") {
    const AllocationProblem pr = make({480, 480}, {100, 400}, 800, 24);
    const AllocationResult joint = solve_joint(pr);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double max_gap = 0.0;
    int checked = 0;
    const double floor1 = pr.snr_threshold / pr.gains[0];
    const double floor2 = pr.snr_threshold / pr.gains[1];
    std::vector<std::vector<double>> inits{{floor1 * 1.01, 2.0 * 24.0 / 800.0 - floor1 * 1.01}};
    for (int k = 0; k < 50; ++k) {
      const double p1 = floor1 * 1.01 + (1.9 * 24.0 / 800.0 - floor1) * u(rng);
      inits.push_back({p1, std::max(2.0 * 24.0 / 800.0 - p1, floor2 * 1.01)});
    }
    for (const auto& init : inits) {
      try {
        const AllocationResult alt = solve_alternating(pr, init);
        const double gap = (alt.objective - joint.objective) / joint.objective;
        CHECK(gap >= -1e-9);
        max_gap = std::max(max_gap, gap);
        ++checked;
      } catch (const UsageError&) {
        // infeasible start
      }
    }
    CHECK(checked > 25);
    CHECK(max_gap > 0.0);
  }
}
