#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"
#include "fblopt/region.hpp"
#include "fblopt/relay.hpp"

using namespace fblopt;

namespace {

double overall_at(const Eigen::Vector4d& x, double g1, double g2, double d) {
  return overall_error(error_probability(LinkPoint(x(0), x(1), g1, d)),
                       error_probability(LinkPoint(x(2), x(3), g2, d)));
}

}  // namespace

TEST_SUITE("relay") {
  TEST_CASE("overall_error") {
    CHECK(overall_error(0.0, 0.0) == 0.0);
    CHECK(overall_error(1.0, 0.3) == 1.0);
    CHECK(overall_error(0.4, 1.0) == 1.0);
    CHECK(overall_error(0.05, 0.05) == doctest::Approx(0.0975).epsilon(1e-14));
    CHECK_THROWS_AS(overall_error(-0.1, 0.0), DomainError);
    CHECK_THROWS_AS(overall_error(0.0, 1.5), DomainError);
  }

  TEST_CASE("relay_w_hessian at w = 2 matches finite differences") {
    const RelayHessian h = relay_w_hessian(2.0, 2.0);
    CHECK(h.det > 0.0);
    CHECK(h.matrix(0, 0) > 0.0);
    CHECK(h.matrix(1, 1) > 0.0);
    auto f = [](double w1, double w2) { return overall_error(q_func(w1), q_func(w2)); };
    const double s = 1e-4;
    const double fd00 = (f(2 + s, 2) - 2 * f(2, 2) + f(2 - s, 2)) / (s * s);
    const double fd01 = (f(2 + s, 2 + s) - f(2 + s, 2 - s) - f(2 - s, 2 + s) + f(2 - s, 2 - s)) / (4 * s * s);
    CHECK(h.matrix(0, 0) == doctest::Approx(fd00).epsilon(1e-5));
    CHECK(h.matrix(0, 1) == doctest::Approx(fd01).epsilon(1e-5));
  }

  TEST_CASE("relay_w_hessian boundary, symmetry and region") {
    CHECK(relay_w_hessian(1.2, 1.2).det >= 0.0);
    const RelayHessian a = relay_w_hessian(1.5, 3.0);
    const RelayHessian b = relay_w_hessian(3.0, 1.5);
    CHECK(a.matrix(0, 0) == b.matrix(1, 1));
    CHECK(a.matrix(0, 1) == b.matrix(1, 0));
    CHECK(a.det == b.det);
    CHECK_THROWS_AS(relay_w_hessian(1.1, 2.0), RegionError);
  }

  TEST_CASE("relay_w_hessian is PSD on [1.2, 10]^2") {
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const RelayHessian h = relay_w_hessian(1.2 + 8.8 * i / 99.0, 1.2 + 8.8 * j / 99.0);
        CHECK(h.det >= 0.0);
        CHECK(h.matrix.trace() >= 0.0);
      }
    }
  }

  TEST_CASE("equal hop gains give equal allocations") {
    const RelayProblem pr;
    const AllocationResult r = solve_relay(pr);
    CHECK(std::abs(r.blocklength[0] / r.blocklength[1] - 1.0) <= 1e-3);
    CHECK(std::abs(r.power[0] / r.power[1] - 1.0) <= 1e-3);
    CHECK(r.objective == doctest::Approx(overall_error(r.error[0], r.error[1])).epsilon(1e-14));
    CHECK(r.objective == doctest::Approx(2.2436e-30).epsilon(1e-3));
    CHECK(r.objective <= balanced_split_objective(pr) * (1 + 1e-6));
    CHECK(r.warnings.empty());
  }

  TEST_CASE("the weaker hop receives more resources") {
    RelayProblem pr;
    pr.gains = {1.0, 4.0};
    const AllocationResult r = solve_relay(pr);
    CHECK(r.blocklength[0] > r.blocklength[1]);
    CHECK(r.blocklength[0] * r.power[0] > r.blocklength[1] * r.power[1]);
  }

  TEST_CASE("cross-term gap") {
    const AllocationResult r = solve_relay(RelayProblem{});
    const RelayGap gap = relay_gap(r);
    CHECK(gap.cross_term >= 0.0);
    CHECK(gap.cross_term <= 0.1 * 0.1);
    CHECK(gap.additive - gap.overall == doctest::Approx(gap.cross_term).epsilon(1e-12));

    // Away from the deep tail the cross term is visible.
    RelayProblem tight;
    tight.total_energy = 1200;
    const RelayGap g2 = relay_gap(solve_relay(tight));
    CHECK(g2.cross_term > 0.0);
    CHECK(g2.cross_term <= 0.01);
    CHECK(g2.additive - g2.overall == doctest::Approx(g2.cross_term).epsilon(1e-9));
  }

  TEST_CASE("relay infeasible budgets") {
    RelayProblem pr;
    pr.total_energy = 100;
    CHECK_THROWS_AS(solve_relay(pr), InfeasibleError);
    CHECK_THROWS_AS(relay_gap(AllocationResult{}), UsageError);
  }

  TEST_CASE("loose eps_max carries a region warning") {
    RelayProblem pr;
    pr.eps_max = 0.2;
    CHECK_FALSE(solve_relay(pr).warnings.empty());
  }

  TEST_CASE("overall error is convex in (m1, p1, m2, p2) in region") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> um(300.0, 1000.0);
    std::uniform_real_distribution<double> up(std::log(1.0), std::log(6.0));
    const double d = 480.0;
    int sampled = 0;
    double worst = 0.0;
    while (sampled < 200) {
      Eigen::Vector4d x(um(rng), std::exp(up(rng)), um(rng), std::exp(up(rng)));
      const LinkPoint h1(x(0), x(1), 1.0, d);
      const LinkPoint h2(x(2), x(3), 1.0, d);
      if (!convexity_condition(h1, 0.1, 1.0).in_region || !convexity_condition(h2, 0.1, 1.0).in_region) continue;
      if (error_probability(h1) < 1e-12 && error_probability(h2) < 1e-12) continue;
      Eigen::Matrix4d hess;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          const double si = 1e-4 * x(i);
          const double sj = 1e-4 * x(j);
          Eigen::Vector4d pp = x, pm = x, mp = x, mm = x;
          pp(i) += si; pp(j) += sj;
          pm(i) += si; pm(j) -= sj;
          mp(i) -= si; mp(j) += sj;
          mm(i) -= si; mm(j) -= sj;
          hess(i, j) = (overall_at(pp, 1, 1, d) - overall_at(pm, 1, 1, d) - overall_at(mp, 1, 1, d) +
                        overall_at(mm, 1, 1, d)) / (4 * si * sj);
        }
      }
      hess = 0.5 * (hess + hess.transpose()).eval();
      const double eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(hess).eigenvalues()(0);
      worst = std::min(worst, eig / (1.0 + std::abs(hess.trace())));
      ++sampled;
    }
    CHECK(worst >= -1e-8);
  }
}
