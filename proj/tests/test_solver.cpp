#include <cmath>

#include <doctest.h>

#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"
#include "fblopt/solver.hpp"

using namespace fblopt;

namespace {

SmoothFunction scalar(std::function<double(double)> f, std::function<double(double)> df) {
  SmoothFunction fn;
  fn.eval = [f, df](const Vector& x, Vector* g) {
    if (g) (*g)(0) = df(x(0));
    return f(x(0));
  };
  return fn;
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

// min (x0 - 2)^2 + (x1 - 2)^2 s.t. x0^2 + x1^2 <= 1: optimum at (1, 1)/sqrt(2).
SmoothProgram disc_program() {
  SmoothProgram prog;
  prog.dimension = 2;
  prog.objective.eval = [](const Vector& x, Vector* g) {
    if (g) *g = 2.0 * (x.array() - 2.0).matrix();
    return (x.array() - 2.0).square().sum();
  };
  SmoothFunction disc;
  disc.eval = [](const Vector& x, Vector* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm() - 1.0;
  };
  prog.constraints.push_back(disc);
  return prog;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("unconstrained quadratic") {
    SmoothProgram prog;
    prog.dimension = 1;
    prog.objective = scalar([](double x) { return (x - 3) * (x - 3); }, [](double x) { return 2 * (x - 3); });
    const SolveResult r = minimize(prog, vec({0.0}));
    CHECK(r.x(0) == doctest::Approx(3.0).epsilon(1e-8));
  }

  TEST_CASE("active linear constraint") {
    SmoothProgram prog;
    prog.dimension = 1;
    prog.objective = linear_function(vec({1.0}), 0.0);
    prog.constraints.push_back(linear_function(vec({-1.0}), 1.0));
    const SolveResult r = minimize(prog, vec({5.0}));
    CHECK(std::abs(r.x(0) - 1.0) <= 1e-6);
  }

  TEST_CASE("infeasible start is a usage error") {
    SmoothProgram prog;
    prog.dimension = 1;
    prog.objective = linear_function(vec({1.0}), 0.0);
    prog.constraints.push_back(linear_function(vec({-1.0}), 1.0));
    CHECK_THROWS_AS(minimize(prog, vec({0.5})), UsageError);
  }

  TEST_CASE("find_feasible") {
    SmoothProgram prog;
    prog.dimension = 1;
    prog.objective = linear_function(vec({0.0}), 0.0);
    prog.constraints.push_back(linear_function(vec({1.0}), -1.0));
    const Vector x = find_feasible(prog, vec({5.0}));
    CHECK(x(0) <= 1.0 - 1e-9);

    prog.constraints.push_back(linear_function(vec({-1.0}), 2.0));
    bool thrown = false;
    try {
      find_feasible(prog, vec({5.0}));
    } catch (const InfeasibleError& e) {
      thrown = true;
      CHECK(e.residual() > -1e-12);
    }
    CHECK(thrown);
  }

  TEST_CASE("box bounds") {
    SmoothProgram prog;
    prog.dimension = 1;
    prog.objective = scalar([](double x) { return -x; }, [](double) { return -1.0; });
    prog.lower = {0.0};
    prog.upper = {2.5};
    const SolveResult r = minimize(prog, vec({1.0}));
    CHECK(r.x(0) == doctest::Approx(2.5).epsilon(1e-7));
  }

  TEST_CASE("barrier stages, KKT residual and feasibility") {
    const SmoothProgram prog = disc_program();
    const SolveResult r = minimize(prog, vec({0.0, 0.0}));
    CHECK(r.x(0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-7));
    CHECK(r.x(1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-7));
    CHECK(r.stats.final_slack > 0.0);
    CHECK(r.stats.kkt_residual <= 1e-6 * (1.0 + r.stats.gradient_norm));
    REQUIRE(r.stats.stage_objectives.size() >= 2);
    for (std::size_t k = 1; k < r.stats.stage_objectives.size(); ++k) {
      CHECK(r.stats.stage_objectives[k] <= r.stats.stage_objectives[k - 1] + 1e-10);
    }
    // One constraint: stages at t = 1, 10, ..., 1e9.
    CHECK(r.stats.barrier_stages == 10);
  }

  TEST_CASE("determinism") {
    const SmoothProgram prog = disc_program();
    const SolveResult a = minimize(prog, vec({-0.3, 0.2}));
    const SolveResult b = minimize(prog, vec({-0.3, 0.2}));
    CHECK(a.x(0) == b.x(0));
    CHECK(a.x(1) == b.x(1));
    CHECK(a.stats.iterations == b.stats.iterations);
    CHECK(a.stats.stage_objectives == b.stats.stage_objectives);
  }

  TEST_CASE("Hessian fallback agrees with the analytic Hessian") {
    SmoothProgram prog = disc_program();
    prog.objective.hessian = [](const Vector&, double w, Eigen::Ref<Matrix> h) {
      h += 2.0 * w * Matrix::Identity(2, 2);
    };
    prog.constraints[0].hessian = [](const Vector&, double w, Eigen::Ref<Matrix> h) {
      h += 2.0 * w * Matrix::Identity(2, 2);
    };
    const SolveResult a = minimize(prog, vec({0.0, 0.0}));
    const SolveResult b = minimize(disc_program(), vec({0.0, 0.0}));
    CHECK(a.x(0) == doctest::Approx(b.x(0)).epsilon(1e-7));
  }

  TEST_CASE("check_gradient calibration") {
    const ValueGradFn eps_ab = [](const Vector& x, Vector* g) {
      const ErrorCurvatureAB c = error_curvature_ab(x(0), x(1), 1.0, 480.0);
      if (g) {
        (*g)(0) = c.d_a;
        (*g)(1) = c.d_b;
      }
      return c.eps;
    };
    const ValueGradFn doubled = [&](const Vector& x, Vector* g) {
      const double v = eps_ab(x, g);
      if (g) *g *= 2.0;
      return v;
    };
    const ValueGradFn constant = [](const Vector&, Vector* g) {
      if (g) g->setZero();
      return 4.0;
    };
    const Vector x = vec({1.0 / 600.0, std::sqrt(1.5)});
    CHECK(check_gradient(eps_ab, x) <= 1e-5);
    CHECK(check_gradient(doubled, x) >= 0.4);
    CHECK(check_gradient(constant, x) <= 1e-12);
  }
}
