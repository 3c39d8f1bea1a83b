#include "fblopt/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "fblopt/errors.hpp"

namespace fblopt {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr double kBarrierGrowth = 10.0;
constexpr double kGapTolerance = 1e-8;
constexpr double kCenteringTolerance = 1e-10;  // on lambda^2 / 2
constexpr double kNoiseDecrement = 1e-6;       // line search may stall below this
constexpr int kMaxCenteringSteps = 500;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> support_of(const SmoothFunction& f, int n) {
  if (!f.support.empty()) return f.support;
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

// Box bounds folded into the constraint list.
std::vector<SmoothFunction> all_constraints(const SmoothProgram& program) {
  const int n = program.dimension;
  std::vector<SmoothFunction> out = program.constraints;
  auto bound = [&](int i, double sign, double value) {
    Vector c = Vector::Zero(n);
    c(i) = sign;
    SmoothFunction g = linear_function(c, -sign * value);
    g.support = {i};
    out.push_back(std::move(g));
  };
  if (!program.lower.empty()) {
    if (static_cast<int>(program.lower.size()) != n) throw UsageError("lower bounds: size mismatch");
    for (int i = 0; i < n; ++i)
      if (std::isfinite(program.lower[i])) bound(i, -1.0, program.lower[i]);
  }
  if (!program.upper.empty()) {
    if (static_cast<int>(program.upper.size()) != n) throw UsageError("upper bounds: size mismatch");
    for (int i = 0; i < n; ++i)
      if (std::isfinite(program.upper[i])) bound(i, 1.0, program.upper[i]);
  }
  return out;
}

double value_at(const SmoothFunction& f, const Vector& x) { return f.eval(x, nullptr); }

void accumulate_hessian(const SmoothFunction& f, const Vector& x, double weight, Matrix& hess) {
  if (f.hessian) {
    f.hessian(x, weight, hess);
    return;
  }
  const int n = static_cast<int>(x.size());
  const std::vector<int> sup = support_of(f, n);
  const std::size_t k = sup.size();
  Matrix local(k, k);
  Vector gp(n);
  Vector gm(n);
  for (std::size_t c = 0; c < k; ++c) {
    const int i = sup[c];
    double h = 6e-6 * std::max(std::abs(x(i)), 1.0);
    bool ok = false;
    for (int attempt = 0; attempt < 6 && !ok; ++attempt, h *= 0.1) {
      Vector xp = x;
      Vector xm = x;
      xp(i) += h;
      xm(i) -= h;
      gp.setZero();
      gm.setZero();
      const double vp = f.eval(xp, &gp);
      const double vm = f.eval(xm, &gm);
      ok = std::isfinite(vp) && std::isfinite(vm);
      if (ok) {
        for (std::size_t r = 0; r < k; ++r) local(r, c) = (gp(sup[r]) - gm(sup[r])) / (2.0 * h);
      }
    }
    if (!ok) throw NumericError("finite-difference Hessian left the function's domain");
  }
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c)
      hess(sup[r], sup[c]) += weight * 0.5 * (local(r, c) + local(c, r));
}

class Barrier {
 public:
  Barrier(const SmoothFunction& objective, const std::vector<SmoothFunction>& constraints, int n)
      : objective_(objective), constraints_(constraints), n_(n) {
    supports_.reserve(constraints_.size());
    for (const auto& g : constraints_) supports_.push_back(support_of(g, n_));
  }

  // t f(x) - sum log(-g_j(x)); +inf outside the strictly feasible domain.
  double value(const Vector& x, double t) const {
    const double f = value_at(objective_, x);
    if (!std::isfinite(f)) return kInf;
    double sum = t * f;
    for (const auto& g : constraints_) {
      const double v = value_at(g, x);
      if (!(v < 0.0) || !std::isfinite(v)) return kInf;
      sum -= std::log(-v);
    }
    return sum;
  }

  void newton_system(const Vector& x, double t, Vector& grad, Matrix& hess) const {
    grad.setZero(n_);
    hess.setZero(n_, n_);
    Vector g(n_);
    g.setZero();
    objective_.eval(x, &g);
    grad += t * g;
    accumulate_hessian(objective_, x, t, hess);
    for (std::size_t j = 0; j < constraints_.size(); ++j) {
      g.setZero();
      const double v = constraints_[j].eval(x, &g);
      const double inv = 1.0 / (-v);
      grad += inv * g;
      const auto& sup = supports_[j];
      for (int r : sup)
        for (int c : sup) hess(r, c) += inv * inv * g(r) * g(c);
      accumulate_hessian(constraints_[j], x, inv, hess);
    }
  }

  std::size_t constraint_count() const { return constraints_.size(); }

  double min_slack(const Vector& x) const {
    double s = kInf;
    for (const auto& g : constraints_) s = std::min(s, -value_at(g, x));
    return s;
  }

  // |grad f + sum lambda_j grad g_j| with lambda_j = 1/(-t g_j), and |grad f|.
  std::pair<double, double> kkt(const Vector& x, double t) const {
    Vector gf = Vector::Zero(n_);
    objective_.eval(x, &gf);
    Vector r = gf;
    Vector g(n_);
    for (const auto& c : constraints_) {
      g.setZero();
      const double v = c.eval(x, &g);
      r += g / (-t * v);
    }
    return {r.norm(), gf.norm()};
  }

 private:
  const SmoothFunction& objective_;
  const std::vector<SmoothFunction>& constraints_;
  int n_;
  std::vector<std::vector<int>> supports_;
};

// Regularized Newton direction; Jacobi scaling keeps the Cholesky well conditioned
// when coordinates live on different scales.
Vector newton_direction(const Matrix& hess, const Vector& grad) {
  const Eigen::Index n = hess.rows();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = hess(i, i);
    d(i) = (h > 0.0 && std::isfinite(h)) ? 1.0 / std::sqrt(h) : 1.0;
  }
  const Matrix scaled = d.asDiagonal() * hess * d.asDiagonal();
  const Vector rhs = -(d.asDiagonal() * grad);
  double tau = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    Matrix reg = scaled;
    if (tau > 0.0) reg.diagonal().array() += tau;
    Eigen::LLT<Matrix> llt(reg);
    if (llt.info() == Eigen::Success) {
      Vector y = llt.solve(rhs);
      if (y.allFinite()) return d.asDiagonal() * y;
    }
    tau = tau == 0.0 ? 1e-12 : tau * 10.0;
  }
  throw NumericError("Newton system could not be regularized");
}

std::string describe(const Vector& x) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
  os << "]";
  return os.str();
}

// Damped Newton centering at fixed t. Returns the number of Newton steps.
int center(const Barrier& barrier, Vector& x, double t) {
  const Eigen::Index n = x.size();
  Vector grad(n);
  Matrix hess(n, n);
  double phi = barrier.value(x, t);
  for (int step = 0; step < kMaxCenteringSteps; ++step) {
    barrier.newton_system(x, t, grad, hess);
    const Vector dx = newton_direction(hess, grad);
    const double slope = grad.dot(dx);
    const double decrement = -0.5 * slope;
    if (!(decrement > kCenteringTolerance)) return step;
    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      const Vector trial = x + alpha * dx;
      const double phi_trial = barrier.value(trial, t);
      if (std::isfinite(phi_trial) && phi_trial <= phi + kArmijo * alpha * slope) {
        x = trial;
        phi = phi_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (decrement < kNoiseDecrement) return step;
      throw NumericError("line search failed after 60 halvings (t=" + std::to_string(t) +
                         ", decrement=" + std::to_string(decrement) + ", x=" + describe(x) + ")");
    }
  }
  return kMaxCenteringSteps;
}

}  // namespace

SmoothFunction linear_function(Vector coeffs, double offset) {
  SmoothFunction f;
  f.eval = [c = std::move(coeffs), offset](const Vector& x, Vector* grad) {
    if (grad) *grad = c;
    return c.dot(x) + offset;
  };
  f.hessian = [](const Vector&, double, Eigen::Ref<Matrix>) {};
  return f;
}

SolveResult minimize(const SmoothProgram& program, const Vector& x0) {
  const auto start = std::chrono::steady_clock::now();
  const int n = program.dimension;
  if (n <= 0 || x0.size() != n) throw UsageError("minimize: dimension mismatch");
  if (!program.objective.eval) throw UsageError("minimize: missing objective");
  const std::vector<SmoothFunction> constraints = all_constraints(program);
  const Barrier barrier(program.objective, constraints, n);

  if (!std::isfinite(value_at(program.objective, x0))) {
    throw UsageError("minimize: objective not finite at x0");
  }
  for (std::size_t j = 0; j < constraints.size(); ++j) {
    const double v = value_at(constraints[j], x0);
    if (!(v < 0.0)) {
      throw UsageError("minimize: x0 not strictly feasible (constraint " + std::to_string(j) +
                       " = " + std::to_string(v) + ")");
    }
  }

  SolveResult result{x0, {}};
  SolveStats& stats = result.stats;
  const double m = static_cast<double>(constraints.size());
  double t = 1.0;
  while (true) {
    stats.iterations += center(barrier, result.x, t);
    ++stats.barrier_stages;
    stats.stage_objectives.push_back(value_at(program.objective, result.x));
    if (m == 0.0 || m / t < kGapTolerance) break;
    t *= kBarrierGrowth;
  }
  stats.final_slack = constraints.empty() ? kInf : barrier.min_slack(result.x);
  const auto [kkt, gnorm] = barrier.kkt(result.x, t);
  stats.kkt_residual = kkt;
  stats.gradient_norm = gnorm;
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Vector find_feasible(const SmoothProgram& program, const Vector& hint) {
  const int n = program.dimension;
  if (n <= 0 || hint.size() != n) throw UsageError("find_feasible: dimension mismatch");
  const std::vector<SmoothFunction> constraints = all_constraints(program);

  double worst = -kInf;
  for (const auto& g : constraints) {
    const double v = value_at(g, hint);
    if (!std::isfinite(v)) throw UsageError("find_feasible: hint outside a constraint's domain");
    worst = std::max(worst, v);
  }
  if (worst <= -1e-9) return hint;

  // Auxiliary program over (x, s).
  SmoothProgram aux;
  aux.dimension = n + 1;
  Vector e_s = Vector::Zero(n + 1);
  e_s(n) = 1.0;
  aux.objective = linear_function(e_s, 0.0);
  for (const auto& g : constraints) {
    SmoothFunction h;
    h.eval = [&g, n](const Vector& xs, Vector* grad) {
      const Vector x = xs.head(n);
      if (!grad) return g.eval(x, nullptr) - xs(n);
      Vector gx = Vector::Zero(n);
      const double v = g.eval(x, &gx);
      grad->head(n) = gx;
      (*grad)(n) = -1.0;
      return v - xs(n);
    };
    if (g.hessian) {
      h.hessian = [&g, n](const Vector& xs, double w, Eigen::Ref<Matrix> hess) {
        g.hessian(xs.head(n), w, hess.topLeftCorner(n, n));
      };
    } else {
      h.hessian = [&g, n](const Vector& xs, double w, Eigen::Ref<Matrix> hess) {
        Matrix local = Matrix::Zero(n, n);
        accumulate_hessian(g, xs.head(n), w, local);
        hess.topLeftCorner(n, n) += local;
      };
    }
    if (!g.support.empty()) {
      h.support = g.support;
      h.support.push_back(n);
    }
    aux.constraints.push_back(std::move(h));
  }
  Vector floor = Vector::Zero(n + 1);
  floor(n) = -1.0;
  SmoothFunction floor_fn = linear_function(floor, -1.0);
  floor_fn.support = {n};
  aux.constraints.push_back(std::move(floor_fn));

  Vector xs(n + 1);
  xs.head(n) = hint;
  xs(n) = std::max(worst, -1.0) + 1.0;
  const SolveResult solved = minimize(aux, xs);
  const Vector x = solved.x.head(n);

  double residual = -kInf;
  for (const auto& g : constraints) residual = std::max(residual, value_at(g, x));
  if (residual <= -1e-9) return x;
  throw InfeasibleError("no strictly feasible point: minimized max constraint = " +
                            std::to_string(residual),
                        residual);
}

double check_gradient(const ValueGradFn& fn, const Vector& x) {
  const Eigen::Index n = x.size();
  Vector analytic = Vector::Zero(n);
  fn(x, &analytic);
  Vector fd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = x(i) != 0.0 ? 1e-6 * std::abs(x(i)) : 1e-6;
    Vector xp = x;
    Vector xm = x;
    xp(i) += h;
    xm(i) -= h;
    fd(i) = (fn(xp, nullptr) - fn(xm, nullptr)) / (2.0 * h);
  }
  const double floor = 1e-12 * std::max(analytic.lpNorm<Eigen::Infinity>(), fd.lpNorm<Eigen::Infinity>());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = std::max({std::abs(analytic(i)), std::abs(fd(i)), floor});
    if (denom > 0.0) worst = std::max(worst, std::abs(analytic(i) - fd(i)) / denom);
  }
  return worst;
}

}  // namespace fblopt
