#include "detail.hpp"

#include <cmath>
#include <limits>

#include "fblopt/allocator.hpp"
#include "fblopt/errors.hpp"

namespace fblopt::detail {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

bool curvature_ab(double a, double b, double gain, double payload_bits, ErrorCurvatureAB& out) noexcept {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return false;
  try {
    out = error_curvature_ab(a, b, gain, payload_bits);
  } catch (...) {
    return false;
  }
  return std::isfinite(out.eps) && std::isfinite(out.d_a) && std::isfinite(out.d_b) && std::isfinite(out.d_aa) &&
         std::isfinite(out.d_bb) && std::isfinite(out.d_ab);
}

bool curvature_mp(double m, double p, double gain, double payload_bits, ErrorCurvatureMP& out) noexcept {
  if (!(m > 0.0) || !(p > 0.0) || !std::isfinite(m) || !std::isfinite(p)) return false;
  try {
    out = error_curvature_mp(LinkPoint(m, p, gain, payload_bits));
  } catch (...) {
    return false;
  }
  return std::isfinite(out.eps) && std::isfinite(out.d_m) && std::isfinite(out.d_p) && std::isfinite(out.d_mm) &&
         std::isfinite(out.d_pp) && std::isfinite(out.d_mp);
}

SmoothFunction error_term_ab(int ia, int ib, int it, double gain, double payload_bits, double scale) {
  SmoothFunction f;
  f.eval = [=](const Vector& x, Vector* grad) {
    ErrorCurvatureAB c;
    if (!curvature_ab(x(ia), x(ib), gain, payload_bits, c)) return kNaN;
    if (grad) {
      (*grad)(ia) = c.d_a / scale;
      (*grad)(ib) = c.d_b / scale;
      if (it >= 0) (*grad)(it) = -1.0;
    }
    return c.eps / scale - (it >= 0 ? x(it) : 1.0);
  };
  f.hessian = [=](const Vector& x, double w, Eigen::Ref<Matrix> h) {
    ErrorCurvatureAB c;
    if (!curvature_ab(x(ia), x(ib), gain, payload_bits, c)) return;
    const double k = w / scale;
    h(ia, ia) += k * c.d_aa;
    h(ib, ib) += k * c.d_bb;
    h(ia, ib) += k * c.d_ab;
    h(ib, ia) += k * c.d_ab;
  };
  f.support = {ia, ib};
  if (it >= 0) f.support.push_back(it);
  return f;
}

SmoothFunction error_term_mp(int im, int ip, int it, double m_fixed, double p_fixed, double gain,
                             double payload_bits, double scale) {
  SmoothFunction f;
  f.eval = [=](const Vector& x, Vector* grad) {
    const double m = im >= 0 ? x(im) : m_fixed;
    const double p = ip >= 0 ? x(ip) : p_fixed;
    ErrorCurvatureMP c;
    if (!curvature_mp(m, p, gain, payload_bits, c)) return kNaN;
    if (grad) {
      if (im >= 0) (*grad)(im) = c.d_m / scale;
      if (ip >= 0) (*grad)(ip) = c.d_p / scale;
      if (it >= 0) (*grad)(it) = -1.0;
    }
    return c.eps / scale - (it >= 0 ? x(it) : 1.0);
  };
  f.hessian = [=](const Vector& x, double w, Eigen::Ref<Matrix> h) {
    const double m = im >= 0 ? x(im) : m_fixed;
    const double p = ip >= 0 ? x(ip) : p_fixed;
    ErrorCurvatureMP c;
    if (!curvature_mp(m, p, gain, payload_bits, c)) return;
    const double k = w / scale;
    if (im >= 0) h(im, im) += k * c.d_mm;
    if (ip >= 0) h(ip, ip) += k * c.d_pp;
    if (im >= 0 && ip >= 0) {
      h(im, ip) += k * c.d_mp;
      h(ip, im) += k * c.d_mp;
    }
  };
  if (im >= 0) f.support.push_back(im);
  if (ip >= 0) f.support.push_back(ip);
  if (it >= 0) f.support.push_back(it);
  return f;
}

SmoothFunction inverse_sum_budget(std::vector<int> idx, double budget) {
  SmoothFunction f;
  f.eval = [idx, budget](const Vector& x, Vector* grad) {
    double sum = 0.0;
    for (int i : idx) {
      if (!(x(i) > 0.0)) return kNaN;
      sum += 1.0 / x(i);
      if (grad) (*grad)(i) = -1.0 / (x(i) * x(i) * budget);
    }
    return sum / budget - 1.0;
  };
  f.hessian = [idx, budget](const Vector& x, double w, Eigen::Ref<Matrix> h) {
    for (int i : idx) h(i, i) += w * 2.0 / (x(i) * x(i) * x(i) * budget);
  };
  f.support = std::move(idx);
  return f;
}

SmoothFunction energy_budget_ab(std::vector<int> ia, std::vector<int> ib, double budget) {
  SmoothFunction f;
  f.eval = [ia, ib, budget](const Vector& x, Vector* grad) {
    double sum = 0.0;
    for (std::size_t k = 0; k < ia.size(); ++k) {
      const double a = x(ia[k]);
      const double b = x(ib[k]);
      if (!(a > 0.0)) return kNaN;
      sum += b * b / a;
      if (grad) {
        (*grad)(ia[k]) = -b * b / (a * a * budget);
        (*grad)(ib[k]) = 2.0 * b / (a * budget);
      }
    }
    return sum / budget - 1.0;
  };
  f.hessian = [ia, ib, budget](const Vector& x, double w, Eigen::Ref<Matrix> h) {
    for (std::size_t k = 0; k < ia.size(); ++k) {
      const double a = x(ia[k]);
      const double b = x(ib[k]);
      const double s = w / budget;
      h(ia[k], ia[k]) += s * 2.0 * b * b / (a * a * a);
      h(ib[k], ib[k]) += s * 2.0 / a;
      h(ia[k], ib[k]) += -s * 2.0 * b / (a * a);
      h(ib[k], ia[k]) += -s * 2.0 * b / (a * a);
    }
  };
  f.support = ia;
  f.support.insert(f.support.end(), ib.begin(), ib.end());
  return f;
}

SmoothFunction weighted_sum_budget(int n, const std::vector<int>& idx, const std::vector<double>& c,
                                   double budget) {
  Vector coeffs = Vector::Zero(n);
  for (std::size_t k = 0; k < idx.size(); ++k) coeffs(idx[k]) = c[k] / budget;
  SmoothFunction f = linear_function(coeffs, -1.0);
  f.support = idx;
  return f;
}

SolveResult solve_rescaled(const RescaledProblem& problem, Vector x) {
  SolveResult out{x, {}};
  double best = problem.objective(x);
  for (int pass = 0; pass < 60; ++pass) {
    if (!(best > 1e-300) || !std::isfinite(best)) {
      throw NumericError("objective " + std::to_string(best) + " outside the representable range");
    }
    Vector start = out.x;
    if (problem.reseat) problem.reseat(start, best);
    const SolveResult r = minimize(problem.build(best), start);
    SolveStats& s = out.stats;
    s.iterations += r.stats.iterations;
    s.barrier_stages += r.stats.barrier_stages;
    s.wall_seconds += r.stats.wall_seconds;
    s.final_slack = r.stats.final_slack;
    s.gradient_norm = r.stats.gradient_norm;
    s.kkt_residual = r.stats.kkt_residual;
    const double next = problem.objective(r.x);
    s.stage_objectives.push_back(next);
    if (!(next < best)) break;
    out.x = r.x;
    const bool settled = next >= best * (1.0 - 1e-9);
    best = next;
    if (settled) break;
  }
  return out;
}

bool interior_start(const std::vector<double>& gains, const std::vector<double>& payload_bits, double total_blocklength,
                    double total_energy, double eps_max, double snr_threshold, std::vector<double>& m,
                    std::vector<double>& p) {
  const std::size_t n = gains.size();
  const double base = total_energy / total_blocklength;
  double best = 0.0;
  std::vector<double> mm(n);
  std::vector<double> pp(n);
  for (int k = 0; k <= 240; ++k) {
    const double level = base * std::pow(10.0, -3.0 + k * 0.025);
    double sum_m = 0.0;
    double sum_e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = std::max(level, 1.1 * snr_threshold / gains[i]);
      mm[i] = min_blocklength(gains[i] * pp[i], payload_bits[i], 0.5 * eps_max);
      sum_m += mm[i];
      sum_e += mm[i] * pp[i];
    }
    const double eta = std::min((total_blocklength - sum_m) / sum_m, (total_energy - sum_e) / sum_e);
    if (eta > best) {
      best = eta;
      p = pp;
      m.resize(n);
      for (std::size_t i = 0; i < n; ++i) m[i] = mm[i] * (1.0 + 0.5 * eta);
    }
  }
  return best > 0.0;
}

}  // namespace fblopt::detail
