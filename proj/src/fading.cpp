#include "fblopt/fading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "detail.hpp"
#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"

namespace fblopt {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double unit_uniform(std::mt19937_64& engine) {
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

double state_error(double z, double m, double p, double payload_bits, double noise_power) {
  if (!(m > 0.0) || !(p > 0.0)) return 1.0;
  return error_probability(LinkPoint(m, p, z / noise_power, payload_bits));
}

template <typename F>
double golden_min(F&& f, double lo, double hi, double rel_tol, double& f_best) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double a0 = lo;
  const double b0 = hi;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > rel_tol * std::max(std::abs(hi), 1e-300)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  double x = f1 <= f2 ? x1 : x2;
  f_best = std::min(f1, f2);
  // The minimum of a monotone stretch sits on the boundary.
  const double fa = f(a0);
  const double fb = f(b0);
  if (fa < f_best) {
    f_best = fa;
    x = a0;
  }
  if (fb < f_best) {
    f_best = fb;
    x = b0;
  }
  return x;
}

}  // namespace

FadingModel FadingModel::rayleigh_power(double mean) {
  if (!positive_finite(mean)) throw ModelError("rayleigh-power mean must be positive");
  return FadingModel(Kind::rayleigh_power, mean);
}

FadingModel FadingModel::point_mass(double location) {
  if (!positive_finite(location)) throw ModelError("point-mass location must be positive");
  return FadingModel(Kind::point_mass, location);
}

FadingModel FadingModel::tabulated(std::vector<double> z, std::vector<double> pdf) {
  if (z.size() < 2 || z.size() != pdf.size()) throw ModelError("tabulated model needs >= 2 matching (z, pdf) samples");
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(z[k]) || !std::isfinite(pdf[k]) || pdf[k] < 0.0) {
      throw ModelError("tabulated model: invalid sample " + std::to_string(k));
    }
    if (k > 0 && !(z[k] > z[k - 1])) throw ModelError("tabulated model: z must be strictly increasing");
  }
  if (z.front() < 0.0) throw ModelError("tabulated model: gains must be non-negative");
  FadingModel model(Kind::tabulated, 0.0);
  model.cdf_.assign(z.size(), 0.0);
  for (std::size_t k = 1; k < z.size(); ++k) {
    model.cdf_[k] = model.cdf_[k - 1] + 0.5 * (pdf[k] + pdf[k - 1]) * (z[k] - z[k - 1]);
  }
  if (std::abs(model.cdf_.back() - 1.0) > 1e-9) {
    throw ModelError("tabulated model: total probability " + std::to_string(model.cdf_.back()) + " is not 1");
  }
  model.z_ = std::move(z);
  model.pdf_ = std::move(pdf);
  return model;
}

double FadingModel::cdf(double z) const {
  if (std::isnan(z)) throw DomainError("cdf: z is NaN");
  switch (kind_) {
    case Kind::rayleigh_power:
      return z <= 0.0 ? 0.0 : -std::expm1(-z / param_);
    case Kind::point_mass:
      return z >= param_ ? 1.0 : 0.0;
    case Kind::tabulated: {
      if (z <= z_.front()) return 0.0;
      if (z >= z_.back()) return cdf_.back();
      const std::size_t k = static_cast<std::size_t>(std::upper_bound(z_.begin(), z_.end(), z) - z_.begin()) - 1;
      const double t = z - z_[k];
      const double slope = (pdf_[k + 1] - pdf_[k]) / (z_[k + 1] - z_[k]);
      return cdf_[k] + pdf_[k] * t + 0.5 * slope * t * t;
    }
  }
  return 0.0;
}

double FadingModel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0, 1)");
  switch (kind_) {
    case Kind::rayleigh_power:
      return -param_ * std::log1p(-u);
    case Kind::point_mass:
      return param_;
    case Kind::tabulated: {
      if (u > cdf_.back()) throw ModelError("quantile beyond the tabulated support");
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1) - 1;
      const double h = z_[k + 1] - z_[k];
      const double f0 = pdf_[k];
      const double slope = (pdf_[k + 1] - f0) / h;
      const double target = u - cdf_[k];
      // Solve f0 t + slope t^2 / 2 = target on [0, h].
      const double disc = f0 * f0 + 2.0 * slope * target;
      double t = 0.0;
      if (disc > 0.0) t = 2.0 * target / (f0 + std::sqrt(disc));
      return z_[k] + std::clamp(t, 0.0, h);
    }
  }
  return param_;
}

double FadingModel::draw(std::mt19937_64& engine) const {
  const double u = unit_uniform(engine);
  return kind_ == Kind::point_mass ? param_ : quantile(u);
}

double z_threshold(double payload_bits, double m_max, double p_max, double noise_power) {
  if (!positive_finite(payload_bits) || !positive_finite(m_max) || !positive_finite(p_max) ||
      !positive_finite(noise_power)) {
    throw DomainError("z_threshold: arguments must be positive");
  }
  return noise_power * std::expm1(payload_bits / m_max * kLn2) / p_max;
}

QuantizedChannel quantize(const FadingModel& model, std::size_t phi, double z_th) {
  if (phi == 0) throw UsageError("quantize: Phi must be at least 1");
  QuantizedChannel ch;
  ch.z_threshold = z_th;
  ch.states.resize(phi);
  const double n = static_cast<double>(phi);
  for (std::size_t k = 0; k < phi; ++k) {
    ch.states[k] = model.quantile((static_cast<double>(k) + 0.5) / n);
  }
  return ch;
}

double expected_error_csi(const QuantizedChannel& channel, const StatePolicy& policy, double payload_bits,
                          double noise_power) {
  const std::size_t n = channel.size();
  if (n == 0) throw UsageError("expected_error_csi: empty channel");
  if (policy.blocklength.size() != n || policy.power.size() != n) {
    throw UsageError("expected_error_csi: policy length " + std::to_string(policy.blocklength.size()) +
                     " does not match " + std::to_string(n) + " states");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = channel.states[k];
    sum += z < channel.z_threshold
               ? 1.0
               : state_error(z, policy.blocklength[k], policy.power[k], payload_bits, noise_power);
  }
  return sum / static_cast<double>(n);
}

PerStateSolution solve_per_state(const QuantizedChannel& channel, double payload_bits, double noise_power,
                                 const PerStateBudget& budget, double eps_max, double snr_threshold) {
  if (!positive_finite(budget.mean_blocklength) || !positive_finite(budget.mean_energy)) {
    throw UsageError("solve_per_state: budgets must be positive");
  }
  if (!(eps_max > 0.0 && eps_max < 0.5) || !positive_finite(snr_threshold) || !positive_finite(payload_bits) ||
      !positive_finite(noise_power)) {
    throw UsageError("solve_per_state: invalid reliability or link parameters");
  }
  const std::size_t phi = channel.size();
  if (phi == 0) throw UsageError("solve_per_state: empty channel");
  if (phi > 512) throw ResourceError("solve_per_state: dense solve limited to 512 states");

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < phi; ++k)
    if (channel.states[k] >= channel.z_threshold && channel.states[k] > 0.0) active.push_back(k);

  PerStateSolution sol;
  sol.policy.blocklength.assign(phi, 0.0);
  sol.policy.power.assign(phi, 0.0);
  if (active.empty()) {
    sol.objective = 1.0;
    return sol;
  }

  const int k_n = static_cast<int>(active.size());
  const int n = 2 * k_n;
  const double m_budget = budget.mean_blocklength * static_cast<double>(phi);
  const double e_budget = budget.mean_energy * static_cast<double>(phi);
  std::vector<double> gain(k_n);
  for (int k = 0; k < k_n; ++k) gain[k] = channel.states[active[k]] / noise_power;
  std::vector<int> a_idx(k_n);
  std::vector<int> b_idx(k_n);
  std::iota(a_idx.begin(), a_idx.end(), 0);
  std::iota(b_idx.begin(), b_idx.end(), k_n);

  detail::RescaledProblem rp;
  rp.objective = [&](const Vector& v) {
    double sum = 0.0;
    for (int k = 0; k < k_n; ++k)
      sum += error_probability(LinkPoint(1.0 / v(k), v(k_n + k) * v(k_n + k), gain[k], payload_bits));
    return sum;
  };
  rp.build = [&](double scale) {
    SmoothProgram prog;
    prog.dimension = n;
    prog.objective.eval = [&, scale](const Vector& v, Vector* grad) {
      double sum = 0.0;
      for (int k = 0; k < k_n; ++k) {
        ErrorCurvatureAB c;
        if (!detail::curvature_ab(v(k), v(k_n + k), gain[k], payload_bits, c)) {
          return std::numeric_limits<double>::quiet_NaN();
        }
        sum += c.eps;
        if (grad) {
          (*grad)(k) = c.d_a / scale;
          (*grad)(k_n + k) = c.d_b / scale;
        }
      }
      return sum / scale;
    };
    prog.objective.hessian = [&, scale](const Vector& v, double w, Eigen::Ref<Matrix> h) {
      for (int k = 0; k < k_n; ++k) {
        ErrorCurvatureAB c;
        if (!detail::curvature_ab(v(k), v(k_n + k), gain[k], payload_bits, c)) continue;
        h(k, k) += w * c.d_aa / scale;
        h(k_n + k, k_n + k) += w * c.d_bb / scale;
        h(k, k_n + k) += w * c.d_ab / scale;
        h(k_n + k, k) += w * c.d_ab / scale;
      }
    };
    prog.constraints.push_back(detail::inverse_sum_budget(a_idx, m_budget));
    prog.constraints.push_back(detail::energy_budget_ab(a_idx, b_idx, e_budget));
    for (int k = 0; k < k_n; ++k) {
      prog.constraints.push_back(detail::error_term_ab(k, k_n + k, -1, gain[k], payload_bits, eps_max));
      Vector c = Vector::Zero(n);
      c(k_n + k) = -1.0 / std::sqrt(snr_threshold / gain[k]);
      SmoothFunction floor = linear_function(c, 1.0);
      floor.support = {k_n + k};
      prog.constraints.push_back(std::move(floor));
    }
    return prog;
  };

  Vector x(n);
  std::vector<double> m_start;
  std::vector<double> p_start;
  if (!detail::interior_start(gain, std::vector<double>(k_n, payload_bits), m_budget, e_budget, eps_max,
                              snr_threshold, m_start, p_start)) {
    m_start.assign(k_n, 0.9 * m_budget / k_n);
    p_start.resize(k_n);
    for (int k = 0; k < k_n; ++k) p_start[k] = std::max(0.9 * e_budget / m_budget, 1.1 * snr_threshold / gain[k]);
  }
  for (int k = 0; k < k_n; ++k) {
    x(k) = 1.0 / m_start[k];
    x(k_n + k) = std::sqrt(p_start[k]);
  }
  const double s0 = rp.objective(x);
  if (!(s0 > 1e-300)) throw NumericError("solve_per_state: error probability at the start point underflows");
  x = find_feasible(rp.build(s0), x);
  const SolveResult solved = detail::solve_rescaled(rp, x);

  for (int k = 0; k < k_n; ++k) {
    sol.policy.blocklength[active[k]] = 1.0 / solved.x(k);
    sol.policy.power[active[k]] = solved.x(k_n + k) * solved.x(k_n + k);
  }
  sol.objective = expected_error_csi(channel, sol.policy, payload_bits, noise_power);
  sol.stats = solved.stats;
  return sol;
}

double expected_error_avg(const FadingModel& model, double blocklength, double power, double payload_bits,
                          double noise_power, std::size_t quad_points) {
  if (quad_points < 16) throw UsageError("expected_error_avg: at least 16 quadrature points required");
  if (model.kind() == FadingModel::Kind::point_mass) {
    return state_error(model.location(), blocklength, power, payload_bits, noise_power);
  }
  // Uniform 8-point Gauss-Legendre panels in w; phi(38.5) is below the smallest
  // normal double, so the truncation is exact.
  static constexpr double kNode[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                      0.9602898564975363};
  static constexpr double kWeight[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                        0.1012285362903763};
  constexpr double kReach = 38.5;
  const std::size_t panels = quad_points / 8;
  const double width = 2.0 * kReach / static_cast<double>(panels);
  const double snr_per_z = power / noise_power;
  auto integrand = [&](double w) {
    const double z = snr_for_w(blocklength, payload_bits, w) / snr_per_z;
    return model.cdf(z) * std::exp(-0.5 * w * w);
  };
  double sum = 0.0;
  for (std::size_t j = 0; j < panels; ++j) {
    const double mid = -kReach + (static_cast<double>(j) + 0.5) * width;
    for (int k = 0; k < 4; ++k) {
      const double off = 0.5 * width * kNode[k];
      sum += kWeight[k] * (integrand(mid - off) + integrand(mid + off));
    }
  }
  return std::min(1.0, sum * 0.5 * width / std::sqrt(2.0 * std::numbers::pi));
}

AvgCsiSolution solve_avg_csi(const FadingModel& model, double payload_bits, double noise_power,
                             const AvgCsiBounds& b, std::size_t quad_points) {
  if (!positive_finite(b.m_lo) || !positive_finite(b.p_lo) || !positive_finite(b.energy) ||
      !(b.m_hi >= b.m_lo) || !(b.p_hi >= b.p_lo)) {
    throw UsageError("solve_avg_csi: malformed bounds");
  }
  if (b.m_lo * b.p_lo > b.energy) {
    throw InfeasibleError("solve_avg_csi: m_lo * p_lo exceeds the energy budget", b.m_lo * b.p_lo / b.energy - 1.0);
  }
  auto f = [&](double m, double e) {
    return expected_error_avg(model, m, e / m, payload_bits, noise_power, quad_points);
  };
  const double m_top = std::min(b.m_hi, b.energy / b.p_lo);
  double m = std::sqrt(b.m_lo * m_top);
  double e = std::min(b.energy, m * b.p_hi);
  double value = f(m, e);
  AvgCsiSolution sol;
  for (int round = 1; round <= 200; ++round) {
    sol.rounds = round;
    const double prev = value;
    {
      const double lo = std::max(b.m_lo, e / b.p_hi);
      const double hi = std::min(m_top, e / b.p_lo);
      double fm = value;
      if (hi > lo) {
        const double cand = golden_min([&](double x) { return f(x, e); }, lo, hi, 1e-10, fm);
        if (fm < value) {
          m = cand;
          value = fm;
        }
      }
    }
    {
      const double lo = m * b.p_lo;
      const double hi = std::min(b.energy, m * b.p_hi);
      double fe = value;
      if (hi > lo) {
        const double cand = golden_min([&](double x) { return f(m, x); }, lo, hi, 1e-10, fe);
        if (fe < value) {
          e = cand;
          value = fe;
        }
      }
    }
    if (prev - value <= 1e-9 * value) break;
  }
  sol.blocklength = m;
  sol.power = e / m;
  sol.objective = value;
  return sol;
}

MonteCarloEstimate monte_carlo_estimate(const FadingModel& model, double blocklength, double power,
                                        double payload_bits, double noise_power, std::size_t samples,
                                        std::uint64_t seed) {
  if (samples == 0) throw UsageError("monte_carlo_error: at least one sample required");
  std::mt19937_64 engine(seed);
  // Welford accumulation keeps 1e6-sample means stable.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double z = model.draw(engine);
    const double e = z > 0.0 ? state_error(z, blocklength, power, payload_bits, noise_power) : 1.0;
    const double delta = e - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (e - mean);
  }
  const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

double monte_carlo_error(const FadingModel& model, double blocklength, double power, double payload_bits,
                         double noise_power, std::size_t samples, std::uint64_t seed) {
  return monte_carlo_estimate(model, blocklength, power, payload_bits, noise_power, samples, seed).mean;
}

}  // namespace fblopt
