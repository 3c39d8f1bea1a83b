#include "fblopt/allocator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "detail.hpp"
#include "fblopt/errors.hpp"

namespace fblopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBindingTol = 1e-6;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Smallest power meeting the SNR floor and the reliability target at blocklength m.
double min_power(const AllocationProblem& pr, std::size_t i, double m) {
  const double floor = pr.snr_threshold / pr.gains[i];
  double snr;
  try {
    snr = required_snr(m, pr.payload_bits[i], pr.eps_max);
  } catch (const NumericError&) {
    return kInf;
  }
  return std::max(floor, snr / pr.gains[i]);
}

bool better(double obj, const std::vector<double>& m, double best_obj, const std::vector<double>& best_m) {
  if (obj != best_obj) return obj < best_obj;
  return std::lexicographical_compare(m.begin(), m.end(), best_m.begin(), best_m.end());
}

void merge_stats(SolveStats& into, const SolveStats& from) {
  into.iterations += from.iterations;
  into.barrier_stages += from.barrier_stages;
  into.wall_seconds += from.wall_seconds;
  into.final_slack = from.final_slack;
  into.gradient_norm = from.gradient_norm;
  into.kkt_residual = from.kkt_residual;
}

// Power sub-problem over (p, t) at fixed m. warm, when strictly feasible, seeds the solve.
AllocationResult power_step(const AllocationProblem& pr, std::span<const double> m,
                            std::span<const double> p_min, std::span<const double> warm) {
  const int n_users = static_cast<int>(pr.user_count());
  const int n = n_users + 1;
  const int it = n_users;

  double need = 0.0;
  for (int i = 0; i < n_users; ++i) need += m[i] * p_min[i];
  if (!(need < pr.total_energy * (1.0 - 1e-12))) {
    throw InfeasibleError("power sub-problem: minimum energy " + std::to_string(need) +
                              " exceeds budget " + std::to_string(pr.total_energy),
                          need / pr.total_energy - 1.0);
  }

  Vector x(n);
  bool warm_ok = !warm.empty();
  if (warm_ok) {
    double used = 0.0;
    for (int i = 0; i < n_users; ++i) {
      used += m[i] * warm[i];
      if (!(warm[i] > p_min[i])) warm_ok = false;
    }
    warm_ok = warm_ok && used < pr.total_energy;
  }
  if (warm_ok) {
    for (int i = 0; i < n_users; ++i) x(i) = warm[i];
  } else {
    const double slack = pr.total_energy - need;
    for (int i = 0; i < n_users; ++i) x(i) = p_min[i] + 0.5 * slack / (n_users * m[i]);
  }

  std::vector<int> p_idx(n_users);
  std::iota(p_idx.begin(), p_idx.end(), 0);
  const std::vector<double> m_vec(m.begin(), m.end());

  detail::RescaledProblem rp;
  rp.objective = [&](const Vector& v) {
    double worst = 0.0;
    for (int i = 0; i < n_users; ++i)
      worst = std::max(worst, error_probability(LinkPoint(m[i], v(i), pr.gains[i], pr.payload_bits[i])));
    return worst;
  };
  rp.reseat = [&](Vector& v, double scale) {
    double worst = 0.0;
    for (int i = 0; i < n_users; ++i)
      worst = std::max(worst, error_probability(LinkPoint(m[i], v(i), pr.gains[i], pr.payload_bits[i])) / scale);
    v(it) = 1.5 * worst + 1e-9;
  };
  rp.build = [&](double scale) {
    SmoothProgram prog;
    prog.dimension = n;
    Vector e_t = Vector::Zero(n);
    e_t(it) = 1.0;
    prog.objective = linear_function(e_t, 0.0);
    // Any feasible point has t <= eps_max / scale; the cap keeps phase I bounded.
    SmoothFunction cap = linear_function(e_t * (0.5 * scale / pr.eps_max), -1.0);
    cap.support = {it};
    prog.constraints.push_back(std::move(cap));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_mp(-1, i, it, m[i], 0.0, pr.gains[i], pr.payload_bits[i], scale));
    }
    prog.constraints.push_back(detail::weighted_sum_budget(n, p_idx, m_vec, pr.total_energy));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_mp(-1, i, -1, m[i], 0.0, pr.gains[i], pr.payload_bits[i], pr.eps_max));
      Vector c = Vector::Zero(n);
      c(i) = -pr.gains[i] / pr.snr_threshold;
      SmoothFunction floor = linear_function(c, 1.0);
      floor.support = {i};
      prog.constraints.push_back(std::move(floor));
    }
    return prog;
  };
  const SolveResult solved = detail::solve_rescaled(rp, x);
  std::vector<double> p(n_users);
  for (int i = 0; i < n_users; ++i) p[i] = solved.x(i);
  AllocationResult res = evaluate_allocation(pr, m, p, Method::integer);
  res.stats = solved.stats;
  return res;
}

// Min-max powers at fixed m by bisection on the common error level t: p_i(t) is the
// least power with eps_i <= t, and the energy sum_i m_i p_i(t) is non-increasing in t.
// Shares no code with the barrier path, which keeps enumeration an independent check.
AllocationResult level_power(const AllocationProblem& pr, std::span<const double> m,
                             std::span<const double> p_min) {
  const std::size_t n = pr.user_count();
  double need = 0.0;
  for (std::size_t i = 0; i < n; ++i) need += m[i] * p_min[i];
  if (!(need < pr.total_energy * (1.0 - 1e-12))) {
    throw InfeasibleError("power sub-problem: minimum energy " + std::to_string(need) +
                              " exceeds budget " + std::to_string(pr.total_energy),
                          need / pr.total_energy - 1.0);
  }
  std::vector<double> p(n);
  auto powers_at = [&](double t) {
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double snr;
      try {
        snr = required_snr(m[i], pr.payload_bits[i], t);
      } catch (const NumericError&) {
        return kInf;
      }
      p[i] = std::max(p_min[i], snr / pr.gains[i]);
      energy += m[i] * p[i];
    }
    return energy;
  };
  double hi = pr.eps_max;
  double lo = hi;
  int steps = 0;
  do {
    hi = lo;
    lo = std::max(lo * 1e-10, 1e-300);
    ++steps;
  } while (lo > 1e-300 && powers_at(lo) <= pr.total_energy);
  if (powers_at(lo) <= pr.total_energy) {
    hi = lo;
  } else {
    while (hi / lo - 1.0 > 1e-13) {
      const double mid = std::sqrt(lo * hi);
      if (!(mid > lo && mid < hi)) break;
      (powers_at(mid) <= pr.total_energy ? hi : lo) = mid;
      ++steps;
    }
  }
  powers_at(hi);
  AllocationResult res = evaluate_allocation(pr, m, p, Method::integer);
  res.stats.iterations = steps;
  return res;
}

// Blocklength sub-problem over (m, t) at fixed p, seeded from a strictly feasible m.
std::vector<double> blocklength_step(const AllocationProblem& pr, std::span<const double> p,
                                     std::vector<double> m0, SolveStats& stats) {
  const int n_users = static_cast<int>(pr.user_count());
  const int n = n_users + 1;
  const int it = n_users;
  std::vector<int> m_idx(n_users);
  std::iota(m_idx.begin(), m_idx.end(), 0);
  const std::vector<double> p_vec(p.begin(), p.end());
  const std::vector<double> ones(n_users, 1.0);

  detail::RescaledProblem rp;
  rp.objective = [&](const Vector& v) {
    double worst = 0.0;
    for (int i = 0; i < n_users; ++i)
      worst = std::max(worst, error_probability(LinkPoint(v(i), p[i], pr.gains[i], pr.payload_bits[i])));
    return worst;
  };
  rp.reseat = [&](Vector& v, double scale) {
    double worst = 0.0;
    for (int i = 0; i < n_users; ++i)
      worst = std::max(worst, error_probability(LinkPoint(v(i), p[i], pr.gains[i], pr.payload_bits[i])) / scale);
    v(it) = 1.5 * worst + 1e-9;
  };
  rp.build = [&](double scale) {
    SmoothProgram prog;
    prog.dimension = n;
    Vector e_t = Vector::Zero(n);
    e_t(it) = 1.0;
    prog.objective = linear_function(e_t, 0.0);
    // Any feasible point has t <= eps_max / scale; the cap keeps phase I bounded.
    SmoothFunction cap = linear_function(e_t * (0.5 * scale / pr.eps_max), -1.0);
    cap.support = {it};
    prog.constraints.push_back(std::move(cap));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_mp(i, -1, it, 0.0, p[i], pr.gains[i], pr.payload_bits[i], scale));
    }
    prog.constraints.push_back(detail::weighted_sum_budget(n, m_idx, ones, pr.total_blocklength));
    prog.constraints.push_back(detail::weighted_sum_budget(n, m_idx, p_vec, pr.total_energy));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_mp(i, -1, -1, 0.0, p[i], pr.gains[i], pr.payload_bits[i], pr.eps_max));
    }
    return prog;
  };
  Vector x(n);
  for (int i = 0; i < n_users; ++i) x(i) = m0[i];
  const SolveResult solved = detail::solve_rescaled(rp, x);
  merge_stats(stats, solved.stats);
  std::vector<double> m(n_users);
  for (int i = 0; i < n_users; ++i) m[i] = solved.x(i);
  return m;
}

// Strictly feasible blocklengths for fixed powers, or empty when none exist.
std::vector<double> blocklength_completion(const AllocationProblem& pr, std::span<const double> p) {
  const std::size_t n = pr.user_count();
  std::vector<double> m_min(n);
  double sum_m = 0.0;
  double sum_e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m_min[i] = min_blocklength(pr.gains[i] * p[i], pr.payload_bits[i], pr.eps_max);
    sum_m += m_min[i];
    sum_e += m_min[i] * p[i];
  }
  if (!(sum_m < pr.total_blocklength) || !(sum_e < pr.total_energy)) return {};
  const double eta = 0.5 * std::min((pr.total_blocklength - sum_m) / sum_m,
                                    (pr.total_energy - sum_e) / sum_e);
  for (double& m : m_min) m *= 1.0 + eta;
  return m_min;
}

}  // namespace

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::joint: return "joint";
    case Method::integer: return "integer";
    case Method::alternating: return "alternating";
    case Method::rounded: return "rounded";
  }
  return "unknown";
}

void AllocationProblem::check() const {
  if (payload_bits.empty()) throw UsageError("allocation problem has no users");
  if (gains.size() != payload_bits.size()) {
    throw UsageError("allocation problem: " + std::to_string(payload_bits.size()) + " payloads but " +
                     std::to_string(gains.size()) + " gains");
  }
  for (std::size_t i = 0; i < payload_bits.size(); ++i) {
    if (!positive_finite(payload_bits[i])) throw UsageError("payload_bits[" + std::to_string(i) + "] must be positive");
    if (!positive_finite(gains[i])) throw UsageError("gains[" + std::to_string(i) + "] must be positive");
  }
  if (!positive_finite(total_blocklength)) throw UsageError("total_blocklength must be positive");
  if (!positive_finite(total_energy)) throw UsageError("total_energy must be positive");
  if (!(eps_max > 0.0 && eps_max < 0.5)) throw UsageError("eps_max must lie in (0, 0.5)");
  if (!positive_finite(snr_threshold)) throw UsageError("snr_threshold must be positive");
}

RegionSummary validate(const AllocationProblem& problem) {
  problem.check();
  RegionSummary summary;
  const double sup = delta6_sup_from(std::max(problem.snr_threshold, 1.0));
  if (problem.snr_threshold < 1.0) {
    summary.warnings.push_back("snr_threshold " + std::to_string(problem.snr_threshold) +
                               " below 1: convexity conditions assume gamma >= 1");
  }
  for (std::size_t i = 0; i < problem.user_count(); ++i) {
    const double g = problem.gains[i];
    const LinkPoint corner(problem.total_blocklength, problem.snr_threshold / g, g, problem.payload_bits[i]);
    UserRegionReport rep{convexity_condition(corner, problem.eps_max, problem.snr_threshold),
                         corner.rate() > sup};
    if (!rep.verdict.in_region) {
      summary.all_in_region = false;
      summary.warnings.push_back("user " + std::to_string(i) + ": convexity not established at r=" +
                                 std::to_string(corner.rate()) + ", gamma=" +
                                 std::to_string(corner.snr()));
    }
    summary.users.push_back(rep);
  }
  return summary;
}

AllocationResult evaluate_allocation(const AllocationProblem& problem, std::span<const double> blocklength,
                                     std::span<const double> power, Method method) {
  const std::size_t n = problem.user_count();
  if (blocklength.size() != n || power.size() != n) throw UsageError("allocation size mismatch");
  AllocationResult r;
  r.method = method;
  r.blocklength.assign(blocklength.begin(), blocklength.end());
  r.power.assign(power.begin(), power.end());
  r.error.resize(n);
  r.binding.reliability.resize(n);
  r.binding.snr_floor.resize(n);
  double sum_m = 0.0;
  double sum_e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LinkPoint pt(blocklength[i], power[i], problem.gains[i], problem.payload_bits[i]);
    r.error[i] = error_probability(pt);
    r.binding.reliability[i] = r.error[i] >= problem.eps_max * (1.0 - kBindingTol);
    r.binding.snr_floor[i] = pt.snr() <= problem.snr_threshold * (1.0 + kBindingTol);
    sum_m += blocklength[i];
    sum_e += blocklength[i] * power[i];
  }
  r.objective = *std::max_element(r.error.begin(), r.error.end());
  r.binding.blocklength_budget = sum_m >= problem.total_blocklength * (1.0 - kBindingTol);
  r.binding.energy_budget = sum_e >= problem.total_energy * (1.0 - kBindingTol);
  return r;
}

double min_blocklength(double snr, double payload_bits, double eps) {
  const auto [c, v] = capacity_dispersion(snr);
  const double k = q_inv(eps) * std::sqrt(v) / kLn2;
  const double u = (k + std::sqrt(k * k + 4.0 * c * payload_bits)) / (2.0 * c);
  return u * u;
}

SubstitutionMargins substitution_margins(const LinkPoint& point) {
  const double w = channel_w(point);
  const FblCurvature k = w_partials(point);
  const double m = point.blocklength();
  const double dw_dp = point.gain() * k.dw_dsnr;
  return {2.0 * w * m * dw_dp - 2.0, 2.0 * point.power() * m * w * k.dw_dm - 1.0};
}

AllocationResult solve_joint(const AllocationProblem& problem) {
  const RegionSummary region = validate(problem);
  const int n_users = static_cast<int>(problem.user_count());
  const int n = 2 * n_users + 1;
  const int it = 2 * n_users;
  std::vector<int> a_idx(n_users);
  std::vector<int> b_idx(n_users);
  std::iota(a_idx.begin(), a_idx.end(), 0);
  std::iota(b_idx.begin(), b_idx.end(), n_users);

  auto errors_of = [&](const Vector& v) {
    std::vector<double> e(n_users);
    for (int i = 0; i < n_users; ++i)
      e[i] = error_probability(LinkPoint(1.0 / v(i), v(n_users + i) * v(n_users + i), problem.gains[i],
                                         problem.payload_bits[i]));
    return e;
  };

  detail::RescaledProblem rp;
  rp.objective = [&](const Vector& v) {
    const auto e = errors_of(v);
    return *std::max_element(e.begin(), e.end());
  };
  rp.reseat = [&](Vector& v, double scale) {
    const auto e = errors_of(v);
    v(it) = 1.5 * *std::max_element(e.begin(), e.end()) / scale + 1e-9;
  };
  rp.build = [&](double scale) {
    SmoothProgram prog;
    prog.dimension = n;
    Vector e_t = Vector::Zero(n);
    e_t(it) = 1.0;
    prog.objective = linear_function(e_t, 0.0);
    // Any feasible point has t <= eps_max / scale; the cap keeps phase I bounded.
    SmoothFunction cap = linear_function(e_t * (0.5 * scale / problem.eps_max), -1.0);
    cap.support = {it};
    prog.constraints.push_back(std::move(cap));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_ab(i, n_users + i, it, problem.gains[i], problem.payload_bits[i], scale));
    }
    prog.constraints.push_back(detail::inverse_sum_budget(a_idx, problem.total_blocklength));
    prog.constraints.push_back(detail::energy_budget_ab(a_idx, b_idx, problem.total_energy));
    for (int i = 0; i < n_users; ++i) {
      prog.constraints.push_back(
          detail::error_term_ab(i, n_users + i, -1, problem.gains[i], problem.payload_bits[i], problem.eps_max));
      const double beta = std::sqrt(problem.snr_threshold / problem.gains[i]);
      Vector c = Vector::Zero(n);
      c(n_users + i) = -1.0 / beta;
      SmoothFunction floor = linear_function(c, 1.0);
      floor.support = {n_users + i};
      prog.constraints.push_back(std::move(floor));
    }
    return prog;
  };

  Vector x(n);
  std::vector<double> m_start;
  std::vector<double> p_start;
  if (!detail::interior_start(problem.gains, problem.payload_bits, problem.total_blocklength, problem.total_energy,
                               problem.eps_max, problem.snr_threshold, m_start, p_start)) {
    const double m0 = 0.9 * problem.total_blocklength / n_users;
    m_start.assign(n_users, m0);
    p_start.resize(n_users);
    for (int i = 0; i < n_users; ++i) {
      p_start[i] = std::max(0.9 * problem.total_energy / problem.total_blocklength,
                            1.1 * problem.snr_threshold / problem.gains[i]);
    }
  }
  for (int i = 0; i < n_users; ++i) {
    x(i) = 1.0 / m_start[i];
    x(n_users + i) = std::sqrt(p_start[i]);
  }
  const double s0 = rp.objective(x);
  if (!(s0 > 1e-300)) throw NumericError("solve_joint: error probability at the start point underflows");
  rp.reseat(x, s0);
  x = find_feasible(rp.build(s0), x);
  const SolveResult solved = detail::solve_rescaled(rp, x);

  std::vector<double> m(n_users);
  std::vector<double> p(n_users);
  for (int i = 0; i < n_users; ++i) {
    m[i] = 1.0 / solved.x(i);
    p[i] = solved.x(n_users + i) * solved.x(n_users + i);
  }
  AllocationResult res = evaluate_allocation(problem, m, p, Method::joint);
  res.stats = solved.stats;
  res.warnings = region.warnings;
  return res;
}

double enumeration_count(std::size_t users, double total_blocklength) {
  const double mf = std::floor(total_blocklength);
  const double k = static_cast<double>(users);
  if (k > mf) return 0.0;
  double count = 1.0;
  for (std::size_t j = 1; j <= users; ++j) {
    count *= (mf - k + static_cast<double>(j)) / static_cast<double>(j);
    if (count > 1e300) return kInf;
  }
  return std::round(count);
}

AllocationResult solve_power(const AllocationProblem& problem, std::span<const double> blocklength) {
  problem.check();
  if (blocklength.size() != problem.user_count()) throw UsageError("solve_power: size mismatch");
  std::vector<double> p_min(problem.user_count());
  for (std::size_t i = 0; i < p_min.size(); ++i) {
    if (!positive_finite(blocklength[i])) throw UsageError("solve_power: blocklengths must be positive");
    p_min[i] = min_power(problem, i, blocklength[i]);
  }
  return power_step(problem, blocklength, p_min, {});
}

AllocationResult solve_integer(const AllocationProblem& problem, const IntegerOptions& options) {
  problem.check();
  const std::size_t n = problem.user_count();
  const double count = enumeration_count(n, problem.total_blocklength);
  if (count > options.cap) {
    throw ResourceError("integer enumeration needs " + std::to_string(count) +
                        " blocklength vectors (cap " + std::to_string(options.cap) +
                        "); use solve_joint");
  }
  const int m_max = static_cast<int>(std::floor(problem.total_blocklength));
  if (m_max < static_cast<int>(n)) throw InfeasibleError("fewer channel uses than users", 1.0);

  // p_min[i][m] for m = 1..m_max.
  std::vector<std::vector<double>> p_min(n, std::vector<double>(m_max + 1, kInf));
  for (std::size_t i = 0; i < n; ++i)
    for (int m = 1; m <= m_max; ++m) p_min[i][m] = min_power(problem, i, m);

  // Candidates whose minimum energy fits the budget.
  std::vector<std::vector<double>> candidates;
  std::vector<int> cur(n);
  auto rec = [&](auto&& self, std::size_t i, int used, double energy) -> void {
    if (i == n) {
      candidates.emplace_back(cur.begin(), cur.end());
      return;
    }
    const int remaining_users = static_cast<int>(n - i - 1);
    for (int m = 1; used + m + remaining_users <= m_max; ++m) {
      const double e = energy + m * p_min[i][m];
      if (!(e < problem.total_energy)) continue;
      cur[i] = m;
      self(self, i + 1, used + m, e);
    }
  };
  rec(rec, 0, 0, 0.0);

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::size_t>(1, candidates.size() / 16));
  threads = std::max(threads, 1u);

  struct Best {
    double objective = kInf;
    std::vector<double> m;
    std::vector<double> p;
    SolveStats stats;
    int solved = 0;
  };
  std::vector<Best> per_thread(threads);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](unsigned tid) {
    Best& best = per_thread[tid];
    for (std::size_t c = tid; c < candidates.size(); c += threads) {
      const auto& m = candidates[c];
      std::vector<double> pm(n);
      for (std::size_t i = 0; i < n; ++i) pm[i] = p_min[i][static_cast<int>(m[i])];
      try {
        AllocationResult r = level_power(problem, m, pm);
        ++best.solved;
        merge_stats(best.stats, r.stats);
        if (better(r.objective, m, best.objective, best.m)) {
          best.objective = r.objective;
          best.m = m;
          best.p = r.power;
        }
      } catch (const InfeasibleError&) {
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
  }
  if (failure) std::rethrow_exception(failure);

  Best best;
  SolveStats total;
  int solved = 0;
  for (const Best& b : per_thread) {
    solved += b.solved;
    merge_stats(total, b.stats);
    if (!b.m.empty() && (best.m.empty() || better(b.objective, b.m, best.objective, best.m))) {
      best.objective = b.objective;
      best.m = b.m;
      best.p = b.p;
    }
  }
  if (best.m.empty()) throw InfeasibleError("no integer blocklength vector admits feasible powers", 1.0);
  AllocationResult res = evaluate_allocation(problem, best.m, best.p, Method::integer);
  res.stats = total;
  res.rounds = solved;
  return res;
}

AllocationResult solve_alternating(const AllocationProblem& problem) {
  problem.check();
  const std::vector<double> p(problem.user_count(), problem.total_energy / problem.total_blocklength);
  return solve_alternating(problem, p);
}

AllocationResult solve_alternating(const AllocationProblem& problem, std::span<const double> p_init) {
  problem.check();
  const std::size_t n = problem.user_count();
  if (p_init.size() != n) throw UsageError("p_init size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive_finite(p_init[i]) || problem.gains[i] * p_init[i] < problem.snr_threshold * (1.0 - 1e-12)) {
      throw UsageError("p_init[" + std::to_string(i) + "] violates the SNR floor");
    }
  }
  std::vector<double> p(p_init.begin(), p_init.end());
  std::vector<double> m = blocklength_completion(problem, p);
  if (m.empty()) throw UsageError("p_init has no feasible blocklength completion");

  std::vector<double> p_min(n);
  SolveStats stats;
  double best_obj = kInf;
  std::vector<double> best_m;
  std::vector<double> best_p;
  int rounds = 0;
  for (int round = 1; round <= 200; ++round) {
    rounds = round;
    m = blocklength_step(problem, p, m, stats);
    for (std::size_t i = 0; i < n; ++i) p_min[i] = min_power(problem, i, m[i]);
    const AllocationResult step = power_step(problem, m, p_min, p);
    merge_stats(stats, step.stats);
    p = step.power;
    const double obj = step.objective;
    const double prev = best_obj;
    if (obj < best_obj) {
      best_obj = obj;
      best_m = m;
      best_p = p;
    }
    if (std::isfinite(prev) && prev - obj < 1e-9 * prev) break;
  }
  AllocationResult res = evaluate_allocation(problem, best_m, best_p, Method::alternating);
  res.stats = stats;
  res.rounds = rounds;
  return res;
}

AllocationResult round_solution(const AllocationProblem& problem, const AllocationResult& result) {
  problem.check();
  const std::size_t n = problem.user_count();
  if (result.blocklength.size() != n || result.power.size() != n) throw UsageError("round_solution: size mismatch");

  const bool integral = std::all_of(result.blocklength.begin(), result.blocklength.end(),
                                    [](double m) { return m >= 1.0 && m == std::floor(m); });
  if (integral) {
    AllocationResult same = evaluate_allocation(problem, result.blocklength, result.power, result.method);
    const double sum_m = std::accumulate(same.blocklength.begin(), same.blocklength.end(), 0.0);
    double sum_e = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_e += same.blocklength[i] * same.power[i];
    if (sum_m > problem.total_blocklength * (1.0 + 1e-9) || sum_e > problem.total_energy * (1.0 + 1e-9) ||
        same.objective > problem.eps_max * (1.0 + 1e-9)) {
      throw InfeasibleError("integer allocation violates the budgets or reliability target", sum_m / problem.total_blocklength - 1.0);
    }
    same.stats = result.stats;
    same.rounds = result.rounds;
    same.warnings = result.warnings;
    return same;
  }

  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::max(1.0, std::floor(result.blocklength[i]));
    hi[i] = std::max(lo[i], std::ceil(result.blocklength[i]));
  }

  double best_obj = kInf;
  std::vector<double> best_m;
  AllocationResult best;
  int solved = 0;
  SolveStats stats;
  auto attempt = [&](const std::vector<double>& m) -> double {
    if (std::accumulate(m.begin(), m.end(), 0.0) > problem.total_blocklength) return kInf;
    try {
      AllocationResult r = solve_power(problem, m);
      ++solved;
      merge_stats(stats, r.stats);
      if (better(r.objective, m, best_obj, best_m)) {
        best_obj = r.objective;
        best_m = m;
        best = r;
      }
      return r.objective;
    } catch (const InfeasibleError&) {
      return kInf;
    }
  };

  if (n <= 12) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<double> m(n);
      bool duplicate = false;
      for (std::size_t i = 0; i < n; ++i) {
        const bool up = (mask >> i) & 1u;
        if (up && hi[i] == lo[i]) duplicate = true;
        m[i] = up ? hi[i] : lo[i];
      }
      if (!duplicate) attempt(m);
    }
  } else {
    std::vector<double> m = lo;
    double current = attempt(m);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return result.blocklength[x] - lo[x] > result.blocklength[y] - lo[y];
    });
    for (std::size_t i : order) {
      if (hi[i] == lo[i]) continue;
      std::vector<double> trial = m;
      trial[i] = hi[i];
      const double obj = attempt(trial);
      if (obj < current) {
        current = obj;
        m = trial;
      }
    }
  }
  if (best_m.empty()) throw InfeasibleError("no feasible integer neighbour", 1.0);
  best.method = Method::rounded;
  best.stats = stats;
  best.rounds = solved;
  best.warnings = result.warnings;
  return best;
}

}  // namespace fblopt
