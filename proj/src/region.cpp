#include "fblopt/region.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fblopt/errors.hpp"

namespace fblopt {

namespace {

template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double delta6(double snr) {
  if (!(snr >= 1.0) || !std::isfinite(snr)) {
    throw DomainError("delta6: SNR must be >= 1 (got " + std::to_string(snr) + ")");
  }
  const double s = snr * snr + 2.0 * snr;
  const double k = 9.0 * (snr + 1.0) * (snr + 1.0) - 1.0;
  const double l = std::log1p(snr);
  const double x = 0.4 * k * l * l;
  // -2s + sqrt(4s^2 + x), rationalized.
  const double root_gap = x / (2.0 * s + std::sqrt(4.0 * s * s + x));
  return 2.0 / (kLn2 * k) * root_gap;
}

Delta6Peak delta6_peak() {
  const double snr = golden_max([](double g) { return delta6(g); }, 1.0, 1e4, 1e-7);
  return {snr, delta6(snr)};
}

double delta6_sup_from(double snr_lo) {
  const Delta6Peak peak = delta6_peak();
  if (snr_lo <= peak.snr) return peak.value;
  const double hi = std::max(1e4, 10.0 * snr_lo);
  const double arg = golden_max([](double g) { return delta6(g); }, snr_lo, hi, 1e-9 * hi);
  return std::max(delta6(snr_lo), delta6(arg));
}

double sufficient_snr(double rate) {
  const double a = 1.0 / (5.0 * rate * kLn2);
  const double b = 8.0 / (45.0 * rate * rate * kLn2 * kLn2);
  return std::max(a, b);
}

ConvexityVerdict convexity_condition(const LinkPoint& point, double eps_max, double snr_threshold) {
  ConvexityVerdict v;
  const double snr = point.snr();
  const double r = point.rate();
  v.reliability_ok = error_probability(point) <= eps_max;
  v.snr_threshold_ok = snr >= snr_threshold;
  v.below_capacity = capacity_dispersion(snr).capacity >= r;
  v.preconditions_ok = v.reliability_ok && v.snr_threshold_ok && v.below_capacity;
  v.snr_bound = sufficient_snr(r);
  if (snr >= 1.0) {
    v.delta6 = delta6(snr);
    v.cond_rate_ok = r > v.delta6;
    v.cond_snr_ok = snr >= v.snr_bound;
  } else {
    v.delta6 = std::numeric_limits<double>::quiet_NaN();
  }
  v.in_region = v.preconditions_ok && (v.cond_rate_ok || v.cond_snr_ok);
  return v;
}

DeltaTerms det_h_terms(const LinkPoint& point) {
  const double g = point.snr();
  if (g < 1.0) throw DomainError("det_h_terms: SNR must be >= 1");
  const double r = point.rate();
  const double m = point.blocklength();
  const double c = capacity_dispersion(g).capacity;
  const double s = g * g + 2.0 * g;
  const double gp1 = g + 1.0;
  const double ln2sq = kLn2 * kLn2;

  DeltaTerms t{};
  t.d1 = s - std::log1p(g);
  t.d2 = -gp1 * gp1 * gp1 + 1.0 / gp1 + 3.0 * kLn2 * gp1 * c;
  t.d3 = c / (s * kLn2) - 3.0 * c * c / (4.0 * s) + c / (4.0 * kLn2) - 1.0 / (4.0 * ln2sq) -
         3.0 * c * c / (5.0 * s * s);
  t.d4 = 3.0 * r / (4.0 * kLn2) - 3.0 * r * c / (2.0 * s) - 2.0 * r * c / (s * s);
  t.d5 = 2.0 * r / (s * kLn2) + 9.0 * r * r / (4.0 * s) + 2.0 * r * r / (s * s) -
         2.0 * c * c / (5.0 * s * s);
  t.d6 = delta6(g);
  t.det_h = ln2sq / (m * s) * (t.d3 + t.d4 + t.d5);
  return t;
}

PsdScanReport numeric_psd_scan(std::span<const LinkPoint> grid, double eps_max,
                               double snr_threshold) {
  if (grid.empty()) throw UsageError("numeric_psd_scan: empty grid");
  PsdScanReport report;
  report.samples.reserve(grid.size());
  report.min_scaled_eigenvalue = std::numeric_limits<double>::infinity();
  for (const LinkPoint& point : grid) {
    PsdSample sample{point, convexity_condition(point, eps_max, snr_threshold), 0.0, 0.0, 0.0, 0.0};
    if (sample.verdict.in_region) {
      (void)w_derivatives(point);
      const ErrorCurvatureMP e = error_curvature_mp(point);
      const double tr = e.d_mm + e.d_pp;
      const double half_gap = std::hypot(0.5 * (e.d_mm - e.d_pp), e.d_mp);
      sample.trace = tr;
      sample.eig_min = 0.5 * tr - half_gap;
      sample.eig_max = 0.5 * tr + half_gap;
      sample.scaled_min = sample.eig_min / (1.0 + std::abs(tr));
      ++report.in_region_count;
      if (sample.scaled_min < report.min_scaled_eigenvalue) {
        report.min_scaled_eigenvalue = sample.scaled_min;
        report.worst_index = static_cast<std::ptrdiff_t>(report.samples.size());
      }
    } else {
      sample.eig_min = sample.eig_max = sample.trace = sample.scaled_min =
          std::numeric_limits<double>::quiet_NaN();
      ++report.out_of_region_count;
    }
    report.samples.push_back(sample);
  }
  if (report.in_region_count == 0) report.min_scaled_eigenvalue = 0.0;
  return report;
}

}  // namespace fblopt
