#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fblopt/fbl_core.hpp"

namespace fblopt {

// Outcome of the joint-convexity tests at one point. The reliability
// preconditions are kept apart from the two sufficient conditions so callers can
// tell an unreliable point from one where convexity is merely unproven.
struct ConvexityVerdict {
  bool reliability_ok = false;    // eps <= eps_max
  bool snr_threshold_ok = false;  // gamma >= gamma_th
  bool below_capacity = false;    // C >= r
  bool preconditions_ok = false;
  bool cond_rate_ok = false;  // r > delta6(gamma)
  bool cond_snr_ok = false;   // gamma >= max{1/(5 r ln2), 8/(45 r^2 ln^2 2)}
  bool in_region = false;     // preconditions_ok && (cond_rate_ok || cond_snr_ok)
  double delta6 = 0.0;        // NaN when gamma < 1
  double snr_bound = 0.0;     // the larger of the two SNR thresholds
};

struct DeltaTerms {
  double d1;
  double d2;
  double d3;
  double d4;
  double d5;
  double d6;
  double det_h;  // ln^2(2) / (m (gamma^2 + 2 gamma)) * (d3 + d4 + d5)
};

struct Delta6Peak {
  double snr;
  double value;
};

// Right-hand side of the rate condition. gamma >= 1.
double delta6(double snr);

// Golden-section maximum of delta6 over [1, 1e4], 1e-6 in gamma.
Delta6Peak delta6_peak();

// Sup of delta6 over [snr_lo, inf), snr_lo >= 1.
double delta6_sup_from(double snr_lo);

// max{1/(5 r ln2), 8/(45 r^2 ln^2 2)}.
double sufficient_snr(double rate);

ConvexityVerdict convexity_condition(const LinkPoint& point, double eps_max, double snr_threshold);

// gamma >= 1, DomainError otherwise.
DeltaTerms det_h_terms(const LinkPoint& point);

struct PsdSample {
  LinkPoint point;
  ConvexityVerdict verdict;
  double eig_min;
  double eig_max;
  double trace;
  double scaled_min;  // eig_min / (1 + |trace|)
};

struct PsdScanReport {
  std::vector<PsdSample> samples;
  std::size_t in_region_count = 0;
  std::size_t out_of_region_count = 0;
  double min_scaled_eigenvalue = 0.0;  // over in-region samples
  std::ptrdiff_t worst_index = -1;     // index into samples, -1 if none in region
  bool passed(double tol = 1e-9) const { return min_scaled_eigenvalue >= -tol; }
};

// Eigen-analysis of the (m, p) Hessian of eps at every in-region grid point.
PsdScanReport numeric_psd_scan(std::span<const LinkPoint> grid, double eps_max,
                               double snr_threshold);

}  // namespace fblopt
