#pragma once

#include <Eigen/Dense>
#include <array>

#include "fblopt/allocator.hpp"

namespace fblopt {

// Two-hop decode-and-forward link carrying D bits over both hops. The hops share
// the blocklength budget (m1 + m2 <= M) and the energy budget (m1 p1 + m2 p2 <= E).
struct RelayProblem {
  double payload_bits = 480.0;
  std::array<double, 2> gains{1.0, 1.0};
  double total_blocklength = 800.0;
  double total_energy = 2400.0;
  double eps_max = 0.1;
  double snr_threshold = 1.0;

  void check() const;
  AllocationProblem as_allocation() const;
};

// eps1 + eps2 - eps1 eps2; DomainError outside [0, 1].
double overall_error(double eps1, double eps2);

struct RelayHessian {
  Eigen::Matrix2d matrix;
  double det;
};

// Hessian of the overall error in (w1, w2); RegionError below w = 1.2.
RelayHessian relay_w_hessian(double w1, double w2);

// Minimizes the overall error directly; objective = overall error, error = per hop.
AllocationResult solve_relay(const RelayProblem& problem);

struct RelayGap {
  double overall;
  double additive;    // eps1 + eps2
  double cross_term;  // additive - overall = eps1 eps2
};

RelayGap relay_gap(const AllocationResult& result);

// m1 = m2 = M/2 with energy split in proportion to 1/gain.
double balanced_split_objective(const RelayProblem& problem);

}  // namespace fblopt
