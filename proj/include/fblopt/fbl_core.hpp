#pragma once

#include <numbers>

namespace fblopt {

inline constexpr double kLn2 = std::numbers::ln2;

// One operating point of a link: blocklength m (channel uses, real-valued
// relaxation), transmit power p, effective gain g = z/sigma^2 and payload D bits.
class LinkPoint {
 public:
  // Throws DomainError unless all four values are finite and positive.
  LinkPoint(double blocklength, double power, double gain, double payload_bits);

  // Unit-gain point, so power and SNR coincide.
  static LinkPoint at_snr(double blocklength, double snr, double payload_bits);

  double blocklength() const noexcept { return m_; }
  double power() const noexcept { return p_; }
  double gain() const noexcept { return g_; }
  double payload_bits() const noexcept { return d_; }
  double snr() const noexcept { return g_ * p_; }
  double rate() const noexcept { return d_ / m_; }

 private:
  double m_;
  double p_;
  double g_;
  double d_;
};

struct CapacityDispersion {
  double capacity;    // bits per channel use
  double dispersion;  // dimensionless, in (0, 1)
};

// Partials of w with respect to blocklength m and SNR gamma.
struct FblCurvature {
  double dw_dm;
  double dw_dsnr;
  double d2w_dm2;
  double d2w_dsnr2;
  double d2w_dm_dsnr;
  double det_h;  // d2w_dm2 * d2w_dsnr2 - d2w_dm_dsnr^2
};

// Error probability and its partials in (m, p) at fixed gain and payload.
struct ErrorCurvatureMP {
  double eps;
  double d_m;
  double d_p;
  double d_mm;
  double d_pp;
  double d_mp;
};

// Same quantities in the substituted coordinates a = 1/m, b = sqrt(p).
struct ErrorCurvatureAB {
  double eps;
  double d_a;
  double d_b;
  double d_aa;
  double d_bb;
  double d_ab;
};

// Gaussian tail Q(x) = P(N(0,1) > x), via erfc so that values near 1e-300 keep full precision.
double q_func(double x);

// Inverse of q_func on (0, 1). Bracketing plus Newton on log Q.
double q_inv(double p);

CapacityDispersion capacity_dispersion(double snr);

// w = sqrt(m/V) (C - D/m) ln 2; error_probability = Q(w).
double channel_w(const LinkPoint& point);
double error_probability(const LinkPoint& point);

// Largest rate with error probability eps0 at blocklength m.
double achievable_rate(double snr, double blocklength, double eps0);

// Three-segment linear approximation in SNR. The rate enters the exponentials in
// nats, which makes the middle segment the tangent of Q(w) at C = r.
double error_linear(const LinkPoint& point);

// Q(sqrt(m) (C - r) ln 2), i.e. dispersion forced to 1.
double error_unit_dispersion(const LinkPoint& point);

// Closed-form partials of w. Requires gamma >= 1 (RegionError otherwise); the
// determinant is cross-checked against the Delta3 + Delta4 + Delta5 decomposition.
FblCurvature w_derivatives(const LinkPoint& point);

// Same closed forms for any gamma > 0, without precondition or cross-check.
// Used by the optimizers, whose iterates may leave the region during phase I.
FblCurvature w_partials(const LinkPoint& point);

ErrorCurvatureMP error_curvature_mp(const LinkPoint& point);

// a > 0, b > 0; throws DomainError otherwise.
ErrorCurvatureAB error_curvature_ab(double a, double b, double gain, double payload_bits);

// Smallest SNR at which Q(w) <= eps_target for blocklength m and payload D.
double required_snr(double blocklength, double payload_bits, double eps_target);
// Smallest SNR with w >= w_target. w is increasing in SNR, from -inf at 0.
double snr_for_w(double blocklength, double payload_bits, double w_target);

}  // namespace fblopt
