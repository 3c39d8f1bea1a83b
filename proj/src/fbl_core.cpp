#include "fblopt/fbl_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fblopt/errors.hpp"
#include "fblopt/region.hpp"

namespace fblopt {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double phi(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Inverse of Q on (0, 0.5]: Newton on log Q inside a maintained bracket.
double upper_tail_inverse(double p) {
  double lo = 0.0;
  double hi = 1.0;
  while (q_func(hi) > p) {
    lo = hi;
    hi *= 2.0;
  }
  const double log_p = std::log(p);
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double q = q_func(x);
    if (q > p) {
      lo = x;
    } else {
      hi = x;
    }
    double next = 0.5 * (lo + hi);
    if (q > 0.0) {
      const double newton = x + (std::log(q) - log_p) * q / phi(x);
      if (newton > lo && newton < hi) next = newton;
    }
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-16 * x || hi - lo <= 1e-16 * hi) break;
  }
  return x;
}

}  // namespace

LinkPoint::LinkPoint(double blocklength, double power, double gain, double payload_bits)
    : m_(blocklength), p_(power), g_(gain), d_(payload_bits) {
  if (!positive_finite(m_) || !positive_finite(p_) || !positive_finite(g_) ||
      !positive_finite(d_)) {
    throw DomainError("LinkPoint requires finite positive m, p, gain, D (got m=" +
                      std::to_string(m_) + ", p=" + std::to_string(p_) +
                      ", gain=" + std::to_string(g_) + ", D=" + std::to_string(d_) + ")");
  }
}

LinkPoint LinkPoint::at_snr(double blocklength, double snr, double payload_bits) {
  return LinkPoint(blocklength, snr, 1.0, payload_bits);
}

double q_func(double x) {
  if (!std::isfinite(x)) throw DomainError("q_func: non-finite argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double q_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inv: probability must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -upper_tail_inverse(1.0 - p);
  return upper_tail_inverse(p);
}

CapacityDispersion capacity_dispersion(double snr) {
  if (!positive_finite(snr)) throw DomainError("capacity_dispersion: SNR must be positive");
  const double l = std::log1p(snr);
  return {l / kLn2, -std::expm1(-2.0 * l)};
}

double channel_w(const LinkPoint& point) {
  const double m = point.blocklength();
  const auto [c, v] = capacity_dispersion(point.snr());
  (void)c;
  const double gap_nats = std::log1p(point.snr()) - point.payload_bits() * kLn2 / m;
  return std::sqrt(m / v) * gap_nats;
}

double error_probability(const LinkPoint& point) { return q_func(channel_w(point)); }

double achievable_rate(double snr, double blocklength, double eps0) {
  if (!positive_finite(blocklength)) throw DomainError("achievable_rate: blocklength must be positive");
  const auto [c, v] = capacity_dispersion(snr);
  return c - std::sqrt(v / blocklength) * q_inv(eps0) / kLn2;
}

double error_linear(const LinkPoint& point) {
  const double nats = point.rate() * kLn2;
  const double alpha = std::expm1(nats);
  const double mu = std::sqrt(point.blocklength() / (2.0 * std::numbers::pi * std::expm1(2.0 * nats)));
  const double half_width = 0.5 / mu;
  const double snr = point.snr();
  if (snr < alpha - half_width) return 1.0;
  if (snr >= alpha + half_width) return 0.0;
  return 0.5 - mu * (snr - alpha);
}

double error_unit_dispersion(const LinkPoint& point) {
  const double m = point.blocklength();
  return q_func(std::sqrt(m) * (std::log1p(point.snr()) - point.payload_bits() * kLn2 / m));
}

FblCurvature w_partials(const LinkPoint& point) {
  const double m = point.blocklength();
  const double g = point.snr();
  const double d = point.payload_bits();
  const double r = point.rate();
  const auto [c, v] = capacity_dispersion(g);
  const double s = g * g + 2.0 * g;
  const double inv_sqrt_v = 1.0 / std::sqrt(v);
  const double sqrt_m = std::sqrt(m);
  const double gp1 = g + 1.0;

  FblCurvature k{};
  k.dw_dm = 0.5 / sqrt_m * inv_sqrt_v * c * kLn2 + 0.5 / (m * sqrt_m) * inv_sqrt_v * d * kLn2;
  k.d2w_dm2 = -0.25 / (m * sqrt_m) * inv_sqrt_v * c * kLn2 -
              0.75 / (m * m * sqrt_m) * inv_sqrt_v * d * kLn2;

  const double delta1 = s - std::log1p(g);
  k.dw_dsnr = sqrt_m * inv_sqrt_v * delta1 / (s * gp1) +
              0.5 / sqrt_m * inv_sqrt_v / v * d * kLn2 * 2.0 / (gp1 * gp1 * gp1);

  const double delta2 = -gp1 * gp1 * gp1 + 1.0 / gp1 + 3.0 * kLn2 * gp1 * c;
  k.d2w_dsnr2 = sqrt_m / std::pow(s, 2.5) * (delta2 - 3.0 * kLn2 * gp1 * d / m);

  k.d2w_dm_dsnr = inv_sqrt_v / sqrt_m * kLn2 / (2.0 * gp1) * (1.0 / kLn2 - (c + r) / s);
  k.det_h = k.d2w_dm2 * k.d2w_dsnr2 - k.d2w_dm_dsnr * k.d2w_dm_dsnr;
  return k;
}

FblCurvature w_derivatives(const LinkPoint& point) {
  if (point.snr() < 1.0) {
    throw RegionError("w_derivatives: SNR " + std::to_string(point.snr()) +
                      " below 1, derivative signs not established");
  }
  const FblCurvature k = w_partials(point);
  const DeltaTerms terms = det_h_terms(point);
  const double scale = std::abs(k.d2w_dm2 * k.d2w_dsnr2) + k.d2w_dm_dsnr * k.d2w_dm_dsnr;
  if (std::abs(terms.det_h - k.det_h) > 1e-9 * scale) {
    throw NumericError("w_derivatives: determinant decomposition disagrees with product form");
  }
  return k;
}

ErrorCurvatureMP error_curvature_mp(const LinkPoint& point) {
  const double w = channel_w(point);
  const FblCurvature k = w_partials(point);
  const double g = point.gain();
  const double f = phi(w);
  ErrorCurvatureMP e{};
  e.eps = q_func(w);
  e.d_m = -f * k.dw_dm;
  e.d_p = -f * g * k.dw_dsnr;
  e.d_mm = f * (w * k.dw_dm * k.dw_dm - k.d2w_dm2);
  e.d_pp = f * g * g * (w * k.dw_dsnr * k.dw_dsnr - k.d2w_dsnr2);
  e.d_mp = f * g * (w * k.dw_dm * k.dw_dsnr - k.d2w_dm_dsnr);
  return e;
}

ErrorCurvatureAB error_curvature_ab(double a, double b, double gain, double payload_bits) {
  if (!positive_finite(a) || !positive_finite(b)) {
    throw DomainError("error_curvature_ab: a and b must be positive");
  }
  const ErrorCurvatureMP e = error_curvature_mp(LinkPoint(1.0 / a, b * b, gain, payload_bits));
  const double a2 = a * a;
  ErrorCurvatureAB s{};
  s.eps = e.eps;
  s.d_a = -e.d_m / a2;
  s.d_b = 2.0 * b * e.d_p;
  s.d_aa = e.d_mm / (a2 * a2) + 2.0 * e.d_m / (a2 * a);
  s.d_bb = 4.0 * b * b * e.d_pp + 2.0 * e.d_p;
  s.d_ab = -2.0 * b * e.d_mp / a2;
  return s;
}

double required_snr(double blocklength, double payload_bits, double eps_target) {
  return snr_for_w(blocklength, payload_bits, q_inv(eps_target));
}

double snr_for_w(double blocklength, double payload_bits, double w_target) {
  if (!std::isfinite(w_target)) throw DomainError("snr_for_w: target must be finite");
  auto w_at = [&](double snr) { return channel_w(LinkPoint::at_snr(blocklength, snr, payload_bits)); };
  double lo = 0.0;
  double hi = 1.0;
  while (w_at(hi) < w_target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("snr_for_w: target unreachable");
  }
  double x = lo > 0.0 ? 0.5 * (lo + hi) : 0.5 * hi;
  for (int iter = 0; iter < 300; ++iter) {
    const LinkPoint pt = LinkPoint::at_snr(blocklength, x, payload_bits);
    const double f = channel_w(pt) - w_target;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = 0.5 * (lo + hi);
    const double slope = w_partials(pt).dw_dsnr;
    if (slope > 0.0) {
      const double newton = x - f / slope;
      if (newton > lo && newton < hi) next = newton;
    }
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-15 * x || hi - lo <= 1e-15 * hi) break;
  }
  // Newton may converge from below without ever moving hi.
  for (int k = 0; k < 64 && x < hi; ++k) {
    if (w_at(x) >= w_target) return x;
    x = std::min(hi, x + std::max(4.0 * std::numeric_limits<double>::epsilon() * x, 1e-300));
  }
  return hi;
}

}  // namespace fblopt
