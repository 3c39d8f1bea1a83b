#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "fblopt/errors.hpp"
#include "fblopt/fbl_core.hpp"
#include "fblopt/region.hpp"

using namespace fblopt;

namespace {

std::vector<LinkPoint> log_grid(double s_lo, double s_hi, double m_lo, double m_hi, int n, double d) {
  std::vector<LinkPoint> grid;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = s_lo * std::pow(s_hi / s_lo, i / double(n - 1));
      const double m = m_lo * std::pow(m_hi / m_lo, j / double(n - 1));
      grid.push_back(LinkPoint::at_snr(m, s, d));
    }
  }
  return grid;
}

}  // namespace

TEST_SUITE("region") {
  TEST_CASE("delta6 reference values") {
    CHECK(delta6(1.0) == doctest::Approx(0.0442321237).epsilon(1e-8));
    CHECK(delta6(1.2408) == doctest::Approx(0.0448).epsilon(1e-3));
    CHECK_THROWS_AS(delta6(0.5), DomainError);
  }

  TEST_CASE("delta6_peak") {
    const Delta6Peak a = delta6_peak();
    const Delta6Peak b = delta6_peak();
    CHECK(a.snr == doctest::Approx(1.2408).epsilon(1e-3 / 1.2408));
    CHECK(std::abs(a.value - 0.0448) <= 5e-4);
    CHECK(a.snr == b.snr);
    CHECK(a.value == b.value);
    CHECK(a.snr == doctest::Approx(1.2407506).epsilon(1e-6));
  }

  TEST_CASE("delta6 is bounded by its peak on [1, 100]") {
    const double peak = delta6_peak().value;
    double worst = 0.0;
    for (int k = 0; k <= 10000; ++k) worst = std::max(worst, delta6(1.0 + 99.0 * k / 10000.0));
    CHECK(worst <= 0.0448 + 5e-4);
    CHECK(worst <= peak + 1e-12);
    CHECK(delta6_sup_from(1.0) == doctest::Approx(peak).epsilon(1e-12));
    CHECK(delta6_sup_from(5.0) <= peak);
  }

  TEST_CASE("sufficient_snr thresholds at r = 0.6") {
    const double r = 0.6;
    const double t1 = 1.0 / (5.0 * r * kLn2);
    const double t2 = 8.0 / (45.0 * r * r * kLn2 * kLn2);
    CHECK(t1 == doctest::Approx(0.480898).epsilon(1e-5));
    CHECK(t2 == doctest::Approx(1.027837).epsilon(1e-5));
    CHECK(sufficient_snr(r) == std::max(t1, t2));
  }

  TEST_CASE("convexity_condition verdicts") {
    // r = 0.6 at gamma = 1: rate condition holds, SNR condition does not.
    const ConvexityVerdict v = convexity_condition(LinkPoint::at_snr(800.0, 1.0, 480.0), 0.1, 1.0);
    CHECK(v.preconditions_ok);
    CHECK(v.cond_rate_ok);
    CHECK_FALSE(v.cond_snr_ok);
    CHECK(v.in_region);
    CHECK(convexity_condition(LinkPoint::at_snr(800.0, 1.05, 480.0), 0.1, 1.0).cond_snr_ok);

    // r = 0.01 fails the rate condition.
    const ConvexityVerdict low = convexity_condition(LinkPoint::at_snr(800.0, 1.0, 8.0), 0.1, 1.0);
    CHECK_FALSE(low.cond_rate_ok);
    CHECK_FALSE(low.in_region);

    // Preconditions are reported one by one.
    const ConvexityVerdict above = convexity_condition(LinkPoint::at_snr(400.0, 1.0, 480.0), 0.1, 1.0);
    CHECK_FALSE(above.below_capacity);
    CHECK_FALSE(above.reliability_ok);
    CHECK_FALSE(above.in_region);
    const ConvexityVerdict weak = convexity_condition(LinkPoint::at_snr(2000.0, 0.9, 480.0), 0.1, 1.0);
    CHECK_FALSE(weak.snr_threshold_ok);
    CHECK(std::isnan(weak.delta6));
  }

  TEST_CASE("det_h_terms") {
    const DeltaTerms t = det_h_terms(LinkPoint::at_snr(800.0, 1.0, 480.0));
    CHECK(t.d3 == doctest::Approx(0.0045632).epsilon(1e-4));
    CHECK(std::abs(t.d3 - 0.0046) <= 5e-4);
    CHECK(t.d2 == doctest::Approx(6.0 * kLn2 + 0.5 - 8.0).epsilon(1e-12));
    CHECK(t.d2 < 0.0);
    CHECK(t.d6 == doctest::Approx(delta6(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(det_h_terms(LinkPoint::at_snr(800.0, 0.5, 480.0)), DomainError);

    // The decomposition reproduces the determinant of the w Hessian.
    const LinkPoint pt = LinkPoint::at_snr(700.0, 2.5, 480.0);
    CHECK(det_h_terms(pt).det_h == doctest::Approx(w_derivatives(pt).det_h).epsilon(1e-8));
  }

  TEST_CASE("delta4 is non-negative in region") {
    for (const LinkPoint& pt : log_grid(1.0, 30.0, 100.0, 2000.0, 30, 480.0)) {
      if (!convexity_condition(pt, 0.1, 1.0).in_region) continue;
      CHECK(det_h_terms(pt).d4 >= 0.0);
    }
  }

  TEST_CASE("numeric_psd_scan over the reference grid") {
    const auto grid = log_grid(1.0, 30.0, 100.0, 2000.0, 50, 480.0);
    REQUIRE(grid.size() == 2500);
    const PsdScanReport rep = numeric_psd_scan(grid, 0.1, 1.0);
    CHECK(rep.in_region_count > 0);
    CHECK(rep.out_of_region_count > 0);
    CHECK(rep.in_region_count + rep.out_of_region_count == 2500);
    CHECK(rep.passed(1e-9));
    CHECK(rep.samples.size() == 2500);
  }

  TEST_CASE("numeric_psd_scan excludes points above capacity") {
    const std::vector<LinkPoint> grid{LinkPoint::at_snr(300.0, 1.0, 480.0)};
    const PsdScanReport rep = numeric_psd_scan(grid, 0.1, 1.0);
    CHECK(rep.in_region_count == 0);
    CHECK(rep.out_of_region_count == 1);
    CHECK(rep.worst_index == -1);
    CHECK_THROWS_AS(numeric_psd_scan(std::vector<LinkPoint>{}, 0.1, 1.0), UsageError);
  }

  TEST_CASE("SNR condition implies the rate condition") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lr(std::log(0.01), std::log(4.0));
    std::uniform_real_distribution<double> ls(0.0, std::log(100.0));
    int converse_violations = 0;
    for (int i = 0; i < 10000; ++i) {
      const double r = std::exp(lr(rng));
      const double s = std::exp(ls(rng));
      const bool snr_ok = s >= sufficient_snr(r);
      const bool rate_ok = r > delta6(s);
      if (snr_ok) CHECK(rate_ok);
      if (rate_ok && !snr_ok) ++converse_violations;
    }
    CHECK(converse_violations > 0);
  }
}
