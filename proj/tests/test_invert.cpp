#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mdci/invert.hpp"
#include "test_util.hpp"

using namespace mdci;

namespace {

EstimateInput table1_input(double th1, double t1, double th2, double t2) {
  const double se1 = std::fabs(th1 / t1), se2 = std::fabs(th2 / t2);
  Mat sigma(2, 2);
  sigma(0, 0) = se1 * se1;
  sigma(1, 1) = se2 * se2;
  return EstimateInput(Vec{th1, th2}, sigma, 1.0, Vec{0.0, 0.0});
}

}  // namespace

TEST_CASE("ci_median_length uses the lower median") {
  auto mk = [](double len) {
    ConfidenceInterval ci;
    ci.lower = 0.0;
    ci.upper = len;
    return ci;
  };
  CHECK(ci_median_length({mk(1), mk(2), mk(3)}) == 2.0);
  CHECK(ci_median_length({mk(1), mk(2), mk(3), mk(4)}) == 2.0);
  CHECK(ci_median_length({mk(0.032)}) == Catch::Approx(0.032));
  CHECK_THROWS_AS(ci_median_length({}), std::domain_error);
}

TEST_CASE("scan machinery reports gaps instead of hulling silently") {
  // two accepted islands: [-2, -1] and [1, 2]
  auto accepts = [](double t) {
    return (t >= -2.0 && t <= -1.0) || (t >= 1.0 && t <= 2.0) || std::fabs(t - 1.5) < 1e-12;
  };
  const auto segs = detail::scan_accepted_segments(accepts, 1.5, 4.0, 400, 0, 1e-6);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].first == Catch::Approx(-2.0).margin(1e-4));
  CHECK(segs[0].second == Catch::Approx(-1.0).margin(1e-4));
  CHECK(segs[1].first == Catch::Approx(1.0).margin(1e-4));
  CHECK(segs[1].second == Catch::Approx(2.0).margin(1e-4));
}

TEST_CASE("full-sample BN1 and Projection intervals") {
  const EstimateInput in = table1_input(0.199, 3.140, -0.119, -5.343);
  const GFunction g = builtin_product();
  const ConfidenceInterval bn1 = invert_test(g, in, Method::BN1, 0.05);
  // exact inversion of the rounded Table-1 inputs (grid-verified)
  CHECK(bn1.lower == Catch::Approx(-0.0433).margin(5e-4));
  CHECK(bn1.upper == Catch::Approx(-0.0085).margin(5e-4));
  CHECK(bn1.acceptance_gaps.empty());
  CHECK(bn1.eligibility_holes.empty());  // zero correlation: always eligible

  const ConfidenceInterval proj = invert_test(g, in, Method::Projection, 0.05);
  CHECK(proj.lower == Catch::Approx(-0.0490).margin(5e-4));
  CHECK(proj.upper == Catch::Approx(-0.0051).margin(5e-4));

  // nesting: BN1 inside Projection
  CHECK(bn1.lower >= proj.lower - 1e-9);
  CHECK(bn1.upper <= proj.upper + 1e-9);
}

TEST_CASE("BN2 interval on the full sample brackets BN1") {
  const EstimateInput in = table1_input(0.199, 3.140, -0.119, -5.343);
  const GFunction g = builtin_product();
  InvertConfig cfg;
  cfg.bn2 = Bn2Config::with_alpha(0.05, RngStream(20240817, 21));
  const ConfidenceInterval bn2 = invert_test(g, in, Method::BN2, 0.05, cfg);
  const ConfidenceInterval bn1 = invert_test(g, in, Method::BN1, 0.05);
  const ConfidenceInterval proj = invert_test(g, in, Method::Projection, 0.05);
  REQUIRE(bn2.bn2_critical_value.has_value());
  CHECK(*bn2.bn2_critical_value >= chi2_quantile(1, 0.95) - 0.05);
  // BN1 interval inside BN2 (up to draw noise), BN2 inside Projection
  CHECK(bn1.lower >= bn2.lower - 1e-4);
  CHECK(bn1.upper <= bn2.upper + 1e-4);
  CHECK(bn2.lower >= proj.lower - 1e-4);
  CHECK(bn2.upper <= proj.upper + 1e-4);
}

TEST_CASE("plug-in estimate always covered") {
  RngStream rng(31337, 6);
  const GFunction g = builtin_product();
  for (int trial = 0; trial < 12; ++trial) {
    const Vec th{6.0 * rng.uniform01() - 3.0, 6.0 * rng.uniform01() - 3.0};
    const Mat sigma = mdci_test::random_spd2(rng, 0.5, 2.0);
    const EstimateInput in(th, sigma, 1.0, Vec{0.0, 0.0});
    const double ghat = g.eval(th);
    for (Method m : {Method::BN1, Method::Projection, Method::Wald}) {
      const ConfidenceInterval ci = invert_test(g, in, m, 0.05);
      CHECK(ci.lower <= ghat + 1e-12);
      CHECK(ci.upper >= ghat - 1e-12);
    }
  }
}

TEST_CASE("nesting holds on random instances") {
  RngStream rng(8080, 2);
  const GFunction g = builtin_product();
  for (int trial = 0; trial < 10; ++trial) {
    const Vec th{4.0 * rng.uniform01() - 2.0, 4.0 * rng.uniform01() - 2.0};
    const Mat sigma = mdci_test::random_spd2(rng, 0.5, 2.0);
    const EstimateInput in(th, sigma, 1.0, Vec{0.0, 0.0});
    const ConfidenceInterval bn1 = invert_test(g, in, Method::BN1, 0.05);
    const ConfidenceInterval proj = invert_test(g, in, Method::Projection, 0.05);
    CHECK(bn1.lower >= proj.lower - 1e-9);
    CHECK(bn1.upper <= proj.upper + 1e-9);
  }
  // uncorrelated errors keep rho at zero, so the whole scan stays eligible
  for (int trial = 0; trial < 5; ++trial) {
    const Vec th{4.0 * rng.uniform01() - 2.0, 4.0 * rng.uniform01() - 2.0};
    Mat sigma(2, 2);
    sigma(0, 0) = 0.5 + rng.uniform01();
    sigma(1, 1) = 0.5 + rng.uniform01();
    const EstimateInput in(th, sigma, 1.0, Vec{0.0, 0.0});
    const ConfidenceInterval bn1 = invert_test(g, in, Method::BN1, 0.05);
    CHECK(bn1.eligibility_holes.empty());
  }
}

TEST_CASE("endpoint bisection converges against a finer scan") {
  const EstimateInput in = table1_input(0.256, 2.052, -0.097, -1.941);
  const GFunction g = builtin_product();
  InvertConfig coarse;
  InvertConfig fine;
  fine.scan_points = 1600;
  fine.endpoint_tol_rel = coarse.endpoint_tol_rel;
  const ConfidenceInterval a = invert_test(g, in, Method::BN1, 0.05, coarse);
  const ConfidenceInterval b = invert_test(g, in, Method::BN1, 0.05, fine);
  CHECK(std::fabs(a.lower - b.lower) <= 2.0 * a.endpoint_tol);
  CHECK(std::fabs(a.upper - b.upper) <= 2.0 * a.endpoint_tol);
}

TEST_CASE("wald inversion equals the closed-form interval") {
  const GFunction g = builtin_product();
  const EstimateInput in(Vec{2.0, 3.0}, Mat::identity(2), 1.0, Vec{0.0, 0.0});
  const ConfidenceInterval ci = invert_test(g, in, Method::Wald, 0.05);
  const double se = std::sqrt(13.0);
  const double z = normal_quantile(0.975);
  CHECK(ci.lower == Catch::Approx(6.0 - z * se).margin(2.0 * ci.endpoint_tol));
  CHECK(ci.upper == Catch::Approx(6.0 + z * se).margin(2.0 * ci.endpoint_tol));
}

TEST_CASE("eligibility holes are reported for negatively correlated errors") {
  // rho_P = -0.5 near tau = 0 fails both conditions on part of the scan
  const GFunction g = builtin_product();
  const Mat sigma{{1.0, 0.5}, {0.5, 1.0}};
  const EstimateInput in(Vec{0.3, -0.3}, sigma, 1.0, Vec{0.0, 0.0});
  const ConfidenceInterval ci = invert_test(g, in, Method::BN1, 0.05);
  CHECK(!ci.eligibility_holes.empty());
  CHECK(ci.lower < ci.upper);
}

TEST_CASE("invert rejects unusable methods") {
  const GFunction g = builtin_product();
  const EstimateInput in(Vec{1.0, 1.0}, Mat::identity(2), 1.0, Vec{0.0, 0.0});
  CHECK_THROWS_AS(invert_test(g, in, Method::NaiveBoot, 0.05), std::domain_error);
  CHECK_THROWS_AS(invert_test(g, in, Method::AM, 0.05), std::domain_error);
}

TEST_CASE("monomial interval via inversion (d = 1)") {
  const GFunction g = builtin_monomial(2);
  Mat s(1, 1);
  s(0, 0) = 1.0;
  const EstimateInput in(Vec{3.0}, s, 1.0, Vec{0.0});
  const ConfidenceInterval ci = invert_test(g, in, Method::BN1, 0.05);
  // acceptance: exists root +-sqrt(tau) within sqrt(cv) of 3
  const double c = std::sqrt(chi2_quantile(1, 0.95));
  CHECK(ci.lower == Catch::Approx((3.0 - c) * (3.0 - c)).margin(1e-3));
  CHECK(ci.upper == Catch::Approx((3.0 + c) * (3.0 + c)).margin(1e-3));
}
