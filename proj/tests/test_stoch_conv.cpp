#include <doctest.h>

#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/stats.hpp"
#include "fbh/stoch_conv.hpp"

using namespace fbh;

namespace {

struct Fixture {
  DomainSpec dom = build_domain(DomainKind::Interval, 1.0, 1);
  TimeGrid grid = time_grid(0.5, 128);
  SMesh mesh = build_smesh(2);
  HurstParam h{0.75};
  std::shared_ptr<KernelEvaluator> eval = std::make_shared<KernelEvaluator>(dom, 128);
  AlphaCoefficient alpha = AlphaCoefficient::one();
};

AlphaCoefficient alpha_zero() {
  AlphaCoefficient a;
  a.evaluator = [](double, const Point&) { return 0.0; };
  a.lower_bound = 0.0;
  a.name = "zero";
  return a;
}

}  // namespace

TEST_CASE("alpha coefficients: library and hypothesis checks") {
  Fixture f;
  CHECK_NOTHROW(AlphaCoefficient::one().validate(f.dom, f.mesh, 0.75));
  CHECK_NOTHROW(AlphaCoefficient::sine().validate(f.dom, f.mesh, 0.75));
  const auto deg = AlphaCoefficient::degenerate();
  CHECK(!deg.nondegenerate());

  // claiming (a2) with a vanishing coefficient must fail
  auto bad = AlphaCoefficient::degenerate();
  bad.lower_bound = 0.5;
  CHECK_THROWS_AS(bad.validate(f.dom, f.mesh, 0.75), ConfigError);

  // theta must exceed (d-1)/(2H-1) under the a1' tag (binding in d = 2)
  auto rect = build_domain(DomainKind::Rectangle, 1.0, 4);
  auto thin = AlphaCoefficient::one();
  thin.theta = 1.0;
  CHECK_THROWS_AS(thin.validate(rect, f.mesh, 0.6), ConfigError);
  thin.theta = 6.0;
  CHECK_NOTHROW(thin.validate(rect, f.mesh, 0.6));
  CHECK_THROWS_AS(AlphaCoefficient::by_name("nope"), ConfigError);
}

TEST_CASE("phi integrand: two-point boundary structure and causality") {
  Fixture f;
  const double t = 0.25;
  auto phi = phi_integrand(f.eval, f.mesh, f.alpha, t, {0.4, 0.0});
  // alpha = 1: phi(s) = p(t-s, x, 0) + p(t-s, x, 1)
  for (double s : {0.05, 0.15, 0.24}) {
    const double expect =
        f.eval->value1d(t - s, 0.4, 0.0) + f.eval->value1d(t - s, 0.4, 1.0);
    CHECK(phi(s, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(phi(s, 1) == doctest::Approx(phi(s, 0)).epsilon(1e-14));
  }
  CHECK(phi(t, 0) == 0.0);
  CHECK(phi(t + 0.1, 1) == 0.0);

  auto phi0 = phi_integrand(f.eval, f.mesh, alpha_zero(), t, {0.4, 0.0});
  CHECK(phi0(0.1, 0) == 0.0);

  // the boundary-target integrand blows up no faster than (t-s)^{-mu}
  auto phib = phi_integrand(f.eval, f.mesh, f.alpha, t, {0.0, 0.0});
  for (double s : {0.24, 0.2499, 0.249999})
    CHECK(phib(s, 0) * std::pow(t - s, 0.75) < 2.0);
}

TEST_CASE("increment route: zero alpha, causality at t = 0, determinism") {
  Fixture f;
  KernelQuad kq(f.eval, f.grid);
  NoiseSampler sampler(f.mesh, f.grid, f.h, 17);
  const auto path = sampler.sample(0);

  const auto s0 = build_increment_scheme(kq, f.mesh, alpha_zero(), 64, {0.5, 0.0});
  CHECK(simulate_z(s0, path, {0.5, 0.0}).value == 0.0);

  const auto s = build_increment_scheme(kq, f.mesh, f.alpha, 0, {0.5, 0.0});
  CHECK(simulate_z(s, path, {0.5, 0.0}).value == 0.0);  // Z(0, x) = 0 exactly

  const auto s64 = build_increment_scheme(kq, f.mesh, f.alpha, 64, {0.5, 0.0});
  const double v1 = simulate_z(s64, sampler.sample(3), {0.5, 0.0}).value;
  const double v2 = simulate_z(s64, sampler.sample(3), {0.5, 0.0}).value;
  CHECK(v1 == v2);
}

TEST_CASE("increment route matches the exact variance and Gaussian law") {
  Fixture f;
  KernelQuad kq(f.eval, f.grid);
  const Point x{0.5, 0.0};
  const double t = 0.5;
  const auto scheme = build_increment_scheme(kq, f.mesh, f.alpha, 128, x);
  NoiseSampler sampler(f.mesh, f.grid, f.h, 777);
  const int n = 10000;
  std::vector<double> inc(n), gau(n);
  const double vz = variance_z(f.eval, f.mesh, f.alpha, t, x, f.h);
  for (int r = 0; r < n; ++r) {
    inc[r] = simulate_z(scheme, sampler.sample(r), x).value;
    gau[r] = simulate_z_gaussian(t, x, vz, 999, r).value;
  }
  // centered within 3 s.e.
  CHECK(std::abs(stats::mean(inc)) < 3.0 * std::sqrt(vz / n));
  // variance within 3 s.e.
  CHECK(std::abs(stats::variance(inc) - vz) < 3.0 * vz * std::sqrt(2.0 / n));
  // same law as the exact-Gaussian route
  CHECK(stats::ks_test_two_sample(inc, gau).p_value > 0.01);
  // Gaussian kurtosis within 10%
  CHECK(std::abs(stats::kurtosis(inc) - 3.0) < 0.3);
  // normality at the 1% level
  CHECK(stats::anderson_darling_normal(inc) < 1.035);
}

TEST_CASE("exact-Gaussian route rejects non-positive variance") {
  CHECK_THROWS_AS(simulate_z_gaussian(0.5, {0.5, 0.0}, 0.0, 1, 0), NumericalError);
}

TEST_CASE("variance_z: monotone in t, cross-checked against the K* route") {
  Fixture f;
  const Point x{0.5, 0.0};
  const double v1 = variance_z(f.eval, f.mesh, f.alpha, 0.25, x, f.h);
  const double v2 = variance_z(f.eval, f.mesh, f.alpha, 0.5, x, f.h);
  CHECK(v2 > v1);
  CHECK(variance_z(f.eval, f.mesh, alpha_zero(), 0.25, x, f.h) == 0.0);

  for (const Point& p : {Point{0.5, 0.0}, Point{0.0, 0.0}}) {
    const double a = variance_z(f.eval, f.mesh, f.alpha, 0.25, p, f.h);
    const double b = variance_z_kstar(f.eval, f.mesh, f.alpha, 0.25, p, f.h);
    CHECK(std::abs(a - b) / a < 0.01);
  }
}

TEST_CASE("variance_z is continuous across interior nodes under refinement") {
  Fixture f;
  double prev_jump = 1e9;
  for (int n : {8, 16, 32}) {
    double jump = 0.0;
    double last = variance_z(f.eval, f.mesh, f.alpha, 0.25, {0.25, 0.0}, f.h, 4, 10, 32);
    for (int i = 1; i <= n; ++i) {
      const double x = 0.25 + 0.5 * i / n;
      const double v = variance_z(f.eval, f.mesh, f.alpha, 0.25, {x, 0.0}, f.h, 4, 10, 32);
      jump = std::max(jump, std::abs(v - last));
      last = v;
    }
    CHECK(jump < prev_jump + 1e-12);
    prev_jump = jump;
  }
  CHECK(prev_jump < 0.02);
}

TEST_CASE("regularity probes: interior slope, trace moments, kurtosis") {
  Fixture f;
  RegularityConfig rc;
  rc.t = 0.25;
  rc.kurtosis_replicas = 4000;
  const auto reports = regularity_probes(f.eval, f.mesh, f.alpha, f.h, f.grid, rc);
  REQUIRE(reports.size() == 4);

  CHECK(reports[0].probe == "interior_variance_slope");
  CHECK(reports[0].slope > 1.8);
  CHECK(reports[0].slope < 2.2);

  CHECK(reports[1].satisfied);  // p = 2 trace moments
  CHECK(reports[2].satisfied);  // p = 4 trace moments
  for (double v : reports[1].values) CHECK(std::isfinite(v));

  CHECK(reports[3].satisfied);
  CHECK(std::abs(reports[3].slope - 3.0) < 0.3);
}

TEST_CASE("boundary trace variances agree at both endpoints for symmetric alpha") {
  Fixture f;
  const double v0 = variance_z(f.eval, f.mesh, f.alpha, 0.25, {0.0, 0.0}, f.h);
  const double v1 = variance_z(f.eval, f.mesh, f.alpha, 0.25, {1.0, 0.0}, f.h);
  CHECK(v0 == doctest::Approx(v1).epsilon(1e-10));
}

TEST_CASE("probe margin violations are configuration errors") {
  Fixture f;
  RegularityConfig rc;
  rc.t = 0.25;
  rc.interior_margin = 0.45;
  rc.separations = {0.4};
  CHECK_THROWS_AS(regularity_probes(f.eval, f.mesh, f.alpha, f.h, f.grid, rc), ConfigError);
}
