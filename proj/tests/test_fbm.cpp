#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/fbm.hpp"
#include "fbh/rng.hpp"
#include "fbh/stats.hpp"
#include "support/oracles.hpp"

using namespace fbh;

TEST_CASE("covariance function R_H") {
  HurstParam h(0.75);
  CHECK(cov_rh(h, 0.7, 0.7) == doctest::Approx(std::pow(0.7, 1.5)).epsilon(1e-14));
  // Brownian case reduces to min(s,t)
  HurstParam bm(0.5);
  CHECK(cov_rh(bm, 0.3, 0.8) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(cov_rh(bm, 1.2, 0.4) == doctest::Approx(0.4).epsilon(1e-14));
  // (1 + 2^{3/2} - 1)/2 = sqrt(2)
  CHECK(cov_rh(h, 1.0, 2.0) == doctest::Approx(1.4142136).epsilon(1e-7));
  CHECK_THROWS_AS(cov_rh(h, -1.0, 0.5), ConfigError);
}

TEST_CASE("normalizing constant C_H") {
  CHECK(c_h_const(HurstParam(0.5)) == doctest::Approx(1.0).epsilon(1e-14));
  // reference value from Gamma(3/4) = 1.2254167024651776, Gamma(5/4) =
  // 0.9064024770554770, Gamma(1/2) = sqrt(pi)
  const double ref = std::sqrt(1.5 * 1.2254167024651776 /
                               (0.9064024770554770 * 1.7724538509055160));
  CHECK(c_h_const(HurstParam(0.75)) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::isfinite(c_h_const(HurstParam(0.99))));
  CHECK_THROWS_AS(c_h_const(HurstParam(0.995)), ConfigError);
}

TEST_CASE("square-integrable kernel K_H") {
  CHECK(k_h_kernel(HurstParam(0.5), 1.0, 0.3) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k_h_kernel(HurstParam(0.5), 0.9, 0.899) == doctest::Approx(1.0).epsilon(1e-14));

  // adaptive-quadrature reference for the inner integral at H = 3/4; the
  // integrand is continuous (vanishes like (u-s)^{H-1/2} at u = s)
  HurstParam h(0.75);
  const double H = h.h, t = 1.0, s = 0.5;
  const double ch = c_h_const(h);
  const double inner = oracle::adaptive_simpson(
      [&](double u) {
        return std::pow(u - s, H - 1.5) * (1.0 - std::pow(s / u, 0.5 - H));
      },
      s + 1e-13, t, 1e-12, 48);
  const double ref = ch * std::pow(t - s, H - 0.5) + ch * (0.5 - H) * inner;
  CHECK(k_h_kernel(h, t, s) == doctest::Approx(ref).epsilon(1e-6));

  // s -> t: kernel vanishes for H > 1/2 (at the slow rate (t-s)^{H-1/2})
  const double near1 = k_h_kernel(h, 1.0, 1.0 - 1e-2);
  const double near2 = k_h_kernel(h, 1.0, 1.0 - 1e-4);
  const double near3 = k_h_kernel(h, 1.0, 1.0 - 1e-6);
  CHECK(near2 < near1);
  CHECK(near3 < near2);
  CHECK(near3 < 0.05);
  CHECK_THROWS_AS(k_h_kernel(h, 0.5, 0.5), ConfigError);
  CHECK_THROWS_AS(k_h_kernel(h, 0.5, 0.7), ConfigError);
}

TEST_CASE("exact fractional cell masses against an adaptive reference") {
  for (double H : {0.6, 0.75, 0.9}) {
    HurstParam h(H);
    const double cells[][4] = {
        {0.0, 0.25, 0.0, 0.25}, {0.0, 0.25, 0.25, 0.5}, {0.1, 0.3, 0.6, 0.95}};
    for (const auto& c : cells) {
      const double got = frac_cell_mass(h, c[0], c[1], c[2], c[3]);
      const double alpha_h = H * (2.0 * H - 1.0);
      const double ref = alpha_h * oracle::frac_mass_reference(H, c[0], c[1], c[2], c[3]);
      CHECK(got == doctest::Approx(ref).epsilon(1e-9));
    }
  }
  // overlap length in the Brownian limit
  HurstParam bm(0.5);
  CHECK(frac_cell_mass(bm, 0.0, 1.0, 0.25, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(frac_cell_mass(bm, 0.0, 0.25, 0.5, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("noise sampling: determinism and path structure") {
  const auto mesh = build_smesh(3);
  const auto grid = time_grid(1.0, 16);
  HurstParam h(0.75);
  const auto a = sample_noise(mesh, grid, h, 99, 7);
  const auto b = sample_noise(mesh, grid, h, 99, 7);
  for (std::size_t j = 0; j < mesh.size(); ++j) {
    CHECK(a.values[j][0] == 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.values[j][i] == b.values[j][i]);
  }
  const auto c = sample_noise(mesh, grid, h, 100, 7);
  CHECK(a.values[0][5] != c.values[0][5]);
}

TEST_CASE("noise sampling: empirical variance and covariance within 3 s.e.") {
  const auto mesh = build_smesh(2);
  const auto grid = time_grid(1.0, 8);
  const int n = 10000;
  for (double H : {0.5, 0.75}) {
    HurstParam h(H);
    NoiseSampler sampler(mesh, grid, h, 4242);
    std::vector<double> v1(n), prod(n);
    for (int r = 0; r < n; ++r) {
      const auto p = sampler.sample(r);
      v1[r] = p.values[0][8];              // B(sigma_0, 1.0)
      prod[r] = p.values[0][8] * p.values[0][4];  // B(1.0) B(0.5)
    }
    const double mu0 = mesh.mu[0];
    const double var_target = mu0 * std::pow(1.0, 2.0 * H);
    const double se_var = var_target * std::sqrt(2.0 / n);
    CHECK(std::abs(stats::variance(v1) - var_target) < 3.0 * se_var);

    const double cov_target = mu0 * cov_rh(h, 1.0, 0.5);
    const double var_prod =
        mu0 * mu0 * (cov_rh(h, 1.0, 1.0) * cov_rh(h, 0.5, 0.5) + std::pow(cov_rh(h, 1.0, 0.5), 2));
    const double se_cov = std::sqrt(var_prod / n);
    CHECK(std::abs(stats::mean(prod) - cov_target) < 3.0 * se_cov);
  }
}

TEST_CASE("noise sampling: distinct cells are uncorrelated") {
  const auto mesh = build_smesh(2);
  const auto grid = time_grid(1.0, 4);
  HurstParam h(0.75);
  NoiseSampler sampler(mesh, grid, h, 11);
  const int n = 10000;
  std::vector<double> prod(n);
  for (int r = 0; r < n; ++r) {
    const auto p = sampler.sample(r);
    prod[r] = p.values[0][4] * p.values[1][4];
  }
  const double se = mesh.mu[0] * std::sqrt(1.0 / n);  // Var(XY) = mu0 mu1 for indep
  CHECK(std::abs(stats::mean(prod)) < 3.0 * se);
}

TEST_CASE("brownian sampling has uncorrelated increments") {
  const auto mesh = build_smesh(1);
  const auto grid = time_grid(1.0, 8);
  HurstParam h(0.5);
  NoiseSampler sampler(mesh, grid, h, 2025);
  const int n = 10000;
  std::vector<double> prod(n);
  for (int r = 0; r < n; ++r) {
    const auto p = sampler.sample(r);
    prod[r] = p.increment(0, 2) * p.increment(0, 5);
  }
  const double dt = grid.dt();
  const double se = dt * std::sqrt(1.0 / n);
  CHECK(std::abs(stats::mean(prod)) < 3.0 * se);
}

TEST_CASE("K* transform: isometry on the unit indicator and trivial cases") {
  HurstParam h(0.75);
  const double iso = kstar_squared_integral([](double) { return 1.0; }, 1.0, h);
  CHECK(iso > 0.99);
  CHECK(iso < 1.01);

  auto zero = kstar_transform([](double) { return 0.0; }, 1.0, h);
  CHECK(zero(0.3) == 0.0);
  auto one = kstar_transform([](double) { return 1.0; }, 0.7, h);
  CHECK(one(0.7) == 0.0);
  CHECK(one(0.9) == 0.0);
  CHECK_THROWS_AS(kstar_transform([](double) { return 1.0; }, 1.0, HurstParam(0.5)),
                  ConfigError);
}

TEST_CASE("K* of the indicator reproduces K_H") {
  HurstParam h(0.75);
  auto ks = kstar_transform([](double) { return 1.0; }, 1.0, h);
  for (double s : {0.2, 0.5, 0.8})
    CHECK(ks(s) == doctest::Approx(k_h_kernel(h, 1.0, s)).epsilon(1e-6));
}

TEST_CASE("H inner product: covariance identity, symmetry, linearity") {
  HurstParam h(0.75);
  const auto mesh = build_smesh(1);
  const auto grid = time_grid(1.0, 16);
  auto one = [](double, std::size_t) { return 1.0; };
  const double v = h_inner(one, one, mesh, grid, h);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-3));

  auto zero = [](double, std::size_t) { return 0.0; };
  CHECK(h_inner(zero, one, mesh, grid, h) == 0.0);

  auto f = [](double s, std::size_t) { return std::sin(3.0 * s) + 0.2; };
  auto g = [](double s, std::size_t) { return std::exp(-s); };
  const double fg = h_inner(f, g, mesh, grid, h);
  const double gf = h_inner(g, f, mesh, grid, h);
  CHECK(fg == doctest::Approx(gf).epsilon(1e-15));

  auto f2 = [&](double s, std::size_t j) { return 2.0 * f(s, j); };
  CHECK(h_inner(f2, g, mesh, grid, h) == doctest::Approx(2.0 * fg).epsilon(1e-12));
}

TEST_CASE("indicator Gram matrix is positive semidefinite") {
  HurstParam h(0.75);
  const auto mesh = build_smesh(2);
  const auto grid = time_grid(1.0, 8);
  std::vector<std::function<double(double, std::size_t)>> basis;
  for (int i = 1; i <= 4; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      basis.push_back([i, j](double s, std::size_t jj) {
        return (jj == j && s <= 0.25 * i) ? 1.0 : 0.0;
      });
  const std::size_t n = basis.size();
  Eigen::MatrixXd gram(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c <= r; ++c) {
      const double v = h_inner(basis[r], basis[c], mesh, grid, h);
      gram(r, c) = v;
      gram(c, r) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("isometry: K* route equals the H inner product on smooth integrands") {
  HurstParam h(0.75);
  const auto mesh = build_smesh(1);
  const auto grid = time_grid(1.0, 32);
  GaussianStream rng(31415);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = 0.5 + 0.3 * rng.uniform();
    const double b = 2.0 + 3.0 * rng.uniform();
    const double c = rng.uniform();
    auto f = [a, b, c](double s) { return a + 0.4 * std::sin(b * s + c); };
    auto f2 = [f](double s, std::size_t) { return f(s); };
    const double lhs = kstar_squared_integral(f, 1.0, h);
    const double rhs = h_inner(f2, f2, mesh, grid, h, 8);
    CHECK(std::abs(lhs - rhs) / rhs < 0.01);
  }
}

TEST_CASE("path restriction keeps nodes and the law on the coarse grid") {
  const auto mesh = build_smesh(1);
  const auto grid = time_grid(1.0, 16);
  HurstParam h(0.75);
  const auto p = sample_noise(mesh, grid, h, 5);
  const auto q = p.restrict(4);
  CHECK(q.grid.n_steps == 4);
  for (int i = 0; i <= 4; ++i) CHECK(q.values[0][i] == p.values[0][4 * i]);
  CHECK_THROWS_AS(p.restrict(3), ConfigError);
}

TEST_CASE("hurst parameter domain") {
  CHECK_THROWS_AS(HurstParam(0.49), ConfigError);
  CHECK_THROWS_AS(HurstParam(1.0), ConfigError);
  CHECK_NOTHROW(HurstParam(0.5));
  CHECK_THROWS_AS(HurstParam(0.5).require_rough(), ConfigError);
}
