#include <doctest.h>

#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/malliavin.hpp"
#include "fbh/stats.hpp"
#include "support/oracles.hpp"

using namespace fbh;

namespace {

struct Fixture {
  DomainSpec dom = build_domain(DomainKind::Interval, 1.0, 1);
  TimeGrid grid = time_grid(0.5, 64);
  SMesh mesh = build_smesh(2);
  HurstParam h{0.75};
  std::shared_ptr<KernelEvaluator> eval = std::make_shared<KernelEvaluator>(dom, 128);
  KernelQuad kq{eval, grid};
  AlphaCoefficient alpha = AlphaCoefficient::one();
  SolverParams params;

  Fixture() { params.lambda = 100.0; }

  BoundaryField solve(const Nonlinearity& g, std::uint64_t seed) const {
    const auto path = sample_noise(mesh, grid, h, seed);
    return picard_boundary(kq, mesh, g, alpha, path, params).first;
  }
};

}  // namespace

TEST_CASE("dz field: sigma independence for constant alpha, integrand identity") {
  Fixture f;
  const double t = 0.5;
  const Point x{0.3, 0.0};
  const auto field = dz_field(f.eval, f.mesh, f.alpha, t, x);
  auto phi = phi_integrand(f.eval, f.mesh, f.alpha, t, x);
  for (std::size_t c = 0; c + 1 < field.cell_values.size(); ++c) {
    CHECK(field.cell_values[c][0] == doctest::Approx(field.cell_values[c][1]).epsilon(1e-14));
    // away from the singular end the cell average tracks the midpoint value
    const double mid = 0.5 * (field.r_edges[c] + field.r_edges[c + 1]);
    if (mid < 0.45)
      CHECK(field.cell_values[c][0] == doctest::Approx(phi(mid, 0)).epsilon(1e-3));
  }
}

TEST_CASE("causality: trajectories vanish for t < r") {
  Fixture f;
  const auto u = f.solve(Nonlinearity::tanh_g(), 41);
  DuSolver solver(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha);
  const auto du = solver.solve_boundary(u, 64, 0);
  for (std::size_t jr : {std::size_t(10), std::size_t(40)})
    for (std::size_t i = 0; i < jr; ++i)
      for (std::size_t a = 0; a < 2; ++a) CHECK(du.trajectory(jr, 0, i, a) == 0.0);
}

TEST_CASE("linear case: du equals the dz field to machine precision") {
  Fixture f;
  const auto u = f.solve(Nonlinearity::zero(), 42);
  DuSolver solver(f.kq, f.mesh, Nonlinearity::zero(), f.alpha);
  const auto du = solver.solve_boundary(u, 64, 0);
  const auto dz =
      dz_field(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0],
               std::vector<double>(f.grid.nodes.begin(), f.grid.nodes.end()));
  REQUIRE(du.cell_values.size() == dz.cell_values.size());
  for (std::size_t c = 0; c < du.cell_values.size(); ++c)
    for (std::size_t j = 0; j < f.mesh.size(); ++j)
      CHECK(du.cell_values[c][j] == doctest::Approx(dz.cell_values[c][j]).epsilon(1e-12));

  // RKHS norm equals the Gaussian variance when the partitions coincide
  const auto dzv = dz_field(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0],
                            variance_partition(0.5));
  const double nrm = h_norm_squared(dzv, f.h).value;
  const double vz = variance_z(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0], f.h);
  CHECK(std::abs(nrm - vz) <= 1e-6 * vz);
}

TEST_CASE("linear g: second-order field vanishes; g2-only request is rejected") {
  Fixture f;
  TimeGrid small = time_grid(0.5, 12);
  KernelQuad kq(f.eval, small);
  const auto path = sample_noise(f.mesh, small, f.h, 43);
  const auto g = Nonlinearity::linear(0.6);
  const auto u = picard_boundary(kq, f.mesh, g, f.alpha, path, f.params).first;
  DuSolver solver(kq, f.mesh, g, f.alpha);
  const auto d2 = solver.solve_second_order(u, 12, 0);
  for (const auto& row : d2.pair_values)
    for (double v : row) CHECK(std::abs(v) < 1e-14);

  Nonlinearity g1 = Nonlinearity::tanh_g();
  g1.tag = Smoothness::G1;
  DuSolver s1(kq, f.mesh, g1, f.alpha);
  CHECK_THROWS_AS(s1.solve_second_order(u, 12, 0), CapabilityError);
}

TEST_CASE("second-order field is symmetric under pair interchange") {
  Fixture f;
  TimeGrid small = time_grid(0.5, 12);
  KernelQuad kq(f.eval, small);
  const auto path = sample_noise(f.mesh, small, f.h, 44);
  const auto g = Nonlinearity::tanh_g();
  const auto u = picard_boundary(kq, f.mesh, g, f.alpha, path, f.params).first;
  DuSolver solver(kq, f.mesh, g, f.alpha);
  const auto d2 = solver.solve_second_order(u, 12, 0);
  const std::size_t n = d2.pair_values.size();
  double worst = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < p; ++q)
      worst = std::max(worst, std::abs(d2.pair_values[p][q] - d2.pair_values[q][p]));
  CHECK(worst < 1e-8);
  // and it is not identically zero for a genuinely nonlinear g
  double amax = 0.0;
  for (const auto& row : d2.pair_values)
    for (double v : row) amax = std::max(amax, std::abs(v));
  CHECK(amax > 1e-6);
}

TEST_CASE("adjoint fast path reproduces the forward marching cells") {
  Fixture f;
  const auto g = Nonlinearity::tanh_g();
  const auto u = f.solve(g, 45);
  DuSolver solver(f.kq, f.mesh, g, f.alpha);
  const auto forward = solver.solve_boundary(u, 64, 1);
  const auto adj = solver.target_cells_adjoint(u, 64, 1);
  for (std::size_t c = 0; c < adj.size(); ++c)
    for (std::size_t j = 0; j < f.mesh.size(); ++j)
      CHECK(adj[c][j] == doctest::Approx(forward.cell_values[c][j]).epsilon(1e-12));
}

TEST_CASE("perturbation oracle: Malliavin derivative vs Cameron-Martin differences") {
  Fixture f;
  NoiseSampler sampler(f.mesh, f.grid, f.h, 4711);
  const std::vector<std::pair<std::size_t, std::size_t>> tuples{{16, 0}, {32, 1}, {50, 0}};
  const auto res = malliavin_fd_check(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h,
                                      sampler, 0, 64, 0, tuples, 1e-3, f.params);
  REQUIRE(res.size() == 3);
  for (const auto& r : res) CHECK(r.relative_error < 5e-2);
}

TEST_CASE("h-norm of a piecewise-constant field matches the brute-force double sum") {
  SMesh mesh = build_smesh(2);
  HurstParam h(0.75);
  MalliavinField field;
  field.t_target = 1.0;
  field.mesh = mesh;
  field.r_edges = {0.0, 0.25, 0.5, 0.75, 1.0};
  field.cell_values = {{0.3, -0.1}, {1.0, 0.4}, {-0.5, 0.2}, {0.7, 0.9}};
  const double got = h_norm_squared(field, h).value;

  double ref = 0.0;
  for (std::size_t j = 0; j < 2; ++j)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k)
        ref += mesh.mu[j] * field.cell_values[i][j] * field.cell_values[k][j] *
               (h.h * (2 * h.h - 1)) *
               oracle::frac_mass_reference(h.h, 0.25 * i, 0.25 * (i + 1), 0.25 * k,
                                           0.25 * (k + 1));
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("h-norm of the zero field vanishes") {
  SMesh mesh = build_smesh(2);
  MalliavinField field;
  field.t_target = 1.0;
  field.mesh = mesh;
  field.r_edges = {0.0, 0.5, 1.0};
  field.cell_values = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK(h_norm_squared(field, HurstParam(0.75)).value == 0.0);
}

TEST_CASE("windowed norms: monotone in delta and bounded by the full norm") {
  Fixture f;
  const auto field = dz_field(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0]);
  const double full = h_norm_squared(field, f.h).value;
  double prev = 0.0;
  for (double dlt : {0.05, 0.1, 0.2, 0.4}) {
    const double w = h_norm_squared(field, f.h, dlt).value;
    CHECK(w >= prev);
    CHECK(w <= full * (1.0 + 1e-12));
    prev = w;
  }
  CHECK(h_norm_squared(field, f.h).quadrature_error_estimate < 0.01 * full);
  CHECK_THROWS_AS(h_norm_squared(field, f.h, -0.1), ConfigError);
}

TEST_CASE("small-window lower bound: slope near 2H-1, positive values") {
  const auto dom = build_domain(DomainKind::Interval, 0.5, 1);
  auto eval = std::make_shared<KernelEvaluator>(dom, 128);
  const auto mesh = build_smesh(2);
  const auto alpha = AlphaCoefficient::one();
  std::vector<double> deltas;
  for (int i = 0; i < 5; ++i) deltas.push_back(0.02 * std::pow(10.0, i / 4.0));
  for (double H : {0.6, 0.75}) {
    HurstParam h(H);
    const auto rep = lower_bound_probe(eval, mesh, alpha, 0.5, dom.boundary_nodes[0],
                                       deltas, h);
    CHECK(rep.satisfied);
    CHECK(std::abs(rep.slope - (2 * H - 1)) < 0.1);
    for (double v : rep.values) CHECK(v > 0.0);
    CHECK(!rep.unsupported_hypothesis);
  }
}

TEST_CASE("lower bound probe flags a degenerate alpha") {
  Fixture f;
  const auto rep = lower_bound_probe(f.eval, f.mesh, AlphaCoefficient::degenerate(), 0.5,
                                     f.dom.boundary_nodes[0], {0.05, 0.1, 0.2}, f.h);
  CHECK(rep.unsupported_hypothesis);
  CHECK_THROWS_AS(lower_bound_probe(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0],
                                    {0.3}, f.h),
                  ConfigError);
}

TEST_CASE("dg window decay: fitted exponent clears p(1-mu) - 0.2 and grows with p") {
  Fixture f;
  const std::vector<double> deltas{0.025, 0.05, 0.1, 0.2};
  const auto rep2 = dg_bound_probe(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h, 64,
                                   0, deltas, 2.0, 0.75, 120, 7);
  CHECK(rep2.satisfied);
  CHECK(rep2.slope >= 2.0 * 0.25 - 0.2);
  CHECK(!rep2.insufficient_data);
  const auto rep4 = dg_bound_probe(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h, 64,
                                   0, deltas, 4.0, 0.75, 120, 7);
  CHECK(rep4.slope > rep2.slope);
  const auto thin = dg_bound_probe(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h, 64,
                                   0, deltas, 2.0, 0.75, 50, 7);
  CHECK(thin.insufficient_data);
}

TEST_CASE("dg decay vanishes identically for zero nonlinearity") {
  Fixture f;
  const auto rep = dg_bound_probe(f.kq, f.mesh, Nonlinearity::zero(), f.alpha, f.h, 64, 0,
                                  {0.05, 0.1, 0.2}, 2.0, 0.75, 100, 7);
  for (double v : rep.values) CHECK(std::abs(v) < 1e-20);
}

TEST_CASE("nondegeneracy probabilities: monotone, zero at the smallest epsilon") {
  Fixture f;
  const auto rep = nondegeneracy_prob(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h,
                                      64, 0, {}, 1000, 9);
  CHECK(rep.satisfied);
  CHECK(rep.monotone);
  CHECK(rep.vanishes_at_smallest);
  CHECK(rep.probabilities.front() > 0.9);  // 2x the median catches most replicas
  CHECK(rep.median_norm > 0.0);
  CHECK(rep.dz_window_floor > 0.0);

  // deterministic linear case: the norm is a constant, thresholds are sharp
  const double vz = variance_z(f.eval, f.mesh, f.alpha, 0.5, f.dom.boundary_nodes[0], f.h);
  const auto lin = nondegeneracy_prob(f.kq, f.mesh, Nonlinearity::zero(), f.alpha, f.h, 64,
                                      0, {2.0 * vz, 0.5 * vz}, 1000, 9);
  CHECK(lin.probabilities[0] == 1.0);
  CHECK(lin.probabilities[1] == 0.0);

  CHECK_THROWS_AS(nondegeneracy_prob(f.kq, f.mesh, Nonlinearity::tanh_g(),
                                     AlphaCoefficient::degenerate(), f.h, 64, 0, {}, 1000, 9),
                  ConfigError);
  CHECK_THROWS_AS(
      nondegeneracy_prob(f.kq, f.mesh, Nonlinearity::tanh_g(), f.alpha, f.h, 64, 0, {}, 500, 9),
      ConfigError);
}

TEST_CASE("interior-target field: forcing matches dz at an interior point") {
  Fixture f;
  const auto u = f.solve(Nonlinearity::zero(), 46);
  DuSolver solver(f.kq, f.mesh, Nonlinearity::zero(), f.alpha);
  const Point x{0.35, 0.0};
  const auto du = solver.solve_interior(u, 64, x);
  const auto dz = dz_field(f.eval, f.mesh, f.alpha, 0.5, x,
                           std::vector<double>(f.grid.nodes.begin(), f.grid.nodes.end()));
  for (std::size_t c = 0; c < du.cell_values.size(); ++c)
    for (std::size_t j = 0; j < f.mesh.size(); ++j)
      CHECK(du.cell_values[c][j] == doctest::Approx(dz.cell_values[c][j]).epsilon(1e-12));
}

TEST_CASE("du_solve dispatch covers orders and targets") {
  Fixture f;
  TimeGrid small = time_grid(0.5, 12);
  KernelQuad kq(f.eval, small);
  const auto path = sample_noise(f.mesh, small, f.h, 47);
  const auto g = Nonlinearity::tanh_g();
  const auto u = picard_boundary(kq, f.mesh, g, f.alpha, path, f.params).first;
  const auto d1 = du_solve(kq, f.mesh, g, f.alpha, u, 1, MalliavinTarget::BoundaryU, 12, 0);
  CHECK(d1.order == 1);
  const auto d2 = du_solve(kq, f.mesh, g, f.alpha, u, 2, MalliavinTarget::BoundaryU, 12, 0);
  CHECK(d2.order == 2);
  const auto di =
      du_solve(kq, f.mesh, g, f.alpha, u, 1, MalliavinTarget::InteriorU, 12, 0, {0.4, 0.0});
  CHECK(di.target == MalliavinTarget::InteriorU);
  CHECK_THROWS_AS(du_solve(kq, f.mesh, g, f.alpha, u, 3, MalliavinTarget::BoundaryU, 12, 0),
                  ConfigError);
  CHECK_THROWS_AS(
      du_solve(kq, f.mesh, g, f.alpha, u, 2, MalliavinTarget::InteriorU, 12, 0, {0.4, 0.0}),
      CapabilityError);
}

TEST_CASE("second-order field matches the mixed Cameron-Martin difference") {
  // mixed second difference along two covariance representers vs the
  // covariance-smoothed pair field; nodal-cell convention limits the accuracy
  // to the scheme's singularity-limited order, so the gap shrinks with the grid
  Fixture f;
  const auto g = Nonlinearity::tanh_g();
  double prev = 1.0;
  for (int N : {24, 48}) {
    TimeGrid grid = time_grid(0.5, N);
    KernelQuad kq(f.eval, grid);
    NoiseSampler sampler(f.mesh, grid, f.h, 99);
    const auto base = sampler.sample(0);
    SolverParams sp = f.params;
    sp.tol = 1e-12;
    const auto u = picard_boundary(kq, f.mesh, g, f.alpha, base, sp).first;
    DuSolver solver(kq, f.mesh, g, f.alpha);
    const auto d2 = solver.solve_second_order(u, N, 0);
    const auto w = increment_covariance(grid, f.h);
    const std::size_t i1 = N / 4, j1 = 0, i2 = 7 * N / 12, j2 = 1;
    const auto dir1 = sampler.representer_direction(j1, i1);
    const auto dir2 = sampler.representer_direction(j2, i2);
    const double eps = 0.05;
    auto val = [&](double e1, double e2) {
      const auto p = NoiseSampler::shifted(NoiseSampler::shifted(base, dir1, e1), dir2, e2);
      return picard_boundary(kq, f.mesh, g, f.alpha, p, sp).first.at(N, 0);
    };
    const double fd =
        (val(eps, eps) - val(eps, -eps) - val(-eps, eps) + val(-eps, -eps)) / (4 * eps * eps);
    double pred = 0.0;
    const std::size_t ns = f.mesh.size();
    for (int ip = 0; ip < N; ++ip)
      for (int iq = 0; iq < N; ++iq)
        pred += d2.pair_values[ip * ns + j1][iq * ns + j2] * f.mesh.mu[j1] * w[ip][i1] *
                f.mesh.mu[j2] * w[iq][i2];
    const double rel = std::abs(fd - pred) / std::abs(fd);
    CHECK(rel < 0.2);
    CHECK(rel < prev);
    prev = rel;
  }
}
