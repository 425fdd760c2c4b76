#include <doctest.h>

#include <cmath>

#include "fbh/density.hpp"
#include "fbh/parallel.hpp"

using namespace fbh;

// The OpenMP kernels parallelize over replicas or table entries with each
// index owning its outputs, so the serial reference path (jobs = 1) must be
// bit-identical to any parallel schedule.

namespace {

struct JobGuard {
  int saved;
  explicit JobGuard(int jobs) : saved(par::job_limit()) { par::set_jobs(jobs); }
  ~JobGuard() { par::set_jobs(saved); }
};

}  // namespace

TEST_CASE("parallel for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  par::for_index(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("replica ensembles: serial reference equals the OpenMP sweep") {
  const auto dom = build_domain(DomainKind::Interval, 1.0, 1);
  const auto grid = time_grid(0.5, 48);
  const auto mesh = build_smesh(2);
  HurstParam h(0.75);
  auto eval = std::make_shared<KernelEvaluator>(dom, 128);
  SolverParams sp;
  sp.lambda = 100.0;
  SolutionEnsemble ens(eval, grid, mesh, Nonlinearity::tanh_g(), AlphaCoefficient::one(), h,
                       0.5, {0.5, 0.0}, 99, sp);
  std::vector<double> serial, parallel;
  {
    JobGuard guard(1);
    serial = ens.run(400).samples;
  }
  {
    JobGuard guard(4);
    parallel = ens.run(400).samples;
  }
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("kernel tabulation: serial reference equals the OpenMP build") {
  const auto dom = build_domain(DomainKind::Interval, 1.0, 1);
  SpectralKernel spec(dom, 128);
  std::vector<Point> sources;
  for (int i = 0; i <= 20; ++i) sources.push_back({i / 20.0, 0.0});
  const auto a = tabulate_kernel(spec, {0.02, 0.05, 0.1}, sources, 1);
  const auto b = tabulate_kernel(spec, {0.02, 0.05, 0.1}, sources, 4);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("nondegeneracy sweep: thread count does not change the report") {
  const auto dom = build_domain(DomainKind::Interval, 1.0, 1);
  const auto grid = time_grid(0.5, 32);
  const auto mesh = build_smesh(2);
  HurstParam h(0.75);
  auto eval = std::make_shared<KernelEvaluator>(dom, 128);
  KernelQuad kq(eval, grid);
  DecayReport r1, r4;
  {
    JobGuard guard(1);
    r1 = nondegeneracy_prob(kq, mesh, Nonlinearity::tanh_g(), AlphaCoefficient::one(), h,
                            32, 0, {}, 1000, 5);
  }
  {
    JobGuard guard(4);
    r4 = nondegeneracy_prob(kq, mesh, Nonlinearity::tanh_g(), AlphaCoefficient::one(), h,
                            32, 0, {}, 1000, 5);
  }
  CHECK(r1.median_norm == r4.median_norm);
  REQUIRE(r1.probabilities.size() == r4.probabilities.size());
  for (std::size_t i = 0; i < r1.probabilities.size(); ++i)
    CHECK(r1.probabilities[i] == r4.probabilities[i]);
}
