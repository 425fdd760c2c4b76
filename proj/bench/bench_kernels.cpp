// Timing comparison of the serial reference paths (jobs = 1) against the
// OpenMP sweeps for the replica-parallel kernels. Results are identical by
// construction; this measures the speedup only.

#include <chrono>
#include <cstdio>
#include <string>

#include "fbh/density.hpp"
#include "fbh/malliavin.hpp"
#include "fbh/parallel.hpp"

using namespace fbh;

namespace {

double timed(const std::string& name, int jobs, const std::function<void()>& fn) {
  par::set_jobs(jobs);
  const auto start = std::chrono::steady_clock::now();
  fn();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  par::set_jobs(0);
  std::printf("  %-34s jobs=%d  %8.3f s\n", name.c_str(), jobs, secs);
  return secs;
}

}  // namespace

int main() {
  const auto dom = build_domain(DomainKind::Interval, 1.0, 1);
  const auto grid = time_grid(0.5, 96);
  const auto mesh = build_smesh(2);
  HurstParam h(0.75);
  auto eval = std::make_shared<KernelEvaluator>(dom, 128);
  const auto alpha = AlphaCoefficient::one();
  SolverParams sp;
  sp.lambda = 100.0;
  const int threads = par::effective_jobs();
  std::printf("available threads: %d\n", threads);

  {
    std::printf("noise replica sweep (4000 paths):\n");
    NoiseSampler sampler(mesh, grid, h, 1);
    KernelQuad kq(eval, grid);
    auto scheme = build_increment_scheme(kq, mesh, alpha, 96, {0.5, 0.0});
    auto work = [&] {
      std::vector<double> out(4000);
      par::for_index(out.size(),
                     [&](std::size_t r) { out[r] = scheme.apply(sampler.sample(r)); });
    };
    const double ts = timed("increment-route ensemble", 1, work);
    const double tp = timed("increment-route ensemble", threads, work);
    std::printf("  speedup %.2fx\n", ts / tp);
  }
  {
    std::printf("kernel tabulation (5 times x 65 sources):\n");
    SpectralKernel spec(dom, 160);
    std::vector<Point> sources;
    for (int i = 0; i <= 64; ++i) sources.push_back({i / 64.0, 0.0});
    auto work_jobs = [&](int jobs) {
      (void)tabulate_kernel(spec, {0.01, 0.02, 0.05, 0.1, 0.2}, sources, jobs);
    };
    const double ts = timed("spectral table", 1, [&] { work_jobs(1); });
    const double tp = timed("spectral table", threads, [&] { work_jobs(threads); });
    std::printf("  speedup %.2fx\n", ts / tp);
  }
  {
    std::printf("solution ensemble (2000 Picard solves):\n");
    SolutionEnsemble ens(eval, grid, mesh, Nonlinearity::tanh_g(), alpha, h, 0.5, {0.5, 0.0},
                         2, sp);
    auto work = [&] { (void)ens.run(2000); };
    const double ts = timed("picard ensemble", 1, work);
    const double tp = timed("picard ensemble", threads, work);
    std::printf("  speedup %.2fx\n", ts / tp);
  }
  {
    std::printf("Malliavin norm sweep (2000 replicas):\n");
    KernelQuad kq(eval, grid);
    auto work = [&] {
      (void)nondegeneracy_prob(kq, mesh, Nonlinearity::tanh_g(), alpha, h, 96, 0, {}, 2000, 3);
    };
    const double ts = timed("du norm sweep", 1, work);
    const double tp = timed("du norm sweep", threads, work);
    std::printf("  speedup %.2fx\n", ts / tp);
  }
  return 0;
}
