#include "fbh/density.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "fbh/errors.hpp"
#include "fbh/parallel.hpp"
#include "fbh/stats.hpp"

namespace fbh {

SolutionEnsemble::SolutionEnsemble(std::shared_ptr<const KernelEvaluator> kernel,
                                   const TimeGrid& grid, const SMesh& mesh,
                                   const Nonlinearity& g, const AlphaCoefficient& alpha,
                                   HurstParam h, double t, const Point& x,
                                   std::uint64_t base_seed, SolverParams params)
    : kernel_(std::move(kernel)),
      mesh_(mesh),
      g_(g),
      alpha_(alpha),
      params_(params),
      kq_(kernel_, grid),
      sampler_(mesh, grid, h, base_seed),
      t_(t),
      x_(x) {
  params_.keep_history = false;
  g_.validate();
  t_index_ = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid.nodes[i] - t) < 1e-12) t_index_ = i;
  if (t_index_ >= grid.size()) throw ConfigError("ensemble target time must be a grid node");
  const DomainSpec& d = kernel_->domain();
  interior_ = true;
  for (std::size_t b = 0; b < d.n_boundary(); ++b)
    if (distance(d.boundary_nodes[b], x) < 1e-14) {
      interior_ = false;
      node_index_ = b;
    }
  z_scheme_ = build_boundary_z_scheme(kq_, mesh_, alpha_);
  if (interior_) {
    z_target_ = build_increment_scheme(kq_, mesh_, alpha_, t_index_, x);
    row_ = kq_.interior_row(x);
  }
}

double SolutionEnsemble::draw(std::uint64_t replica) const {
  const NoisePath path = sampler_.sample(replica);
  auto [field, report] = picard_boundary(kq_, mesh_, g_, alpha_, path, params_);
  (void)report;
  if (!interior_) return field.at(t_index_, node_index_);
  double acc = z_target_.apply(path);
  const DomainSpec& d = kernel_->domain();
  for (std::size_t k = 0; k < t_index_; ++k) {
    const int m = static_cast<int>(t_index_ - 1 - k);
    for (std::size_t b = 0; b < d.n_boundary(); ++b)
      acc += d.boundary_weights[b] * (row_.a_hi(m, b) * g_.g(field.at(k, b)) +
                                      row_.a_lo(m, b) * g_.g(field.at(k + 1, b)));
  }
  return acc;
}

SolutionEnsemble::Result SolutionEnsemble::run(int n_samples) const {
  if (n_samples < 100) throw ConfigError("ensemble needs n_samples >= 100");
  Result res;
  res.requested = n_samples;
  std::vector<double> vals(n_samples);
  std::vector<unsigned char> failed(n_samples, 0);
  par::for_index(static_cast<std::size_t>(n_samples), [&](std::size_t r) {
    try {
      vals[r] = draw(r);
    } catch (const std::exception&) {
      failed[r] = 1;
    }
  });
  for (int r = 0; r < n_samples; ++r) {
    if (failed[r]) {
      ++res.failures;
    } else {
      res.samples.push_back(vals[r]);
    }
  }
  if (res.failures > 0.01 * n_samples)
    throw NumericalError("ensemble failure rate exceeds 1% (" +
                         std::to_string(res.failures) + "/" + std::to_string(n_samples) +
                         ")");
  return res;
}

double DensityEstimate::integral() const {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < eval_grid.size(); ++i)
    acc += 0.5 * (values[i] + values[i + 1]) * (eval_grid[i + 1] - eval_grid[i]);
  return acc;
}

DensityEstimate kde(const std::vector<double>& samples, double bandwidth_override,
                    int grid_points) {
  if (samples.size() < 100) throw ConfigError("kde needs at least 100 samples");
  const double m = stats::mean(samples);
  const double var = stats::variance(samples);
  if (!(var > 0.0)) throw NumericalError("kde: degenerate (zero-variance) sample set");
  const double sd = std::sqrt(var);
  DensityEstimate est;
  est.n_samples = static_cast<int>(samples.size());
  est.bandwidth = bandwidth_override > 0.0
                      ? bandwidth_override
                      : 1.06 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
  est.eval_grid.resize(grid_points);
  est.values.assign(grid_points, 0.0);
  for (int i = 0; i < grid_points; ++i)
    est.eval_grid[i] = m - 5.0 * sd + 10.0 * sd * i / (grid_points - 1);
  const double inv = 1.0 / (samples.size() * est.bandwidth);
  par::for_index(static_cast<std::size_t>(grid_points), [&](std::size_t i) {
    double acc = 0.0;
    for (double s : samples) acc += stats::normal_pdf((est.eval_grid[i] - s) / est.bandwidth);
    est.values[i] = acc * inv;
  });
  return est;
}

DensityComparison density_compare(const DensityEstimate& estimate,
                                  const std::vector<double>& samples,
                                  double oracle_variance) {
  if (!(oracle_variance > 0.0)) throw ConfigError("density_compare needs a positive variance");
  const double sd = std::sqrt(oracle_variance);
  DensityComparison cmp;
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < estimate.eval_grid.size(); ++i) {
    const double a = estimate.eval_grid[i], b = estimate.eval_grid[i + 1];
    const double fa = std::abs(estimate.values[i] - stats::normal_pdf(a / sd) / sd);
    const double fb = std::abs(estimate.values[i + 1] - stats::normal_pdf(b / sd) / sd);
    l1 += 0.5 * (fa + fb) * (b - a);
  }
  cmp.l1_error = l1;
  const auto ks = stats::ks_test_gaussian(samples, oracle_variance);
  cmp.ks_stat = ks.statistic;
  cmp.ks_p_value = ks.p_value;
  return cmp;
}

}  // namespace fbh
