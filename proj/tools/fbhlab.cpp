#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "fbh/config.hpp"
#include "fbh/density.hpp"
#include "fbh/io.hpp"
#include "fbh/malliavin.hpp"
#include "fbh/parallel.hpp"
#include "fbh/parametrix.hpp"
#include "fbh/quadrature.hpp"
#include "fbh/stats.hpp"

using nlohmann::json;
using namespace fbh;

namespace {

struct RunContext {
  RunConfig config;
  std::string out_dir;
  DomainSpec domain;
  TimeGrid grid;
  SMesh mesh;
  HurstParam hurst{0.75};
  AlphaCoefficient alpha;
  Nonlinearity g;
  std::shared_ptr<const KernelEvaluator> kernel;
  SolverParams solver;
};

RunContext make_context(const RunConfig& cfg) {
  RunContext ctx{cfg, cfg.str("output.dir"), {}, {}, {}, HurstParam(cfg.num("noise.hurst")),
                 {}, {}, nullptr, {}};
  if (const char* env = std::getenv("FBH_OUTPUT_DIR")) ctx.out_dir = env;
  ctx.domain = build_domain(cfg.domain_kind(), cfg.num("domain.beta"),
                            cfg.integer("domain.boundary_resolution"));
  ctx.grid = time_grid(cfg.num("time.horizon"), cfg.integer("time.steps"));
  ctx.mesh = build_smesh(cfg.integer("noise.s_cells"));
  ctx.alpha = AlphaCoefficient::by_name(cfg.str("alpha.kind"));
  ctx.alpha.tag = cfg.str("alpha.tag") == "a1p" ? AlphaTag::A1Prime : AlphaTag::A1;
  ctx.alpha.theta = cfg.num("alpha.theta");
  ctx.alpha.validate(ctx.domain, ctx.mesh, ctx.hurst.h);
  ctx.g = Nonlinearity::by_name(cfg.str("g.kind"), cfg.num("g.param"));
  ctx.kernel = std::make_shared<KernelEvaluator>(ctx.domain);
  ctx.solver.tol = cfg.num("solver.tol");
  ctx.solver.max_iter = cfg.integer("solver.max_iter");
  ctx.solver.lambda = cfg.num("solver.lambda");
  ctx.solver.p = cfg.num("solver.p");
  ctx.solver.mu = cfg.num("solver.mu");
  return ctx;
}

std::size_t grid_index(const TimeGrid& grid, double t) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid.nodes[i] - t) < 1e-12) return i;
  throw ConfigError("probe.t must be a grid node");
}

int run_kernel(const RunContext& ctx) {
  const auto& d = ctx.domain;
  std::vector<double> times{0.02, 0.05, 0.1, 0.2};
  std::vector<Point> sources;
  std::vector<double> source_coord;
  if (d.kind == DomainKind::Interval) {
    for (int i = 0; i <= 10; ++i) {
      sources.push_back({i / 10.0, 0.0});
      source_coord.push_back(i / 10.0);
    }
  } else {
    for (std::size_t b = 0; b < d.n_boundary(); ++b) {
      sources.push_back(d.boundary_nodes[b]);
      source_coord.push_back(d.boundary_arc[b]);
    }
  }
  SpectralKernel spec(d, 160);
  auto table = tabulate_kernel(spec, times, sources);
  CsvWriter csv(ctx.out_dir + "/kernel.csv", {"method", "t", "x", "ybar", "value"});
  for (std::size_t it = 0; it < times.size(); ++it)
    for (std::size_t ix = 0; ix < sources.size(); ++ix)
      for (std::size_t ib = 0; ib < d.n_boundary(); ++ib)
        csv.row_mixed({"spectral", fmt_double(times[it]), fmt_double(source_coord[ix]),
                       fmt_double(d.boundary_arc[ib]), fmt_double(table.at(it, ix, ib))});
  if (d.kind == DomainKind::Interval) {
    ParametrixKernel par(d, 0.25, 6, 400);
    for (double t : times) {
      if (t > par.t_max()) continue;
      for (std::size_t ix = 0; ix < sources.size(); ++ix)
        for (std::size_t ib = 0; ib < d.n_boundary(); ++ib)
          csv.row_mixed({"parametrix", fmt_double(t), fmt_double(source_coord[ix]),
                         fmt_double(d.boundary_arc[ib]),
                         fmt_double(par.value(t, sources[ix].x, d.boundary_nodes[ib].x, 6))});
    }
  }
  return exit_ok;
}

int run_convolve(const RunContext& ctx) {
  const double t = ctx.config.num("probe.t");
  const Point x{ctx.config.num("probe.x"),
                ctx.domain.kind == DomainKind::Rectangle ? ctx.config.num("probe.x") : 0.0};
  const int replicas = ctx.config.integer("probe.replicas");
  const std::uint64_t seed = ctx.config.uinteger("noise.seed");
  const std::size_t ti = grid_index(ctx.grid, t);

  KernelQuad kq(ctx.kernel, ctx.grid);
  auto scheme = build_increment_scheme(kq, ctx.mesh, ctx.alpha, ti, x);
  NoiseSampler sampler(ctx.mesh, ctx.grid, ctx.hurst, seed);
  const double vz = variance_z(ctx.kernel, ctx.mesh, ctx.alpha, t, x, ctx.hurst);

  std::vector<double> inc(replicas), gau(replicas);
  par::for_index(static_cast<std::size_t>(replicas), [&](std::size_t r) {
    inc[r] = simulate_z(scheme, sampler.sample(r), x).value;
    gau[r] = simulate_z_gaussian(t, x, vz, seed, r).value;
  });
  write_noise_csv(ctx.out_dir + "/noise.csv", sampler.sample(0));
  CsvWriter csv(ctx.out_dir + "/convolve.csv", {"replica", "t", "x", "route", "value"});
  for (int r = 0; r < replicas; ++r)
    csv.row_mixed({std::to_string(r), fmt_double(t), fmt_double(x.x), "increment",
                   fmt_double(inc[r])});
  for (int r = 0; r < replicas; ++r)
    csv.row_mixed({std::to_string(r), fmt_double(t), fmt_double(x.x), "exact_gaussian",
                   fmt_double(gau[r])});

  RegularityConfig rc;
  rc.t = t;
  rc.interior_margin = ctx.config.num("probe.interior_margin");
  rc.kurtosis_replicas = replicas;
  rc.seed = seed;
  const auto probes =
      regularity_probes(ctx.kernel, ctx.mesh, ctx.alpha, ctx.hurst, ctx.grid, rc);
  json jp = json::array();
  bool all_ok = true;
  for (const auto& p : probes) {
    jp.push_back({{"probe", p.probe},
                  {"params", {{"t", t}, {"hurst", ctx.hurst.h}, {"alpha", ctx.alpha.name}}},
                  {"slope", p.slope},
                  {"abscissae", p.abscissae},
                  {"values", p.values},
                  {"satisfied", p.satisfied},
                  {"note", p.note}});
    all_ok = all_ok && p.satisfied;
  }
  const auto ks = stats::ks_test_two_sample(inc, gau);
  json jr = {{"probes", jp},
             {"variance_exact", vz},
             {"variance_empirical", stats::variance(inc)},
             {"two_route_ks_stat", ks.statistic},
             {"two_route_ks_p", ks.p_value}};
  write_text_file(ctx.out_dir + "/convolve_report.json", jr.dump(2) + "\n");
  return all_ok && ks.p_value > 0.01 ? exit_ok : exit_probe_failure;
}

int run_solve(const RunContext& ctx) {
  const std::uint64_t seed = ctx.config.uinteger("noise.seed");
  KernelQuad kq(ctx.kernel, ctx.grid);
  NoiseSampler sampler(ctx.mesh, ctx.grid, ctx.hurst, seed);
  const NoisePath path = sampler.sample(0);
  auto [field, report] = picard_boundary(kq, ctx.mesh, ctx.g, ctx.alpha, path, ctx.solver);

  CsvWriter csv(ctx.out_dir + "/boundary.csv", {"time", "node", "value"});
  for (std::size_t i = 0; i < ctx.grid.size(); ++i)
    for (std::size_t a = 0; a < ctx.domain.n_boundary(); ++a)
      csv.row({ctx.grid.nodes[i], ctx.domain.boundary_arc[a], field.at(i, a)});

  const Point x{ctx.config.num("probe.x"),
                ctx.domain.kind == DomainKind::Rectangle ? ctx.config.num("probe.x") : 0.0};
  CsvWriter icsv(ctx.out_dir + "/interior.csv", {"t", "x", "value", "seed"});
  for (std::size_t i = ctx.grid.size() / 4; i < ctx.grid.size(); i += ctx.grid.size() / 4) {
    const double u =
        interior_solution(field, kq, ctx.mesh, ctx.g, ctx.alpha, path, ctx.grid.nodes[i], x);
    icsv.row_mixed({fmt_double(ctx.grid.nodes[i]), fmt_double(x.x), fmt_double(u),
                    std::to_string(seed)});
  }

  auto diag = contraction_diagnostics(report, ctx.grid, ctx.domain, ctx.solver.p,
                                      {1.0, 10.0, 100.0});
  json jd = json::array();
  for (const auto& row : diag.rows)
    jd.push_back({{"lambda", row.lambda},
                  {"factors", row.factors},
                  {"mean_factor", row.mean_factor},
                  {"max_factor_tail", row.max_factor_tail}});
  json jr = {{"iterates", report.iterates},
             {"increment_norms", report.increment_norms},
             {"lambda", report.lambda},
             {"converged", report.converged},
             {"diagnostics",
              {{"rows", jd},
               {"lambda_exponent", diag.lambda_exponent},
               {"contracting_at_largest", diag.contracting_at_largest},
               {"factor_decreasing", diag.factor_decreasing}}}};
  write_text_file(ctx.out_dir + "/picard_report.json", jr.dump(2) + "\n");
  return exit_ok;
}

int run_malliavin(const RunContext& ctx) {
  const std::uint64_t seed = ctx.config.uinteger("noise.seed");
  const std::size_t ti = ctx.grid.n_steps;
  KernelQuad kq(ctx.kernel, ctx.grid);
  NoiseSampler sampler(ctx.mesh, ctx.grid, ctx.hurst, seed);
  auto [field, report] =
      picard_boundary(kq, ctx.mesh, ctx.g, ctx.alpha, sampler.sample(0), ctx.solver);
  (void)report;
  DuSolver solver(kq, ctx.mesh, ctx.g, ctx.alpha);
  const auto du = solver.solve_boundary(field, ti, 0);

  CsvWriter csv(ctx.out_dir + "/malliavin.csv", {"r", "sigma", "t", "xi", "value", "order"});
  for (std::size_t jr = 0; jr < ti; ++jr)
    for (std::size_t j = 0; j < ctx.mesh.size(); ++j)
      for (std::size_t i = jr; i <= ti; ++i)
        for (std::size_t a = 0; a < ctx.domain.n_boundary(); ++a)
          csv.row_mixed({fmt_double(ctx.grid.nodes[jr]), fmt_double(ctx.mesh.sigma[j]),
                         fmt_double(ctx.grid.nodes[i]),
                         fmt_double(ctx.domain.boundary_arc[a]),
                         fmt_double(du.trajectory(jr, j, i, a)), "1"});

  const double t = ctx.grid.horizon;
  std::vector<double> deltas;
  for (int i = 0; i < 5; ++i)
    deltas.push_back(0.02 * t * std::pow(10.0, static_cast<double>(i) / 4.0));
  const auto lb = lower_bound_probe(ctx.kernel, ctx.mesh, ctx.alpha, t,
                                    ctx.domain.boundary_nodes[0], deltas, ctx.hurst);
  const int dg_reps = std::min(500, ctx.config.integer("probe.replicas"));
  const auto dg = dg_bound_probe(kq, ctx.mesh, ctx.g, ctx.alpha, ctx.hurst, ti, 0,
                                 {0.05 * t, 0.1 * t, 0.2 * t, 0.4 * t}, ctx.solver.p,
                                 ctx.solver.mu, dg_reps, seed + 1);
  const int nd_reps = std::max(1000, ctx.config.integer("probe.replicas"));
  const auto nd = nondegeneracy_prob(kq, ctx.mesh, ctx.g, ctx.alpha, ctx.hurst, ti, 0, {},
                                     nd_reps, seed + 2);

  auto slope_json = [&](const SlopeReport& r) {
    return json{{"probe", r.probe},
                {"params", {{"t", t}, {"hurst", ctx.hurst.h}, {"g", ctx.g.name},
                            {"mu", ctx.solver.mu}, {"p", ctx.solver.p}}},
                {"deltas", r.deltas},
                {"values", r.values},
                {"slope", r.slope},
                {"expected", r.expected},
                {"satisfied", r.satisfied},
                {"unsupported_hypothesis", r.unsupported_hypothesis},
                {"insufficient_data", r.insufficient_data}};
  };
  json jr = {{"lower_bound", slope_json(lb)},
             {"dg_decay", slope_json(dg)},
             {"nondegeneracy",
              {{"epsilons", nd.epsilons},
               {"probabilities", nd.probabilities},
               {"median_norm", nd.median_norm},
               {"dz_window_floor", nd.dz_window_floor},
               {"satisfied", nd.satisfied}}}};
  write_text_file(ctx.out_dir + "/malliavin_report.json", jr.dump(2) + "\n");
  return lb.satisfied && dg.satisfied && nd.satisfied ? exit_ok : exit_probe_failure;
}

int run_density(const RunContext& ctx) {
  const double t = ctx.config.num("probe.t");
  const Point x{ctx.config.num("probe.x"),
                ctx.domain.kind == DomainKind::Rectangle ? ctx.config.num("probe.x") : 0.0};
  const int n = ctx.config.integer("density.samples");
  SolutionEnsemble ens(ctx.kernel, ctx.grid, ctx.mesh, ctx.g, ctx.alpha, ctx.hurst, t, x,
                       ctx.config.uinteger("noise.seed"), ctx.solver);
  const auto res = ens.run(n);
  const auto est = kde(res.samples, ctx.config.num("density.bandwidth"));
  CsvWriter csv(ctx.out_dir + "/density.csv", {"value", "density"});
  for (std::size_t i = 0; i < est.eval_grid.size(); ++i)
    csv.row({est.eval_grid[i], est.values[i]});
  const double vz = variance_z(ctx.kernel, ctx.mesh, ctx.alpha, t, x, ctx.hurst);
  const auto cmp = density_compare(est, res.samples, vz);
  json jr = {{"n_samples", res.requested},
             {"failures", res.failures},
             {"bandwidth", est.bandwidth},
             {"kde_integral", est.integral()},
             {"gaussian_oracle_variance", vz},
             {"l1_error_vs_gaussian", cmp.l1_error},
             {"ks_stat", cmp.ks_stat},
             {"ks_p_value", cmp.ks_p_value},
             {"note", ctx.g.name == "zero" ? "linear case: the Gaussian oracle is exact"
                                           : "nonlinear case: Gaussian comparison is a "
                                             "non-Gaussianity witness"}};
  write_text_file(ctx.out_dir + "/density_report.json", jr.dump(2) + "\n");
  return exit_ok;
}

int run_verify_bounds(const RunContext& ctx) {
  const double mu = ctx.solver.mu;
  json out = json::array();
  bool all_ok = true;

  auto report_json = [&](const BoundReport& rep, const std::string& domain_name) {
    const char* names[] = {"upper", "lower", "gradient"};
    out.push_back({{"domain", domain_name},
                   {"mode", names[static_cast<int>(rep.mode)]},
                   {"mu", rep.mu},
                   {"constant", rep.constant},
                   {"aux_constant", rep.aux_constant},
                   {"worst_point",
                    {{"t", rep.worst_point.t},
                     {"x", rep.worst_point.x_arc},
                     {"ybar", rep.worst_point.y_arc}}},
                   {"satisfied", rep.satisfied}});
    all_ok = all_ok && rep.satisfied;
  };

  {
    SpectralKernel spec(build_domain(DomainKind::Interval, ctx.domain.beta, 1), 160);
    std::vector<double> times{0.01, 0.02, 0.05, 0.1, 0.2};
    std::vector<Point> sources;
    for (int i = 0; i <= 16; ++i) sources.push_back({i / 16.0, 0.0});
    auto table = tabulate_kernel(spec, times, sources);
    for (auto mode : {BoundMode::Upper, BoundMode::Lower, BoundMode::Gradient})
      report_json(verify_kernel_bounds(spec, table, mode, mu), "interval");
  }
  {
    auto rect = build_domain(DomainKind::Rectangle, ctx.domain.beta, 8);
    SpectralKernel spec(rect, 160);
    std::vector<double> times{0.01, 0.02, 0.05, 0.1};
    std::vector<Point> sources;
    for (int i = 1; i < 8; ++i) sources.push_back({i / 8.0, 0.37});
    for (std::size_t b = 0; b < rect.n_boundary(); ++b)
      if (!rect.corner_adjacent[b]) sources.push_back(rect.boundary_nodes[b]);
    auto table = tabulate_kernel(spec, times, sources);
    for (auto mode : {BoundMode::Upper, BoundMode::Lower, BoundMode::Gradient})
      report_json(verify_kernel_bounds(spec, table, mode, mu), "rectangle");

    for (double ab : {0.75, 0.25}) {
      const auto fit = singular_integral_exponent(rect, ab, ab);
      out.push_back({{"domain", "rectangle"},
                     {"mode", "appendix_integral"},
                     {"a", ab},
                     {"b", ab},
                     {"exponent", fit.exponent},
                     {"expected", fit.expected},
                     {"satisfied", fit.satisfied}});
      all_ok = all_ok && fit.satisfied;
    }
  }
  write_text_file(ctx.out_dir + "/bound_reports.json", out.dump(2) + "\n");
  return all_ok ? exit_ok : exit_probe_failure;
}

int run_selftest(const RunContext& ctx) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    std::cout << (ok ? "ok" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  };
  check(std::abs(boundary_quadrature(ctx.domain, [](const Point&) { return 1.0; }) -
                 ctx.domain.boundary_measure()) < 1e-12,
        "boundary quadrature of 1 equals |dD|");
  auto sys = robin_eigensystem(build_domain(DomainKind::Interval, 1.0, 1), 6);
  bool robin_ok = true;
  for (const auto& m : sys.modes)
    robin_ok = robin_ok && std::abs(m.deriv(0.0) - m.eval(0.0)) < 1e-8 &&
               std::abs(m.deriv(1.0) + m.eval(1.0)) < 1e-8;
  check(robin_ok, "Robin boundary residuals");
  SpectralKernel spec(build_domain(DomainKind::Interval, 1.0, 1), 128);
  {
    const double lhs = spec.value1d(0.15, 0.3, 0.6);
    const double rhs = quad::gauss(
        [&](double z) { return spec.value1d(0.05, 0.3, z) * spec.value1d(0.1, z, 0.6); }, 0.0,
        1.0, 64);
    check(std::abs(lhs - rhs) < 1e-6, "Chapman-Kolmogorov identity");
  }
  HurstParam h(0.75);
  const double iso = kstar_squared_integral([](double) { return 1.0; }, 1.0, h);
  check(std::abs(iso - 1.0) < 1e-2, "K* isometry of the unit indicator");
  auto mesh1 = build_smesh(1);
  auto grid16 = time_grid(1.0, 16);
  const double hi = h_inner([](double, std::size_t) { return 1.0; },
                            [](double, std::size_t) { return 1.0; }, mesh1, grid16, h);
  check(std::abs(hi - 1.0) < 1e-3, "H inner product of indicators");
  {
    KernelQuad kq(ctx.kernel, ctx.grid);
    NoiseSampler sampler(ctx.mesh, ctx.grid, ctx.hurst, 1);
    auto path = sampler.sample(0);
    auto zf = build_boundary_z_scheme(kq, ctx.mesh, ctx.alpha).field(path);
    auto [u0, rep] =
        picard_boundary(kq, ctx.mesh, Nonlinearity::zero(), ctx.alpha, path, ctx.solver);
    (void)rep;
    double dmax = 0.0;
    for (std::size_t i = 0; i < ctx.grid.size(); ++i)
      for (std::size_t a = 0; a < ctx.domain.n_boundary(); ++a)
        dmax = std::max(dmax, std::abs(u0.at(i, a) - zf[i][a]));
    check(dmax == 0.0, "zero nonlinearity returns the convolution exactly");
    DuSolver solver(kq, ctx.mesh, Nonlinearity::zero(), ctx.alpha);
    auto du = solver.solve_boundary(u0, ctx.grid.n_steps, 0);
    auto dz = dz_field(ctx.kernel, ctx.mesh, ctx.alpha, ctx.grid.horizon,
                       ctx.domain.boundary_nodes[0],
                       std::vector<double>(ctx.grid.nodes.begin(), ctx.grid.nodes.end()));
    double ddz = 0.0;
    for (std::size_t c = 0; c < du.cell_values.size(); ++c)
      for (std::size_t j = 0; j < ctx.mesh.size(); ++j)
        ddz = std::max(ddz, std::abs(du.cell_values[c][j] - dz.cell_values[c][j]));
    check(ddz < 1e-10, "linear-case Malliavin field equals the dz field");
  }
  return failures == 0 ? exit_ok : exit_probe_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "numerical laboratory for the Robin heat equation with fractional boundary noise"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--set", overrides, "override key=value (repeatable)");
  app.add_option("--jobs", jobs, "worker cap for replica sweeps");
  app.add_option("--seed", seed_flag, "master seed override")
      ->each([&](const std::string&) { seed_set = true; });

  const char* subnames[] = {"kernel",  "convolve",      "solve",   "malliavin",
                            "density", "verify-bounds", "selftest"};
  for (const char* name : subnames) app.add_subcommand(name)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg =
        config_path.empty() ? RunConfig::defaults() : RunConfig::from_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed_set) cfg.set("noise.seed", std::to_string(seed_flag));
    cfg.validate();
    if (jobs > 0) par::set_jobs(jobs);

    RunContext ctx = make_context(cfg);
    const std::string sub = app.get_subcommands().front()->get_name();
    std::filesystem::create_directories(ctx.out_dir);
    write_manifest(ctx.out_dir, sub, cfg, cfg.uinteger("noise.seed"));

    if (sub == "kernel") return run_kernel(ctx);
    if (sub == "convolve") return run_convolve(ctx);
    if (sub == "solve") return run_solve(ctx);
    if (sub == "malliavin") return run_malliavin(ctx);
    if (sub == "density") return run_density(ctx);
    if (sub == "verify-bounds") return run_verify_bounds(ctx);
    if (sub == "selftest") return run_selftest(ctx);
    throw ConfigError("unknown subcommand " + sub);
  } catch (const ConfigError& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return exit_config_error;
  } catch (const NumericalError& e) {
    std::cerr << json{{"error", "numerical"}, {"message", e.what()}}.dump() << "\n";
    return exit_numerical_error;
  } catch (const CapabilityError& e) {
    std::cerr << json{{"error", "capability"}, {"message", e.what()}}.dump() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return exit_numerical_error;
  }
}
