// Command-line front end: simulate, verdict, analyze-phi, check-dist, duality.
// Exit codes: 0 success / all verdicts pass, 1 failed verdict or runtime error, 2 usage error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pll/pll.hpp"

namespace {

using pll::detail::fmt_num;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

// "a:b" or "a:b:n" -> n evenly spaced points (default 50) on [a, b].
std::vector<double> parse_linspace(const std::string& text, std::size_t default_n = 50) {
  const auto parts = pll::detail::split_top_level(text, ':');
  if (parts.size() != 2 && parts.size() != 3) throw pll::SpecParseError("expected a:b or a:b:n");
  const double a = pll::detail::parse_number(parts[0], text);
  const double b = pll::detail::parse_number(parts[1], text);
  const std::size_t n =
      parts.size() == 3 ? static_cast<std::size_t>(pll::detail::parse_number(parts[2], text)) : default_n;
  if (n < 2 || b < a) throw pll::SpecParseError("need n >= 2 and b >= a in '" + text + "'");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

int cmd_simulate(const std::string& config_path, const std::string& policy, const std::string& environment,
                 std::size_t horizon, std::size_t runs, std::uint64_t seed, const std::string& out,
                 const std::string& meta, std::size_t tail_points) {
  pll::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = pll::load_config(config_path);
  } else {
    if (policy.empty() || environment.empty()) throw UsageError("simulate needs --config or --policy and --env");
    cfg.policy = policy;
    cfg.environment = environment;
    cfg.horizon = horizon;
    cfg.runs = runs;
    cfg.seed = seed;
    cfg.tail_points = tail_points;
  }
  if (!out.empty()) cfg.regret_csv = out;
  if (!meta.empty()) cfg.metadata_json = meta;
  const auto res = pll::run_experiment(cfg);
  if (cfg.regret_csv.empty())
    pll::write_regret_csv(std::cout, res);
  else
    pll::write_outputs(res);
  std::fprintf(stderr, "%zu runs x %zu rounds, final mean regret %s (%.1f s)\n", cfg.runs, cfg.horizon,
               fmt_num(res.mean.back()).c_str(), res.wall_seconds);
  return 0;
}

int cmd_verdict(const std::string& csv, const std::string& envelope, const std::string& out, double log_fit_from) {
  std::ifstream in(csv);
  if (!in) throw UsageError("cannot read '" + csv + "'");
  const auto tab = pll::read_regret_csv(in);
  const auto env = pll::parse_envelope(envelope, tab);
  const auto v = pll::verdict(tab, env);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file = open_out(out);
    os = &file;
  }
  *os << "t,mean,mean_plus_2se,bound,pass\n";
  for (const auto& r : v.rows)
    *os << fmt_num(r.t) << ',' << fmt_num(r.mean) << ',' << fmt_num(r.upper) << ',' << fmt_num(r.bound) << ','
        << (r.pass ? 1 : 0) << '\n';
  std::fprintf(stderr, "%s: %zu of %zu checkpoints exceed the envelope\n", v.all_pass ? "PASS" : "FAIL", v.failures,
               v.rows.size());
  bool ok = v.all_pass;
  if (log_fit_from > 0.0) {
    const double horizon = tab.t.empty() ? 0.0 : tab.t.back();
    const auto fit = pll::log_growth_fit(tab, log_fit_from * horizon);
    const bool fit_ok = fit.r2 >= 0.9 && fit.slope > 0.0;
    std::fprintf(stderr, "%s: log-growth fit on t >= %s: slope %s, R^2 %s\n", fit_ok ? "PASS" : "FAIL",
                 fmt_num(log_fit_from * horizon).c_str(), fmt_num(fit.slope).c_str(), fmt_num(fit.r2).c_str());
    ok = ok && fit_ok;
  }
  return ok ? 0 : 1;
}

int cmd_analyze_phi(const std::string& dist_spec, const std::string& lambda, const std::string& grid,
                    const std::string& out, double tol) {
  const auto dist = pll::parse_distribution(dist_spec);
  const auto family = pll::parse_lambda_template(lambda);
  const auto c_grid = pll::parse_grid(grid);
  std::vector<std::vector<pll::PhiScanRow>> chunks(c_grid.size());
  pll::parallel_for(c_grid.size(), [&](std::size_t i) {
    chunks[i] = pll::phi_scan(dist, family, std::span<const double>(&c_grid[i], 1), tol);
  });
  auto os = open_out(out);
  os << "c,i,sigma_i,phi,phi_prime,ratio_1,ratio_32,quad_error\n";
  for (const auto& chunk : chunks)
    for (const auto& r : chunk)
      os << fmt_num(r.c) << ',' << r.arm << ',' << r.sigma << ',' << fmt_num(r.phi) << ',' << fmt_num(r.phi_prime)
         << ',' << fmt_num(r.ratio_1) << ',' << fmt_num(r.ratio_32) << ',' << fmt_num(r.quad_error) << '\n';
  return 0;
}

int cmd_check_dist(const std::string& dist_spec, const std::string& out) {
  const auto dist = pll::parse_distribution(dist_spec);
  const auto rep = pll::check_assumptions(dist);
  auto os = open_out(out);
  os << "assumption,statistic,value,grid_or_mc,notes\n";
  for (const auto& r : pll::report_rows(rep))
    os << r.assumption << ',' << r.statistic << ',' << fmt_num(r.value) << ',' << r.grid_or_mc << ',' << r.notes
       << '\n';
  return 0;
}

int cmd_ift(double beta, double xmin, double xmax, std::size_t n, double eps, const std::string& out) {
  pll::check_tsallis_beta(beta);
  const pll::IftGrid grid{xmin, xmax, n};
  const auto res = pll::ift_from_quantile([beta](double p) { return pll::tsallis_quantile(p, beta); }, grid, eps);
  auto os = open_out(out);
  os << "x,pdf,imag,cdf,ref_splareto2,ref_laplace\n";
  const auto sp = pll::Distribution::symmetric_pareto(2.0);
  const auto lap = pll::Distribution::laplace(1.0);
  double max_imag = 0.0;
  for (std::size_t j = 0; j < res.x_grid.size(); ++j) {
    const double x = res.x_grid[j];
    max_imag = std::max(max_imag, std::abs(res.imag_residual[j]));
    os << fmt_num(x) << ',' << fmt_num(res.pdf[j]) << ',' << fmt_num(res.imag_residual[j]) << ','
       << fmt_num(res.cdf[j]) << ',' << fmt_num(sp.pdf(x)) << ',' << fmt_num(lap.pdf(x)) << '\n';
  }
  std::fprintf(stderr, "final cdf %s, max |imag| %s, negative-real frequencies %zu\n", fmt_num(res.cdf.back()).c_str(),
               fmt_num(max_imag).c_str(), res.branch_warnings);
  return 0;
}

int cmd_regscan(const std::string& dist_spec, const std::string& xs, const std::string& out) {
  const auto dist = pll::parse_distribution(dist_spec);
  const auto grid = parse_linspace(xs);
  const auto rows = pll::three_arm_regularizer_scan(grid, dist);
  auto os = open_out(out);
  os << "x,c,lower,upper,tsallis_ref,within\n";
  bool all = true;
  for (const auto& r : rows) {
    os << fmt_num(r.x) << ',' << fmt_num(r.c) << ',' << fmt_num(r.lower) << ',' << fmt_num(r.upper) << ','
       << fmt_num(r.tsallis_ref) << ',' << (r.within ? 1 : 0) << '\n';
    all = all && r.within;
  }
  return all ? 0 : 1;
}

int cmd_sanity_normal(double xmin, double xmax, std::size_t n, double eps, const std::string& out) {
  const pll::IftGrid grid{xmin, xmax, n};
  const auto res = pll::ift_from_quantile(pll::normal_quantile, grid, eps);
  double sup = 0.0;
  std::ofstream file;
  if (!out.empty()) {
    file = open_out(out);
    file << "x,pdf,reference\n";
  }
  for (std::size_t j = 0; j < res.x_grid.size(); ++j) {
    const double x = res.x_grid[j];
    const double ref = std::exp(-x * x) / std::sqrt(std::numbers::pi);
    sup = std::max(sup, std::abs(res.pdf[j] - ref));
    if (file) file << fmt_num(x) << ',' << fmt_num(res.pdf[j]) << ',' << fmt_num(ref) << '\n';
  }
  const bool ok = sup <= 1e-3;
  std::printf("%s: sup |pdf - N(0,1/sqrt2)| = %s (eps %s)\n", ok ? "PASS" : "FAIL", fmt_num(sup).c_str(),
              fmt_num(eps).c_str());
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FTPL bandit numerical lab"};
  app.require_subcommand(1);

  std::string config, policy, environment, out, meta, csv, envelope, dist, lambda = "0,c,c", grid = "2:100:1";
  std::string xs = "0.34:0.999";
  std::size_t horizon = 1000, runs = 1, n = 2048, tail_points = 0;
  std::uint64_t seed = 1;
  double tol = 1e-10, log_fit_from = 0.0, beta = 0.5, xmin = -20.0, xmax = 20.0, eps = 1e-4, normal_eps = 1e-10;

  auto* sim = app.add_subcommand("simulate", "run a bandit experiment");
  sim->add_option("--config", config, "INI config file");
  sim->add_option("--policy", policy, "policy spec, e.g. ftpl:lp:m=0.23");
  sim->add_option("--env", environment, "environment spec, e.g. bern:0.4,0.6");
  sim->add_option("--horizon", horizon)->check(CLI::PositiveNumber);
  sim->add_option("--runs", runs)->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed);
  sim->add_option("--tail-points", tail_points, "extra checkpoints on [T/2, T]");
  sim->add_option("--out", out, "regret CSV (stdout if omitted)");
  sim->add_option("--meta", meta, "metadata JSON");

  auto* ver = app.add_subcommand("verdict", "compare a regret CSV with a bound envelope");
  ver->add_option("--csv", csv)->required();
  ver->add_option("--envelope", envelope, "advlp[:m=..] | stolp[:m=..,gaps=..] | tsallis")->required();
  ver->add_option("--out", out);
  ver->add_option("--log-fit-from", log_fit_from, "also require R^2 >= 0.9 of mean vs ln t on t >= f*T");

  auto* phi = app.add_subcommand("analyze-phi", "scan selection probabilities over a loss family");
  phi->add_option("--dist", dist)->required();
  phi->add_option("--lambda", lambda, "loss template, e.g. 0,c,c");
  phi->add_option("--c-grid", grid, "start:stop:step");
  phi->add_option("--tol", tol);
  phi->add_option("--out", out)->required();

  auto* chk = app.add_subcommand("check-dist", "estimate regularity conditions of a perturbation law");
  chk->add_option("--dist", dist)->required();
  chk->add_option("--out", out)->required();

  auto* dual = app.add_subcommand("duality", "FTPL/FTRL duality tools");
  dual->require_subcommand(1);
  auto* ift = dual->add_subcommand("ift", "density of the Tsallis perturbation by inverse Fourier transform");
  ift->add_option("--beta", beta);
  ift->add_option("--xmin", xmin);
  ift->add_option("--xmax", xmax);
  ift->add_option("--n", n);
  ift->add_option("--eps", eps);
  ift->add_option("--out", out)->required();
  auto* reg = dual->add_subcommand("regscan", "three-arm regularizer derivative scan");
  reg->add_option("--dist", dist)->required();
  reg->add_option("--x", xs, "a:b[:n]");
  reg->add_option("--out", out)->required();
  auto* san = dual->add_subcommand("sanity-normal", "inversion check with the normal quantile");
  san->add_option("--xmin", xmin);
  san->add_option("--xmax", xmax);
  san->add_option("--n", n);
  san->add_option("--eps", normal_eps, "endpoint clipping of the p integral");
  san->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(config, policy, environment, horizon, runs, seed, out, meta, tail_points);
    if (*ver) return cmd_verdict(csv, envelope, out, log_fit_from);
    if (*phi) return cmd_analyze_phi(dist, lambda, grid, out, tol);
    if (*chk) return cmd_check_dist(dist, out);
    if (*ift) return cmd_ift(beta, xmin, xmax, n, eps, out);
    if (*reg) return cmd_regscan(dist, xs, out);
    if (*san) return cmd_sanity_normal(xmin, xmax, n, normal_eps, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pll::SpecParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pll::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pll::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pll::MetadataMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
