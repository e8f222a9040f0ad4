// Acceptance suite: one PASS/FAIL line per criterion with pinned tolerances.
// Usage: acceptance [criterion ...]   (no arguments runs all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "pll/pll.hpp"

using namespace pll;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

Outcome normalization_and_oracle() {
  const std::vector<Distribution> laws{Distribution::symmetric_pareto(2.0), Distribution::laplace_pareto(),
                                       Distribution::asymmetric_pareto(2.0, 3.0), Distribution::frechet(2.0),
                                       Distribution::gumbel(), Distribution::laplace(1.0),
                                       Distribution::pareto_lomax(3.0)};
  const std::size_t ks[] = {2, 3, 5, 10};
  Rng rng = make_stream(101);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double worst_sum = 0.0, worst_z = 0.0;
  std::size_t misses = 0;
  for (int probe = 0; probe < 50; ++probe) {
    const auto& d = laws[rng() % laws.size()];
    const std::size_t k = ks[rng() % 4];
    std::vector<double> lam(k);
    for (double& v : lam) v = u(rng);
    const auto q = phi_quadrature(lam, d);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(q.phi.begin(), q.phi.end(), 0.0) - 1.0));
    const auto mc = phi_monte_carlo(lam, d, 1000000, rng);
    for (std::size_t i = 0; i < k; ++i) {
      const double sigma = mc.ci_halfwidth[i] / 1.959963984540054;
      const double diff = std::abs(q.phi[i] - mc.phi_hat[i]);
      if (sigma > 0.0) worst_z = std::max(worst_z, diff / sigma);
      if (diff > 3.0 * mc.ci_halfwidth[i] + 1e-12) ++misses;
    }
  }
  return {worst_sum <= 1e-7 && misses == 0,
          fmt("max|sum phi - 1|=%.2e (tol 1e-7), MC misses beyond 3 CI halfwidths=%zu, max |z|=%.2f", worst_sum,
              misses, worst_z)};
}

Outcome gumbel_logit() {
  Rng rng = make_stream(102);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const auto gum = Distribution::gumbel();
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const std::size_t k = 2 + rng() % 9;
    std::vector<double> lam(k);
    for (double& v : lam) v = u(rng);
    const auto q = phi_quadrature(lam, gum);
    const auto soft = shannon_weights(lam, 1.0).p;
    for (std::size_t i = 0; i < k; ++i) worst = std::max(worst, std::abs(q.phi[i] - soft[i]));
  }
  return {worst <= 1e-6, fmt("max |phi - softmax|=%.2e over 100 probes (tol 1e-6)", worst)};
}

Outcome two_arm_constants() {
  const auto sp = Distribution::symmetric_pareto(2.0);
  const auto grid = linspace(0.0, 200.0, 400);
  const auto rows = phi_scan(sp, LambdaTemplate::one_vs_rest(2), grid);
  double sup1 = 0.0, sup2 = 0.0, sup2_far = 0.0;
  for (const auto& r : rows) {
    if (r.arm == 1) sup1 = std::max(sup1, r.ratio_32);
    if (r.arm == 2) {
      sup2 = std::max(sup2, r.ratio_32);
      if (r.c >= 1.5) sup2_far = std::max(sup2_far, r.ratio_32);
    }
  }
  const double b1 = 2.0 * std::numbers::sqrt2 + 0.01;
  return {sup2 <= 125.0 && sup1 <= b1 && sup2_far <= 121.5,
          fmt("sup ratio_32 arm 2=%.4f (<=125), arm 1=%.4f (<=%.4f), arm 2 on c>=1.5=%.4f (<=121.5)", sup2, sup1, b1,
              sup2_far)};
}

Outcome three_arm_counterexample() {
  const auto sp = Distribution::symmetric_pareto(2.0);
  const auto grid = linspace(2.0 * std::sqrt(3.0), 100.0, 100);
  const auto rows = counterexample_scan(sp, 3, grid);
  bool floors = true;
  double min_r1 = kInf, min_margin = kInf;
  std::vector<double> cs, ys;
  for (const auto& r : rows) {
    floors = floors && r.meets_ratio_1_floor && r.meets_ratio_32_floor;
    min_r1 = std::min(min_r1, r.ratio_1);
    min_margin = std::min(min_margin, r.ratio_32 - (r.c + 1.0) / 11.0);
    if (r.arm == 2) {
      cs.push_back(r.c);
      ys.push_back(r.ratio_32);
    }
  }
  const double slope = linear_fit(cs, ys).slope;
  return {floors && slope >= 1.0 / 11.0,
          fmt("min ratio_1=%.4f (>=1/31=%.4f), min ratio_32-(c+1)/11=%.4f (>=0), slope=%.4f (>=1/11=%.4f)", min_r1,
              1.0 / 31.0, min_margin, slope, 1.0 / 11.0)};
}

ExperimentConfig lp_config(std::size_t horizon, std::size_t tail_points) {
  ExperimentConfig cfg;
  cfg.policy = "ftpl:lp:m=0.23";
  cfg.environment = "bern:0.4,0.6,0.6,0.6,0.6,0.6,0.6,0.6";
  cfg.horizon = horizon;
  cfg.runs = 20;
  cfg.seed = 20240501;
  cfg.tail_points = tail_points;
  return cfg;
}

Outcome adversarial_envelope() {
  const auto tab = to_table(run_experiment(lp_config(20000, 0)));
  const auto v = verdict(tab, parse_envelope("advlp:m=0.23", tab));
  double worst = 0.0;
  for (const auto& r : v.rows) worst = std::max(worst, r.upper / r.bound);
  return {v.all_pass, fmt("%zu/%zu checkpoints fail; max (mean+2se)/AdvLP=%.4f; regret at T=%.2f vs bound %.1f",
                          v.failures, v.rows.size(), worst, v.rows.back().mean, v.rows.back().bound)};
}

Outcome logarithmic_regime() {
  constexpr std::size_t T = 100000;
  const auto tab = to_table(run_experiment(lp_config(T, 51)));
  const auto fit = log_growth_fit(tab, T / 2.0);
  const auto sto = parse_envelope("stolp:m=0.23", tab);
  const double at_t = tab.mean.back();
  const double bound = sto.evaluate(static_cast<double>(T));
  return {fit.r2 >= 0.9 && fit.slope > 0.0 && at_t <= bound,
          fmt("fit on [T/2,T]: R^2=%.4f (>=0.9), slope=%.3f (>0); regret at T=%.2f vs StoLP %.4g", fit.r2, fit.slope,
              at_t, bound)};
}

Outcome gradient_identity() {
  const std::vector<Distribution> laws{Distribution::symmetric_pareto(2.0), Distribution::laplace_pareto(),
                                       Distribution::gumbel(), Distribution::asymmetric_pareto(2.0, 3.0),
                                       Distribution::laplace(1.0)};
  Rng rng = make_stream(107);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  double worst = 0.0;
  for (int probe = 0; probe < 30; ++probe) {
    std::vector<double> nu(2 + probe % 3);
    for (double& v : nu) v = u(rng);
    nu.back() = 0.0;
    worst = std::max(worst, potential_gradient_check(nu, laws[probe % laws.size()]));
  }
  return {worst <= 1e-5, fmt("max |dPhi/dnu_i - phi_i|=%.2e over 30 probes (tol 1e-5)", worst)};
}

Outcome regularizer_envelope() {
  const auto rows = three_arm_regularizer_scan(linspace(0.34, 0.999, 50), Distribution::symmetric_pareto(2.0));
  std::size_t outside = 0;
  double low_margin = kInf, high_margin = kInf;
  for (const auto& r : rows) {
    outside += !r.within;
    low_margin = std::min(low_margin, r.c - r.lower);
    high_margin = std::min(high_margin, r.upper - r.c);
  }
  return {outside == 0, fmt("%zu/50 points outside; min c-lower=%.4f, min upper-c=%.4f", outside, low_margin,
                            high_margin)};
}

Outcome ift_pipeline() {
  const IftGrid grid{-20.0, 20.0, 2048};
  const double s = 1.0 / std::numbers::sqrt2;
  auto normal_error = [&](double eps) {
    const auto res = ift_from_quantile(normal_quantile, grid, eps);
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.n; ++j) {
      const double x = res.x_grid[j];
      const double ref = std::exp(-x * x / (2.0 * s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
      worst = std::max(worst, std::abs(res.pdf[j] - ref));
    }
    return worst;
  };
  const double normal_sup = normal_error(1e-10);
  const double normal_sup_default = normal_error(1e-4);

  const auto ts = ift_from_quantile([](double p) { return tsallis_quantile(p, 0.5); }, grid, 1e-4);
  double imag = 0.0, l1_sp = 0.0, l1_lap = 0.0;
  const auto sp = Distribution::symmetric_pareto(2.0);
  const auto lap = Distribution::laplace(1.0);
  for (std::size_t j = 0; j < grid.n; ++j) {
    imag = std::max(imag, std::abs(ts.imag_residual[j]));
    const double x = ts.x_grid[j];
    if (std::abs(x) <= 5.0) {
      l1_sp += std::abs(ts.pdf[j] - sp.pdf(x)) * grid.dx();
      l1_lap += std::abs(ts.pdf[j] - lap.pdf(x)) * grid.dx();
    }
  }
  const double total = ts.cdf.back();
  const bool pass = normal_sup <= 1e-3 && total >= 0.98 && total <= 1.02 && imag <= 1e-10 && l1_sp < l1_lap;
  return {pass, fmt("(a) normal sup error=%.2e at eps=1e-10 (tol 1e-3; %.2e at eps=1e-4); (b) final cdf=%.5f, "
                    "max imag=%.2e, L1 to SP(2)=%.4f vs Laplace=%.4f",
                    normal_sup, normal_sup_default, total, imag, l1_sp, l1_lap)};
}

Outcome estimator_properties() {
  constexpr int trials = 100000;
  bool ok = true;
  std::string detail;
  for (std::size_t k : {20u, 4u, 2u}) {
    PolicyState s(k, 0.23, make_stream(110, k), 1000000);
    const auto sp = Distribution::symmetric_pareto(2.0);
    std::vector<double> w(trials);
    std::size_t capped_hits = 0;
    for (int i = 0; i < trials; ++i) {
      bool capped = false;
      w[i] = static_cast<double>(geometric_resample(s, sp, 0, &capped));
      capped_hits += capped;
    }
    const auto ms = mean_stderr(w);
    const double target = static_cast<double>(k);
    const bool within = std::abs(ms.mean - target) <= 3.0 * ms.stderr_ && capped_hits == 0;
    ok = ok && within;
    detail += fmt("w=%.2f: mean=%.4f vs %.0f (3se=%.4f); ", 1.0 / target, ms.mean, target, 3.0 * ms.stderr_);
  }
  auto cfg = lp_config(100000, 0);
  cfg.policy = "ftrl:tsallis:beta=0.5:m=0.23";
  cfg.runs = 4;
  const auto res = run_experiment(cfg);
  double kkt = 0.0;
  for (const auto& st : res.run_stats) kkt = std::max(kkt, st.max_kkt_residual);
  ok = ok && kkt <= 1e-8;
  detail += fmt("Tsallis KKT max residual=%.2e over 4 runs of T=1e5 (tol 1e-8)", kkt);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "probability normalization and Monte Carlo agreement", 120, normalization_and_oracle},
      {2, "Gumbel perturbations match the logit rule", 30, gumbel_logit},
      {3, "two-arm symmetric Pareto stability constants", 120, two_arm_constants},
      {4, "three-arm symmetric Pareto counterexample", 60, three_arm_counterexample},
      {5, "adversarial envelope for Laplace-Pareto FTPL", 300, adversarial_envelope},
      {6, "logarithmic stochastic regime", 900, logarithmic_regime},
      {7, "potential gradient identity", 120, gradient_identity},
      {8, "three-arm regularizer envelope", 180, regularizer_envelope},
      {9, "inverse Fourier pipeline", 60, ift_pipeline},
      {10, "estimator properties", 120, estimator_properties},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::printf("criterion %2d %s: %s | %s | runtime %.1fs (limit %.0fs)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, c.limit_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
