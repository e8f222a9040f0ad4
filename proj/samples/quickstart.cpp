// Selection probabilities, a regularizer value and a short simulation.

#include <cstdio>

#include "pll/pll.hpp"

int main() {
  const auto sp = pll::Distribution::symmetric_pareto(2.0);
  const double lambda[3] = {0.0, 5.0, 5.0};
  const auto probe = pll::phi_quadrature(lambda, sp);
  for (std::size_t i = 0; i < 3; ++i)
    std::printf("arm %zu: phi %.6f  -phi'/phi %.4f  -phi'/phi^1.5 %.4f\n", i + 1, probe.phi[i], probe.ratio_1[i],
                probe.ratio_32[i]);

  const double p[3] = {0.6, 0.3, 0.1};
  const auto reg = pll::regularizer_value(p, sp);
  std::printf("V(0.6, 0.3, 0.1) = %.6f at nu = (%.4f, %.4f, 0)\n", reg.V, reg.nu[0], reg.nu[1]);

  pll::ExperimentConfig cfg;
  cfg.policy = "ftpl:lp:m=0.23";
  cfg.environment = "bern:0.4,0.6,0.6,0.6";
  cfg.horizon = 5000;
  cfg.runs = 4;
  cfg.seed = 11;
  const auto res = pll::run_experiment(cfg);
  std::printf("mean pseudo-regret at T=%zu: %.2f (stderr %.2f)\n", cfg.horizon, res.mean.back(), res.stderr_.back());
  return 0;
}
