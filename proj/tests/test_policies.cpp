#include <cmath>
#include <numeric>
#include <vector>

#include <catch_amalgamated.hpp>

#include "pll/environments.hpp"
#include "pll/policies.hpp"
#include "pll/stats.hpp"

using namespace pll;
using Catch::Matchers::WithinAbs;

TEST_CASE("learning rate and cap schedule", "[policies]") {
  PolicyState s(4, 0.23, make_stream(1));
  CHECK(s.eta() == 0.23);
  s.t = 16;
  CHECK(s.eta() == 0.23 / 4.0);
  CHECK(s.cap() == 32);
  CHECK(PolicyState(4, 0.23, make_stream(1), 7).cap() == 7);
  CHECK_THROWS_AS(PolicyState(0, 0.23, make_stream(1)), PreconditionError);
  CHECK_THROWS_AS(PolicyState(2, 0.0, make_stream(1)), PreconditionError);
}

TEST_CASE("FTPL selection", "[policies]") {
  const auto lp = Distribution::laplace_pareto();
  PolicyState a(5, 0.23, make_stream(2)), b(5, 0.23, make_stream(2));
  for (int i = 0; i < 20; ++i) CHECK(ftpl_select(a, lp) == ftpl_select(b, lp));
  CHECK(a.Lhat == std::vector<double>(5, 0.0));

  PolicyState s(4, 0.23, make_stream(3));
  s.Lhat = {0.0, 1e6, 1e6, 1e6};
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += ftpl_select(s, lp) == 0;
  CHECK(first >= 9990);

  PolicyState u(4, 0.23, make_stream(4));
  std::vector<double> counts(4, 0.0);
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) counts[ftpl_select(u, lp)] += 1.0;
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  for (double c : counts) CHECK(std::abs(c / n - 0.25) <= 3.0 * sigma);
}

TEST_CASE("geometric resampling estimates inverse probabilities", "[policies]") {
  constexpr int n = 100000;
  {
    PolicyState s(2, 0.23, make_stream(5), 1000000);
    std::vector<double> w;
    for (int i = 0; i < n; ++i) w.push_back(static_cast<double>(geometric_resample(s, Distribution::symmetric_pareto(), 0)));
    CHECK_THAT(mean_stderr(w).mean, WithinAbs(2.0, 0.03));
  }
  {
    PolicyState s(1, 0.23, make_stream(6));
    for (int i = 0; i < 100; ++i) CHECK(geometric_resample(s, Distribution::gumbel(), 0) == 1);
  }
  {
    const auto sp = Distribution::symmetric_pareto(2.0);
    PolicyState s(3, 1.0, make_stream(7), 1000000);
    s.Lhat = {0.0, 5.0, 5.0};
    const auto probe = phi_quadrature(s.Lhat, sp);
    for (std::size_t arm : {0u, 1u}) {
      std::vector<double> w;
      for (int i = 0; i < n; ++i) w.push_back(static_cast<double>(geometric_resample(s, sp, arm)));
      const auto ms = mean_stderr(w);
      CHECK(std::abs(ms.mean - 1.0 / probe.phi[arm]) <= 3.0 * ms.stderr_);
    }
  }
  {
    PolicyState s(2, 0.23, make_stream(8), 3);
    s.Lhat = {0.0, 1e9};
    bool capped = false;
    CHECK(geometric_resample(s, Distribution::laplace_pareto(), 1, &capped) == 3);
    CHECK(capped);
  }
}

TEST_CASE("FTPL update arithmetic", "[policies]") {
  PolicyState s(3, 0.23, make_stream(9));
  ftpl_update(s, 1, 0.0, 17.0);
  CHECK(s.Lhat == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(s.t == 2);
  ftpl_update(s, 2, 1.0, 4.0);
  CHECK(s.Lhat[2] == 4.0);
  CHECK_THROWS_AS(ftpl_update(s, 0, 1.5, 1.0), PreconditionError);
  CHECK_THROWS_AS(ftpl_update(s, 0, -0.1, 1.0), PreconditionError);
}

TEST_CASE("FTRL weights", "[policies]") {
  const std::vector<double> zero(5, 0.0);
  for (const Regularizer& reg : {Regularizer{Tsallis{0.5}}, Regularizer{Shannon{}}, Regularizer{Tsallis{0.2}}}) {
    const auto sol = ftrl_weights(zero, 0.7, reg);
    for (double p : sol.p) CHECK_THAT(p, WithinAbs(0.2, 1e-12));
    CHECK(kkt_residual(zero, 0.7, sol, reg) <= 1e-10);
  }

  const double eta = 0.3;
  const std::vector<double> two{1.0, 4.0};
  const auto ts = tsallis_weights(two, eta, 0.5);
  const double x = ts.p[0];
  // The loss gap equals the two-arm Tsallis quantile at the leading arm's weight.
  CHECK_THAT(eta * (two[1] - two[0]), WithinAbs(1.0 / std::sqrt(1.0 - x) - 1.0 / std::sqrt(x), 1e-8));

  const std::vector<double> sh{0.0, std::log(2.0) / eta};
  const auto so = shannon_weights(sh, eta);
  CHECK_THAT(so.p[0], WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(so.p[1], WithinAbs(1.0 / 3.0, 1e-12));

  const std::vector<double> extreme{0.0, 400.0, 3.0, 60.0};
  for (double b : {0.1, 0.5, 0.9}) {
    const auto sol = tsallis_weights(extreme, 1.0, b);
    CHECK_THAT(std::accumulate(sol.p.begin(), sol.p.end(), 0.0), WithinAbs(1.0, 1e-10));
    CHECK(kkt_residual(extreme, 1.0, sol, Tsallis{b}) <= 1e-8);
  }
  CHECK_THROWS_AS(tsallis_weights(two, 1.0, 1.0), DomainError);
}

TEST_CASE("FTRL update arithmetic", "[policies]") {
  PolicyState s(2, 0.23, make_stream(10));
  const auto choice = ftrl_select(s, Tsallis{});
  CHECK(s.last_w == choice.p);
  ftrl_update(s, 0, 0.0, choice.p);
  CHECK(s.Lhat == std::vector<double>{0.0, 0.0});
  ftrl_update(s, 1, 1.0, std::vector<double>{0.75, 0.25});
  CHECK(s.Lhat[1] == 4.0);
  CHECK(s.t == 3);
}

TEST_CASE("importance-weighted estimates are unbiased", "[policies]") {
  const std::vector<double> mu{0.1, 0.9};
  const auto model = LossModel::bernoulli(mu);
  constexpr std::size_t T = 20000;
  constexpr std::size_t runs = 40;
  for (const char* spec : {"ftpl:lp:m=0.23:cap=1000000", "ftrl:tsallis:beta=0.5:m=0.23"}) {
    const auto ps = parse_policy(spec);
    std::vector<std::vector<double>> gap(2);
    for (std::size_t run = 0; run < runs; ++run) {
      auto policy = make_policy(ps, 2, make_stream(11, run, 2));
      Rng env = make_stream(11, run, 1);
      std::vector<double> loss, truth(2, 0.0);
      for (std::size_t t = 1; t <= T; ++t) {
        const auto arm = policy->select();
        model.next_loss(t, env, loss);
        truth[0] += loss[0];
        truth[1] += loss[1];
        policy->observe(arm, loss[arm]);
      }
      for (std::size_t i = 0; i < 2; ++i) gap[i].push_back((policy->state().Lhat[i] - truth[i]) / T);
    }
    INFO(spec);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ms = mean_stderr(gap[i]);
      CHECK(std::abs(ms.mean) <= 3.0 * ms.stderr_);
    }
  }
}

TEST_CASE("FTPL with Gumbel matches Shannon FTRL", "[policies]") {
  const auto gum = Distribution::gumbel();
  Rng rng = make_stream(12);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  constexpr int n = 100000;
  for (int trial = 0; trial < 5; ++trial) {
    PolicyState s(3, 0.5, make_stream(13, trial));
    s.t = 1 + static_cast<std::size_t>(trial) * 37;
    for (double& v : s.Lhat) v = u(rng);
    const auto p = shannon_weights(s.Lhat, s.eta()).p;
    std::vector<double> counts(3, 0.0);
    for (int i = 0; i < n; ++i) counts[ftpl_select(s, gum)] += 1.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double sigma = std::sqrt(p[i] * (1.0 - p[i]) / n);
      CHECK(std::abs(counts[i] / n - p[i]) <= 3.0 * sigma + 1e-12);
    }
  }
}

TEST_CASE("FTRL KKT residual stays small over a run", "[policies]") {
  auto policy = make_policy(parse_policy("ftrl:tsallis:beta=0.5:m=0.23"), 8, make_stream(14));
  const auto model = LossModel::bernoulli({0.4, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6});
  Rng env = make_stream(15);
  std::vector<double> loss;
  double worst_sum = 0.0;
  for (std::size_t t = 1; t <= 20000; ++t) {
    const auto arm = policy->select();
    const auto& w = policy->state().last_w;
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
    model.next_loss(t, env, loss);
    policy->observe(arm, loss[arm]);
  }
  CHECK(worst_sum <= 1e-10);
  CHECK(policy->stats().max_kkt_residual <= 1e-8);
}

TEST_CASE("policy spec language", "[policies]") {
  const auto a = parse_policy("ftpl:lp:m=0.23");
  CHECK(a.family == PolicySpec::Family::Ftpl);
  CHECK(a.m == 0.23);
  CHECK(a.dist->spec() == "lp");
  const auto b = parse_policy("ftpl:splareto:a=2:m=0.23");
  CHECK(std::holds_alternative<kind::SymmetricPareto>(b.dist->kind()));
  const auto c = parse_policy("ftrl:tsallis:beta=0.5:m=0.23");
  CHECK(std::get<Tsallis>(c.reg).tsallis_beta == 0.5);
  const auto d = parse_policy("ftrl:shannon:m=0.1");
  CHECK(std::holds_alternative<Shannon>(d.reg));
  CHECK(d.m == 0.1);
  CHECK(parse_policy(b.describe()).describe() == b.describe());
  CHECK_THROWS_AS(parse_policy("ftrl:tsallis:beta=1.5"), SpecParseError);
  CHECK_THROWS_AS(parse_policy("ucb:lp"), SpecParseError);
  CHECK_THROWS_AS(parse_policy("ftpl:lp:m=-1"), SpecParseError);
  CHECK_THROWS_AS(parse_policy("ftrl:entropy"), SpecParseError);
}
