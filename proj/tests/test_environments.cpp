#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <catch_amalgamated.hpp>

#include "pll/environments.hpp"
#include "pll/policies.hpp"

using namespace pll;
using Catch::Matchers::WithinAbs;

TEST_CASE("Bernoulli losses", "[environments]") {
  Rng rng = make_stream(1);
  const auto zero = LossModel::bernoulli({0.0, 0.0, 0.0});
  for (std::size_t t = 1; t <= 100; ++t) CHECK(zero.next_loss(t, rng) == std::vector<double>{0.0, 0.0, 0.0});

  const std::vector<double> mu{0.1, 0.5};
  const auto model = LossModel::bernoulli(mu);
  constexpr std::size_t n = 1000000;
  std::vector<double> loss, sum(2, 0.0);
  bool binary = true;
  for (std::size_t t = 1; t <= n; ++t) {
    model.next_loss(t, rng, loss);
    for (std::size_t i = 0; i < 2; ++i) {
      binary = binary && (loss[i] == 0.0 || loss[i] == 1.0);
      sum[i] += loss[i];
    }
  }
  CHECK(binary);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(std::abs(sum[i] / n - mu[i]) <= 3.0 * std::sqrt(mu[i] * (1.0 - mu[i]) / n));
  CHECK_THROWS_AS(model.next_loss(0, rng), PreconditionError);
}

TEST_CASE("gaps and optimal arm", "[environments]") {
  const auto model = LossModel::bernoulli({0.6, 0.4, 0.7});
  CHECK(model.i_star() == 1);
  CHECK_THAT(model.gaps()[0], WithinAbs(0.2, 1e-15));
  CHECK_THAT(model.min_gap(), WithinAbs(0.2, 1e-15));
  CHECK(LossModel::bernoulli({0.4, 0.4, 0.5}).min_gap() == 0.0);
  CHECK_THROWS_AS(LossModel::schedule({{0.1, 0.2}}).gaps(), PreconditionError);
  CHECK_THROWS_AS(LossModel::bernoulli({1.2}), PreconditionError);
}

TEST_CASE("fixed schedules pass rows through", "[environments]") {
  Rng rng = make_stream(2);
  const auto model = LossModel::schedule({{0.3, 0.7}, {1.0, 0.0}});
  CHECK(model.next_loss(1, rng) == std::vector<double>{0.3, 0.7});
  CHECK(model.next_loss(2, rng) == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(model.next_loss(3, rng), ScheduleExhausted);
  CHECK_THROWS_AS(LossModel::schedule({{0.1, 0.2}, {0.3}}), PreconditionError);
}

TEST_CASE("switching adversary alternates means", "[environments]") {
  Rng rng = make_stream(3);
  const auto model = LossModel::switching(2, {0.0, 1.0}, {1.0, 0.0});
  CHECK(model.next_loss(1, rng) == std::vector<double>{0.0, 1.0});
  CHECK(model.next_loss(2, rng) == std::vector<double>{0.0, 1.0});
  CHECK(model.next_loss(3, rng) == std::vector<double>{1.0, 0.0});
  CHECK(model.next_loss(5, rng) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("environment spec language", "[environments]") {
  CHECK(parse_environment("bern:0.1,0.3,0.3").means() == std::vector<double>{0.1, 0.3, 0.3});
  const auto sw = parse_environment("switch:phase=10,mu1=0.1,0.5,mu2=0.5,0.1");
  const auto& e = std::get<env::SwitchingAdversary>(sw.kind());
  CHECK(e.phase == 10);
  CHECK(e.mu1 == std::vector<double>{0.1, 0.5});
  CHECK(e.mu2 == std::vector<double>{0.5, 0.1});

  const auto path = std::filesystem::temp_directory_path() / "pll_sched_test.csv";
  {
    std::ofstream out(path);
    out << "a,b\n0.3,0.7\n1,0\n";
  }
  const auto sched = parse_environment("sched:" + path.string());
  CHECK(sched.arms() == 2);
  Rng rng = make_stream(4);
  CHECK(sched.next_loss(2, rng) == std::vector<double>{1.0, 0.0});
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_environment("bern"), SpecParseError);
  CHECK_THROWS_AS(parse_environment("poisson:1"), SpecParseError);
  CHECK_THROWS_AS(parse_environment("switch:mu1=0.1"), SpecParseError);
  CHECK_THROWS_AS(parse_environment("sched:/nonexistent/file.csv"), SpecParseError);
}

TEST_CASE("regret accounting", "[environments]") {
  const auto model = LossModel::bernoulli({0.2, 0.5, 0.5});
  std::vector<TraceStep> best(50, TraceStep{0, {1.0, 0.0, 0.0}});
  CHECK(regret(best, model).final == 0.0);

  const auto adv = LossModel::schedule(std::vector<std::vector<double>>(40, {0.0, 1.0}));
  std::vector<TraceStep> worst(40, TraceStep{1, {0.0, 1.0}});
  const auto r = regret(worst, adv);
  for (std::size_t t = 0; t < 40; ++t) CHECK(r.curve[t] == static_cast<double>(t + 1));

  // Uniform random play earns t * Delta (K-1)/K in expectation.
  const double delta = 0.3;
  const auto unif = LossModel::bernoulli({0.1, 0.1 + delta, 0.1 + delta, 0.1 + delta});
  Rng rng = make_stream(5);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  constexpr std::size_t T = 20000;
  std::vector<TraceStep> trace;
  for (std::size_t t = 1; t <= T; ++t) trace.push_back({pick(rng), unif.next_loss(t, rng)});
  const auto ur = regret(trace, unif);
  const double sd = delta * std::sqrt(T * 0.25 * 0.75);
  CHECK(std::abs(ur.final - T * delta * 0.75) <= 3.0 * sd);
  CHECK(std::is_sorted(ur.curve.begin(), ur.curve.end()));
}

TEST_CASE("adversarial regret matches a direct recomputation", "[environments][invariant]") {
  const auto model = LossModel::switching(25, {0.2, 0.8, 0.5}, {0.8, 0.2, 0.5});
  Rng rng = make_stream(6);
  std::uniform_int_distribution<std::size_t> pick(0, 2);
  std::vector<TraceStep> trace;
  for (std::size_t t = 1; t <= 500; ++t) trace.push_back({pick(rng), model.next_loss(t, rng)});
  const auto r = regret(trace, model);
  double played = 0.0;
  std::vector<double> cum(3, 0.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    played += trace[t].loss[trace[t].arm];
    for (std::size_t i = 0; i < 3; ++i) cum[i] += trace[t].loss[i];
    worst = std::max(worst, std::abs(r.curve[t] - (played - *std::min_element(cum.begin(), cum.end()))));
  }
  CHECK(worst <= 3.0);
}

TEST_CASE("checkpoint grid", "[environments]") {
  const auto g = checkpoint_grid(100);
  CHECK(g.front() == 1);
  CHECK(g.back() == 100);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
  CHECK(std::find(g.begin(), g.end(), 2) != g.end());
  const auto tail = checkpoint_grid(1000, 11);
  for (std::size_t t = 500; t <= 1000; t += 50) CHECK(std::find(tail.begin(), tail.end(), t) != tail.end());
  CHECK_THROWS_AS(checkpoint_grid(0), PreconditionError);
}

TEST_CASE("trace CSV", "[environments]") {
  const auto model = LossModel::bernoulli({0.2, 0.5});
  const std::vector<TraceStep> trace{{0, {1.0, 0.0}}, {1, {0.0, 1.0}}};
  std::ostringstream os;
  write_trace_csv(os, trace, model);
  CHECK(os.str() == "t,arm,loss,cum_regret\n1,1,1,0\n2,2,1,0.3\n");
}
