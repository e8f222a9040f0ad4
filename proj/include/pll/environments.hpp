#pragma once

// Loss generators and regret accounting.
//
// Environment specs:
//   bern:0.1,0.3,0.3                         independent Bernoulli losses with these means
//   sched:path.csv                           fixed loss matrix, one row per round
//   switch:phase=1000,mu1=0.1,0.5,mu2=0.5,0.1 Bernoulli means alternating every `phase` rounds

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pll/distributions.hpp"
#include "pll/errors.hpp"
#include "pll/rng.hpp"

namespace pll {

namespace env {

struct StochasticBernoulli {
  std::vector<double> mu;
};

struct FixedSchedule {
  std::vector<std::vector<double>> rows;
};

struct SwitchingAdversary {
  std::size_t phase = 1000;
  std::vector<double> mu1;
  std::vector<double> mu2;
};

}  // namespace env

class LossModel {
 public:
  using Kind = std::variant<env::StochasticBernoulli, env::FixedSchedule, env::SwitchingAdversary>;

  explicit LossModel(Kind k, std::string spec = {}) : kind_(std::move(k)), spec_(std::move(spec)) { validate(); }

  static LossModel bernoulli(std::vector<double> mu) { return LossModel(env::StochasticBernoulli{std::move(mu)}); }
  static LossModel schedule(std::vector<std::vector<double>> rows) {
    return LossModel(env::FixedSchedule{std::move(rows)});
  }
  static LossModel switching(std::size_t phase, std::vector<double> mu1, std::vector<double> mu2) {
    return LossModel(env::SwitchingAdversary{phase, std::move(mu1), std::move(mu2)});
  }

  const Kind& kind() const { return kind_; }
  bool is_stochastic() const { return std::holds_alternative<env::StochasticBernoulli>(kind_); }

  std::size_t arms() const {
    return std::visit(detail::overloaded{
                          [](const env::StochasticBernoulli& e) { return e.mu.size(); },
                          [](const env::FixedSchedule& e) { return e.rows.front().size(); },
                          [](const env::SwitchingAdversary& e) { return e.mu1.size(); },
                      },
                      kind_);
  }

  // Losses for round t (1-based) written into out.
  void next_loss(std::size_t t, Rng& rng, std::vector<double>& out) const {
    if (t == 0) throw PreconditionError("rounds are numbered from 1");
    out.resize(arms());
    auto bern = [&](const std::vector<double>& mu) {
      for (std::size_t i = 0; i < mu.size(); ++i) out[i] = uniform_open01(rng) < mu[i] ? 1.0 : 0.0;
    };
    std::visit(detail::overloaded{
                   [&](const env::StochasticBernoulli& e) { bern(e.mu); },
                   [&](const env::FixedSchedule& e) {
                     if (t > e.rows.size())
                       throw ScheduleExhausted("schedule has " + std::to_string(e.rows.size()) + " rounds, asked for " +
                                               std::to_string(t));
                     out = e.rows[t - 1];
                   },
                   [&](const env::SwitchingAdversary& e) { bern(((t - 1) / e.phase) % 2 == 0 ? e.mu1 : e.mu2); },
               },
               kind_);
  }

  std::vector<double> next_loss(std::size_t t, Rng& rng) const {
    std::vector<double> out;
    next_loss(t, rng, out);
    return out;
  }

  // Stochastic models only.
  const std::vector<double>& means() const {
    const auto* e = std::get_if<env::StochasticBernoulli>(&kind_);
    if (!e) throw PreconditionError("means are defined for stochastic models only");
    return e->mu;
  }
  std::size_t i_star() const {
    const auto& mu = means();
    return static_cast<std::size_t>(std::min_element(mu.begin(), mu.end()) - mu.begin());
  }
  std::vector<double> gaps() const {
    const auto& mu = means();
    const double best = mu[i_star()];
    std::vector<double> g(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) g[i] = mu[i] - best;
    return g;
  }
  // Smallest positive gap; 0 when the optimal arm is not unique.
  double min_gap() const {
    const auto g = gaps();
    double d = kInf;
    std::size_t zeros = 0;
    for (double v : g) {
      if (v == 0.0)
        ++zeros;
      else
        d = std::min(d, v);
    }
    return zeros > 1 ? 0.0 : d;
  }

  std::string spec() const { return spec_; }

 private:
  void validate() const {
    auto check_mu = [](const std::vector<double>& mu) {
      if (mu.empty()) throw PreconditionError("need at least one arm");
      for (double v : mu)
        if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("Bernoulli means must lie in [0,1]");
    };
    std::visit(detail::overloaded{
                   [&](const env::StochasticBernoulli& e) { check_mu(e.mu); },
                   [&](const env::FixedSchedule& e) {
                     if (e.rows.empty() || e.rows.front().empty()) throw PreconditionError("empty schedule");
                     for (const auto& r : e.rows) {
                       if (r.size() != e.rows.front().size()) throw PreconditionError("ragged schedule");
                       for (double v : r)
                         if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("schedule losses must lie in [0,1]");
                     }
                   },
                   [&](const env::SwitchingAdversary& e) {
                     check_mu(e.mu1);
                     check_mu(e.mu2);
                     if (e.mu1.size() != e.mu2.size()) throw PreconditionError("switching means differ in length");
                     if (e.phase == 0) throw PreconditionError("phase must be positive");
                   },
               },
               kind_);
  }

  Kind kind_;
  std::string spec_;
};

inline std::vector<std::vector<double>> read_schedule_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError("cannot open schedule '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& cell : detail::split_top_level(t)) {
      try {
        row.push_back(detail::parse_number(cell, path));
      } catch (const SpecParseError&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header line
      throw SpecParseError("non-numeric row in schedule '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline LossModel parse_environment(std::string_view text) {
  const std::string s = detail::trim(text);
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw SpecParseError("environment spec needs a kind: '" + s + "'");
  const std::string name = s.substr(0, colon);
  const std::string args = s.substr(colon + 1);
  if (name == "bern") {
    std::vector<double> mu;
    for (const auto& tok : detail::split_top_level(args)) mu.push_back(detail::parse_number(tok, s));
    return LossModel(env::StochasticBernoulli{mu}, s);
  }
  if (name == "sched") return LossModel(env::FixedSchedule{read_schedule_csv(args)}, s);
  if (name == "switch") {
    env::SwitchingAdversary e;
    std::vector<double>* current = nullptr;
    bool have_phase = false;
    for (const auto& tok : detail::split_top_level(args)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        if (!current) throw SpecParseError("stray value in '" + s + "'");
        current->push_back(detail::parse_number(tok, s));
        continue;
      }
      const std::string key = detail::trim(tok.substr(0, eq));
      const double v = detail::parse_number(detail::trim(tok.substr(eq + 1)), s);
      if (key == "phase") {
        if (!(v >= 1.0)) throw SpecParseError("phase must be >= 1");
        e.phase = static_cast<std::size_t>(v);
        have_phase = true;
        current = nullptr;
      } else if (key == "mu1") {
        current = &e.mu1;
        current->push_back(v);
      } else if (key == "mu2") {
        current = &e.mu2;
        current->push_back(v);
      } else {
        throw SpecParseError("unknown key '" + key + "' in '" + s + "'");
      }
    }
    if (!have_phase || e.mu1.empty() || e.mu2.empty()) throw SpecParseError("switch needs phase, mu1 and mu2");
    return LossModel(e, s);
  }
  throw SpecParseError("unknown environment '" + name + "'");
}

// ---------------------------------------------------------------------------------------------
// Regret
// ---------------------------------------------------------------------------------------------

// Pseudo-regret sum_s Delta_{I_s} for stochastic models, realized regret against the best fixed
// arm in hindsight otherwise.
class RegretAccumulator {
 public:
  explicit RegretAccumulator(const LossModel& model)
      : stochastic_(model.is_stochastic()), cum_(model.arms(), 0.0) {
    if (stochastic_) gaps_ = model.gaps();
  }

  double step(std::size_t arm, const std::vector<double>& loss) {
    if (stochastic_) {
      value_ += gaps_.at(arm);
      return value_;
    }
    played_ += loss.at(arm);
    for (std::size_t i = 0; i < cum_.size(); ++i) cum_[i] += loss[i];
    value_ = played_ - *std::min_element(cum_.begin(), cum_.end());
    return value_;
  }

  double value() const { return value_; }

 private:
  bool stochastic_;
  std::vector<double> gaps_;
  std::vector<double> cum_;
  double played_ = 0.0;
  double value_ = 0.0;
};

struct TraceStep {
  std::size_t arm = 0;
  std::vector<double> loss;
};

struct RegretCurve {
  std::vector<double> curve;  // regret after rounds 1..T
  double final = 0.0;
};

inline RegretCurve regret(const std::vector<TraceStep>& trace, const LossModel& model) {
  RegretAccumulator acc(model);
  RegretCurve out;
  out.curve.reserve(trace.size());
  for (const auto& s : trace) out.curve.push_back(acc.step(s.arm, s.loss));
  out.final = acc.value();
  return out;
}

// {ceil(1.25^k)} up to T, plus T, plus `tail_points` evenly spaced rounds on [T/2, T].
inline std::vector<std::size_t> checkpoint_grid(std::size_t horizon, std::size_t tail_points = 0) {
  if (horizon == 0) throw PreconditionError("horizon must be positive");
  std::vector<std::size_t> pts;
  for (double v = 1.0; v <= static_cast<double>(horizon); v *= 1.25)
    pts.push_back(static_cast<std::size_t>(std::ceil(v - 1e-9)));
  pts.push_back(horizon);
  if (tail_points >= 2) {
    const double a = static_cast<double>(horizon) / 2.0;
    const double h = (static_cast<double>(horizon) - a) / static_cast<double>(tail_points - 1);
    for (std::size_t i = 0; i < tail_points; ++i)
      pts.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(a + h * static_cast<double>(i)))));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  while (!pts.empty() && pts.back() > horizon) pts.pop_back();
  return pts;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceStep>& trace, const LossModel& model) {
  const auto reg = regret(trace, model);
  os << "t,arm,loss,cum_regret\n";
  for (std::size_t t = 0; t < trace.size(); ++t)
    os << t + 1 << ',' << trace[t].arm + 1 << ',' << detail::fmt_num(trace[t].loss[trace[t].arm]) << ','
       << detail::fmt_num(reg.curve[t]) << '\n';
}

}  // namespace pll
