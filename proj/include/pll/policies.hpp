#pragma once

// Bandit learners sharing one interface: FTPL with an arbitrary perturbation law and
// geometric resampling, and FTRL with Tsallis or Shannon regularizers.
//
// Both use the learning rate eta_t = m / sqrt(t) and maintain importance-weighted
// cumulative loss estimates Lhat.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pll/distributions.hpp"
#include "pll/errors.hpp"
#include "pll/rng.hpp"
#include "pll/selection.hpp"

namespace pll {

struct PolicyState {
  std::size_t t = 1;
  double m = 0.23;
  std::vector<double> Lhat;
  Rng rng;
  std::size_t resample_cap = 0;  // 0 selects ceil(2 K sqrt(t))
  std::vector<double> last_w;    // FTRL only

  PolicyState(std::size_t k, double m_, Rng r, std::size_t cap = 0)
      : m(m_), Lhat(k, 0.0), rng(std::move(r)), resample_cap(cap) {
    if (k == 0) throw PreconditionError("policy needs at least one arm");
    if (!(m_ > 0.0) || !std::isfinite(m_)) throw PreconditionError("learning-rate scale m must be positive");
  }

  std::size_t arms() const { return Lhat.size(); }
  double eta() const { return m / std::sqrt(static_cast<double>(t)); }
  std::size_t cap() const {
    if (resample_cap > 0) return resample_cap;
    return static_cast<std::size_t>(std::ceil(2.0 * static_cast<double>(arms()) * std::sqrt(static_cast<double>(t))));
  }
};

inline void check_loss(double loss) {
  if (!(loss >= 0.0 && loss <= 1.0)) throw PreconditionError("loss must lie in [0,1]");
}

// ---------------------------------------------------------------------------------------------
// FTPL
// ---------------------------------------------------------------------------------------------

inline std::size_t ftpl_draw(const PolicyState& s, const Distribution& dist, std::vector<double>& r, Rng& rng) {
  r.resize(s.arms());
  dist.sample_into(r, rng);
  return perturbed_argmin(s.Lhat, r, s.eta());
}

inline std::size_t ftpl_select(PolicyState& s, const Distribution& dist) {
  std::vector<double> r;
  return ftpl_draw(s, dist, r, s.rng);
}

// Number of fresh perturbation draws until `chosen` wins again (success inclusive), capped at
// the state's resampling cap. `capped` is set when the cap stopped the search.
inline std::size_t geometric_resample(PolicyState& s, const Distribution& dist, std::size_t chosen,
                                      bool* capped = nullptr) {
  const std::size_t cap = s.cap();
  std::vector<double> r;
  for (std::size_t n = 1; n <= cap; ++n) {
    if (ftpl_draw(s, dist, r, s.rng) == chosen) {
      if (capped) *capped = false;
      return n;
    }
  }
  if (capped) *capped = true;
  return cap;
}

inline void ftpl_update(PolicyState& s, std::size_t arm, double loss, double west) {
  check_loss(loss);
  s.Lhat.at(arm) += loss * west;
  ++s.t;
}

// ---------------------------------------------------------------------------------------------
// FTRL
// ---------------------------------------------------------------------------------------------

struct Tsallis {
  double tsallis_beta = 0.5;
};
struct Shannon {};
using Regularizer = std::variant<Tsallis, Shannon>;

struct FtrlSolution {
  std::vector<double> p;
  double multiplier = 0.0;  // Lagrange scalar c of the normalization constraint
};

// Tsallis regularizer V(p) = -(1/(1-b)) sum p_i^b, first-order conditions
// eta Lhat_i - (b/(1-b)) p_i^(b-1) = c, solved for c by safeguarded Newton on sum p(c) = 1.
inline FtrlSolution tsallis_weights(std::span<const double> Lhat, double eta, double b) {
  if (!(b > 0.0 && b < 1.0)) throw DomainError("Tsallis parameter must lie in (0,1)");
  const std::size_t k = Lhat.size();
  std::vector<double> el(k);
  for (std::size_t i = 0; i < k; ++i) el[i] = eta * Lhat[i];
  const double lo_el = *std::min_element(el.begin(), el.end());
  const double coef = b / (1.0 - b);
  const double expo = 1.0 / (b - 1.0);

  FtrlSolution sol;
  sol.p.resize(k);
  auto eval = [&](double c, double& slope) {
    double sum = 0.0;
    slope = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double p = std::pow((el[i] - c) / coef, expo);
      sol.p[i] = p;
      sum += p;
      slope += std::pow(p, 2.0 - b) / b;
    }
    return sum - 1.0;
  };

  // sum p(c) is increasing in c; at c_hi the leading arm alone has weight 1, at c_lo every
  // weight is at most 1/K.
  double c_lo = lo_el - coef * std::pow(static_cast<double>(k), 1.0 - b);
  double c_hi = lo_el - coef;
  if (k == 1) {
    sol.p[0] = 1.0;
    sol.multiplier = c_hi;
    return sol;
  }
  double c = 0.5 * (c_lo + c_hi);
  double slope = 0.0;
  double g = eval(c, slope);
  for (int it = 0; it < 200 && std::abs(g) > 1e-15; ++it) {
    (g > 0.0 ? c_hi : c_lo) = c;
    double next = c - g / slope;
    if (!(next > c_lo && next < c_hi)) next = 0.5 * (c_lo + c_hi);
    if (next == c) break;
    c = next;
    g = eval(c, slope);
  }
  if (std::abs(g) > 1e-10) throw SolverDiverged("Tsallis normalization did not converge");
  sol.multiplier = c;
  return sol;
}

// Shannon regularizer V(p) = sum p_i ln p_i: p = softmax(-eta Lhat), c = eta Lhat_i + ln p_i + 1.
inline FtrlSolution shannon_weights(std::span<const double> Lhat, double eta) {
  const std::size_t k = Lhat.size();
  const double lo = *std::min_element(Lhat.begin(), Lhat.end());
  FtrlSolution sol;
  sol.p.resize(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += sol.p[i] = std::exp(-eta * (Lhat[i] - lo));
  for (double& p : sol.p) p /= z;
  sol.multiplier = eta * lo - std::log(z) + 1.0;
  return sol;
}

inline FtrlSolution ftrl_weights(std::span<const double> Lhat, double eta, const Regularizer& reg) {
  if (const auto* ts = std::get_if<Tsallis>(&reg)) return tsallis_weights(Lhat, eta, ts->tsallis_beta);
  return shannon_weights(Lhat, eta);
}

// max_i |eta Lhat_i + dV/dp_i - c|.
inline double kkt_residual(std::span<const double> Lhat, double eta, const FtrlSolution& sol, const Regularizer& reg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < Lhat.size(); ++i) {
    double grad = 0.0;
    if (const auto* ts = std::get_if<Tsallis>(&reg)) {
      const double b = ts->tsallis_beta;
      grad = -b / (1.0 - b) * std::pow(sol.p[i], b - 1.0);
    } else {
      grad = std::log(sol.p[i]) + 1.0;
    }
    worst = std::max(worst, std::abs(eta * Lhat[i] + grad - sol.multiplier));
  }
  return worst;
}

inline std::size_t sample_categorical(std::span<const double> p, Rng& rng) {
  const double u = uniform_open01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

struct FtrlChoice {
  std::size_t arm = 0;
  std::vector<double> p;
  double multiplier = 0.0;
};

inline FtrlChoice ftrl_select(PolicyState& s, const Regularizer& reg) {
  auto sol = ftrl_weights(s.Lhat, s.eta(), reg);
  FtrlChoice out{sample_categorical(sol.p, s.rng), sol.p, sol.multiplier};
  s.last_w = std::move(sol.p);
  return out;
}

inline void ftrl_update(PolicyState& s, std::size_t arm, double loss, std::span<const double> p) {
  check_loss(loss);
  if (loss > 0.0) s.Lhat.at(arm) += loss / p[arm];
  ++s.t;
}

// ---------------------------------------------------------------------------------------------
// Policy interface and spec parsing
//   ftpl:<dist spec>[:m=<m>][:cap=<M>]      ftrl:tsallis[:beta=<b>][:m=<m>]     ftrl:shannon[:m=<m>]
// ---------------------------------------------------------------------------------------------

struct PolicySpec {
  enum class Family { Ftpl, Ftrl } family = Family::Ftpl;
  std::optional<Distribution> dist;
  Regularizer reg = Tsallis{};
  double m = 0.23;
  std::size_t cap = 0;

  std::string describe() const {
    std::string s;
    if (family == Family::Ftpl)
      s = "ftpl:" + dist->spec();
    else if (const auto* ts = std::get_if<Tsallis>(&reg))
      s = "ftrl:tsallis:beta=" + detail::fmt_num(ts->tsallis_beta);
    else
      s = "ftrl:shannon";
    s += ":m=" + detail::fmt_num(m);
    if (cap > 0) s += ":cap=" + std::to_string(cap);
    return s;
  }
};

inline PolicySpec parse_policy(std::string_view text) {
  const auto tokens = detail::split_top_level(text, ':');
  if (tokens.size() < 2) throw SpecParseError("policy spec needs a family and a body: '" + std::string(text) + "'");
  PolicySpec spec;
  std::vector<std::string> body(tokens.begin() + 1, tokens.end());
  // Trailing m= / cap= / beta= tokens are policy options; the rest belongs to the body.
  std::optional<double> beta;
  while (!body.empty()) {
    const std::string& tok = body.back();
    if (tok.rfind("m=", 0) == 0) {
      spec.m = detail::parse_number(tok.substr(2), std::string(text));
    } else if (tok.rfind("cap=", 0) == 0) {
      const double c = detail::parse_number(tok.substr(4), std::string(text));
      if (!(c >= 1.0)) throw SpecParseError("cap must be >= 1");
      spec.cap = static_cast<std::size_t>(c);
    } else if (tok.rfind("beta=", 0) == 0 && tokens[0] == "ftrl") {
      beta = detail::parse_number(tok.substr(5), std::string(text));
    } else {
      break;
    }
    body.pop_back();
  }
  if (!(spec.m > 0.0)) throw SpecParseError("m must be positive");
  std::string joined;
  for (std::size_t i = 0; i < body.size(); ++i) joined += (i ? ":" : "") + body[i];

  if (tokens[0] == "ftpl") {
    if (joined.empty()) throw SpecParseError("ftpl needs a distribution spec");
    spec.family = PolicySpec::Family::Ftpl;
    spec.dist = parse_distribution(joined);
  } else if (tokens[0] == "ftrl") {
    spec.family = PolicySpec::Family::Ftrl;
    if (joined == "tsallis") {
      const double b = beta.value_or(0.5);
      if (!(b > 0.0 && b < 1.0)) throw SpecParseError("Tsallis beta must lie in (0,1)");
      spec.reg = Tsallis{b};
    } else if (joined == "shannon") {
      if (beta) throw SpecParseError("shannon takes no beta");
      spec.reg = Shannon{};
    } else {
      throw SpecParseError("unknown regularizer '" + joined + "'");
    }
  } else {
    throw SpecParseError("unknown policy family '" + tokens[0] + "'");
  }
  return spec;
}

struct PolicyStats {
  std::size_t resample_calls = 0;
  std::size_t resample_cap_hits = 0;
  double max_kkt_residual = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t select() = 0;
  virtual void observe(std::size_t arm, double loss) = 0;
  const PolicyState& state() const { return state_; }
  const PolicyStats& stats() const { return stats_; }

 protected:
  explicit Policy(PolicyState s) : state_(std::move(s)) {}
  PolicyState state_;
  PolicyStats stats_;
};

class FtplPolicy final : public Policy {
 public:
  FtplPolicy(Distribution dist, PolicyState s) : Policy(std::move(s)), dist_(std::move(dist)) {}

  std::size_t select() override { return ftpl_select(state_, dist_); }

  // The resampling estimate is only needed when the loss is nonzero; skipping it leaves the
  // estimator unchanged.
  void observe(std::size_t arm, double loss) override {
    double west = 0.0;
    if (loss > 0.0) {
      bool capped = false;
      west = static_cast<double>(geometric_resample(state_, dist_, arm, &capped));
      ++stats_.resample_calls;
      if (capped) ++stats_.resample_cap_hits;
    }
    ftpl_update(state_, arm, loss, west);
  }

 private:
  Distribution dist_;
};

class FtrlPolicy final : public Policy {
 public:
  FtrlPolicy(Regularizer reg, PolicyState s) : Policy(std::move(s)), reg_(reg) {}

  std::size_t select() override {
    const auto sol = ftrl_weights(state_.Lhat, state_.eta(), reg_);
    stats_.max_kkt_residual = std::max(stats_.max_kkt_residual, kkt_residual(state_.Lhat, state_.eta(), sol, reg_));
    state_.last_w = sol.p;
    return sample_categorical(state_.last_w, state_.rng);
  }

  void observe(std::size_t arm, double loss) override { ftrl_update(state_, arm, loss, state_.last_w); }

 private:
  Regularizer reg_;
};

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, std::size_t k, Rng rng) {
  PolicyState s(k, spec.m, std::move(rng), spec.cap);
  if (spec.family == PolicySpec::Family::Ftpl) return std::make_unique<FtplPolicy>(*spec.dist, std::move(s));
  return std::make_unique<FtrlPolicy>(spec.reg, std::move(s));
}

}  // namespace pll
