#pragma once

// Experiment configuration, deterministic parallel execution, CSV/JSON output and
// regret-envelope verdicts.
//
// Config files are INI-style:
//
//   [experiment]
//   policy = ftpl:lp:m=0.23
//   environment = bern:0.4,0.6,0.6
//   horizon = 20000
//   runs = 20
//   seed = 7
//   tail_points = 0        ; extra evenly spaced checkpoints on [T/2, T]
//   threads = 0            ; 0 = PLL_THREADS or hardware concurrency
//
//   [output]
//   regret_csv = regret.csv
//   metadata_json = regret.json   ; optional, holds wall time and resampling statistics
//   trace_csv = trace.csv         ; optional, full trace of run 0
//
// Run r draws its losses from make_stream(seed, r, 1) and its policy randomness from
// make_stream(seed, r, 2), so results do not depend on thread scheduling.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "pll/distributions.hpp"
#include "pll/environments.hpp"
#include "pll/errors.hpp"
#include "pll/parallel.hpp"
#include "pll/policies.hpp"
#include "pll/rng.hpp"
#include "pll/stats.hpp"

namespace pll {

struct ExperimentConfig {
  std::string policy;
  std::string environment;
  std::size_t horizon = 1000;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::size_t tail_points = 0;
  std::size_t threads = 0;
  std::string regret_csv;
  std::string metadata_json;
  std::string trace_csv;

  // Canonical key=value text; the hash covers everything that affects the numbers.
  std::string canonical() const {
    std::ostringstream os;
    os << "environment=" << environment << "\nhorizon=" << horizon << "\npolicy=" << policy << "\nruns=" << runs
       << "\nseed=" << seed << "\ntail_points=" << tail_points << "\n";
    return os.str();
  }
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(cfg.canonical())); }

namespace detail {

// 1-based line of the first "key =" occurrence, 0 if absent.
inline std::size_t find_key_line(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    const auto eq = t.find('=');
    if (eq != std::string::npos && trim(std::string_view(t).substr(0, eq)) == key) return n;
  }
  return 0;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), e.line(), "");
  }

  ExperimentConfig cfg;
  auto line_of = [&](const std::string& key) { return detail::find_key_line(text, key); };
  auto req_string = [&](const std::string& path, const std::string& key) {
    auto v = tree.get_optional<std::string>(path);
    if (!v || detail::trim(*v).empty()) throw ConfigError("missing required field", 0, path);
    return detail::trim(*v);
  };
  auto get_count = [&](const std::string& path, const std::string& key, std::size_t fallback, bool positive) {
    auto v = tree.get_optional<std::string>(path);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(detail::trim(*v), &pos);
      if (pos != detail::trim(*v).size() || n < 0 || (positive && n == 0)) throw std::invalid_argument("range");
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ConfigError("expected a " + std::string(positive ? "positive" : "nonnegative") + " integer, got '" + *v +
                            "'",
                        line_of(key), path);
    }
  };

  cfg.policy = req_string("experiment.policy", "policy");
  cfg.environment = req_string("experiment.environment", "environment");
  try {
    parse_policy(cfg.policy);
  } catch (const std::exception& e) {
    throw ConfigError(e.what(), line_of("policy"), "experiment.policy");
  }
  try {
    if (cfg.environment.rfind("sched:", 0) != 0) parse_environment(cfg.environment);
  } catch (const std::exception& e) {
    throw ConfigError(e.what(), line_of("environment"), "experiment.environment");
  }
  cfg.horizon = get_count("experiment.horizon", "horizon", cfg.horizon, true);
  cfg.runs = get_count("experiment.runs", "runs", cfg.runs, true);
  cfg.seed = get_count("experiment.seed", "seed", cfg.seed, false);
  cfg.tail_points = get_count("experiment.tail_points", "tail_points", 0, false);
  cfg.threads = get_count("experiment.threads", "threads", 0, false);
  cfg.regret_csv = detail::trim(tree.get<std::string>("output.regret_csv", ""));
  cfg.metadata_json = detail::trim(tree.get<std::string>("output.metadata_json", ""));
  cfg.trace_csv = detail::trim(tree.get<std::string>("output.trace_csv", ""));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, "");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------------------------

struct ExperimentResult {
  ExperimentConfig config;
  std::size_t arms = 0;
  double m = 0.0;
  std::string policy_desc;
  std::vector<double> gaps;  // empty for adversarial models
  std::vector<std::size_t> checkpoints;
  std::vector<std::vector<double>> regret;  // [run][checkpoint]
  std::vector<double> mean;
  std::vector<double> stderr_;
  std::vector<PolicyStats> run_stats;
  std::vector<TraceStep> trace;  // run 0, when requested
  double wall_seconds = 0.0;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool keep_trace = false) {
  const auto start = std::chrono::steady_clock::now();
  const PolicySpec pspec = parse_policy(cfg.policy);
  const LossModel model = parse_environment(cfg.environment);

  ExperimentResult res;
  res.config = cfg;
  res.arms = model.arms();
  res.m = pspec.m;
  res.policy_desc = pspec.describe();
  if (model.is_stochastic()) res.gaps = model.gaps();
  res.checkpoints = checkpoint_grid(cfg.horizon, cfg.tail_points);
  res.regret.assign(cfg.runs, std::vector<double>(res.checkpoints.size(), 0.0));
  res.run_stats.resize(cfg.runs);
  keep_trace = keep_trace || !cfg.trace_csv.empty();

  parallel_for(
      cfg.runs,
      [&](std::size_t run) {
        Rng env_rng = make_stream(cfg.seed, run, 1);
        auto policy = make_policy(pspec, model.arms(), make_stream(cfg.seed, run, 2));
        RegretAccumulator acc(model);
        std::vector<double> loss;
        std::size_t next_cp = 0;
        auto& row = res.regret[run];
        for (std::size_t t = 1; t <= cfg.horizon; ++t) {
          const std::size_t arm = policy->select();
          model.next_loss(t, env_rng, loss);
          const double r = acc.step(arm, loss);
          policy->observe(arm, loss[arm]);
          if (keep_trace && run == 0) res.trace.push_back({arm, loss});
          if (next_cp < res.checkpoints.size() && res.checkpoints[next_cp] == t) row[next_cp++] = r;
        }
        res.run_stats[run] = policy->stats();
      },
      cfg.threads);

  const std::size_t n_cp = res.checkpoints.size();
  res.mean.resize(n_cp);
  res.stderr_.resize(n_cp);
  std::vector<double> col(cfg.runs);
  for (std::size_t c = 0; c < n_cp; ++c) {
    for (std::size_t r = 0; r < cfg.runs; ++r) col[r] = res.regret[r][c];
    const auto ms = mean_stderr(col);
    res.mean[c] = ms.mean;
    res.stderr_[c] = ms.stderr_;
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + detail::fmt_num(v[i]);
  return s;
}

// Header comments carry the config hash and the metadata needed by `verdict`; no timing data,
// so reruns are byte-identical.
inline void write_regret_csv(std::ostream& os, const ExperimentResult& res) {
  const auto& cfg = res.config;
  os << "# config_hash=" << config_hash(cfg) << "\n";
  os << "# policy=" << res.policy_desc << "\n";
  os << "# environment=" << cfg.environment << "\n";
  os << "# K=" << res.arms << "\n";
  os << "# m=" << detail::fmt_num(res.m) << "\n";
  if (!res.gaps.empty()) os << "# gaps=" << join_numbers(res.gaps) << "\n";
  os << "# horizon=" << cfg.horizon << "\n";
  os << "# runs=" << cfg.runs << "\n";
  os << "# seed=" << cfg.seed << "\n";
  os << "t,mean,stderr";
  for (std::size_t r = 0; r < cfg.runs; ++r) os << ",run_" << r + 1;
  os << "\n";
  for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
    os << res.checkpoints[c] << ',' << detail::fmt_num(res.mean[c]) << ',' << detail::fmt_num(res.stderr_[c]);
    for (std::size_t r = 0; r < cfg.runs; ++r) os << ',' << detail::fmt_num(res.regret[r][c]);
    os << "\n";
  }
}

inline nlohmann::json metadata_json(const ExperimentResult& res) {
  const auto& cfg = res.config;
  const PolicySpec pspec = parse_policy(cfg.policy);
  nlohmann::json j;
  j["config_hash"] = config_hash(cfg);
  j["policy"] = res.policy_desc;
  j["environment"] = cfg.environment;
  if (pspec.dist) j["perturbation"] = pspec.dist->spec();
  j["K"] = res.arms;
  j["m"] = res.m;
  j["horizon"] = cfg.horizon;
  j["runs"] = cfg.runs;
  j["master_seed"] = cfg.seed;
  j["stream_contract"] = "make_stream(seed, run, 1) losses; make_stream(seed, run, 2) policy";
  j["resample_cap"] = pspec.cap > 0 ? std::to_string(pspec.cap) : "ceil(2 K sqrt(t))";
  j["resample_cap_bias_bound"] = "(1-w)^M / w per estimate";
  std::size_t calls = 0, hits = 0;
  double kkt = 0.0;
  for (const auto& s : res.run_stats) {
    calls += s.resample_calls;
    hits += s.resample_cap_hits;
    kkt = std::max(kkt, s.max_kkt_residual);
  }
  j["resample_calls"] = calls;
  j["resample_cap_hits"] = hits;
  if (pspec.family == PolicySpec::Family::Ftrl) j["max_kkt_residual"] = kkt;
  j["wall_seconds"] = res.wall_seconds;
  return j;
}

inline void write_outputs(const ExperimentResult& res) {
  const auto& cfg = res.config;
  if (!cfg.regret_csv.empty()) {
    std::ofstream out(cfg.regret_csv);
    if (!out) throw ConfigError("cannot write '" + cfg.regret_csv + "'", 0, "output.regret_csv");
    write_regret_csv(out, res);
  }
  if (!cfg.metadata_json.empty()) {
    std::ofstream out(cfg.metadata_json);
    if (!out) throw ConfigError("cannot write '" + cfg.metadata_json + "'", 0, "output.metadata_json");
    out << metadata_json(res).dump(2) << "\n";
  }
  if (!cfg.trace_csv.empty()) {
    std::ofstream out(cfg.trace_csv);
    if (!out) throw ConfigError("cannot write '" + cfg.trace_csv + "'", 0, "output.trace_csv");
    write_trace_csv(out, res.trace, parse_environment(cfg.environment));
  }
}

// ---------------------------------------------------------------------------------------------
// Regret tables and envelopes
// ---------------------------------------------------------------------------------------------

struct RegretTable {
  std::map<std::string, std::string> meta;
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> stderr_;
};

inline RegretTable read_regret_csv(std::istream& in) {
  RegretTable tab;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) tab.meta[detail::trim(line.substr(1, eq - 1))] = detail::trim(line.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("t,mean,stderr", 0) != 0) throw MetadataMismatch("regret CSV must start with t,mean,stderr");
      continue;
    }
    const auto cells = detail::split_top_level(line);
    if (cells.size() < 3) throw MetadataMismatch("short row in regret CSV");
    tab.t.push_back(detail::parse_number(cells[0], "regret csv"));
    tab.mean.push_back(detail::parse_number(cells[1], "regret csv"));
    tab.stderr_.push_back(detail::parse_number(cells[2], "regret csv"));
  }
  return tab;
}

namespace envelope {

// (60 m sqrt(pi) + 5.7/m) sqrt(K t) + (2K/27 + e^2) ln(t+1) + sqrt(K pi)/(2m)
struct AdvLP {
  double m = 0.23;
};
// sum_{i != i*} (60m + 1/m)^2 ln t / (0.035 Delta_i) + (2K/27 + e^2) ln(t+1) + (107m + 3/m)^2 K / Delta
struct StoLP {
  double m = 0.23;
  std::vector<double> gaps;
};
// 4 sqrt(K t) + 1
struct TsallisRef {};

}  // namespace envelope

class BoundEnvelope {
 public:
  using Kind = std::variant<envelope::AdvLP, envelope::StoLP, envelope::TsallisRef>;

  BoundEnvelope(Kind k, std::size_t arms) : kind_(std::move(k)), arms_(arms) {
    if (arms_ == 0) throw PreconditionError("envelope needs K >= 1");
  }

  const Kind& kind() const { return kind_; }
  std::size_t arms() const { return arms_; }

  double evaluate(double t) const {
    const double K = static_cast<double>(arms_);
    const double log_term = (2.0 * K / 27.0 + std::numbers::e * std::numbers::e) * std::log(t + 1.0);
    return std::visit(detail::overloaded{
                          [&](const envelope::AdvLP& e) {
                            return leading_coefficient(e.m) * std::sqrt(K * t) + log_term +
                                   std::sqrt(K * std::numbers::pi) / (2.0 * e.m);
                          },
                          [&](const envelope::StoLP& e) {
                            const double a = 60.0 * e.m + 1.0 / e.m;
                            const double b = 107.0 * e.m + 3.0 / e.m;
                            double sum = 0.0, delta = kInf;
                            for (double g : e.gaps)
                              if (g > 0.0) {
                                sum += a * a * std::log(t) / (0.035 * g);
                                delta = std::min(delta, g);
                              }
                            return sum + log_term + b * b * K / delta;
                          },
                          [&](const envelope::TsallisRef&) { return 4.0 * std::sqrt(K * t) + 1.0; },
                      },
                      kind_);
  }

  static double leading_coefficient(double m) { return 60.0 * m * std::sqrt(std::numbers::pi) + 5.7 / m; }

 private:
  Kind kind_;
  std::size_t arms_;
};

namespace detail {

inline std::vector<double> parse_number_list(const std::vector<std::string>& toks, const std::string& ctx) {
  std::vector<double> v;
  for (const auto& t : toks) v.push_back(parse_number(t, ctx));
  return v;
}

}  // namespace detail

// advlp[:m=0.23]   stolp[:m=0.23[,gaps=0,0.2,...]]   tsallis
// K and missing gaps are taken from the table metadata; explicit values must agree with it.
inline BoundEnvelope parse_envelope(std::string_view text, const RegretTable& tab) {
  const std::string s = detail::trim(text);
  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);

  auto meta = [&](const std::string& key) -> std::string {
    const auto it = tab.meta.find(key);
    if (it == tab.meta.end()) throw MetadataMismatch("regret CSV lacks '" + key + "' metadata");
    return it->second;
  };
  const auto K = static_cast<std::size_t>(detail::parse_number(meta("K"), "K"));

  std::optional<double> m;
  std::optional<std::vector<double>> gaps;
  std::vector<double>* current = nullptr;
  if (!args.empty()) {
    for (const auto& tok : detail::split_top_level(args)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        if (!current) throw SpecParseError("stray value in envelope '" + s + "'");
        current->push_back(detail::parse_number(tok, s));
        continue;
      }
      const std::string key = detail::trim(tok.substr(0, eq));
      const double v = detail::parse_number(detail::trim(tok.substr(eq + 1)), s);
      if (key == "m") {
        m = v;
        current = nullptr;
      } else if (key == "gaps") {
        gaps = std::vector<double>{v};
        current = &*gaps;
      } else {
        throw SpecParseError("unknown envelope key '" + key + "'");
      }
    }
  }
  const double table_m = detail::parse_number(meta("m"), "m");
  if (m && std::abs(*m - table_m) > 1e-12)
    throw MetadataMismatch("envelope m=" + detail::fmt_num(*m) + " but runs used m=" + detail::fmt_num(table_m));
  const double use_m = m.value_or(table_m);

  if (name == "advlp") return BoundEnvelope(envelope::AdvLP{use_m}, K);
  if (name == "tsallis") return BoundEnvelope(envelope::TsallisRef{}, K);
  if (name == "stolp") {
    const auto table_gaps = detail::parse_number_list(detail::split_top_level(meta("gaps")), "gaps");
    if (gaps) {
      if (gaps->size() != table_gaps.size()) throw MetadataMismatch("envelope gaps have the wrong length");
      for (std::size_t i = 0; i < gaps->size(); ++i)
        if (std::abs((*gaps)[i] - table_gaps[i]) > 1e-12) throw MetadataMismatch("envelope gaps differ from the runs");
    }
    if (table_gaps.size() != K) throw MetadataMismatch("gap count differs from K");
    return BoundEnvelope(envelope::StoLP{use_m, gaps.value_or(table_gaps)}, K);
  }
  throw SpecParseError("unknown envelope '" + name + "'");
}

struct VerdictRow {
  double t = 0.0;
  double mean = 0.0;
  double upper = 0.0;  // mean + 2 stderr
  double bound = 0.0;
  bool pass = false;
};

struct Verdict {
  std::vector<VerdictRow> rows;
  bool all_pass = true;
  std::size_t failures = 0;
};

inline Verdict verdict(const RegretTable& tab, const BoundEnvelope& env) {
  Verdict v;
  for (std::size_t i = 0; i < tab.t.size(); ++i) {
    VerdictRow r;
    r.t = tab.t[i];
    r.mean = tab.mean[i];
    r.upper = tab.mean[i] + 2.0 * tab.stderr_[i];
    r.bound = env.evaluate(r.t);
    r.pass = r.upper <= r.bound;
    if (!r.pass) {
      v.all_pass = false;
      ++v.failures;
    }
    v.rows.push_back(r);
  }
  return v;
}

// Least-squares fit of mean regret against ln t over checkpoints t >= from_t.
inline LinearFit log_growth_fit(const RegretTable& tab, double from_t) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < tab.t.size(); ++i)
    if (tab.t[i] >= from_t) {
      x.push_back(std::log(tab.t[i]));
      y.push_back(tab.mean[i]);
    }
  return linear_fit(x, y);
}

inline RegretTable to_table(const ExperimentResult& res) {
  std::stringstream ss;
  write_regret_csv(ss, res);
  return read_regret_csv(ss);
}

}  // namespace pll
