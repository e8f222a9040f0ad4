#pragma once

// Grid and Monte Carlo estimates of the regularity conditions used by FTPL analyses:
// bounded hazard f/(1-F), decreasing f/F, eventually decreasing f, block-maximum moments
// normalized by a_k = F^{-1}(1 - 1/k), bounded -f'/f, and the von Mises limit x f/(1-F).
//
// Estimates are findings, not certificates: a sup that keeps growing at the grid end is
// reported as +inf and listed in `non_finite`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pll/distributions.hpp"
#include "pll/errors.hpp"
#include "pll/rng.hpp"
#include "pll/stats.hpp"

namespace pll {

struct GridSpec {
  double x_min = 1e-3;
  double x_max = 1e3;
  std::size_t points = 2000;
};

struct McSpec {
  std::vector<std::size_t> block_sizes{10, 100, 1000};
  std::size_t blocks = 2000;
  std::uint64_t seed = 1;
};

struct Estimate {
  double value = 0.0;
  double ci_halfwidth = 0.0;
};

struct BlockMaxEstimate {
  std::size_t k = 0;
  double a_k = 0.0;
  Estimate mean_max_over_a;  // E[max_i X_i / a_k]
  Estimate mean_a_over_max;  // E[a_k / max_i X_i]
};

struct AssumptionReport {
  double hazard_sup = 0.0;
  bool fF_monotone = true;
  double fF_first_violation = kInf;  // grid point where f/F first increases, +inf if none
  double f_unimodal_from = 0.0;
  double block_max_Mu = 0.0;
  double block_max_Ml = 0.0;
  std::vector<BlockMaxEstimate> blocks;
  double a_k_lower = 0.0;  // A_l: min over k of a_k k^(-1/alpha)
  double a_k_upper = 0.0;  // A_u: max over k of a_k k^(-1/alpha)
  double neg_logderiv_sup = 0.0;
  double von_mises_limit = 0.0;
  std::vector<std::string> non_finite;
  std::size_t grid_points = 0;
  std::size_t mc_blocks = 0;
};

// Sorted evaluation grid: geometric on [x_min, x_max], mirrored to the negative axis for laws
// supported on the whole line, plus 0 when it is inside the support.
inline std::vector<double> assumption_grid(const Distribution& dist, const GridSpec& g) {
  if (!(g.x_min > 0.0) || g.x_max < 1e3 || g.points < 2) throw GridError("assumption grid must cover [x_min>0, >=1e3]");
  std::vector<double> pos(g.points);
  const double r = std::log(g.x_max / g.x_min) / static_cast<double>(g.points - 1);
  for (std::size_t i = 0; i < g.points; ++i) pos[i] = g.x_min * std::exp(r * static_cast<double>(i));
  pos.back() = g.x_max;
  std::vector<double> grid;
  if (dist.support().lo < 0.0)
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) grid.push_back(-*it);
  if (dist.support().contains(0.0)) grid.push_back(0.0);
  grid.insert(grid.end(), pos.begin(), pos.end());
  return grid;
}

namespace detail {

// Grid sup of a nonnegative statistic. Divergence heuristic: the sup sits in the last decade
// of the grid and the statistic grew by more than half over that decade.
inline double grid_sup(const std::vector<double>& x, const std::vector<double>& v, bool& diverges) {
  double best = -kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::isfinite(v[i]) && v[i] > best) {
      best = v[i];
      arg = i;
    }
  diverges = false;
  const double x_end = x.back();
  if (x_end > 0.0 && x[arg] >= x_end / 10.0) {
    const auto decade = std::lower_bound(x.begin(), x.end(), x_end / 10.0);
    const double start = v[static_cast<std::size_t>(decade - x.begin())];
    diverges = start > 0.0 && v.back() > 1.5 * start;
  }
  for (double y : v)
    if (std::isinf(y)) diverges = true;
  return diverges ? kInf : best;
}

}  // namespace detail

inline AssumptionReport check_assumptions(const Distribution& dist, const GridSpec& grid_spec = {},
                                          const McSpec& mc = {}) {
  AssumptionReport rep;
  const auto x = assumption_grid(dist, grid_spec);
  rep.grid_points = x.size();
  rep.mc_blocks = mc.blocks;

  std::vector<double> hazard(x.size()), fF(x.size()), f(x.size()), nld(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    f[i] = dist.pdf(x[i]);
    const double S = dist.sf(x[i]);
    const double F = dist.cdf(x[i]);
    hazard[i] = S > 0.0 ? f[i] / S : kInf;
    fF[i] = F > 0.0 ? f[i] / F : kInf;
    nld[i] = f[i] > 0.0 ? -dist.pdf_prime(x[i]).value / f[i] : 0.0;
  }

  bool div = false;
  rep.hazard_sup = detail::grid_sup(x, hazard, div);
  if (div) rep.non_finite.push_back("hazard_sup");

  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::isfinite(fF[i - 1]) && fF[i] > fF[i - 1] * (1.0 + 1e-12)) {
      rep.fF_monotone = false;
      rep.fF_first_violation = x[i];
      break;
    }
  }

  std::size_t last_rise = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (f[i] > f[i - 1] * (1.0 + 1e-12)) last_rise = i;
  rep.f_unimodal_from = x[last_rise];

  // -f'/f is only required to be bounded on the upper half-line.
  std::vector<double> xs, vs;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= 0.0) {
      xs.push_back(x[i]);
      vs.push_back(nld[i]);
    }
  rep.neg_logderiv_sup = detail::grid_sup(xs, vs, div);
  if (div) rep.non_finite.push_back("neg_logderiv_sup");

  const double x_end = x.back();
  const double s_end = dist.sf(x_end);
  rep.von_mises_limit = s_end > 0.0 ? x_end * dist.pdf(x_end) / s_end : kInf;
  if (!std::isfinite(rep.von_mises_limit)) rep.non_finite.push_back("von_mises_limit");

  const double alpha = dist.tail_index_right();
  Rng rng = make_stream(mc.seed, 0, 0x61737375);
  rep.a_k_lower = kInf;
  rep.a_k_upper = 0.0;
  std::vector<double> draws, ratio, inv;
  for (std::size_t k : mc.block_sizes) {
    if (k < 2) throw PreconditionError("block sizes must be >= 2");
    BlockMaxEstimate b;
    b.k = k;
    b.a_k = dist.quantile(1.0 - 1.0 / static_cast<double>(k));
    draws.resize(k);
    ratio.clear();
    inv.clear();
    for (std::size_t s = 0; s < mc.blocks; ++s) {
      dist.sample_into(draws, rng);
      const double mx = *std::max_element(draws.begin(), draws.end());
      ratio.push_back(mx / b.a_k);
      inv.push_back(b.a_k / mx);
    }
    const auto r = mean_stderr(ratio);
    const auto q = mean_stderr(inv);
    b.mean_max_over_a = {r.mean, 1.959963984540054 * r.stderr_};
    b.mean_a_over_max = {q.mean, 1.959963984540054 * q.stderr_};
    rep.block_max_Mu = std::max(rep.block_max_Mu, r.mean);
    rep.block_max_Ml = std::max(rep.block_max_Ml, q.mean);
    if (std::isfinite(alpha)) {
      const double norm = b.a_k * std::pow(static_cast<double>(k), -1.0 / alpha);
      rep.a_k_lower = std::min(rep.a_k_lower, norm);
      rep.a_k_upper = std::max(rep.a_k_upper, norm);
    }
    rep.blocks.push_back(b);
  }
  if (!std::isfinite(alpha)) {
    rep.a_k_lower = 0.0;
    rep.a_k_upper = kInf;
    rep.non_finite.push_back("a_k_fit");
  }
  if (!std::isfinite(rep.block_max_Ml)) rep.non_finite.push_back("block_max_Ml");
  return rep;
}

struct ReportRow {
  std::string assumption;
  std::string statistic;
  double value = 0.0;
  std::string grid_or_mc;
  std::string notes;
};

inline std::vector<ReportRow> report_rows(const AssumptionReport& r) {
  const std::string grid = "grid:" + std::to_string(r.grid_points);
  const std::string mc = "mc:" + std::to_string(r.mc_blocks);
  auto flagged = [&](const char* name) {
    return std::find(r.non_finite.begin(), r.non_finite.end(), name) != r.non_finite.end() ? "non-finite" : "";
  };
  std::vector<ReportRow> rows{
      {"A1", "hazard_sup", r.hazard_sup, grid, flagged("hazard_sup")},
      {"A2", "fF_monotone", r.fF_monotone ? 1.0 : 0.0, grid, ""},
      {"A2", "fF_first_violation", r.fF_first_violation, grid, r.fF_monotone ? "none" : ""},
      {"A3", "f_unimodal_from", r.f_unimodal_from, grid, ""},
      {"A4", "block_max_Mu", r.block_max_Mu, mc, ""},
      {"A4", "block_max_Ml", r.block_max_Ml, mc, flagged("block_max_Ml")},
  };
  for (const auto& b : r.blocks) {
    const std::string k = "k=" + std::to_string(b.k);
    rows.push_back({"A4", "a_k", b.a_k, "exact", k});
    rows.push_back({"A4", "E[max/a_k]", b.mean_max_over_a.value, mc,
                    k + " ci=" + detail::fmt_num(b.mean_max_over_a.ci_halfwidth)});
    rows.push_back({"A4", "E[a_k/max]", b.mean_a_over_max.value, mc,
                    k + " ci=" + detail::fmt_num(b.mean_a_over_max.ci_halfwidth)});
  }
  rows.push_back({"A4", "A_l", r.a_k_lower, "exact", flagged("a_k_fit")});
  rows.push_back({"A4", "A_u", r.a_k_upper, "exact", flagged("a_k_fit")});
  rows.push_back({"A5", "neg_logderiv_sup", r.neg_logderiv_sup, grid, flagged("neg_logderiv_sup")});
  rows.push_back({"vonMises", "x_f_over_sf_at_end", r.von_mises_limit, grid, flagged("von_mises_limit")});
  return rows;
}

}  // namespace pll
