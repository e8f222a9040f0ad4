#pragma once

// Arm-selection probabilities of follow-the-perturbed-leader.
//
// For a loss vector lambda and i.i.d. perturbations with distribution F and density f,
//
//   phi_i(lambda)  = P[i = argmin_j (lambda_j - r_j)]
//                  = int f (z + g_i) prod_{j != i} F(z + g_j) dz,
//   phi'_i(lambda) = d phi_i / d lambda_i
//                  = int f'(z + g_i) prod_{j != i} F(z + g_j) dz,
//
// with g = lambda - min(lambda). The integrals are cut at every kink of the integrand,
// i.e. at {k - g_j} for each kink k of the law, and at +-max(50, 10 max g); beyond those
// points the quadrature uses a rational map to the infinite ends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pll/distributions.hpp"
#include "pll/errors.hpp"
#include "pll/quadrature.hpp"
#include "pll/rng.hpp"
#include "pll/stats.hpp"

namespace pll {

struct SelectionProbe {
  std::vector<double> lambda;
  std::vector<double> lambda_gap;
  std::vector<std::size_t> rank;  // 1-based rank in nondecreasing order, ties by index
  std::vector<double> phi;
  std::vector<double> phi_prime;
  std::vector<double> ratio_1;   // -phi'/phi
  std::vector<double> ratio_32;  // -phi'/phi^(3/2)
  double quad_error = 0.0;
};

inline std::vector<double> gaps_from_min(std::span<const double> lambda) {
  const double lo = *std::min_element(lambda.begin(), lambda.end());
  std::vector<double> g(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) g[i] = lambda[i] - lo;
  return g;
}

inline std::vector<std::size_t> ranks_nondecreasing(std::span<const double> lambda) {
  std::vector<std::size_t> r(lambda.size(), 1);
  for (std::size_t i = 0; i < lambda.size(); ++i)
    for (std::size_t j = 0; j < lambda.size(); ++j)
      if (lambda[j] < lambda[i] || (lambda[j] == lambda[i] && j < i)) ++r[i];
  return r;
}

namespace detail {

// Shared geometry of the selection integrals for one gap vector.
class SelectionIntegrand {
 public:
  SelectionIntegrand(const Distribution& dist, std::span<const double> gaps) : dist_(dist), gaps_(gaps) {}

  // prod_{j not in {skip1, skip2}} F(z + g_j); switches to log space once a factor is tiny.
  double cdf_product(double z, std::size_t skip1, std::size_t skip2 = static_cast<std::size_t>(-1)) const {
    double prod = 1.0;
    bool use_log = false;
    double log_sum = 0.0;
    for (std::size_t j = 0; j < gaps_.size(); ++j) {
      if (j == skip1 || j == skip2) continue;
      const double F = dist_.cdf(z + gaps_[j]);
      if (F <= 0.0) return 0.0;
      if (!use_log && F < 1e-12) {
        use_log = true;
        log_sum = std::log(prod);
      }
      if (use_log)
        log_sum += std::log(F);
      else
        prod *= F;
    }
    return use_log ? std::exp(log_sum) : prod;
  }

  std::vector<double> breakpoints() const {
    const double gmax = *std::max_element(gaps_.begin(), gaps_.end());
    const double reach = std::max(50.0, 10.0 * gmax);
    std::vector<double> pts{-reach, reach};
    const auto kinks = dist_.kinks();
    for (double g : gaps_)
      for (double k : kinks) pts.push_back(k - g);
    return pts;
  }

  const Distribution& dist() const { return dist_; }
  std::span<const double> gaps() const { return gaps_; }

 private:
  const Distribution& dist_;
  std::span<const double> gaps_;
};

inline quad::Result integrate_checked(const auto& f, const std::vector<double>& pts, double tol) {
  const double piece_tol = 0.5 * tol / static_cast<double>(pts.size() + 1);
  quad::Result r = quad::integrate_line(f, pts, quad::Options{piece_tol, 1e-13, 2000});
  if (r.error > tol) r = quad::integrate_line(f, pts, quad::Options{0.1 * piece_tol, 0.0, 20000});
  return r;
}

inline void check_lambda(std::span<const double> lambda, std::size_t min_k) {
  if (lambda.size() < min_k) throw PreconditionError("need at least " + std::to_string(min_k) + " arms");
  for (double v : lambda)
    if (!std::isfinite(v)) throw PreconditionError("loss vector must be finite");
}

}  // namespace detail

// Quadrature evaluation of phi and phi' for every arm. quad_error is the summed estimated
// absolute error over all 2K integrals and is guaranteed <= tol on return.
inline SelectionProbe phi_quadrature(std::span<const double> lambda, const Distribution& dist, double tol = 1e-10) {
  detail::check_lambda(lambda, 2);
  if (!(tol > 0.0 && tol <= 1e-4)) throw PreconditionError("tolerance must lie in (0, 1e-4]");

  SelectionProbe probe;
  probe.lambda.assign(lambda.begin(), lambda.end());
  probe.lambda_gap = gaps_from_min(lambda);
  probe.rank = ranks_nondecreasing(lambda);

  const std::size_t k = lambda.size();
  const detail::SelectionIntegrand geom(dist, probe.lambda_gap);
  const auto pts = geom.breakpoints();
  const double per_integral_tol = tol / static_cast<double>(2 * k);

  probe.phi.resize(k);
  probe.phi_prime.resize(k);
  probe.ratio_1.resize(k);
  probe.ratio_32.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double gi = probe.lambda_gap[i];
    auto density = [&](double z) {
      const double f = dist.pdf(z + gi);
      return f == 0.0 ? 0.0 : f * geom.cdf_product(z, i);
    };
    auto slope = [&](double z) {
      const double d = dist.pdf_prime(z + gi).value;
      return d == 0.0 ? 0.0 : d * geom.cdf_product(z, i);
    };
    const auto p = detail::integrate_checked(density, pts, per_integral_tol);
    const auto dp = detail::integrate_checked(slope, pts, per_integral_tol);
    probe.phi[i] = p.value;
    probe.phi_prime[i] = dp.value;
    probe.quad_error += p.error + dp.error;
    probe.ratio_1[i] = -dp.value / p.value;
    probe.ratio_32[i] = -dp.value / std::pow(p.value, 1.5);
  }
  if (probe.quad_error > tol) throw ToleranceNotMet("selection quadrature", probe.quad_error);
  return probe;
}

// Jacobian d phi_i / d lambda_j. Off-diagonal entries are
// int f(z+g_i) f(z+g_j) prod_{k != i,j} F(z+g_k) dz >= 0; the diagonal is phi'_i.
inline Eigen::MatrixXd phi_jacobian(std::span<const double> lambda, const Distribution& dist, double tol = 1e-10) {
  const SelectionProbe probe = phi_quadrature(lambda, dist, tol);
  const std::size_t k = lambda.size();
  const detail::SelectionIntegrand geom(dist, probe.lambda_gap);
  const auto pts = geom.breakpoints();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = probe.phi_prime[i];
    for (std::size_t j = i + 1; j < k; ++j) {
      const double gi = probe.lambda_gap[i], gj = probe.lambda_gap[j];
      auto cross = [&](double z) {
        const double fi = dist.pdf(z + gi);
        if (fi == 0.0) return 0.0;
        const double fj = dist.pdf(z + gj);
        return fj == 0.0 ? 0.0 : fi * fj * geom.cdf_product(z, i, j);
      };
      const double v = detail::integrate_checked(cross, pts, tol).value;
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------------------------
// Monte Carlo oracle
// ---------------------------------------------------------------------------------------------

struct MonteCarloEstimate {
  std::vector<double> phi_hat;
  std::vector<double> ci_halfwidth;  // 95% normal approximation
  std::size_t draws = 0;
};

// Index of argmin_j (lambda_j - r_j / scale), ties to the lowest index.
inline std::size_t perturbed_argmin(std::span<const double> lambda, std::span<const double> r, double scale = 1.0) {
  std::size_t best = 0;
  double best_v = lambda[0] - r[0] / scale;
  for (std::size_t j = 1; j < lambda.size(); ++j) {
    const double v = lambda[j] - r[j] / scale;
    if (v < best_v) {
      best_v = v;
      best = j;
    }
  }
  return best;
}

inline MonteCarloEstimate phi_monte_carlo(std::span<const double> lambda, const Distribution& dist, std::size_t n,
                                          Rng& rng) {
  detail::check_lambda(lambda, 1);
  if (n < 10000) throw PreconditionError("Monte Carlo oracle needs n >= 1e4 draws");
  const std::size_t k = lambda.size();
  std::vector<std::size_t> wins(k, 0);
  std::vector<double> r(k);
  for (std::size_t s = 0; s < n; ++s) {
    dist.sample_into(r, rng);
    ++wins[perturbed_argmin(lambda, r)];
  }
  MonteCarloEstimate est;
  est.draws = n;
  est.phi_hat.resize(k);
  est.ci_halfwidth.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = static_cast<double>(wins[i]) / static_cast<double>(n);
    est.phi_hat[i] = p;
    est.ci_halfwidth[i] = 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  }
  return est;
}

// ---------------------------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------------------------

// lambda_i(c) = coef_i * c + offset_i, e.g. "0,c,c" or "0,c,2c".
struct LambdaTemplate {
  std::vector<double> coef;
  std::vector<double> offset;

  std::vector<double> at(double c) const {
    std::vector<double> out(coef.size());
    for (std::size_t i = 0; i < coef.size(); ++i) out[i] = coef[i] * c + offset[i];
    return out;
  }
  std::size_t arms() const { return coef.size(); }

  static LambdaTemplate one_vs_rest(std::size_t k) {
    LambdaTemplate t{std::vector<double>(k, 1.0), std::vector<double>(k, 0.0)};
    t.coef[0] = 0.0;
    return t;
  }
  static LambdaTemplate staircase(std::size_t k) {
    LambdaTemplate t{std::vector<double>(k), std::vector<double>(k, 0.0)};
    for (std::size_t i = 0; i < k; ++i) t.coef[i] = static_cast<double>(i);
    return t;
  }
};

// Parses comma-separated entries of the form <num>, c, <num>c, <num>c+<num>.
inline LambdaTemplate parse_lambda_template(std::string_view text) {
  LambdaTemplate t;
  for (const auto& tok : detail::split_top_level(text)) {
    if (tok.empty()) throw SpecParseError("empty entry in lambda template");
    const auto cpos = tok.find('c');
    if (cpos == std::string::npos) {
      t.coef.push_back(0.0);
      t.offset.push_back(detail::parse_number(tok, std::string(text)));
      continue;
    }
    const std::string head = detail::trim(tok.substr(0, cpos));
    const std::string tail = detail::trim(tok.substr(cpos + 1));
    double a = 1.0;
    if (head == "-")
      a = -1.0;
    else if (!head.empty() && head != "+")
      a = detail::parse_number(head.back() == '*' ? head.substr(0, head.size() - 1) : head, std::string(text));
    double b = 0.0;
    if (!tail.empty()) b = detail::parse_number(tail, std::string(text));
    t.coef.push_back(a);
    t.offset.push_back(b);
  }
  if (t.coef.size() < 2) throw SpecParseError("lambda template needs at least two arms");
  return t;
}

// start:stop:step (inclusive of stop up to rounding).
inline std::vector<double> parse_grid(std::string_view text) {
  const auto parts = detail::split_top_level(text, ':');
  if (parts.size() != 3) throw SpecParseError("grid must be start:stop:step");
  const double a = detail::parse_number(parts[0], std::string(text));
  const double b = detail::parse_number(parts[1], std::string(text));
  const double h = detail::parse_number(parts[2], std::string(text));
  if (!(h > 0.0) || b < a) throw SpecParseError("grid needs step > 0 and stop >= start");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
  return out;
}

struct PhiScanRow {
  double c = 0.0;
  std::size_t arm = 0;  // 1-based
  std::size_t sigma = 0;
  double phi = 0.0;
  double phi_prime = 0.0;
  double ratio_1 = 0.0;
  double ratio_32 = 0.0;
  double quad_error = 0.0;
};

inline std::vector<PhiScanRow> phi_scan(const Distribution& dist, const LambdaTemplate& family,
                                        std::span<const double> c_grid, double tol = 1e-10) {
  std::vector<PhiScanRow> rows;
  for (double c : c_grid) {
    const auto probe = phi_quadrature(family.at(c), dist, tol);
    for (std::size_t i = 0; i < family.arms(); ++i)
      rows.push_back({c, i + 1, probe.rank[i], probe.phi[i], probe.phi_prime[i], probe.ratio_1[i], probe.ratio_32[i],
                      probe.quad_error});
  }
  return rows;
}

struct RankScanRow {
  double c = 0.0;
  std::size_t arm = 0;  // 1-based
  std::size_t sigma = 0;
  double gap = 0.0;
  double ratio_1 = 0.0;
  double rank_term = 0.0;  // sigma^(-1/alpha)
  double gap_term = 0.0;   // 1/gap, +inf at gap 0
  double normalized = 0.0; // ratio_1 / min(rank_term, gap_term)
  double running_max = 0.0;
};

// Rank/gap scan of -phi'/phi for a two-sided hybrid with left index >= right index + 2 > 3.
inline std::vector<RankScanRow> rank_scan(const Distribution& dist, const LambdaTemplate& family,
                                                std::span<const double> c_grid, double tol = 1e-10) {
  const double alpha = dist.tail_index_right();
  const double beta = dist.tail_index_left();
  if (!dist.is_two_sided_hybrid()) throw PreconditionError("rank scan requires a two-sided hybrid law");
  if (!(alpha > 1.0)) throw PreconditionError("rank scan requires right tail index > 1");
  if (!(beta >= alpha + 2.0))
    throw PreconditionError("rank scan requires left tail index >= right tail index + 2 (got " +
                            detail::fmt_num(beta) + " < " + detail::fmt_num(alpha + 2.0) + ")");
  std::vector<RankScanRow> rows;
  double running = 0.0;
  for (double c : c_grid) {
    const auto probe = phi_quadrature(family.at(c), dist, tol);
    for (std::size_t i = 0; i < family.arms(); ++i) {
      RankScanRow row;
      row.c = c;
      row.arm = i + 1;
      row.sigma = probe.rank[i];
      row.gap = probe.lambda_gap[i];
      row.ratio_1 = probe.ratio_1[i];
      row.rank_term = std::pow(static_cast<double>(row.sigma), -1.0 / alpha);
      row.gap_term = row.gap > 0.0 ? 1.0 / row.gap : kInf;
      row.normalized = row.ratio_1 / std::min(row.rank_term, row.gap_term);
      running = std::max(running, row.normalized);
      row.running_max = running;
      rows.push_back(row);
    }
  }
  return rows;
}

struct CounterexampleRow {
  double c = 0.0;
  std::size_t arm = 0;  // 1-based, suboptimal arms only
  double ratio_1 = 0.0;
  double ratio_32 = 0.0;
  bool meets_ratio_1_floor = true;   // ratio_1 >= 1/31
  bool meets_ratio_32_floor = true;  // ratio_32 >= (c+1)/11
};

// lambda = (0, c, ..., c); for the shape-2 symmetric Pareto law with K = 3 the explicit floors
// 1/31 and (c+1)/11 are checked at every grid point.
inline std::vector<CounterexampleRow> counterexample_scan(const Distribution& dist, std::size_t k,
                                                          std::span<const double> c_grid, double tol = 1e-10) {
  if (k < 3) throw PreconditionError("counterexample scan needs K >= 3");
  const double c_min = 2.0 * std::sqrt(static_cast<double>(k));
  for (double c : c_grid)
    if (c < c_min - 1e-12) throw PreconditionError("c grid must lie in [2 sqrt(K), inf)");
  const auto* sp = std::get_if<kind::SymmetricPareto>(&dist.kind());
  const bool explicit_floors = sp && sp->shape == 2.0 && k == 3;
  const auto family = LambdaTemplate::one_vs_rest(k);
  std::vector<CounterexampleRow> rows;
  for (double c : c_grid) {
    const auto probe = phi_quadrature(family.at(c), dist, tol);
    for (std::size_t i = 1; i < k; ++i) {
      CounterexampleRow row{c, i + 1, probe.ratio_1[i], probe.ratio_32[i]};
      if (explicit_floors) {
        row.meets_ratio_1_floor = row.ratio_1 >= 1.0 / 31.0;
        row.meets_ratio_32_floor = row.ratio_32 >= (c + 1.0) / 11.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace pll
