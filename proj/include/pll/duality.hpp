#pragma once

// FTPL/FTRL duality.
//
// Potential (expected perturbed maximum reward)
//   Phi(nu) = sum_i int z f(z - nu_i) prod_{j != i} F(z - nu_j) dz,   dPhi/dnu_i = phi_i(nu),
// regularizer as its convex conjugate
//   V(p) = <p, nu> - Phi(nu)   with phi(nu) = p, nu_K = 0,
// and the two-arm picture: the derivative c(x) of the reduced regularizer is the quantile of
// r2 - r1. For Tsallis entropy with parameter b
//   c(x) = -(b/(1-b)) (x^(b-1) - (1-x)^(b-1)),
// and the law of a single perturbation is recovered by inverting sqrt(g) where
// g(t) = int_0^1 exp(i t c(p)) dp is the characteristic function of r2 - r1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include "pll/distributions.hpp"
#include "pll/errors.hpp"
#include "pll/parallel.hpp"
#include "pll/quadrature.hpp"
#include "pll/rng.hpp"
#include "pll/selection.hpp"

namespace pll {

struct DualityProbe {
  std::vector<double> nu;
  double Phi = 0.0;
  double V = 0.0;
  double c_of_x = 0.0;
  double grad_check = 0.0;
};

// ---------------------------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------------------------

inline std::vector<double> nu_to_loss(std::span<const double> nu) {
  const double top = *std::max_element(nu.begin(), nu.end());
  std::vector<double> g(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) g[i] = top - nu[i];
  return g;
}

inline double potential(std::span<const double> nu, const Distribution& dist, double tol = 1e-10) {
  if (nu.empty()) throw PreconditionError("potential needs at least one arm");
  for (double v : nu)
    if (!std::isfinite(v)) throw PreconditionError("reward vector must be finite");
  if (std::min(dist.tail_index_left(), dist.tail_index_right()) <= 1.0)
    throw NonIntegrable("potential needs a finite mean (tail index > 1)");

  const double top = *std::max_element(nu.begin(), nu.end());
  const auto gaps = nu_to_loss(nu);
  const detail::SelectionIntegrand geom(dist, gaps);
  const auto pts = geom.breakpoints();
  double total = top;
  double err = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double gi = gaps[i];
    auto integrand = [&](double z) {
      const double f = dist.pdf(z + gi);
      return f == 0.0 ? 0.0 : z * f * geom.cdf_product(z, i);
    };
    const auto r = detail::integrate_checked(integrand, pts, tol / static_cast<double>(nu.size()));
    total += r.value;
    err += r.error;
  }
  if (err > tol) throw ToleranceNotMet("potential quadrature", err);
  return total;
}

// max_i |(Phi(nu + h e_i) - Phi(nu - h e_i)) / 2h - phi_i(-nu)|.
inline double potential_gradient_check(std::span<const double> nu, const Distribution& dist, double h = 1e-4) {
  const auto probe = phi_quadrature(nu_to_loss(nu), dist, 1e-10);
  double worst = 0.0;
  std::vector<double> v(nu.begin(), nu.end());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    v[i] = nu[i] + h;
    const double up = potential(v, dist, 1e-11);
    v[i] = nu[i] - h;
    const double dn = potential(v, dist, 1e-11);
    v[i] = nu[i];
    worst = std::max(worst, std::abs((up - dn) / (2.0 * h) - probe.phi[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------------------------
// Regularizer by Legendre transform
// ---------------------------------------------------------------------------------------------

struct RegularizerValue {
  double V = 0.0;
  std::vector<double> nu;  // nu_K = 0
  double residual = 0.0;   // max_i |phi_i(nu) - p_i|
  double Phi = 0.0;
};

namespace detail {

inline std::vector<double> phi_of_nu(std::span<const double> nu, const Distribution& dist) {
  return phi_quadrature(nu_to_loss(nu), dist, 1e-11).phi;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace detail

// Solves phi(nu) = p (nu_K = 0) by damped Newton with the quadrature Jacobian, falling back to
// coordinate bisection sweeps when a Newton step cannot reduce the residual.
inline RegularizerValue regularizer_value(std::span<const double> p, const Distribution& dist, double tol = 1e-8) {
  const std::size_t k = p.size();
  if (k < 2) throw PreconditionError("regularizer needs at least two arms");
  double sum = 0.0;
  for (double v : p) {
    if (!(v > 0.0 && v < 1.0)) throw PreconditionError("p must lie in the interior of the simplex");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw PreconditionError("p must sum to one");
  if (!dist.support().is_real_line()) throw SupportError("regularizer needs a law supported on the whole line");

  std::vector<double> nu(k);
  for (std::size_t i = 0; i < k; ++i) nu[i] = std::log(p[i] / p[k - 1]);
  std::vector<double> phi = detail::phi_of_nu(nu, dist);
  double res = detail::max_abs_diff(phi, p);
  const auto n = static_cast<Eigen::Index>(k - 1);

  auto bisection_sweep = [&] {
    for (std::size_t i = 0; i + 1 < k; ++i) {
      double lo = nu[i] - 1.0, hi = nu[i] + 1.0;
      auto phi_i = [&](double v) {
        nu[i] = v;
        return detail::phi_of_nu(nu, dist)[i] - p[i];
      };
      while (phi_i(lo) > 0.0) lo -= 2.0 * (hi - lo);
      while (phi_i(hi) < 0.0) hi += 2.0 * (hi - lo);
      boost::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(phi_i, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                        iters);
      nu[i] = 0.5 * (r.first + r.second);
    }
    phi = detail::phi_of_nu(nu, dist);
    res = detail::max_abs_diff(phi, p);
  };

  for (int it = 0; it < 100 && res > tol; ++it) {
    // d phi_i / d nu_j = -d phi_i / d lambda_j.
    const Eigen::MatrixXd jac = -phi_jacobian(nu_to_loss(nu), dist, 1e-10);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = p[static_cast<std::size_t>(i)] - phi[static_cast<std::size_t>(i)];
    const Eigen::VectorXd step = jac.topLeftCorner(n, n).partialPivLu().solve(rhs);
    double damp = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt, damp *= 0.5) {
      std::vector<double> trial = nu;
      for (Eigen::Index i = 0; i < n; ++i) trial[static_cast<std::size_t>(i)] += damp * step(i);
      if (!std::all_of(trial.begin(), trial.end(), [](double v) { return std::isfinite(v); })) continue;
      auto tphi = detail::phi_of_nu(trial, dist);
      const double tres = detail::max_abs_diff(tphi, p);
      if (tres < res) {
        nu = std::move(trial);
        phi = std::move(tphi);
        res = tres;
        improved = true;
        break;
      }
    }
    if (!improved) bisection_sweep();
  }
  if (res > tol) throw RootFindFailed("phi(nu) = p", res);

  RegularizerValue out;
  out.nu = nu;
  out.residual = res;
  out.Phi = potential(nu, dist, 1e-11);
  out.V = -out.Phi;
  for (std::size_t i = 0; i < k; ++i) out.V += p[i] * nu[i];
  return out;
}

// ---------------------------------------------------------------------------------------------
// Two-arm quantile
// ---------------------------------------------------------------------------------------------

// Root of prob(c) = x for an increasing prob, |prob(c) - x| <= 1e-9 on return.
template <std::invocable<double> Prob>
double two_arm_quantile(double x, Prob&& prob) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("level must lie in (0,1)");
  auto g = [&](double c) { return prob(c) - x; };
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200 && g(lo) > 0.0; ++i) lo *= 2.0;
  for (int i = 0; i < 200 && g(hi) < 0.0; ++i) hi *= 2.0;
  const double glo = g(lo), ghi = g(hi);
  if (glo > 0.0 || ghi < 0.0) throw RootFindFailed("two-arm quantile bracket", std::min(std::abs(glo), std::abs(ghi)));
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  boost::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52),
                                                    iters);
  const double c = 0.5 * (r.first + r.second);
  const double residual = std::abs(g(c));
  if (residual > 1e-9) throw RootFindFailed("two-arm quantile", residual);
  return c;
}

// i.i.d. perturbations: Pr[c + r1 >= r2] = phi_1((0, c)).
inline double two_arm_quantile(double x, const Distribution& dist) {
  return two_arm_quantile(x, [&](double c) {
    const double lam[2] = {0.0, c};
    return phi_quadrature(lam, dist, 1e-11).phi[0];
  });
}

// ---------------------------------------------------------------------------------------------
// Tsallis correspondence
// ---------------------------------------------------------------------------------------------

inline void check_tsallis_beta(double b) {
  if (!(b > 0.0 && b < 1.0)) throw DomainError("Tsallis parameter must lie in (0,1)");
}

inline double tsallis_quantile(double p, double b) {
  check_tsallis_beta(b);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("level must lie in (0,1)");
  return -(b / (1.0 - b)) * (std::pow(p, b - 1.0) - std::pow(1.0 - p, b - 1.0));
}

inline double tsallis_quantile_prime(double p, double b) {
  check_tsallis_beta(b);
  return b * (std::pow(p, b - 2.0) + std::pow(1.0 - p, b - 2.0));
}

// x f(x) / (1 - F(x)) for the difference law at x = c(p), using f(c(p)) = 1 / c'(p).
inline double tsallis_von_mises(double p, double b) {
  return tsallis_quantile(p, b) / (tsallis_quantile_prime(p, b) * (1.0 - p));
}

// (r1, r2) with r2 - r1 = c(U) for U uniform, so that Pr[c(x) + r1 >= r2] = x.
inline std::pair<double, double> correlated_tsallis_sampler(double b, Rng& rng) {
  const double xi = tsallis_quantile(uniform_open01(rng), b);
  return {-std::max(xi, 0.0), -std::max(-xi, 0.0)};
}

inline double normal_quantile(double p) { return std::numbers::sqrt2 * boost::math::erf_inv(2.0 * p - 1.0); }

// ---------------------------------------------------------------------------------------------
// Characteristic function and inverse Fourier transform
// ---------------------------------------------------------------------------------------------

struct CharFnResult {
  std::complex<double> value;
  double error = 0.0;
};

// int_eps^(1-eps) exp(i t c(p)) dp. The interval is split until the phase t c(p) moves by at
// most `max_phase` on each panel and no panel is wider than its distance to the nearer end of
// (0,1), where quantiles blow up; each panel then gets a 31-point Kronrod rule.
template <class Quantile>
CharFnResult char_fn(double t, Quantile&& c, double eps = 1e-4, double tol = 1e-10) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw PreconditionError("eps must lie in (0, 1e-3]");
  if (t == 0.0) return {std::complex<double>(1.0 - 2.0 * eps, 0.0), 0.0};
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto integrand = [&](double p) { return std::polar(1.0, t * c(p)); };

  double best = kInf;
  for (double max_phase = 2.0 * std::numbers::pi; max_phase > 1e-3; max_phase /= 4.0) {
    CharFnResult out;
    struct Panel {
      double a, b, ca, cb;
      int depth;
    };
    std::vector<Panel> stack{{eps, 1.0 - eps, c(eps), c(1.0 - eps), 0}};
    while (!stack.empty()) {
      const Panel pn = stack.back();
      stack.pop_back();
      const bool oscillates = std::abs(t) * std::abs(pn.cb - pn.ca) > max_phase;
      const bool near_end = pn.b - pn.a > std::min(pn.a, 1.0 - pn.b);
      if ((oscillates || near_end) && pn.depth < 80) {
        const double mid = 0.5 * (pn.a + pn.b);
        const double cm = c(mid);
        stack.push_back({mid, pn.b, cm, pn.cb, pn.depth + 1});
        stack.push_back({pn.a, mid, pn.ca, cm, pn.depth + 1});
        continue;
      }
      double err = 0.0, l1 = 0.0;
      out.value += GK::integrate(integrand, pn.a, pn.b, 0, 0.0, &err, &l1);
      // Boost reports the single-panel error on the reference interval [-1, 1].
      err *= 0.5 * (pn.b - pn.a);
      // Kronrod-minus-Gauss rescaled as in QUADPACK; the raw difference overstates the error of
      // the 31-point rule by orders of magnitude.
      if (l1 > 0.0) err = std::max(l1 * std::min(1.0, std::pow(200.0 * err / l1, 1.5)), 50.0 * 2.2e-16 * l1);
      out.error += err;
    }
    if (out.error <= tol) return out;
    best = std::min(best, out.error);
  }
  throw ToleranceNotMet("characteristic function quadrature", best);
}

struct IftGrid {
  double x_min = -20.0;
  double x_max = 20.0;
  std::size_t n = 2048;

  double width() const { return x_max - x_min; }
  double dx() const { return width() / static_cast<double>(n); }
  double frequency(std::size_t k) const {
    return (0.5 - static_cast<double>(n) / 2.0 + static_cast<double>(k)) * 2.0 * std::numbers::pi / width();
  }
  void validate() const {
    if (n < 2 || (n & (n - 1)) != 0) throw GridError("N must be a power of two");
    if (!(x_max > x_min)) throw GridError("x_max must exceed x_min");
  }
};

struct SqrtCharGrid {
  std::vector<std::complex<double>> values;  // sqrt(g) on the full frequency grid
  std::vector<std::complex<double>> gbar;    // g itself
  double max_quad_error = 0.0;
  std::size_t branch_warnings = 0;  // frequencies where g has negative real part
};

// sqrt(g(w_k)) for the upper half of the grid, extended by conjugate symmetry to the lower half.
template <class Quantile>
SqrtCharGrid sqrt_char_grid(Quantile&& c, const IftGrid& grid, double eps = 1e-4, std::size_t threads = 0) {
  grid.validate();
  const std::size_t n = grid.n, half = n / 2;
  SqrtCharGrid out;
  out.values.resize(n);
  out.gbar.resize(n);
  std::vector<double> errors(half);
  parallel_for(
      half,
      [&](std::size_t j) {
        const auto r = char_fn(grid.frequency(half + j), c, eps);
        out.gbar[half + j] = r.value;
        errors[j] = r.error;
      },
      threads);
  for (std::size_t j = 0; j < half; ++j) {
    const auto g = out.gbar[half + j];
    if (g.real() < 0.0) ++out.branch_warnings;
    out.values[half + j] = std::sqrt(g);
    out.values[half - 1 - j] = std::conj(out.values[half + j]);
    out.gbar[half - 1 - j] = std::conj(g);
    out.max_quad_error = std::max(out.max_quad_error, errors[j]);
  }
  return out;
}

struct IftResult {
  std::vector<double> x_grid;
  std::vector<std::complex<double>> gbar;
  std::vector<double> pdf;
  std::vector<double> imag_residual;
  std::vector<double> cdf;
  std::size_t branch_warnings = 0;
};

// Discrete inversion of characteristic-function samples on w_k = (0.5 - N/2 + k) 2 pi / (x_max - x_min):
//   f(x_j) = C_j * FFT(D .* cf)_j,  C_j = exp(i pi (1 - 1/N)(x_min/dx + j)) / (x_max - x_min),
//   D_k = exp(-2 i pi k x_min / (x_max - x_min)),  x_j = x_min + j dx.
inline IftResult ift_density(std::span<const std::complex<double>> cf, double x_min = -20.0, double x_max = 20.0) {
  const IftGrid grid{x_min, x_max, cf.size()};
  grid.validate();
  const std::size_t n = grid.n;
  const double dx = grid.dx(), width = grid.width();
  const double pi = std::numbers::pi;

  std::vector<std::complex<double>> in(n), out(n);
  for (std::size_t k = 0; k < n; ++k)
    in[k] = cf[k] * std::polar(1.0, -2.0 * pi * (x_min / width) * static_cast<double>(k));
  {
    static std::mutex plan_mutex;
    fftw_plan plan;
    {
      std::lock_guard lock(plan_mutex);
      plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                              reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(plan_mutex);
    fftw_destroy_plan(plan);
  }

  IftResult res;
  res.gbar.assign(cf.begin(), cf.end());
  res.x_grid.resize(n);
  res.pdf.resize(n);
  res.imag_residual.resize(n);
  res.cdf.resize(n);
  const double n_d = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto cj = std::polar(1.0 / width, pi * (1.0 - 1.0 / n_d) * (x_min / dx + static_cast<double>(j)));
    const auto v = cj * out[j];
    res.x_grid[j] = x_min + static_cast<double>(j) * dx;
    res.pdf[j] = v.real();
    res.imag_residual[j] = v.imag();
    acc += v.real() * dx;
    res.cdf[j] = acc;
  }
  return res;
}

// Full pipeline: quantile of the difference law -> sqrt of its characteristic function -> density.
template <class Quantile>
IftResult ift_from_quantile(Quantile&& c, const IftGrid& grid = {}, double eps = 1e-4, std::size_t threads = 0) {
  auto sq = sqrt_char_grid(c, grid, eps, threads);
  auto res = ift_density(sq.values, grid.x_min, grid.x_max);
  res.gbar = std::move(sq.gbar);
  res.branch_warnings = sq.branch_warnings;
  return res;
}

// ---------------------------------------------------------------------------------------------
// Three-arm regularizer scan
// ---------------------------------------------------------------------------------------------

struct RegularizerScanRow {
  double x = 0.0;
  double c = 0.0;
  double lower = 0.0;        // 1/(2 sqrt(1-x)) - 1
  double upper = 0.0;        // 2 sqrt(2)/sqrt(1-x) - 1
  double tsallis_ref = 0.0;  // sqrt(2)/sqrt(1-x) - 1/sqrt(x)
  bool within = false;
};

// c(x) solves phi_1((0, c, c)) = x for x in [1/3, 1).
inline double three_arm_quantile(double x, const Distribution& dist) {
  if (!(x >= 1.0 / 3.0 - 1e-15 && x < 1.0)) throw DomainError("x must lie in [1/3, 1)");
  if (std::abs(x - 1.0 / 3.0) < 1e-15) return 0.0;
  return two_arm_quantile(x, [&](double c) {
    const double lam[3] = {0.0, c, c};
    return phi_quadrature(lam, dist, 1e-11).phi[0];
  });
}

inline std::vector<RegularizerScanRow> three_arm_regularizer_scan(std::span<const double> x_grid,
                                                                  const Distribution& dist, std::size_t threads = 0) {
  const auto* sp = std::get_if<kind::SymmetricPareto>(&dist.kind());
  if (!sp || sp->shape != 2.0) throw PreconditionError("regularizer scan is defined for the shape-2 symmetric Pareto law");
  for (double x : x_grid)
    if (!(x >= 1.0 / 3.0 - 1e-15 && x <= 1.0 - 1e-4)) throw PreconditionError("x grid must lie in [1/3, 1 - 1e-4]");
  std::vector<RegularizerScanRow> rows(x_grid.size());
  parallel_for(
      x_grid.size(),
      [&](std::size_t i) {
        const double x = x_grid[i];
        RegularizerScanRow& r = rows[i];
        r.x = x;
        r.c = three_arm_quantile(x, dist);
        const double s = std::sqrt(1.0 - x);
        r.lower = 0.5 / s - 1.0;
        r.upper = 2.0 * std::numbers::sqrt2 / s - 1.0;
        r.tsallis_ref = std::numbers::sqrt2 / s - 1.0 / std::sqrt(x);
        r.within = r.c >= r.lower && r.c <= r.upper;
      },
      threads);
  return rows;
}

}  // namespace pll
