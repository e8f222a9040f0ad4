#pragma once

// Piecewise adaptive Gauss-Kronrod integration over the real line.
//
// The line is cut at caller-supplied breakpoints (kinks of the integrand). Each piece is
// integrated by globally adaptive bisection: the panel with the largest estimated error is
// split until the summed error meets the tolerance. Panels use Boost's 15/31-point
// Gauss-Kronrod pair; semi-infinite pieces are mapped to (0, 1] by x = a + (1 - t) / t.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pll/distributions.hpp"

namespace pll::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  unsigned max_panels = 2000;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel panel(F& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto g = [&](double x) { return half * f(mid + half * x); };
  double err = 0.0;
  const double v = GK::integrate(g, -1.0, 1.0, 0, 0.0, &err);
  return {a, b, v, err};
}

template <class F>
Result adaptive(F& f, double a, double b, const Options& opt) {
  std::priority_queue<Panel> heap;
  Panel first = panel(f, a, b);
  Result r{first.value, first.error};
  heap.push(first);
  unsigned panels = 1;
  while (r.error > std::max(opt.abs_tol, opt.rel_tol * std::abs(r.value)) && panels < opt.max_panels) {
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const Panel left = panel(f, worst.a, mid), right = panel(f, mid, worst.b);
    r.value += left.value + right.value - worst.value;
    r.error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  r.value = 0.0;
  r.error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    r.value += heap.top().value;
    r.error += heap.top().error;
  }
  return r;
}

}  // namespace detail

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (a == b) return {};
  if (a > b) {
    Result r = integrate(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  if (std::isinf(a) && std::isinf(b)) {
    Result left = integrate(f, a, 0.0, opt), right = integrate(f, 0.0, b, opt);
    return {left.value + right.value, left.error + right.error};
  }
  if (std::isinf(b)) {
    auto g = [&](double t) {
      const double y = f(a + (1.0 - t) / t);
      return y == 0.0 ? 0.0 : y / (t * t);
    };
    return detail::adaptive(g, 0.0, 1.0, opt);
  }
  if (std::isinf(a)) {
    auto g = [&](double t) {
      const double y = f(b - (1.0 - t) / t);
      return y == 0.0 ? 0.0 : y / (t * t);
    };
    return detail::adaptive(g, 0.0, 1.0, opt);
  }
  return detail::adaptive(f, a, b, opt);
}

// Integrates f over (-inf, inf) split at the sorted, de-duplicated breakpoints.
template <class F>
Result integrate_line(F&& f, std::vector<double> breakpoints, const Options& opt = {}) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  Result total;
  auto add = [&](double a, double b) {
    Result piece = integrate(f, a, b, opt);
    total.value += piece.value;
    total.error += piece.error;
  };
  if (breakpoints.empty()) {
    add(-kInf, kInf);
    return total;
  }
  add(-kInf, breakpoints.front());
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) add(breakpoints[i], breakpoints[i + 1]);
  add(breakpoints.back(), kInf);
  return total;
}

}  // namespace pll::quad
