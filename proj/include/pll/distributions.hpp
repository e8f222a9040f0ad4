#pragma once

// Perturbation laws on the real line.
//
// Every law exposes the closed-form distribution function, survival function, density,
// density derivative and quantile. Two-sided laws built from half-line pieces follow the
// unimodal hybrid construction
//
//   F(x) = 1/2 + F_right(x)/2        x >= 0
//   F(x) = 1/2 - F_left(-x)/2        x <  0
//
// where F_right, F_left are distribution functions on [0, inf). The hybrid branch at x < 0 is
// evaluated as S_left(-x)/2 (S = 1 - F) to keep the far left tail accurate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pll/errors.hpp"
#include "pll/rng.hpp"

namespace pll {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool is_real_line() const { return lo == -kInf && hi == kInf; }
};

// Pointwise density derivative. `kink` is set when x is a point where the density is not
// differentiable; `value` is then the derivative from the right.
struct Derivative {
  double value = 0.0;
  bool kink = false;
};

class Distribution;
using DistPtr = std::shared_ptr<const Distribution>;

namespace kind {

// f(x) = a / (2 (|x|+1)^(a+1)); a = 2 gives f(x) = 1/(|x|+1)^3.
struct SymmetricPareto {
  double shape = 2.0;
};

// Exponential(rate 2) left half, Lomax(2) right half.
struct LaplacePareto {};

// Lomax(right) on x >= 0; on x < 0 a generalized Pareto with shape `left` and scale
// left/right, which keeps the density continuous at 0.
struct AsymmetricPareto {
  double right = 2.0;
  double left = 3.0;
};

struct Frechet {
  double alpha = 2.0;
};

// F(x) = 1 - (1 + x/scale)^(-alpha) on [0, inf).
struct ParetoLomax {
  double alpha = 2.0;
  double scale = 1.0;
};

struct Exponential {
  double rate = 1.0;
};

// Max-stable standard Gumbel, F(x) = exp(-exp(-x)).
struct Gumbel {};

struct Laplace {
  double rate = 1.0;
};

struct HybridU {
  DistPtr right;
  DistPtr left;
};

// F*(x) = (F(x+1) - F(1)) / (1 - F(1)) for x > 0.
struct Truncated {
  DistPtr inner;
};

}  // namespace kind

class Distribution {
 public:
  using Kind = std::variant<kind::SymmetricPareto, kind::LaplacePareto, kind::AsymmetricPareto, kind::Frechet,
                            kind::ParetoLomax, kind::Exponential, kind::Gumbel, kind::Laplace, kind::HybridU,
                            kind::Truncated>;

  explicit Distribution(Kind k) : kind_(std::move(k)) { validate(); }

  static Distribution symmetric_pareto(double shape = 2.0) { return Distribution(kind::SymmetricPareto{shape}); }
  static Distribution laplace_pareto() { return Distribution(kind::LaplacePareto{}); }
  static Distribution asymmetric_pareto(double right, double left) {
    return Distribution(kind::AsymmetricPareto{right, left});
  }
  static Distribution frechet(double alpha) { return Distribution(kind::Frechet{alpha}); }
  static Distribution pareto_lomax(double alpha, double scale = 1.0) {
    return Distribution(kind::ParetoLomax{alpha, scale});
  }
  static Distribution exponential(double rate) { return Distribution(kind::Exponential{rate}); }
  static Distribution gumbel() { return Distribution(kind::Gumbel{}); }
  static Distribution laplace(double rate = 1.0) { return Distribution(kind::Laplace{rate}); }
  static Distribution hybrid(Distribution right, Distribution left) {
    return Distribution(kind::HybridU{std::make_shared<const Distribution>(std::move(right)),
                                      std::make_shared<const Distribution>(std::move(left))});
  }
  static Distribution truncated(Distribution inner) {
    return Distribution(kind::Truncated{std::make_shared<const Distribution>(std::move(inner))});
  }

  const Kind& kind() const { return kind_; }

  double cdf(double x) const;
  double sf(double x) const;  // 1 - cdf, computed without cancellation where possible
  double pdf(double x) const;
  Derivative pdf_prime(double x) const;
  double quantile(double u) const;

  double sample(Rng& rng) const { return quantile_unchecked(uniform_open01(rng)); }
  void sample_into(std::span<double> out, Rng& rng) const {
    for (double& v : out) v = sample(rng);
  }
  std::vector<double> sample_vector(std::size_t k, Rng& rng) const {
    std::vector<double> out(k);
    sample_into(out, rng);
    return out;
  }

  Interval support() const;
  // Polynomial tail indices; +inf for exponential or bounded tails.
  double tail_index_right() const;
  double tail_index_left() const;
  // Points where the density or its derivative fails to be smooth (support edges included).
  std::vector<double> kinks() const;
  // Two-sided unimodal hybrid of two half-line laws (the U_{alpha,beta} family).
  bool is_two_sided_hybrid() const;
  bool is_symmetric() const;
  std::string spec() const;

 private:
  void validate() const;
  double quantile_unchecked(double u) const;

  Kind kind_;
};

// ---------------------------------------------------------------------------------------------
// Implementation
// ---------------------------------------------------------------------------------------------

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace detail

inline void Distribution::validate() const {
  using namespace kind;
  std::visit(detail::overloaded{
                 [](const SymmetricPareto& d) { detail::require_positive(d.shape, "symmetric Pareto shape"); },
                 [](const LaplacePareto&) {},
                 [](const AsymmetricPareto& d) {
                   detail::require_positive(d.right, "right tail index");
                   detail::require_positive(d.left, "left tail index");
                 },
                 [](const Frechet& d) { detail::require_positive(d.alpha, "Frechet shape"); },
                 [](const ParetoLomax& d) {
                   detail::require_positive(d.alpha, "Lomax shape");
                   detail::require_positive(d.scale, "Lomax scale");
                 },
                 [](const Exponential& d) { detail::require_positive(d.rate, "exponential rate"); },
                 [](const Gumbel&) {},
                 [](const Laplace& d) { detail::require_positive(d.rate, "Laplace rate"); },
                 [](const HybridU& d) {
                   if (!d.right || !d.left) throw DomainError("hybrid needs both halves");
                   if (d.right->support().lo < 0.0 || d.left->support().lo < 0.0)
                     throw SupportError("hybrid halves must be supported on [0, inf)");
                 },
                 [](const Truncated& d) {
                   if (!d.inner) throw DomainError("truncated law needs an inner law");
                   if (!(d.inner->sf(1.0) > 0.0)) throw SupportError("inner law has no mass beyond 1");
                 },
             },
             kind_);
}

inline double Distribution::cdf(double x) const {
  using namespace kind;
  return std::visit(
      detail::overloaded{
          [x](const SymmetricPareto& d) {
            return x >= 0.0 ? 1.0 - 0.5 * std::pow(1.0 + x, -d.shape) : 0.5 * std::pow(1.0 - x, -d.shape);
          },
          [x](const LaplacePareto&) {
            return x >= 0.0 ? 1.0 - 0.5 / ((x + 1.0) * (x + 1.0)) : 0.5 * std::exp(2.0 * x);
          },
          [x](const AsymmetricPareto& d) {
            const double s = d.left / d.right;
            return x >= 0.0 ? 1.0 - 0.5 * std::pow(1.0 + x, -d.right) : 0.5 * std::pow(1.0 - x / s, -d.left);
          },
          [x](const Frechet& d) { return x > 0.0 ? std::exp(-std::pow(x, -d.alpha)) : 0.0; },
          [x](const ParetoLomax& d) { return x > 0.0 ? -std::expm1(-d.alpha * std::log1p(x / d.scale)) : 0.0; },
          [x](const Exponential& d) { return x > 0.0 ? -std::expm1(-d.rate * x) : 0.0; },
          [x](const Gumbel&) { return std::exp(-std::exp(-x)); },
          [x](const Laplace& d) {
            return x >= 0.0 ? 1.0 - 0.5 * std::exp(-d.rate * x) : 0.5 * std::exp(d.rate * x);
          },
          [x](const HybridU& d) { return x >= 0.0 ? 0.5 + 0.5 * d.right->cdf(x) : 0.5 * d.left->sf(-x); },
          [x](const Truncated& d) {
            if (x <= 0.0) return 0.0;
            const double s1 = d.inner->sf(1.0);
            return (d.inner->cdf(x + 1.0) - d.inner->cdf(1.0)) / s1;
          },
      },
      kind_);
}

inline double Distribution::sf(double x) const {
  using namespace kind;
  return std::visit(
      detail::overloaded{
          [x](const SymmetricPareto& d) {
            return x >= 0.0 ? 0.5 * std::pow(1.0 + x, -d.shape) : 1.0 - 0.5 * std::pow(1.0 - x, -d.shape);
          },
          [x](const LaplacePareto&) {
            return x >= 0.0 ? 0.5 / ((x + 1.0) * (x + 1.0)) : 1.0 - 0.5 * std::exp(2.0 * x);
          },
          [x](const AsymmetricPareto& d) {
            const double s = d.left / d.right;
            return x >= 0.0 ? 0.5 * std::pow(1.0 + x, -d.right) : 1.0 - 0.5 * std::pow(1.0 - x / s, -d.left);
          },
          [x](const Frechet& d) { return x > 0.0 ? -std::expm1(-std::pow(x, -d.alpha)) : 1.0; },
          [x](const ParetoLomax& d) { return x > 0.0 ? std::pow(1.0 + x / d.scale, -d.alpha) : 1.0; },
          [x](const Exponential& d) { return x > 0.0 ? std::exp(-d.rate * x) : 1.0; },
          [x](const Gumbel&) { return -std::expm1(-std::exp(-x)); },
          [x](const Laplace& d) {
            return x >= 0.0 ? 0.5 * std::exp(-d.rate * x) : 1.0 - 0.5 * std::exp(d.rate * x);
          },
          [x](const HybridU& d) { return x >= 0.0 ? 0.5 * d.right->sf(x) : 1.0 - 0.5 * d.left->sf(-x); },
          [x](const Truncated& d) { return x <= 0.0 ? 1.0 : d.inner->sf(x + 1.0) / d.inner->sf(1.0); },
      },
      kind_);
}

inline double Distribution::pdf(double x) const {
  using namespace kind;
  return std::visit(
      detail::overloaded{
          [x](const SymmetricPareto& d) { return 0.5 * d.shape * std::pow(1.0 + std::abs(x), -d.shape - 1.0); },
          [x](const LaplacePareto&) {
            if (x < 0.0) return std::exp(2.0 * x);
            const double y = x + 1.0;
            return 1.0 / (y * y * y);
          },
          [x](const AsymmetricPareto& d) {
            const double s = d.left / d.right;
            return x >= 0.0 ? 0.5 * d.right * std::pow(1.0 + x, -d.right - 1.0)
                            : 0.5 * (d.left / s) * std::pow(1.0 - x / s, -d.left - 1.0);
          },
          [x](const Frechet& d) {
            if (x <= 0.0) return 0.0;
            const double p = std::pow(x, -d.alpha);
            return d.alpha * p / x * std::exp(-p);
          },
          [x](const ParetoLomax& d) {
            return x >= 0.0 ? d.alpha / d.scale * std::pow(1.0 + x / d.scale, -d.alpha - 1.0) : 0.0;
          },
          [x](const Exponential& d) { return x >= 0.0 ? d.rate * std::exp(-d.rate * x) : 0.0; },
          [x](const Gumbel&) {
            const double e = std::exp(-x);
            return std::isinf(e) ? 0.0 : std::exp(-x - e);
          },
          [x](const Laplace& d) { return 0.5 * d.rate * std::exp(-d.rate * std::abs(x)); },
          [x](const HybridU& d) { return x >= 0.0 ? 0.5 * d.right->pdf(x) : 0.5 * d.left->pdf(-x); },
          [x](const Truncated& d) { return x >= 0.0 ? d.inner->pdf(x + 1.0) / d.inner->sf(1.0) : 0.0; },
      },
      kind_);
}

inline Derivative Distribution::pdf_prime(double x) const {
  using namespace kind;
  return std::visit(
      detail::overloaded{
          [x](const SymmetricPareto& d) {
            const double a = d.shape;
            if (x >= 0.0) return Derivative{-0.5 * a * (a + 1.0) * std::pow(1.0 + x, -a - 2.0), x == 0.0};
            return Derivative{0.5 * a * (a + 1.0) * std::pow(1.0 - x, -a - 2.0), false};
          },
          [x](const LaplacePareto&) {
            if (x < 0.0) return Derivative{2.0 * std::exp(2.0 * x), false};
            const double y = x + 1.0;
            return Derivative{-3.0 / (y * y * y * y), x == 0.0};
          },
          [x](const AsymmetricPareto& d) {
            const double a = d.right, b = d.left, s = b / a;
            if (x >= 0.0) return Derivative{-0.5 * a * (a + 1.0) * std::pow(1.0 + x, -a - 2.0), x == 0.0};
            return Derivative{0.5 * b * (b + 1.0) / (s * s) * std::pow(1.0 - x / s, -b - 2.0), false};
          },
          [x](const Frechet& d) {
            if (x <= 0.0) return Derivative{0.0, false};
            const double p = std::pow(x, -d.alpha);
            const double f = d.alpha * p / x * std::exp(-p);
            return Derivative{f * (d.alpha * p - d.alpha - 1.0) / x, false};
          },
          [x](const ParetoLomax& d) {
            if (x < 0.0) return Derivative{0.0, false};
            const double a = d.alpha, s = d.scale;
            return Derivative{-a * (a + 1.0) / (s * s) * std::pow(1.0 + x / s, -a - 2.0), x == 0.0};
          },
          [x](const Exponential& d) {
            if (x < 0.0) return Derivative{0.0, false};
            return Derivative{-d.rate * d.rate * std::exp(-d.rate * x), x == 0.0};
          },
          [x](const Gumbel&) {
            const double e = std::exp(-x);
            if (std::isinf(e)) return Derivative{0.0, false};
            return Derivative{std::exp(-x - e) * (e - 1.0), false};
          },
          [x](const Laplace& d) {
            const double f = 0.5 * d.rate * std::exp(-d.rate * std::abs(x));
            return x >= 0.0 ? Derivative{-d.rate * f, x == 0.0} : Derivative{d.rate * f, false};
          },
          [x](const HybridU& d) {
            if (x >= 0.0) {
              auto r = d.right->pdf_prime(x);
              return Derivative{0.5 * r.value, r.kink || x == 0.0};
            }
            auto l = d.left->pdf_prime(-x);
            return Derivative{-0.5 * l.value, l.kink};
          },
          [x](const Truncated& d) {
            if (x < 0.0) return Derivative{0.0, false};
            auto r = d.inner->pdf_prime(x + 1.0);
            return Derivative{r.value / d.inner->sf(1.0), r.kink || x == 0.0};
          },
      },
      kind_);
}

inline double Distribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  return quantile_unchecked(u);
}

inline double Distribution::quantile_unchecked(double u) const {
  using namespace kind;
  return std::visit(
      detail::overloaded{
          [u](const SymmetricPareto& d) {
            return u >= 0.5 ? std::pow(2.0 * (1.0 - u), -1.0 / d.shape) - 1.0
                            : 1.0 - std::pow(2.0 * u, -1.0 / d.shape);
          },
          [u](const LaplacePareto&) {
            return u >= 0.5 ? 1.0 / std::sqrt(2.0 * (1.0 - u)) - 1.0 : 0.5 * std::log(2.0 * u);
          },
          [u](const AsymmetricPareto& d) {
            const double s = d.left / d.right;
            return u >= 0.5 ? std::pow(2.0 * (1.0 - u), -1.0 / d.right) - 1.0
                            : s * (1.0 - std::pow(2.0 * u, -1.0 / d.left));
          },
          [u](const Frechet& d) { return std::pow(-std::log(u), -1.0 / d.alpha); },
          [u](const ParetoLomax& d) { return d.scale * std::expm1(-std::log1p(-u) / d.alpha); },
          [u](const Exponential& d) { return -std::log1p(-u) / d.rate; },
          [u](const Gumbel&) { return -std::log(-std::log(u)); },
          [u](const Laplace& d) {
            return u >= 0.5 ? -std::log(2.0 * (1.0 - u)) / d.rate : std::log(2.0 * u) / d.rate;
          },
          [u](const HybridU& d) {
            if (u >= 0.5) {
              const double v = 2.0 * u - 1.0;
              return v > 0.0 ? d.right->quantile_unchecked(v) : d.right->support().lo;
            }
            return -d.left->quantile_unchecked(1.0 - 2.0 * u);
          },
          [u](const Truncated& d) {
            const double s1 = d.inner->sf(1.0);
            const double target = 1.0 - (1.0 - u) * s1;
            return std::max(0.0, d.inner->quantile_unchecked(target) - 1.0);
          },
      },
      kind_);
}

inline Interval Distribution::support() const {
  using namespace kind;
  return std::visit(detail::overloaded{
                        [](const Frechet&) { return Interval{0.0, kInf}; },
                        [](const ParetoLomax&) { return Interval{0.0, kInf}; },
                        [](const Exponential&) { return Interval{0.0, kInf}; },
                        [](const Truncated&) { return Interval{0.0, kInf}; },
                        [](const auto&) { return Interval{-kInf, kInf}; },
                    },
                    kind_);
}

inline double Distribution::tail_index_right() const {
  using namespace kind;
  return std::visit(detail::overloaded{
                        [](const SymmetricPareto& d) { return d.shape; },
                        [](const LaplacePareto&) { return 2.0; },
                        [](const AsymmetricPareto& d) { return d.right; },
                        [](const Frechet& d) { return d.alpha; },
                        [](const ParetoLomax& d) { return d.alpha; },
                        [](const HybridU& d) { return d.right->tail_index_right(); },
                        [](const Truncated& d) { return d.inner->tail_index_right(); },
                        [](const auto&) { return kInf; },
                    },
                    kind_);
}

inline double Distribution::tail_index_left() const {
  using namespace kind;
  return std::visit(detail::overloaded{
                        [](const SymmetricPareto& d) { return d.shape; },
                        [](const AsymmetricPareto& d) { return d.left; },
                        [](const HybridU& d) { return d.left->tail_index_right(); },
                        [](const auto&) { return kInf; },
                    },
                    kind_);
}

inline std::vector<double> Distribution::kinks() const {
  using namespace kind;
  std::vector<double> out = std::visit(
      detail::overloaded{
          [](const Gumbel&) { return std::vector<double>{}; },
          [](const Frechet&) { return std::vector<double>{0.0}; },
          [](const HybridU& d) {
            std::vector<double> k{0.0};
            for (double r : d.right->kinks())
              if (r > 0.0) k.push_back(r);
            for (double l : d.left->kinks())
              if (l > 0.0) k.push_back(-l);
            return k;
          },
          [](const Truncated& d) {
            std::vector<double> k{0.0};
            for (double r : d.inner->kinks())
              if (r - 1.0 > 0.0) k.push_back(r - 1.0);
            return k;
          },
          [](const auto&) { return std::vector<double>{0.0}; },
      },
      kind_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool Distribution::is_two_sided_hybrid() const {
  using namespace kind;
  return std::holds_alternative<HybridU>(kind_) || std::holds_alternative<LaplacePareto>(kind_) ||
         std::holds_alternative<AsymmetricPareto>(kind_) || std::holds_alternative<SymmetricPareto>(kind_);
}

inline bool Distribution::is_symmetric() const {
  using namespace kind;
  return std::visit(detail::overloaded{
                        [](const SymmetricPareto&) { return true; },
                        [](const Laplace&) { return true; },
                        [](const AsymmetricPareto& d) { return d.left == d.right; },
                        [](const HybridU& d) { return d.right->spec() == d.left->spec(); },
                        [](const auto&) { return false; },
                    },
                    kind_);
}

inline std::string Distribution::spec() const {
  using namespace kind;
  using detail::fmt_num;
  return std::visit(
      detail::overloaded{
          [](const SymmetricPareto& d) { return "splareto:a=" + fmt_num(d.shape); },
          [](const LaplacePareto&) { return std::string("lp"); },
          [](const AsymmetricPareto& d) { return "asp:" + fmt_num(d.right) + "," + fmt_num(d.left); },
          [](const Frechet& d) { return "frechet:" + fmt_num(d.alpha); },
          [](const ParetoLomax& d) {
            std::string s = "pareto:" + fmt_num(d.alpha);
            if (d.scale != 1.0) s += ",scale=" + fmt_num(d.scale);
            return s;
          },
          [](const Exponential& d) { return "exp:" + fmt_num(d.rate); },
          [](const Gumbel&) { return std::string("gumbel"); },
          [](const Laplace& d) { return "laplace:" + fmt_num(d.rate); },
          [](const HybridU& d) { return "hybrid:right=" + d.right->spec() + ",left=" + d.left->spec(); },
          [](const Truncated& d) { return "trunc(" + d.inner->spec() + ")"; },
      },
      kind_);
}

// ---------------------------------------------------------------------------------------------
// Spec mini-language:
//   splareto[:a=2]  lp  asp:2,3  frechet:2  pareto:2[,scale=1.5]  exp:2  gumbel  laplace[:1]
//   hybrid:right=<spec>,left=<spec>   trunc(<spec>)
// ---------------------------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline double parse_number(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SpecParseError("cannot parse number '" + s + "' in '" + context + "'");
  }
}

// Splits on commas that are not nested in parentheses.
inline std::vector<std::string> split_top_level(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

inline std::string strip_parens(std::string s) {
  while (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = trim(std::string_view(s).substr(1, s.size() - 2));
  return s;
}

}  // namespace detail

inline Distribution parse_distribution(std::string_view text) {
  using detail::parse_number;
  const std::string s = detail::strip_parens(detail::trim(text));
  if (s.empty()) throw SpecParseError("empty distribution spec");

  if (s.rfind("trunc(", 0) == 0) {
    if (s.back() != ')') throw SpecParseError("unbalanced parentheses in '" + s + "'");
    return Distribution::truncated(parse_distribution(std::string_view(s).substr(6, s.size() - 7)));
  }

  const auto colon = s.find(':');
  const std::string name = s.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);

  if (name == "hybrid") {
    // Tokens not starting with right=/left= continue the previous value (e.g. ",scale=1.5").
    std::string right, left;
    std::string* current = nullptr;
    for (const auto& tok : detail::split_top_level(args)) {
      if (tok.rfind("right=", 0) == 0) {
        right = tok.substr(6);
        current = &right;
      } else if (tok.rfind("left=", 0) == 0) {
        left = tok.substr(5);
        current = &left;
      } else if (current) {
        *current += "," + tok;
      } else {
        throw SpecParseError("hybrid expects right=...,left=... in '" + s + "'");
      }
    }
    if (right.empty() || left.empty()) throw SpecParseError("hybrid needs both right= and left= in '" + s + "'");
    return Distribution::hybrid(parse_distribution(right), parse_distribution(left));
  }

  std::vector<double> positional;
  std::vector<std::pair<std::string, double>> named;
  if (!args.empty()) {
    for (const auto& tok : detail::split_top_level(args)) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        positional.push_back(parse_number(tok, s));
      else
        named.emplace_back(detail::trim(tok.substr(0, eq)), parse_number(detail::trim(tok.substr(eq + 1)), s));
    }
  }
  auto param = [&](const std::string& key, std::size_t pos, double fallback) {
    for (const auto& [k, v] : named)
      if (k == key) return v;
    return pos < positional.size() ? positional[pos] : fallback;
  };
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : named) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw SpecParseError("unknown parameter '" + k + "' in '" + s + "'");
    }
  };

  if (name == "splareto" || name == "sp") {
    check_keys({"a"});
    return Distribution::symmetric_pareto(param("a", 0, 2.0));
  }
  if (name == "lp") return Distribution::laplace_pareto();
  if (name == "asp") {
    check_keys({"right", "left"});
    return Distribution::asymmetric_pareto(param("right", 0, 2.0), param("left", 1, 3.0));
  }
  if (name == "frechet") {
    check_keys({"alpha"});
    return Distribution::frechet(param("alpha", 0, 2.0));
  }
  if (name == "pareto" || name == "lomax") {
    check_keys({"alpha", "scale"});
    return Distribution::pareto_lomax(param("alpha", 0, 2.0), param("scale", 1, 1.0));
  }
  if (name == "exp") {
    check_keys({"rate"});
    return Distribution::exponential(param("rate", 0, 1.0));
  }
  if (name == "gumbel") return Distribution::gumbel();
  if (name == "laplace") {
    check_keys({"rate"});
    return Distribution::laplace(param("rate", 0, 1.0));
  }
  throw SpecParseError("unknown distribution '" + name + "'");
}

// Inverse of the distribution function by bisection, |F(x) - u| <= 1e-12 (or bracket collapse).
inline double quantile_by_bisection(const Distribution& dist, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  const Interval sup = dist.support();
  double lo = std::isfinite(sup.lo) ? sup.lo : -1.0;
  double hi = 1.0;
  while (dist.cdf(lo) > u) lo = 2.0 * lo - 1.0;
  while (dist.cdf(hi) < u) hi = 2.0 * hi + 1.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = dist.cdf(mid);
    if (std::abs(fm - u) <= 1e-12 || mid == lo || mid == hi) return mid;
    (fm < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pll
