#pragma once

#include <cstddef>
#include <stdexcept>
#include <cstdio>
#include <string>

namespace pll {

// Argument outside the mathematical domain of an operation (e.g. a quantile level not in (0,1)).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A documented precondition of a routine is violated by otherwise well-formed input.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SupportError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NonIntegrable : std::domain_error {
  using std::domain_error::domain_error;
};

struct GridError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ScheduleExhausted : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct MetadataMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpecParseError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}
}  // namespace detail

class ToleranceNotMet : public std::runtime_error {
 public:
  ToleranceNotMet(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error " + detail::sci(achieved) + ")"), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class RootFindFailed : public std::runtime_error {
 public:
  RootFindFailed(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + detail::sci(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct SolverDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration problems carry the offending line (0 when unknown) and field name.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line, std::string field)
      : std::runtime_error(format(what, line, field)), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& field) {
    std::string out = "config error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + what;
  }
  std::size_t line_;
  std::string field_;
};

}  // namespace pll
