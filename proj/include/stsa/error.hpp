#pragma once

#include <stdexcept>
#include <string>

namespace stsa {

enum class ErrorKind {
  dimension,
  domain,
  configuration,
  numerical,
  protocol,
  estimation,
  format,
  metric,
};

// Base of every error raised by the library. The kind decides the CLI exit
// code; the subclasses below exist so callers can catch one category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define STSA_DEFINE_ERROR(Name, Kind)                                     \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

STSA_DEFINE_ERROR(DimensionError, dimension)
STSA_DEFINE_ERROR(DomainError, domain)
STSA_DEFINE_ERROR(ConfigError, configuration)
STSA_DEFINE_ERROR(NumericalError, numerical)
STSA_DEFINE_ERROR(ProtocolError, protocol)
STSA_DEFINE_ERROR(EstimationError, estimation)
STSA_DEFINE_ERROR(FormatError, format)
STSA_DEFINE_ERROR(MetricError, metric)

#undef STSA_DEFINE_ERROR

// Throws the subclass matching `kind`.
[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

// Re-raises `e` with `context` prepended, preserving its kind.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

// 0 success, 2 configuration, 3 numerical, 4 format.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace stsa
