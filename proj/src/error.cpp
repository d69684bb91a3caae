#include "stsa/error.hpp"

namespace stsa {

void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::dimension: throw DimensionError(what);
    case ErrorKind::domain: throw DomainError(what);
    case ErrorKind::configuration: throw ConfigError(what);
    case ErrorKind::numerical: throw NumericalError(what);
    case ErrorKind::protocol: throw ProtocolError(what);
    case ErrorKind::estimation: throw EstimationError(what);
    case ErrorKind::format: throw FormatError(what);
    case ErrorKind::metric: throw MetricError(what);
  }
  throw Error(kind, what);
}

void rethrow_with_context(const Error& e, const std::string& context) {
  throw_error(e.kind(), context + ": " + e.what());
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::numerical:
    case ErrorKind::estimation:
      return 3;
    case ErrorKind::format:
      return 4;
    default:
      return 2;
  }
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::estimation: return "estimation error";
    case ErrorKind::format: return "format error";
    case ErrorKind::metric: return "metric error";
  }
  return "error";
}

}  // namespace stsa
