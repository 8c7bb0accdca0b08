#include "forge/error.hpp"

namespace forge {

std::string_view error_prefix(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Schema: return "schema-error";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Precondition: return "precondition-error";
    case ErrorKind::RowSum: return "row-sum-error";
    case ErrorKind::DuplicateId: return "duplicate-id-error";
    case ErrorKind::CountMismatch: return "count-mismatch-error";
    case ErrorKind::Version: return "version-error";
    case ErrorKind::Numeric: return "numeric-error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace forge
