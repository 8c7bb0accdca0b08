#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

/// Category of a failure. Each kind maps to a distinct, stable message
/// prefix so that command-line callers can dispatch on the first token of
/// the diagnostic line.
enum class ErrorKind {
  Usage,          // bad flags or arguments
  Io,             // file missing, unreadable or unwritable
  Schema,         // missing columns, malformed headers, unknown config keys
  Parse,          // malformed row or value
  Precondition,   // operation called outside its contract
  RowSum,         // probability row does not sum to one
  DuplicateId,    // repeated example id
  CountMismatch,  // declared and actual row counts differ
  Version,        // unsupported file format version
  Numeric,        // non-finite loss or weights
};

std::string_view error_prefix(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace forge
