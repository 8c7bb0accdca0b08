#pragma once

// Prediction files: the text format through which any classifier hands its
// per-class probabilities to the harness.
//
//   line 1     {"format_version":1,"producer_id":"...","class_names":
//               ["hateful","offensive","neither"],"rows":N}
//   lines 2..  example_id,p_hateful,p_offensive,p_neither   (9 decimals)
//
// UTF-8, LF line endings, no trailing blank line beyond the final LF.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forge/probability_matrix.hpp"

namespace forge::predformat {

inline constexpr int kFormatVersion = 1;
inline constexpr int kDecimals = 9;

struct Predictions {
  std::vector<std::string> ids;
  ProbabilityMatrix matrix;  // producer() carries the header's producer_id

  std::size_t size() const { return ids.size(); }
};

// Canonical text for a prediction set. Refuses (without producing output) a
// matrix with an invalid row, an id count that differs from the row count,
// an empty id or one containing a comma or line break, and repeated ids.
std::string format_predictions(const ProbabilityMatrix& matrix,
                               std::span<const std::string> ids,
                               std::string_view producer);

void write_predictions(const ProbabilityMatrix& matrix,
                       std::span<const std::string> ids, std::string_view producer,
                       const std::filesystem::path& path);

// Parses and validates. Distinct error kinds: Version for an unsupported
// format_version, RowSum naming the row, DuplicateId, CountMismatch between
// header and body, Schema for header problems and Parse for malformed rows.
Predictions parse_predictions(std::istream& in, const std::string& source);
Predictions read_predictions(const std::filesystem::path& path);

}  // namespace forge::predformat
