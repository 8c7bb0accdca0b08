#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge::csv {

struct Record {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
};

// Reads delimiter-separated records. With quoting enabled the reader follows
// RFC 4180 (quoted fields may hold delimiters, doubled quotes and newlines);
// otherwise every line is split verbatim on the delimiter. A trailing CR is
// stripped from each line. Blank lines are skipped.
class Reader {
 public:
  Reader(std::istream& in, char delimiter, bool quoting);

  std::optional<Record> next();

 private:
  std::istream& in_;
  char delimiter_;
  bool quoting_;
  std::size_t line_ = 0;
};

// Header lookup helper: maps column names to positions.
class Header {
 public:
  explicit Header(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  // Throws Error(Schema) naming the missing column and the file.
  std::size_t require(std::string_view name, std::string_view source) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// Chooses tab if the first line of the file contains one, comma otherwise.
char sniff_delimiter(const std::filesystem::path& path);

// Quotes a field if it contains the delimiter, a quote, CR or LF.
std::string escape(std::string_view field, char delimiter = ',');

std::string join(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace forge::csv
