#include "forge/csv.hpp"

#include <fstream>

#include "forge/error.hpp"

namespace forge::csv {

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_plain(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Reader::Reader(std::istream& in, char delimiter, bool quoting)
    : in_(in), delimiter_(delimiter), quoting_(quoting) {}

std::optional<Record> Reader::next() {
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    strip_cr(line);
    if (!line.empty()) break;
  }

  Record record;
  record.line = line_;
  if (!quoting_) {
    record.fields = split_plain(line, delimiter_);
    return record;
  }

  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!in_quotes) break;
      // Quoted field continues on the next physical line.
      if (!std::getline(in_, line)) {
        throw Error(ErrorKind::Parse, "row starting at line " +
                                          std::to_string(record.line) +
                                          ": unterminated quoted field");
      }
      ++line_;
      strip_cr(line);
      field.push_back('\n');
      i = 0;
      continue;
    }
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(ch);
      }
      ++i;
      continue;
    }
    if (ch == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (ch == delimiter_) {
      record.fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
    ++i;
  }
  record.fields.push_back(std::move(field));
  return record;
}

Header::Header(std::vector<std::string> names) : names_(std::move(names)) {
  // Tolerate a UTF-8 byte order mark on the first column.
  if (!names_.empty() && names_[0].starts_with("\xEF\xBB\xBF")) {
    names_[0].erase(0, 3);
  }
}

std::optional<std::size_t> Header::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Header::require(std::string_view name,
                            std::string_view source) const {
  if (auto pos = find(name)) return *pos;
  throw Error(ErrorKind::Schema, std::string(source) + ": missing column '" +
                                     std::string(name) + "'");
}

char sniff_delimiter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  return first.find('\t') != std::string::npos ? '\t' : ',';
}

std::string escape(std::string_view field, char delimiter) {
  const bool needs_quotes =
      field.find_first_of(std::string{delimiter, '"', '\r', '\n'}) !=
      std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(delimiter);
    out += escape(fields[i], delimiter);
  }
  return out;
}

}  // namespace forge::csv
