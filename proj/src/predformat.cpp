#include "forge/predformat.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/labels.hpp"

namespace forge::predformat {

namespace {

void check_id(const std::string& id, std::size_t row) {
  if (id.empty()) {
    throw Error(ErrorKind::Schema, "row " + std::to_string(row) + ": empty example id");
  }
  if (id.find_first_of(",\r\n") != std::string::npos) {
    throw Error(ErrorKind::Schema, "row " + std::to_string(row) + ": example id '" + id +
                                       "' contains a comma or line break");
  }
}

void append_probability(std::string& out, double p) {
  char buf[32];
  // Keeps -0.0 from printing with a sign.
  if (p == 0.0) p = 0.0;
  const int len = std::snprintf(buf, sizeof(buf), "%.*f", kDecimals, p);
  out.append(buf, static_cast<std::size_t>(len));
}

double parse_probability(std::string_view field, const std::string& where) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorKind::Parse, where + ": bad probability '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::string format_predictions(const ProbabilityMatrix& matrix,
                               std::span<const std::string> ids,
                               std::string_view producer) {
  if (matrix.rows() != ids.size()) {
    throw Error(ErrorKind::CountMismatch,
                "matrix has " + std::to_string(matrix.rows()) + " rows but " +
                    std::to_string(ids.size()) + " ids were given");
  }
  if (matrix.rows() > 0 && matrix.cols() != kNumClasses) {
    throw Error(ErrorKind::Schema, "prediction matrices must have 3 columns");
  }
  matrix.validate();
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    check_id(ids[i], i);
    if (!seen.insert(ids[i]).second) {
      throw Error(ErrorKind::DuplicateId, "example id '" + ids[i] + "' repeated");
    }
  }

  nlohmann::ordered_json header;
  header["format_version"] = kFormatVersion;
  header["producer_id"] = std::string(producer);
  header["class_names"] = kClassNames;
  header["rows"] = matrix.rows();

  std::string out = header.dump();
  out += '\n';
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out += ids[i];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out += ',';
      append_probability(out, matrix(i, k));
    }
    out += '\n';
  }
  return out;
}

void write_predictions(const ProbabilityMatrix& matrix,
                       std::span<const std::string> ids, std::string_view producer,
                       const std::filesystem::path& path) {
  const std::string text = format_predictions(matrix, ids, producer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Predictions parse_predictions(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Schema, source + ": missing header line");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, source + ": header is not JSON: " + e.what());
  }
  if (!header.is_object()) {
    throw Error(ErrorKind::Schema, source + ": header must be a JSON object");
  }

  std::string producer;
  std::size_t declared = 0;
  try {
    const auto version = header.at("format_version").get<long long>();
    if (version != kFormatVersion) {
      throw Error(ErrorKind::Version, source + ": format_version " +
                                          std::to_string(version) + " is not supported (expected " +
                                          std::to_string(kFormatVersion) + ")");
    }
    producer = header.at("producer_id").get<std::string>();
    const auto names = header.at("class_names").get<std::vector<std::string>>();
    if (names.size() != kNumClasses || names[0] != kClassNames[0] ||
        names[1] != kClassNames[1] || names[2] != kClassNames[2]) {
      throw Error(ErrorKind::Schema,
                  source + ": class_names must be [hateful, offensive, neither]");
    }
    declared = header.at("rows").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, source + ": bad header: " + e.what());
  }

  Predictions out;
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t row = out.ids.size();
    const std::string where = source + " line " + std::to_string(line_no) + " (row " +
                              std::to_string(row) + ")";

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 1 + kNumClasses) {
      throw Error(ErrorKind::Parse, where + ": expected 4 fields, found " +
                                        std::to_string(fields.size()));
    }
    std::string id(fields[0]);
    if (id.empty()) throw Error(ErrorKind::Parse, where + ": empty example id");

    double sum = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const double p = parse_probability(fields[1 + k], where);
      if (p < 0.0 || p > 1.0) {
        throw Error(ErrorKind::RowSum, where + " id '" + id + "': probability " +
                                           std::string(fields[1 + k]) + " outside [0, 1]");
      }
      values.push_back(p);
      sum += p;
    }
    if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
      std::ostringstream msg;
      msg.precision(12);
      msg << where << " id '" << id << "': probabilities sum to " << sum;
      throw Error(ErrorKind::RowSum, msg.str());
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::DuplicateId, where + ": example id '" + id + "' repeated");
    }
    out.ids.push_back(std::move(id));
  }

  if (out.ids.size() != declared) {
    throw Error(ErrorKind::CountMismatch,
                source + ": header declares " + std::to_string(declared) + " rows, found " +
                    std::to_string(out.ids.size()));
  }

  ProbabilityMatrix::Storage storage(static_cast<Eigen::Index>(out.ids.size()),
                                     static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t i = 0; i < values.size(); ++i) {
    storage(static_cast<Eigen::Index>(i / kNumClasses),
            static_cast<Eigen::Index>(i % kNumClasses)) = values[i];
  }
  out.matrix = ProbabilityMatrix::checked(std::move(storage), producer);
  return out;
}

Predictions read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_predictions(in, path.string());
}

}  // namespace forge::predformat
