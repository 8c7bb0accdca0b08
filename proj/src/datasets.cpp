#include "forge/datasets.hpp"

#include <charconv>
#include <fstream>
#include <unordered_set>

#include "forge/csv.hpp"
#include "forge/error.hpp"

namespace forge {

ClassLabel label_from_int(long long value) {
  if (value < 0 || value >= static_cast<long long>(kNumClasses)) {
    throw Error(ErrorKind::Parse,
                "label " + std::to_string(value) + " outside {0, 1, 2}");
  }
  return static_cast<ClassLabel>(value);
}

}  // namespace forge

namespace forge::datasets {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::string row_context(const std::filesystem::path& path,
                        const csv::Record& record) {
  return path.filename().string() + " row at line " +
         std::to_string(record.line);
}

long long parse_int(std::string_view text, const std::string& context) {
  long long value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorKind::Parse,
                context + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

const std::string& field(const csv::Record& record, std::size_t column,
                         const std::filesystem::path& path) {
  if (column >= record.fields.size()) {
    throw Error(ErrorKind::Parse, row_context(path, record) + ": expected at least " +
                                      std::to_string(column + 1) +
                                      " fields, got " +
                                      std::to_string(record.fields.size()));
  }
  return record.fields[column];
}

// Shared reader loop for the three published layouts.
template <typename RowFn>
Corpus load_table(const std::filesystem::path& path, char delimiter,
                  bool quoting, std::initializer_list<std::string_view> required,
                  RowFn&& on_row) {
  auto in = open_input(path);
  csv::Reader reader(in, delimiter, quoting);
  auto header_record = reader.next();
  if (!header_record) {
    throw Error(ErrorKind::Schema, path.string() + ": missing header row");
  }
  const csv::Header header(std::move(header_record->fields));
  for (auto column : required) header.require(column, path.string());
  std::vector<LabeledExample> examples;
  while (auto record = reader.next()) {
    examples.push_back(on_row(header, *record, examples.size()));
  }
  return Corpus(std::move(examples));
}

}  // namespace

std::string_view corpus_name(CorpusId id) {
  switch (id) {
    case CorpusId::Davidson: return "davidson";
    case CorpusId::HatEval2019: return "hateval2019";
    case CorpusId::Olid: return "olid";
    case CorpusId::Synthetic: return "synthetic";
  }
  return "unknown";
}

CorpusId corpus_from_name(std::string_view name) {
  for (auto id : {CorpusId::Davidson, CorpusId::HatEval2019, CorpusId::Olid,
                  CorpusId::Synthetic}) {
    if (corpus_name(id) == name) return id;
  }
  throw Error(ErrorKind::Parse, "unknown corpus source '" + std::string(name) + "'");
}

Corpus::Corpus(std::vector<LabeledExample> examples)
    : examples_(std::move(examples)) {
  for (const auto& ex : examples_) {
    ++histogram_[static_cast<std::size_t>(ex.label)];
  }
}

std::vector<int> Corpus::labels() const {
  std::vector<int> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(to_int(ex.label));
  return out;
}

std::vector<std::string> Corpus::texts() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.text);
  return out;
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.id);
  return out;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  std::vector<LabeledExample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= examples_.size()) {
      throw Error(ErrorKind::Precondition,
                  "index " + std::to_string(i) + " outside corpus of size " +
                      std::to_string(examples_.size()));
    }
    out.push_back(examples_[i]);
  }
  return Corpus(std::move(out));
}

Corpus load_davidson(const std::filesystem::path& path) {
  return load_table(
      path, ',', true, {"class", "tweet"},
      [&](const csv::Header& header, const csv::Record& record,
          std::size_t row) {
        const std::size_t label_col = header.require("class", path.string());
        const std::size_t text_col = header.require("tweet", path.string());
        const auto id_col = header.find("");
        const std::string context = row_context(path, record);
        LabeledExample ex;
        ex.source = CorpusId::Davidson;
        ex.text = field(record, text_col, path);
        const long long value =
            parse_int(field(record, label_col, path), context);
        if (value < 0 || value > 2) {
          throw Error(ErrorKind::Parse, context + ": unknown class value '" +
                                            std::to_string(value) + "'");
        }
        ex.label = label_from_int(value);
        ex.id = "davidson-" +
                (id_col ? field(record, *id_col, path) : std::to_string(row));
        return ex;
      });
}

Corpus load_hateval(const std::filesystem::path& path) {
  const char delimiter = csv::sniff_delimiter(path);
  return load_table(
      path, delimiter, delimiter == ',', {"id", "text", "HS"},
      [&](const csv::Header& header, const csv::Record& record, std::size_t) {
        const std::size_t id_col = header.require("id", path.string());
        const std::size_t text_col = header.require("text", path.string());
        const std::size_t hs_col = header.require("HS", path.string());
        const std::string& hs = field(record, hs_col, path);
        LabeledExample ex;
        ex.source = CorpusId::HatEval2019;
        ex.id = "hateval-" + field(record, id_col, path);
        ex.text = field(record, text_col, path);
        if (hs == "1") {
          ex.label = ClassLabel::Hateful;
        } else if (hs == "0") {
          ex.label = ClassLabel::Neither;
        } else {
          throw Error(ErrorKind::Parse, row_context(path, record) +
                                            ": unknown HS label value '" + hs +
                                            "'");
        }
        return ex;
      });
}

Corpus load_olid(const std::filesystem::path& path) {
  const char delimiter = csv::sniff_delimiter(path);
  return load_table(
      path, delimiter, delimiter == ',', {"id", "tweet", "subtask_a"},
      [&](const csv::Header& header, const csv::Record& record, std::size_t) {
        const std::size_t id_col = header.require("id", path.string());
        const std::size_t text_col = header.require("tweet", path.string());
        const std::size_t label_col = header.require("subtask_a", path.string());
        const std::string& value = field(record, label_col, path);
        LabeledExample ex;
        ex.source = CorpusId::Olid;
        ex.id = "olid-" + field(record, id_col, path);
        ex.text = field(record, text_col, path);
        if (value == "OFF") {
          ex.label = ClassLabel::Offensive;
        } else if (value == "NOT") {
          ex.label = ClassLabel::Neither;
        } else {
          throw Error(ErrorKind::Parse, row_context(path, record) +
                                            ": unknown subtask_a label value '" +
                                            value + "'");
        }
        return ex;
      });
}

Corpus normalize_corpus(const Corpus& corpus,
                        const preprocess::PreprocessConfig& config,
                        std::size_t* dropped) {
  std::vector<LabeledExample> kept;
  kept.reserve(corpus.size());
  std::size_t removed = 0;
  for (const auto& ex : corpus.examples()) {
    auto clean = preprocess::normalize(ex.text, config);
    if (!clean) {
      ++removed;
      continue;
    }
    LabeledExample out = ex;
    out.text = std::move(clean->text);
    kept.push_back(std::move(out));
  }
  if (dropped) *dropped = removed;
  return Corpus(std::move(kept));
}

Corpus fuse_dho(const Corpus& davidson, const Corpus& hateval,
                const Corpus& olid) {
  std::vector<LabeledExample> fused;
  fused.reserve(davidson.size() + hateval.size() + olid.size());
  std::unordered_set<std::string_view> seen;
  for (const Corpus* part : {&davidson, &hateval, &olid}) {
    for (const auto& ex : part->examples()) {
      if (seen.insert(ex.text).second) fused.push_back(ex);
    }
  }
  return Corpus(std::move(fused));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "id,source,label,text\n";
  for (const auto& ex : corpus.examples()) {
    out << csv::join({ex.id, std::string(corpus_name(ex.source)),
                      std::to_string(to_int(ex.label)), ex.text})
        << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

Corpus read_corpus(const std::filesystem::path& path) {
  return load_table(
      path, ',', true, {"id", "source", "label", "text"},
      [&](const csv::Header& header, const csv::Record& record, std::size_t) {
        const std::size_t id_col = header.require("id", path.string());
        const std::size_t source_col = header.require("source", path.string());
        const std::size_t label_col = header.require("label", path.string());
        const std::size_t text_col = header.require("text", path.string());
        const std::string context = row_context(path, record);
        LabeledExample ex;
        ex.id = field(record, id_col, path);
        try {
          ex.source = corpus_from_name(field(record, source_col, path));
          ex.label = label_from_int(
              parse_int(field(record, label_col, path), context));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Parse) throw;
          throw Error(ErrorKind::Parse, context + ": " + e.what());
        }
        ex.text = field(record, text_col, path);
        return ex;
      });
}

nlohmann::ordered_json histogram_json(const Corpus& corpus) {
  nlohmann::ordered_json by_class;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    by_class[std::string(kClassNames[k])] = corpus.histogram()[k];
  }
  nlohmann::ordered_json by_source;
  for (const auto& ex : corpus.examples()) {
    auto& entry = by_source[std::string(corpus_name(ex.source))];
    if (entry.is_null()) {
      for (auto name : kClassNames) entry[std::string(name)] = 0;
    }
    auto& count = entry[std::string(class_name(ex.label))];
    count = count.get<std::size_t>() + 1;
  }
  nlohmann::ordered_json report;
  report["total"] = corpus.size();
  report["classes"] = by_class;
  report["sources"] = by_source.is_null() ? nlohmann::ordered_json::object()
                                          : by_source;
  return report;
}

ClassWeights::ClassWeights(std::array<double, kNumClasses> weights)
    : weights_(weights) {
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (!(weights_[k] > 0.0)) {
      throw Error(ErrorKind::Precondition,
                  "class weight for '" + std::string(kClassNames[k]) +
                      "' must be positive");
    }
  }
}

ClassWeights class_weights(const Histogram& counts) {
  std::size_t total = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (counts[k] == 0) {
      throw Error(ErrorKind::Precondition,
                  "class '" + std::string(kClassNames[k]) +
                      "' has no examples; cannot compute class weights");
    }
    total += counts[k];
  }
  std::array<double, kNumClasses> w{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    w[k] = static_cast<double>(total) /
           (static_cast<double>(kNumClasses) * static_cast<double>(counts[k]));
  }
  return ClassWeights(w);
}

ClassWeights class_weights(const Corpus& corpus) {
  return class_weights(corpus.histogram());
}

ClassWeights class_weights(std::span<const int> labels) {
  Histogram counts{};
  for (int y : labels) ++counts[static_cast<std::size_t>(to_int(label_from_int(y)))];
  return class_weights(counts);
}

}  // namespace forge::datasets
