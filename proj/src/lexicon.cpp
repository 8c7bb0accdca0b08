#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/preprocess.hpp"

namespace forge::preprocess {

namespace detail {
extern const std::string_view kBuiltinLexicon;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty() && line.front() != '#') {
      std::string word(line);
      std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
      words.push_back(std::move(word));
    }
    start = end + 1;
  }
  return words;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") {
    return true;
  }
  if (value == "false" || value == "0" || value == "off" || value == "no") {
    return false;
  }
  throw Error(ErrorKind::Schema, "preprocess config: key '" + std::string(key) +
                                     "' expects a boolean, got '" +
                                     std::string(value) + "'");
}

}  // namespace

Lexicon::Lexicon(const std::vector<std::string>& words) {
  words_.reserve(words.size());
  for (const auto& w : words) {
    if (w.empty()) continue;
    max_length_ = std::max(max_length_, w.size());
    words_.insert(w);
  }
}

std::shared_ptr<const Lexicon> Lexicon::builtin() {
  static const std::shared_ptr<const Lexicon> instance =
      std::make_shared<const Lexicon>(split_words(detail::kBuiltinLexicon));
  return instance;
}

std::shared_ptr<const Lexicon> Lexicon::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open lexicon " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::make_shared<const Lexicon>(split_words(buffer.str()));
}

bool Lexicon::contains(std::string_view word) const {
  return words_.find(word) != words_.end();
}

PreprocessConfig PreprocessConfig::parse(std::string_view text,
                                         const std::filesystem::path& base_dir) {
  PreprocessConfig config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Schema, "preprocess config line " +
                                         std::to_string(line_no) +
                                         ": expected key=value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "lexicon_path") {
      std::filesystem::path path{std::string(value)};
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      config.lexicon = Lexicon::from_file(path);
    } else if (key == "min_tokens") {
      std::size_t n = 0;
      const auto [ptr, ec] =
          std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::Schema,
                    "preprocess config: min_tokens expects a non-negative "
                    "integer, got '" + std::string(value) + "'");
      }
      config.min_tokens = n;
    } else if (key == "lowercase") {
      config.lowercase = parse_bool(key, value);
    } else if (key == "urls") {
      config.strip_urls = parse_bool(key, value);
    } else if (key == "mentions") {
      config.strip_mentions = parse_bool(key, value);
    } else if (key == "elongation") {
      config.collapse_elongation = parse_bool(key, value);
    } else if (key == "punctuation") {
      config.strip_punctuation = parse_bool(key, value);
    } else if (key == "hashtags") {
      config.segment_hashtags = parse_bool(key, value);
    } else if (key == "emoticons") {
      config.strip_emoticons = parse_bool(key, value);
    } else {
      throw Error(ErrorKind::Schema,
                  "preprocess config: unknown key '" + std::string(key) + "'");
    }
  }
  return config;
}

PreprocessConfig PreprocessConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

}  // namespace forge::preprocess
