#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace forge::preprocess {

/// Reference word list used by elongation collapse and hashtag
/// segmentation. Words are stored lowercase.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& words);

  /// The English word list compiled into the library.
  static std::shared_ptr<const Lexicon> builtin();
  /// One word per line; blank lines and lines starting with '#' ignored.
  static std::shared_ptr<const Lexicon> from_file(
      const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  std::size_t max_word_length() const { return max_length_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_set<std::string, Hash, std::equal_to<>> words_;
  std::size_t max_length_ = 0;
};

/// Step toggles and parameters. Every step is on by default, which is the
/// configuration the idempotence guarantee refers to.
struct PreprocessConfig {
  std::shared_ptr<const Lexicon> lexicon = Lexicon::builtin();
  std::size_t min_tokens = 2;
  bool lowercase = true;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool collapse_elongation = true;
  bool strip_punctuation = true;
  bool segment_hashtags = true;
  bool strip_emoticons = true;

  /// Parses `key = value` lines. Keys: lexicon_path, min_tokens, lowercase,
  /// urls, mentions, elongation, punctuation, hashtags, emoticons. A relative
  /// lexicon_path is resolved against `base_dir`.
  static PreprocessConfig parse(std::string_view text,
                                const std::filesystem::path& base_dir = {});
  static PreprocessConfig from_file(const std::filesystem::path& path);
};

struct RawTweet {
  std::string id;
  std::string text;
};

struct CleanText {
  std::string text;
  std::size_t token_count = 0;

  friend bool operator==(const CleanText&, const CleanText&) = default;
};

/// Runs the nine normalization steps in order: lowercase, URL removal,
/// mention removal, elongation collapse, (stop words kept), punctuation and
/// unknown-character removal, hashtag segmentation, length filter, emoticon
/// removal. The length filter is evaluated on the final text. Returns
/// nullopt (dropped) when fewer than `min_tokens` tokens remain.
std::optional<CleanText> normalize(std::string_view text,
                                   const PreprocessConfig& config = {});
inline std::optional<CleanText> normalize(const RawTweet& tweet,
                                          const PreprocessConfig& config = {}) {
  return normalize(tweet.text, config);
}

/// Collapses every run of three or more identical letters to two. If that
/// form is not a lexicon word but the form with those runs reduced to a
/// single letter is, the single-letter form is returned.
std::string collapse_elongation(std::string_view token, const Lexicon& lexicon);

/// Greedy longest-prefix segmentation of a hashtag body (no leading '#').
/// When no lexicon word starts at the current position, the remainder is
/// emitted as one token.
std::vector<std::string> segment_hashtag(std::string_view tag,
                                         const Lexicon& lexicon);

/// True if the whitespace-free token is one of the bundled ASCII emoticons
/// (compared after lowercasing).
bool is_ascii_emoticon(std::string_view token);

/// True for code points in the emoji and pictograph blocks, including
/// joiners, variation selectors and skin-tone modifiers.
bool is_emoji(char32_t code_point);

}  // namespace forge::preprocess
