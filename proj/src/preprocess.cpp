#include "forge/preprocess.hpp"

#include <algorithm>
#include <array>

namespace forge::preprocess {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::u32string decode_utf8(std::string_view in) {
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto b0 = static_cast<unsigned char>(in[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > in.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(in[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t cp : in) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}
bool is_lower(char32_t c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char32_t c) { return c >= 'A' && c <= 'Z'; }
bool is_letter(char32_t c) { return is_lower(c) || is_upper(c); }
bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }
bool is_alnum(char32_t c) { return is_letter(c) || is_digit(c); }
bool is_word_char(char32_t c) { return is_alnum(c) || c == '_'; }

char32_t to_lower(char32_t c) { return is_upper(c) ? c + ('a' - 'A') : c; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

bool is_letter_byte(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Case-insensitive ASCII prefix test of `text` at `pos`.
bool matches_at(const std::u32string& text, std::size_t pos,
                std::string_view pattern) {
  if (pos + pattern.size() > text.size()) return false;
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    if (to_lower(text[pos + k]) != static_cast<char32_t>(pattern[k])) {
      return false;
    }
  }
  return true;
}

std::vector<std::u32string> split_tokens(const std::u32string& text) {
  std::vector<std::u32string> tokens;
  std::u32string current;
  for (char32_t c : text) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool token_is_emoticon(const std::u32string& token) {
  if (token.size() > 8) return false;
  std::string ascii;
  for (char32_t c : token) {
    if (c >= 0x80) return false;
    ascii.push_back(static_cast<char>(c));
  }
  return is_ascii_emoticon(ascii);
}

// Step 2: URLs with an http(s) scheme or the bare t.co shortener.
std::u32string strip_urls(const std::u32string& text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool at_boundary = i == 0 || !is_alnum(text[i - 1]);
    const bool url = matches_at(text, i, "http://") ||
                     matches_at(text, i, "https://") ||
                     (at_boundary && matches_at(text, i, "t.co/"));
    if (!url) {
      out.push_back(text[i++]);
      continue;
    }
    while (i < text.size() && !is_space(text[i])) ++i;
    out.push_back(' ');
  }
  return out;
}

// Step 3: '@' followed by a handle.
std::u32string strip_mentions(const std::u32string& text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '@' && i + 1 < text.size() && is_word_char(text[i + 1])) {
      ++i;
      while (i < text.size() && is_word_char(text[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

// Step 4: elongation collapse on every maximal ASCII letter run.
std::u32string collapse_runs(const std::u32string& text,
                             const Lexicon& lexicon) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_letter(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::string word;
    while (i < text.size() && is_letter(text[i])) {
      word.push_back(static_cast<char>(text[i++]));
    }
    for (char ch : collapse_elongation(word, lexicon)) {
      out.push_back(static_cast<unsigned char>(ch));
    }
  }
  return out;
}

// Length of an HTML character reference (&amp; or &#8220;) at `pos`, 0 if
// none.
std::size_t html_entity_length(const std::u32string& text, std::size_t pos) {
  if (text[pos] != '&') return 0;
  std::size_t j = pos + 1;
  if (j < text.size() && text[j] == '#') {
    ++j;
    const std::size_t digits_start = j;
    while (j < text.size() && is_digit(text[j]) && j - digits_start < 8) ++j;
    if (j == digits_start) return 0;
  } else {
    const std::size_t name_start = j;
    while (j < text.size() && is_letter(text[j]) && j - name_start < 10) ++j;
    if (j == name_start) return 0;
  }
  if (j < text.size() && text[j] == ';') return j + 1 - pos;
  return 0;
}

// Step 6: anything other than letters, digits and spaces becomes a space.
// A '#' opening a token survives for step 7; whole-token emoticons and emoji
// code points survive for step 9 when that step is enabled.
std::u32string strip_punctuation(const std::u32string& text,
                                 bool keep_emoticons) {
  std::u32string out;
  out.reserve(text.size());
  for (const auto& token : split_tokens(text)) {
    if (!out.empty()) out.push_back(' ');
    if (keep_emoticons && token_is_emoticon(token)) {
      out += token;
      continue;
    }
    std::size_t i = 0;
    while (i < token.size()) {
      const char32_t c = token[i];
      if (is_alnum(c)) {
        out.push_back(c);
        ++i;
      } else if (c == '#' && (out.empty() || out.back() == ' ') &&
                 i + 1 < token.size() && is_alnum(token[i + 1])) {
        out.push_back(c);
        ++i;
      } else if (keep_emoticons && is_emoji(c)) {
        out.push_back(c);
        ++i;
      } else if (const std::size_t len = html_entity_length(token, i)) {
        out.push_back(' ');
        i += len;
      } else {
        out.push_back(' ');
        ++i;
      }
    }
  }
  return out;
}

// Step 7: drop the '#' and split the tag body into words.
std::u32string expand_hashtags(const std::u32string& text,
                               const Lexicon& lexicon) {
  std::u32string out;
  out.reserve(text.size());
  for (const auto& token : split_tokens(text)) {
    if (token.front() != '#') {
      if (!out.empty()) out.push_back(' ');
      out += token;
      continue;
    }
    std::size_t body_start = 1;
    while (body_start < token.size() && token[body_start] == '#') ++body_start;
    const std::u32string body = token.substr(body_start);
    if (body.empty()) continue;
    bool ascii = std::all_of(body.begin(), body.end(),
                             [](char32_t c) { return c < 0x80; });
    if (!out.empty()) out.push_back(' ');
    if (!ascii) {
      out += body;
      continue;
    }
    std::string tag;
    for (char32_t c : body) tag.push_back(static_cast<char>(c));
    const auto words = segment_hashtag(tag, lexicon);
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) out.push_back(' ');
      for (char ch : words[w]) out.push_back(static_cast<unsigned char>(ch));
    }
  }
  return out;
}

// Step 9: emoji code points become separators, then whole-token ASCII
// emoticons are dropped ("xd😂" loses both parts).
std::u32string strip_emoticons(const std::u32string& text) {
  std::u32string spaced = text;
  std::replace_if(spaced.begin(), spaced.end(), is_emoji, U' ');
  std::u32string out;
  out.reserve(spaced.size());
  for (const auto& token : split_tokens(spaced)) {
    if (token_is_emoticon(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

}  // namespace

bool is_ascii_emoticon(std::string_view token) {
  static constexpr std::array<std::string_view, 64> kEmoticons = {
      ":)",  ":-)", ":(",  ":-(", ":d",  ":-d", ";)",  ";-)",  ":p",  ":-p",
      ";p",  ";-p", ";d",  ":o",  ":-o", ":/",  ":-/", ":\\",  ":'(", ":'-(",
      ":')", ":|",  ":-|", ":*",  ":-*", ":3",  ":]",  ":[",   ":>",  ":<",
      ":$",  ":@",  ":s",  ":-s", ">:(", ">:)", "<3",  "</3",  "=)",  "=(",
      "=d",  "=p",  "(:",  "):",  "d:",  "^^",  "^_^", "^.^",  "-_-", "-.-",
      "o_o", "o.o", "o_0", "0_o", "t_t", ";_;", "xd",  "x-d",  "8)",  "8-)",
      "b)",  ":-]", "xp",  ":x"};
  const std::string lowered = lower_ascii(token);
  return std::find(kEmoticons.begin(), kEmoticons.end(), lowered) !=
         kEmoticons.end();
}

bool is_emoji(char32_t c) {
  return (c >= 0x1F000 && c <= 0x1FAFF) ||  // mahjong .. symbols ext-A
         (c >= 0x2600 && c <= 0x27BF) ||    // misc symbols, dingbats
         (c >= 0x2300 && c <= 0x23FF) ||    // misc technical (watch, hourglass)
         (c >= 0x2B00 && c <= 0x2BFF) ||    // arrows, stars
         (c >= 0x2190 && c <= 0x21FF) ||    // arrows
         (c >= 0xE0020 && c <= 0xE007F) ||  // tag sequences
         (c >= 0xFE00 && c <= 0xFE0F) ||    // variation selectors
         c == 0x200D || c == 0x20E3 || c == 0x3030 || c == 0x303D ||
         c == 0x3297 || c == 0x3299 || c == 0x00A9 || c == 0x00AE ||
         c == 0x2122;
}

std::string collapse_elongation(std::string_view token, const Lexicon& lexicon) {
  std::string two;
  std::string one;
  bool elongated = false;
  std::size_t i = 0;
  while (i < token.size()) {
    std::size_t j = i;
    while (j < token.size() && token[j] == token[i]) ++j;
    const std::size_t run = j - i;
    if (run >= 3 && is_letter_byte(token[i])) {
      elongated = true;
      two.append(2, token[i]);
      one.push_back(token[i]);
    } else {
      two.append(run, token[i]);
      one.append(run, token[i]);
    }
    i = j;
  }
  if (!elongated) return std::string(token);
  if (!lexicon.contains(lower_ascii(two)) && lexicon.contains(lower_ascii(one))) {
    return one;
  }
  return two;
}

std::vector<std::string> segment_hashtag(std::string_view tag,
                                         const Lexicon& lexicon) {
  std::vector<std::string> words;
  const std::string lowered = lower_ascii(tag);
  std::size_t pos = 0;
  while (pos < tag.size()) {
    std::size_t best = 0;
    const std::size_t longest =
        std::min(lexicon.max_word_length(), tag.size() - pos);
    for (std::size_t len = longest; len > 0; --len) {
      if (lexicon.contains(std::string_view(lowered).substr(pos, len))) {
        best = len;
        break;
      }
    }
    if (best == 0) {
      words.emplace_back(tag.substr(pos));
      break;
    }
    words.emplace_back(tag.substr(pos, best));
    pos += best;
  }
  return words;
}

std::optional<CleanText> normalize(std::string_view text,
                                   const PreprocessConfig& config) {
  static const Lexicon kEmpty;
  const Lexicon& lexicon = config.lexicon ? *config.lexicon : kEmpty;

  std::u32string work = decode_utf8(text);
  if (config.lowercase) {                                     // 1
    std::transform(work.begin(), work.end(), work.begin(), to_lower);
  }
  if (config.strip_urls) work = strip_urls(work);             // 2
  if (config.strip_mentions) work = strip_mentions(work);     // 3
  if (config.collapse_elongation) {                           // 4
    work = collapse_runs(work, lexicon);
  }
  // 5: stop words are kept.
  if (config.strip_punctuation) {                             // 6
    work = strip_punctuation(work, config.strip_emoticons);
  }
  if (config.segment_hashtags) work = expand_hashtags(work, lexicon);  // 7
  if (config.strip_emoticons) work = strip_emoticons(work);   // 9

  // 8: the length filter sees the final text.
  CleanText clean;
  for (const auto& token : split_tokens(work)) {
    if (!clean.text.empty()) clean.text.push_back(' ');
    clean.text += encode_utf8(token);
    ++clean.token_count;
  }
  if (clean.token_count < config.min_tokens) return std::nullopt;
  return clean;
}

}  // namespace forge::preprocess
