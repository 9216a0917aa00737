#include "hinclus/text.hpp"

#include <algorithm>
#include <unordered_set>

namespace hinclus {

namespace {

// Unicode whitespace codepoints (WSpace=Y).
bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
         (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

// Decodes one UTF-8 codepoint at s[i]; advances i past it. Invalid bytes
// are passed through as single-byte codepoints.
char32_t decode_utf8(std::string_view s, size_t& i, size_t& len) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  size_t remaining = s.size() - i;
  int n = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    n = 1;
    cp = b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    n = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    n = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    n = 4;
    cp = b0 & 0x07;
  } else {
    len = 1;
    ++i;
    return b0;
  }
  if (static_cast<size_t>(n) > remaining) {
    len = 1;
    ++i;
    return b0;
  }
  for (int k = 1; k < n; ++k) {
    unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) {
      len = 1;
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  len = static_cast<size_t>(n);
  i += static_cast<size_t>(n);
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  size_t i = 0;
  while (i < text.size()) {
    size_t start = i;
    size_t len = 0;
    char32_t cp = decode_utf8(text, i, len);
    if (is_unicode_space(cp)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (cp < 0x80) {
      unsigned char c = static_cast<unsigned char>(cp);
      if (is_ascii_punct(c)) continue;
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      current.push_back(static_cast<char>(c));
    } else {
      current.append(text.substr(start, len));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string normalize_surface(std::string_view surface) {
  return join_tokens(tokenize(surface));
}

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

const std::vector<std::string>& stopword_list() {
  static const std::vector<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also",
      "although", "am", "among", "an", "and", "any", "anything", "are",
      "around", "as", "at", "away", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "came", "can",
      "cannot", "come", "could", "did", "do", "does", "doing", "down",
      "during", "each", "every", "everything", "few", "for", "from",
      "further", "get", "go", "got", "had", "has", "have", "having", "he",
      "her", "here", "hers", "herself", "him", "himself", "his", "how",
      "however", "i", "if", "in", "into", "is", "it", "its", "itself",
      "just", "like", "made", "make", "many", "me", "more", "most", "much",
      "must", "my", "myself", "never", "no", "nor", "not", "now", "of",
      "off", "on", "once", "one", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "said", "same", "she", "should",
      "so", "some", "such", "than", "that", "the", "their", "theirs",
      "them", "themselves", "then", "there", "these", "they", "this",
      "those", "through", "to", "too", "under", "until", "up", "very",
      "was", "we", "were", "what", "when", "where", "which", "while",
      "who", "whom", "why", "will", "with", "would", "you", "your",
      "yours", "yourself", "yourselves"};
  return words;
}

bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> set(stopword_list().begin(),
                                                        stopword_list().end());
  return set.contains(token);
}

}  // namespace hinclus
