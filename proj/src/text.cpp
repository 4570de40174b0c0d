#include "codeassist/text.hpp"

#include <algorithm>
#include <cctype>

namespace codeassist {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

enum class CharClass { Upper, Lower, Digit, Separator };

CharClass classify(unsigned char c) {
  if (c >= 0x80) return CharClass::Lower;
  if (std::isupper(c)) return CharClass::Upper;
  if (std::islower(c)) return CharClass::Lower;
  if (std::isdigit(c)) return CharClass::Digit;
  return CharClass::Separator;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

}  // namespace

Text from_utf8(std::string_view utf8) {
  Text out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto lead = static_cast<unsigned char>(utf8[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= utf8.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(utf8[i + k]);
      if ((cont & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacement;
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

std::size_t code_point_count(std::string_view utf8) noexcept {
  return static_cast<std::size_t>(std::count_if(utf8.begin(), utf8.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::vector<std::string> split_lines(std::string_view content) {
  std::vector<std::string> lines;
  if (content.empty()) return lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = content.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(content.substr(start));
      break;
    }
    lines.emplace_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::vector<ByteSpan> word_spans(std::string_view text) {
  std::vector<ByteSpan> spans;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    if (classify(static_cast<unsigned char>(text[i])) == CharClass::Separator) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    ++i;
    while (i < n) {
      const auto prev = classify(static_cast<unsigned char>(text[i - 1]));
      const auto cur = classify(static_cast<unsigned char>(text[i]));
      if (cur == CharClass::Separator) break;
      if ((prev == CharClass::Digit) != (cur == CharClass::Digit)) break;
      if (prev == CharClass::Lower && cur == CharClass::Upper) break;
      // Acronym end: the last capital of "HTTPServer" starts the next word.
      if (prev == CharClass::Upper && cur == CharClass::Upper && i + 1 < n &&
          classify(static_cast<unsigned char>(text[i + 1])) == CharClass::Lower &&
          static_cast<unsigned char>(text[i + 1]) < 0x80) {
        break;
      }
      ++i;
    }
    spans.push_back({begin, i});
  }
  return spans;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& span : word_spans(text)) {
    std::string word(text.substr(span.begin, span.end - span.begin));
    for (auto& c : word) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    words.push_back(std::move(word));
  }
  return words;
}

std::vector<ByteSpan> diff_tokens(std::string_view text) {
  std::vector<ByteSpan> tokens;
  const auto words = word_spans(text);
  std::size_t w = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (w < words.size() && words[w].begin == i) {
      tokens.push_back(words[w]);
      i = words[w].end;
      ++w;
      continue;
    }
    if (is_space(static_cast<unsigned char>(text[i]))) {
      const std::size_t begin = i;
      while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
      tokens.push_back({begin, i});
      continue;
    }
    tokens.push_back({i, i + 1});
    ++i;
  }
  return tokens;
}

std::string_view trim_right(std::string_view s) noexcept {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view trim(std::string_view s) noexcept {
  s = trim_right(s);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

}  // namespace codeassist
