#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace codeassist {

/// Document text, one element per character position.
using Text = std::u32string;

/// Decodes UTF-8. Invalid sequences decode to U+FFFD, one per offending byte.
Text from_utf8(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

/// Number of code points in a UTF-8 string.
std::size_t code_point_count(std::string_view utf8) noexcept;

/// Splits on every '\n'. The empty string has zero lines; otherwise a string
/// with k newlines has k + 1 lines, so join_lines(split_lines(s)) == s.
std::vector<std::string> split_lines(std::string_view content);
std::string join_lines(const std::vector<std::string>& lines);

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const ByteSpan&) const = default;
};

/// Word boundaries inside identifiers and code text: case transitions
/// (fooBar, HTTPServer), letter/digit transitions and any non-alphanumeric
/// byte. Bytes >= 0x80 count as caseless letters. Returned spans cover the
/// alphanumeric words only, in order.
std::vector<ByteSpan> word_spans(std::string_view text);

/// Lowercased words of `text` per word_spans().
std::vector<std::string> split_words(std::string_view text);

/// Tokens for intraline diffing: words per word_spans(), every other
/// non-space byte as its own token, and whitespace runs. Concatenating
/// the tokens reproduces `text`.
std::vector<ByteSpan> diff_tokens(std::string_view text);

std::string_view trim_right(std::string_view s) noexcept;
std::string_view trim(std::string_view s) noexcept;

}  // namespace codeassist
