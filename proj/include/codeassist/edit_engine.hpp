#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeassist/text.hpp"

namespace codeassist {

/// Anchor payloads standing in for lines before the first / after the last.
inline constexpr std::string_view kBeginSentinel = "<BOF>";
inline constexpr std::string_view kEndSentinel = "<EOF>";

/// One contiguous edit. Anchors are verbatim lines of the input file: two
/// before the edited region and one after it.
///
///   @@
///   = <anchor_pre2>
///   = <anchor_pre1>
///   - <removed line>...
///   + <added line>...
///   = <anchor_post>
struct Hunk {
  std::string anchor_pre2;
  std::string anchor_pre1;
  std::string anchor_post;
  std::vector<std::string> removed;
  std::vector<std::string> added;

  bool operator==(const Hunk&) const = default;
};

struct EditScript {
  std::vector<Hunk> hunks;

  bool operator==(const EditScript&) const = default;
};

/// Throws Error{SyntaxError} or Error{EmptyScript}.
EditScript parse_edit_script(std::string_view text);

/// Canonical text form; parse_edit_script(format_edit_script(s)) == s.
std::string format_edit_script(const EditScript& script);

/// Line index of each hunk's first removed line (its insertion point for
/// pure insertions). Throws Error{AnchorNotFound}, Error{AmbiguousAnchor}
/// or Error{OverlappingHunks}.
std::vector<std::size_t> locate_anchors(const EditScript& script, const std::vector<std::string>& lines);

/// Every line index where `hunk` matches, in ascending order.
std::vector<std::size_t> hunk_matches(const Hunk& hunk, const std::vector<std::string>& lines);

std::string apply_edit(const EditScript& script, std::string_view content);

/// Script taking `before` to `after`. Falls back to one whole-file hunk when
/// the minimal hunks would not locate unambiguously. Throws Error{NoChange}.
EditScript serialize_edit_script(std::string_view before, std::string_view after);

enum class DiffOp { Equal, Remove, Add };

struct LineDiffEntry {
  DiffOp op = DiffOp::Equal;
  /// Index into the before lines (Equal, Remove) or after lines (Add).
  std::size_t before_index = 0;
  std::size_t after_index = 0;
};

/// Shortest line edit script (Myers). Removals precede additions within a
/// change run.
std::vector<LineDiffEntry> line_diff(const std::vector<std::string>& before, const std::vector<std::string>& after);

struct IndexedLine {
  std::size_t index = 0;
  std::string text;
};

struct MovePair {
  std::size_t removed_index = 0;
  std::size_t added_index = 0;

  bool operator==(const MovePair&) const = default;
};

/// Lines of at least three non-whitespace characters, compared after
/// trimming trailing whitespace, are moves when deleted in one place and
/// added in another. Longest consecutive runs are paired first; ties go to
/// the earliest removed line, then the earliest target.
std::vector<MovePair> detect_moves(const std::vector<IndexedLine>& removed, const std::vector<IndexedLine>& added);

enum class LineTag { Unchanged, Added, Removed, Modified, MovedFrom, MovedTo };

std::string_view to_string(LineTag tag) noexcept;

struct DecoratedLine {
  std::string text;
  LineTag tag = LineTag::Unchanged;
  std::optional<std::size_t> before_line;
  std::optional<std::size_t> after_line;
  /// Modified lines: differing word spans (byte offsets into text).
  std::vector<ByteSpan> highlights;
  /// Index into RenderedDiff::lines of the counterpart for moved and
  /// modified lines.
  std::optional<std::size_t> partner;
};

/// Modified lines come as a pair, old side then new side, both tagged
/// Modified, so every changed before- or after-line is one entry.
struct RenderedDiff {
  std::vector<DecoratedLine> lines;

  std::size_t decorated_count() const;
};

RenderedDiff render_diff(std::string_view before, std::string_view after);

/// Text view of a rendered diff: "  " unchanged, "- "/"+ " removed/added,
/// "< "/"> " modified old/new with [-..-]/{+..+} highlights, "<<"/">>"
/// moved from/to with the partner's 1-based line number.
std::string format_rendered_diff(const RenderedDiff& diff);

}  // namespace codeassist
