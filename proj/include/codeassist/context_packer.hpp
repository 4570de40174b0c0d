#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codeassist/session.hpp"
#include "codeassist/streak_cache.hpp"

namespace codeassist {

/// Prompt text markers. The pruning marker is U+2026.
inline constexpr std::string_view kFileHeaderPrefix = "FILE ";
inline constexpr std::string_view kCursorMarker = "<|cursor|>";
inline constexpr std::string_view kPruneMarker = "…";

inline constexpr std::size_t kInputTokenBudget = 8192;
inline constexpr std::size_t kOutputTokenBudget = 128;

class TokenEstimator {
 public:
  virtual ~TokenEstimator() = default;
  virtual std::size_t estimate(std::string_view utf8) const = 0;
};

/// ceil(code points / chars_per_token).
class CharRatioEstimator final : public TokenEstimator {
 public:
  explicit CharRatioEstimator(std::size_t chars_per_token = 4) : chars_per_token_(chars_per_token) {}
  std::size_t estimate(std::string_view utf8) const override;

 private:
  std::size_t chars_per_token_;
};

const TokenEstimator& default_estimator();

enum class SnippetKind { RecentEdit, LexicalMatch };

struct Snippet {
  FileId file_id;
  CharRange range;
  SnippetKind kind = SnippetKind::LexicalMatch;
  /// Recency timestamp for edits, matched-word count for lexical matches.
  std::int64_t score = 0;

  bool operator==(const Snippet&) const = default;
};

struct PackerConfig {
  std::size_t window_lines = 30;
  std::size_t stride_lines = 10;
  std::size_t context_lines_above = 10;
  std::size_t context_lines_below = 10;
};

/// One open file as the scanner sees it.
struct FileView {
  FileId file_id;
  std::string content;
};

struct CursorLocation {
  FileId file_id;
  std::size_t line = 0;
};

/// Lines of `content` around `line`, joined with '\n'.
std::string cursor_context(std::string_view content, std::size_t line, const PackerConfig& config);

/// Sliding-window lexical matches against the words of `cursor_context`.
/// Windows sharing no word are dropped, overlapping windows in one file are
/// merged keeping the highest score, and windows containing the cursor line
/// are skipped. Result is ordered by score descending, then file, then start.
std::vector<Snippet> scan_matches(const std::vector<FileView>& files, std::string_view cursor_context,
                                  const std::optional<CursorLocation>& cursor, const PackerConfig& config);

/// Recent edits first, newest first; then lexical matches by score. Ties go
/// to the lower (file_id, range start). A match overlapping an edit in the
/// same file is dropped.
std::vector<Snippet> rank_snippets(const std::vector<EditRecord>& edits, const std::vector<Snippet>& matches);

/// Header line indices of every scope enclosing `line`, outermost first.
/// Brace-delimited scopes when the file contains '{', indentation otherwise.
std::vector<std::size_t> enclosing_scope_headers(const std::vector<std::string>& lines, std::size_t line);

/// Renders the lines touched by `ranges` (character offsets) plus the headers
/// of their enclosing scopes, in document order, replacing each maximal run
/// of omitted lines with a single pruning-marker line.
/// Throws Error{MalformedRange} for ranges outside the content.
std::vector<std::string> render_with_scopes(std::string_view content, const std::vector<CharRange>& ranges);

struct PromptSection {
  FileId file_id;
  std::string text;
};

struct PromptBundle {
  std::vector<PromptSection> rendered_sections;
  /// "FILE <path>" header, prefix window, cursor marker, suffix window.
  std::string cursor_section;
  std::size_t token_estimate = 0;
  std::size_t input_budget = kInputTokenBudget;
  std::size_t output_budget = kOutputTokenBudget;
  /// Ranked snippets that made it into the prompt.
  std::vector<Snippet> included;

  /// Context sections first, cursor section last.
  std::string text() const;
};

/// Greedy packing in rank order: the cursor section, then each snippet
/// (rendered with its file's other included snippets and their scopes)
/// while the estimate of the whole prompt stays within `budget`. Stops at
/// the first snippet that does not fit, which keeps the result monotone in
/// the budget. Throws Error{CursorSectionOverBudget}.
PromptBundle build_prompt(const Session& session, const CompletionRequest& request,
                          const std::vector<Snippet>& ranked, std::size_t budget = kInputTokenBudget,
                          const TokenEstimator& estimator = default_estimator());

/// Scans, ranks and packs for `request` in one call.
PromptBundle assemble_prompt(const Session& session, const CompletionRequest& request, const PackerConfig& config,
                             std::size_t budget = kInputTokenBudget,
                             const TokenEstimator& estimator = default_estimator());

}  // namespace codeassist
