#include "codeassist/context_packer.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "codeassist/error.hpp"

namespace codeassist {

namespace {

/// Character offset of each line start, plus the total character count.
struct LineIndex {
  std::vector<std::size_t> starts;
  std::size_t total = 0;

  explicit LineIndex(std::string_view content) {
    if (content.empty()) return;
    starts.push_back(0);
    std::size_t chars = 0;
    for (char c : content) {
      if ((static_cast<unsigned char>(c) & 0xC0) == 0x80) continue;
      ++chars;
      if (c == '\n') starts.push_back(chars);
    }
    total = chars;
  }

  std::size_t line_count() const { return starts.size(); }

  std::size_t line_of(std::size_t offset) const {
    if (starts.empty()) return 0;
    const auto it = std::upper_bound(starts.begin(), starts.end(), offset);
    return static_cast<std::size_t>(it - starts.begin()) - 1;
  }

  /// Offset just past the last character of `line`, excluding its newline.
  std::size_t line_end(std::size_t line) const {
    return line + 1 < starts.size() ? starts[line + 1] - 1 : total;
  }

  CharRange lines_to_range(std::size_t first, std::size_t last_exclusive) const {
    return {starts[first], line_end(last_exclusive - 1)};
  }
};

std::size_t indent_width(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return i;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

/// Enclosing-scope lookup for one file, computed once per render.
class ScopeIndex {
 public:
  explicit ScopeIndex(const std::vector<std::string>& lines) : lines_(lines) {
    brace_mode_ = std::any_of(lines.begin(), lines.end(),
                              [](const std::string& l) { return l.find('{') != std::string::npos; });
    if (brace_mode_) scan_braces();
  }

  std::vector<std::size_t> headers(std::size_t line) const {
    return brace_mode_ ? brace_headers(line) : indent_headers(line);
  }

 private:
  struct Scope {
    std::size_t header = 0;
    std::size_t open_line = 0;
    std::size_t close_line = 0;
  };

  void scan_braces() {
    enum class State { Code, LineComment, BlockComment, String, Char };
    State state = State::Code;
    std::vector<Scope> open;
    for (std::size_t ln = 0; ln < lines_.size(); ++ln) {
      const std::string& line = lines_[ln];
      if (state == State::LineComment) state = State::Code;
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        const char next = i + 1 < line.size() ? line[i + 1] : '\0';
        switch (state) {
          case State::Code:
            if (c == '/' && next == '/') {
              state = State::LineComment;
            } else if (c == '/' && next == '*') {
              state = State::BlockComment;
              ++i;
            } else if (c == '"') {
              state = State::String;
            } else if (c == '\'') {
              state = State::Char;
            } else if (c == '{') {
              open.push_back({header_for_brace(ln, i), ln, lines_.size() - 1});
            } else if (c == '}' && !open.empty()) {
              Scope s = open.back();
              open.pop_back();
              s.close_line = ln;
              scopes_.push_back(s);
            }
            break;
          case State::LineComment:
            break;
          case State::BlockComment:
            if (c == '*' && next == '/') {
              state = State::Code;
              ++i;
            }
            break;
          case State::String:
          case State::Char:
            if (c == '\\') {
              ++i;
            } else if ((state == State::String && c == '"') || (state == State::Char && c == '\'')) {
              state = State::Code;
            }
            break;
        }
      }
      // Unterminated literals do not span lines.
      if (state == State::String || state == State::Char) state = State::Code;
    }
    scopes_.insert(scopes_.end(), open.begin(), open.end());
  }

  std::size_t header_for_brace(std::size_t ln, std::size_t col) const {
    if (!trim(std::string_view(lines_[ln]).substr(0, col)).empty()) return ln;
    for (std::size_t k = ln; k-- > 0;) {
      if (!is_blank(lines_[k])) return k;
    }
    return ln;
  }

  std::vector<std::size_t> brace_headers(std::size_t line) const {
    std::set<std::size_t> found;
    for (const auto& s : scopes_) {
      if (s.open_line < line && line <= s.close_line && s.header != line) found.insert(s.header);
    }
    return {found.begin(), found.end()};
  }

  std::vector<std::size_t> indent_headers(std::size_t line) const {
    std::size_t probe = line;
    while (probe < lines_.size() && is_blank(lines_[probe])) ++probe;
    if (probe >= lines_.size()) return {};
    std::size_t current = indent_width(lines_[probe]);
    std::vector<std::size_t> found;
    for (std::size_t k = line; k-- > 0 && current > 0;) {
      if (is_blank(lines_[k])) continue;
      const std::size_t w = indent_width(lines_[k]);
      if (w < current) {
        found.push_back(k);
        current = w;
      }
    }
    std::reverse(found.begin(), found.end());
    return found;
  }

  const std::vector<std::string>& lines_;
  bool brace_mode_ = false;
  std::vector<Scope> scopes_;
};

std::set<std::string> word_set(std::string_view text) {
  const auto words = split_words(text);
  return {words.begin(), words.end()};
}

bool snippet_order(const Snippet& a, const Snippet& b) {
  return std::tie(b.score, a.file_id, a.range.begin) < std::tie(a.score, b.file_id, b.range.begin);
}

bool range_hits(const CharRange& match, const CharRange& edit) {
  if (edit.size() == 0) return match.begin <= edit.begin && edit.begin <= match.end;
  return match.overlaps(edit);
}

}  // namespace

std::size_t CharRatioEstimator::estimate(std::string_view utf8) const {
  const std::size_t chars = code_point_count(utf8);
  return (chars + chars_per_token_ - 1) / chars_per_token_;
}

const TokenEstimator& default_estimator() {
  static const CharRatioEstimator estimator(4);
  return estimator;
}

std::string cursor_context(std::string_view content, std::size_t line, const PackerConfig& config) {
  const auto lines = split_lines(content);
  if (lines.empty()) return {};
  line = std::min(line, lines.size() - 1);
  const std::size_t first = line > config.context_lines_above ? line - config.context_lines_above : 0;
  const std::size_t last = std::min(lines.size(), line + config.context_lines_below + 1);
  return join_lines({lines.begin() + static_cast<std::ptrdiff_t>(first), lines.begin() + static_cast<std::ptrdiff_t>(last)});
}

std::vector<Snippet> scan_matches(const std::vector<FileView>& files, std::string_view context,
                                  const std::optional<CursorLocation>& cursor, const PackerConfig& config) {
  std::vector<Snippet> out;
  const auto wanted = word_set(context);
  if (wanted.empty() || config.window_lines == 0 || config.stride_lines == 0) return out;

  for (const auto& file : files) {
    const auto lines = split_lines(file.content);
    const LineIndex index(file.content);
    const std::size_t n = lines.size();

    struct Window {
      std::size_t begin, end;
      std::int64_t score;
    };
    std::vector<Window> scored;
    for (std::size_t start = 0; start < n; start += config.stride_lines) {
      const std::size_t end = std::min(n, start + config.window_lines);
      const bool holds_cursor = cursor && cursor->file_id == file.file_id && start <= cursor->line && cursor->line < end;
      if (!holds_cursor) {
        std::set<std::string> words;
        for (std::size_t l = start; l < end; ++l) {
          for (auto& w : split_words(lines[l])) words.insert(std::move(w));
        }
        std::int64_t score = 0;
        for (const auto& w : words) score += wanted.contains(w) ? 1 : 0;
        if (score > 0) scored.push_back({start, end, score});
      }
      if (end == n) break;
    }

    for (std::size_t i = 0; i < scored.size();) {
      Window merged = scored[i++];
      while (i < scored.size() && scored[i].begin < merged.end) {
        merged.end = std::max(merged.end, scored[i].end);
        merged.score = std::max(merged.score, scored[i].score);
        ++i;
      }
      out.push_back({file.file_id, index.lines_to_range(merged.begin, merged.end), SnippetKind::LexicalMatch,
                     merged.score});
    }
  }
  std::sort(out.begin(), out.end(), snippet_order);
  return out;
}

std::vector<Snippet> rank_snippets(const std::vector<EditRecord>& edits, const std::vector<Snippet>& matches) {
  std::vector<Snippet> ranked;
  for (const auto& e : edits) ranked.push_back({e.file_id, e.range, SnippetKind::RecentEdit, e.last_touched});
  std::sort(ranked.begin(), ranked.end(), snippet_order);

  std::vector<Snippet> kept;
  for (const auto& m : matches) {
    const bool duplicate = std::any_of(edits.begin(), edits.end(), [&](const EditRecord& e) {
      return e.file_id == m.file_id && range_hits(m.range, e.range);
    });
    if (!duplicate) kept.push_back(m);
  }
  std::sort(kept.begin(), kept.end(), snippet_order);
  ranked.insert(ranked.end(), kept.begin(), kept.end());
  return ranked;
}

std::vector<std::size_t> enclosing_scope_headers(const std::vector<std::string>& lines, std::size_t line) {
  return ScopeIndex(lines).headers(line);
}

std::vector<std::string> render_with_scopes(std::string_view content, const std::vector<CharRange>& ranges) {
  const auto lines = split_lines(content);
  const LineIndex index(content);
  std::vector<bool> keep(lines.size(), false);

  for (const auto& r : ranges) {
    if (r.begin > r.end || r.end > index.total) {
      throw Error(ErrorCode::MalformedRange, "[" + std::to_string(r.begin) + ", " + std::to_string(r.end) +
                                                 ") in content of " + std::to_string(index.total) + " characters");
    }
    if (lines.empty()) continue;
    const std::size_t first = index.line_of(r.begin);
    const std::size_t last = r.size() == 0 ? first : index.line_of(r.end - 1);
    for (std::size_t l = first; l <= last; ++l) keep[l] = true;
  }

  const ScopeIndex scopes(lines);
  std::vector<bool> with_headers = keep;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!keep[l]) continue;
    for (auto h : scopes.headers(l)) with_headers[h] = true;
  }

  std::vector<std::string> out;
  bool in_gap = false;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (with_headers[l]) {
      out.push_back(lines[l]);
      in_gap = false;
    } else if (!in_gap) {
      out.emplace_back(kPruneMarker);
      in_gap = true;
    }
  }
  return out;
}

std::string PromptBundle::text() const {
  std::string out;
  for (const auto& s : rendered_sections) {
    out += s.text;
    out += '\n';
  }
  out += cursor_section;
  out += '\n';
  return out;
}

PromptBundle build_prompt(const Session& session, const CompletionRequest& request,
                          const std::vector<Snippet>& ranked, std::size_t budget, const TokenEstimator& estimator) {
  PromptBundle bundle;
  bundle.input_budget = budget;
  bundle.cursor_section = std::string(kFileHeaderPrefix) + request.file_id + "\n" + to_utf8(request.prefix_window) +
                          std::string(kCursorMarker) + to_utf8(request.suffix_window);
  bundle.token_estimate = estimator.estimate(bundle.text());
  if (bundle.token_estimate > budget) {
    throw Error(ErrorCode::CursorSectionOverBudget,
                std::to_string(bundle.token_estimate) + " tokens > budget " + std::to_string(budget));
  }

  const CharRange cursor_span{request.anchor - request.prefix_window.size(),
                              request.anchor + request.suffix_window.size()};

  struct FileGroup {
    FileId file_id;
    std::string content;
    std::vector<CharRange> ranges;
  };
  std::vector<FileGroup> groups;

  const auto render_group = [](const FileGroup& g) {
    return std::string(kFileHeaderPrefix) + g.file_id + "\n" + join_lines(render_with_scopes(g.content, g.ranges));
  };

  for (const auto& snippet : ranked) {
    const auto* doc = session.find_document(snippet.file_id);
    if (doc == nullptr || snippet.range.end > doc->content.size() || snippet.range.begin > snippet.range.end) continue;
    if (snippet.file_id == request.file_id && cursor_span.begin <= snippet.range.begin &&
        snippet.range.end <= cursor_span.end) {
      continue;
    }

    auto candidate = groups;
    auto it = std::find_if(candidate.begin(), candidate.end(),
                           [&](const FileGroup& g) { return g.file_id == snippet.file_id; });
    if (it == candidate.end()) {
      candidate.push_back({snippet.file_id, to_utf8(doc->content), {}});
      it = std::prev(candidate.end());
    }
    it->ranges.push_back(snippet.range);

    PromptBundle trial;
    trial.cursor_section = bundle.cursor_section;
    for (const auto& g : candidate) trial.rendered_sections.push_back({g.file_id, render_group(g)});
    const std::size_t estimate = estimator.estimate(trial.text());
    if (estimate > budget) break;

    groups = std::move(candidate);
    bundle.rendered_sections = std::move(trial.rendered_sections);
    bundle.token_estimate = estimate;
    bundle.included.push_back(snippet);
  }
  return bundle;
}

PromptBundle assemble_prompt(const Session& session, const CompletionRequest& request, const PackerConfig& config,
                             std::size_t budget, const TokenEstimator& estimator) {
  std::vector<FileView> files;
  for (const auto& [id, doc] : session.documents()) files.push_back({id, to_utf8(doc.content)});

  std::optional<CursorLocation> cursor;
  std::string context;
  if (request.document) {
    const std::string focused = to_utf8(*request.document);
    const LineIndex index(focused);
    cursor = CursorLocation{request.file_id, index.line_of(request.anchor)};
    context = cursor_context(focused, cursor->line, config);
  }
  std::vector<Snippet> matches;
  if (!context.empty()) matches = scan_matches(files, context, cursor, config);
  return build_prompt(session, request, rank_snippets(session.recent_edits(), matches), budget, estimator);
}

}  // namespace codeassist
