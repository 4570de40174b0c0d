#include "codeassist/edit_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <unordered_map>

#include "codeassist/error.hpp"

namespace codeassist {

namespace {

bool anchor_matches(std::string_view anchor, const std::vector<std::string>& lines, std::ptrdiff_t pos) {
  if (pos < 0) return anchor == kBeginSentinel;
  if (pos >= static_cast<std::ptrdiff_t>(lines.size())) return anchor == kEndSentinel;
  return lines[static_cast<std::size_t>(pos)] == anchor;
}

std::string anchor_at(const std::vector<std::string>& lines, std::ptrdiff_t pos) {
  if (pos < 0) return std::string(kBeginSentinel);
  if (pos >= static_cast<std::ptrdiff_t>(lines.size())) return std::string(kEndSentinel);
  return lines[static_cast<std::size_t>(pos)];
}

/// Splits "<marker> <payload>"; a bare marker carries an empty payload.
std::optional<std::string> payload(std::string_view line, char marker) {
  if (line.empty() || line[0] != marker) return std::nullopt;
  if (line.size() == 1) return std::string();
  if (line[1] != ' ') return std::nullopt;
  return std::string(line.substr(2));
}

[[noreturn]] void syntax_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no + 1) + ": " + what);
}

std::size_t non_space_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '\f' && c != '\v';
  }));
}

/// Matched flags per token of a and b under one longest common subsequence.
std::pair<std::vector<bool>, std::vector<bool>> token_lcs(const std::vector<std::string_view>& a,
                                                          const std::vector<std::string_view>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::uint32_t>> dp(n + 1, std::vector<std::uint32_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
    }
  }
  std::vector<bool> in_a(n, false), in_b(m, false);
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j]) {
      in_a[i++] = true;
      in_b[j++] = true;
    } else if (dp[i + 1][j] >= dp[i][j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return {in_a, in_b};
}

std::vector<ByteSpan> highlight_spans(std::string_view line, const std::vector<ByteSpan>& tokens,
                                      const std::vector<bool>& matched) {
  std::vector<ByteSpan> spans;
  for (std::size_t t = 0; t < tokens.size();) {
    if (matched[t]) {
      ++t;
      continue;
    }
    ByteSpan span{tokens[t].begin, tokens[t].end};
    while (++t < tokens.size() && !matched[t]) span.end = tokens[t].end;
    while (span.begin < span.end && std::isspace(static_cast<unsigned char>(line[span.begin]))) ++span.begin;
    while (span.end > span.begin && std::isspace(static_cast<unsigned char>(line[span.end - 1]))) --span.end;
    if (span.begin < span.end) spans.push_back(span);
  }
  return spans;
}

std::string with_highlights(const std::string& text, const std::vector<ByteSpan>& spans, std::string_view open,
                            std::string_view close) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& s : spans) {
    out.append(text, pos, s.begin - pos);
    out += open;
    out.append(text, s.begin, s.end - s.begin);
    out += close;
    pos = s.end;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

}  // namespace

EditScript parse_edit_script(std::string_view text) {
  auto lines = split_lines(text);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  EditScript script;
  std::size_t i = 0;
  const auto expect_anchor = [&](const char* role) {
    if (i >= lines.size()) syntax_error(i, std::string("missing ") + role + " anchor");
    auto p = payload(lines[i], '=');
    if (!p) syntax_error(i, std::string("expected '= ' ") + role + " anchor");
    ++i;
    return *p;
  };

  while (i < lines.size()) {
    if (trim(lines[i]).empty()) {
      ++i;
      continue;
    }
    if (trim_right(lines[i]) != "@@") syntax_error(i, "expected hunk header '@@'");
    ++i;
    Hunk hunk;
    hunk.anchor_pre2 = expect_anchor("leading");
    hunk.anchor_pre1 = expect_anchor("leading");
    while (i < lines.size()) {
      if (auto p = payload(lines[i], '-')) {
        if (!hunk.added.empty()) syntax_error(i, "removed line after added lines");
        hunk.removed.push_back(std::move(*p));
      } else if (auto q = payload(lines[i], '+')) {
        hunk.added.push_back(std::move(*q));
      } else {
        break;
      }
      ++i;
    }
    hunk.anchor_post = expect_anchor("trailing");
    if (hunk.removed.empty() && hunk.added.empty()) syntax_error(i - 1, "hunk has no removed or added lines");
    script.hunks.push_back(std::move(hunk));
  }
  if (script.hunks.empty()) throw Error(ErrorCode::EmptyScript, "no hunks");
  return script;
}

std::string format_edit_script(const EditScript& script) {
  std::string out;
  for (const auto& h : script.hunks) {
    out += "@@\n= " + h.anchor_pre2 + "\n= " + h.anchor_pre1 + "\n";
    for (const auto& l : h.removed) out += "- " + l + "\n";
    for (const auto& l : h.added) out += "+ " + l + "\n";
    out += "= " + h.anchor_post + "\n";
  }
  return out;
}

std::vector<std::size_t> hunk_matches(const Hunk& hunk, const std::vector<std::string>& lines) {
  std::vector<std::size_t> found;
  const std::size_t n = lines.size();
  const std::size_t r = hunk.removed.size();
  for (std::size_t k = 0; k + r <= n; ++k) {
    const auto pos = static_cast<std::ptrdiff_t>(k);
    if (!anchor_matches(hunk.anchor_pre2, lines, pos - 2) || !anchor_matches(hunk.anchor_pre1, lines, pos - 1)) continue;
    if (!std::equal(hunk.removed.begin(), hunk.removed.end(), lines.begin() + pos)) continue;
    if (!anchor_matches(hunk.anchor_post, lines, pos + static_cast<std::ptrdiff_t>(r))) continue;
    found.push_back(k);
  }
  return found;
}

std::vector<std::size_t> locate_anchors(const EditScript& script, const std::vector<std::string>& lines) {
  std::vector<std::size_t> positions;
  for (std::size_t h = 0; h < script.hunks.size(); ++h) {
    const auto found = hunk_matches(script.hunks[h], lines);
    if (found.empty()) throw Error(ErrorCode::AnchorNotFound, "hunk " + std::to_string(h + 1));
    if (found.size() > 1) {
      throw Error(ErrorCode::AmbiguousAnchor,
                  "hunk " + std::to_string(h + 1) + " matches " + std::to_string(found.size()) + " locations");
    }
    if (!positions.empty()) {
      const std::size_t prev = positions.back();
      if (found[0] <= prev || found[0] < prev + script.hunks[h - 1].removed.size()) {
        throw Error(ErrorCode::OverlappingHunks, "hunk " + std::to_string(h + 1) + " overlaps or precedes hunk " +
                                                     std::to_string(h));
      }
    }
    positions.push_back(found[0]);
  }
  return positions;
}

std::string apply_edit(const EditScript& script, std::string_view content) {
  auto lines = split_lines(content);
  const auto positions = locate_anchors(script, lines);
  for (std::size_t h = script.hunks.size(); h-- > 0;) {
    const auto& hunk = script.hunks[h];
    const auto first = lines.begin() + static_cast<std::ptrdiff_t>(positions[h]);
    lines.erase(first, first + static_cast<std::ptrdiff_t>(hunk.removed.size()));
    lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(positions[h]), hunk.added.begin(), hunk.added.end());
  }
  return join_lines(lines);
}

EditScript serialize_edit_script(std::string_view before, std::string_view after) {
  if (before == after) throw Error(ErrorCode::NoChange, "before and after are identical");
  const auto b = split_lines(before);
  const auto a = split_lines(after);

  struct Region {
    std::size_t b_begin, b_end, a_begin, a_end;
  };
  std::vector<Region> regions;
  const auto diff = line_diff(b, a);
  std::size_t bi = 0, ai = 0;
  for (std::size_t e = 0; e < diff.size();) {
    if (diff[e].op == DiffOp::Equal) {
      ++bi, ++ai, ++e;
      continue;
    }
    Region r{bi, bi, ai, ai};
    while (e < diff.size() && diff[e].op != DiffOp::Equal) {
      if (diff[e].op == DiffOp::Remove) ++bi;
      else ++ai;
      ++e;
    }
    r.b_end = bi;
    r.a_end = ai;
    // Fewer than two unchanged lines between regions cannot supply the next
    // region's leading anchors, so the regions fuse.
    if (!regions.empty() && r.b_begin - regions.back().b_end < 2) {
      regions.back().b_end = r.b_end;
      regions.back().a_end = r.a_end;
    } else {
      regions.push_back(r);
    }
  }

  EditScript script;
  for (const auto& r : regions) {
    const auto k = static_cast<std::ptrdiff_t>(r.b_begin);
    Hunk h;
    h.anchor_pre2 = anchor_at(b, k - 2);
    h.anchor_pre1 = anchor_at(b, k - 1);
    h.anchor_post = anchor_at(b, static_cast<std::ptrdiff_t>(r.b_end));
    h.removed.assign(b.begin() + k, b.begin() + static_cast<std::ptrdiff_t>(r.b_end));
    h.added.assign(a.begin() + static_cast<std::ptrdiff_t>(r.a_begin), a.begin() + static_cast<std::ptrdiff_t>(r.a_end));
    script.hunks.push_back(std::move(h));
  }

  try {
    locate_anchors(script, b);
    return script;
  } catch (const Error&) {
    Hunk whole{std::string(kBeginSentinel), std::string(kBeginSentinel), std::string(kEndSentinel), b, a};
    return EditScript{{std::move(whole)}};
  }
}

std::vector<LineDiffEntry> line_diff(const std::vector<std::string>& before, const std::vector<std::string>& after) {
  const auto n = static_cast<std::ptrdiff_t>(before.size());
  const auto m = static_cast<std::ptrdiff_t>(after.size());
  const std::ptrdiff_t max = n + m;

  // trace[d] holds V[k] for k in [-d, d] after round d, at index k + d.
  std::vector<std::vector<std::ptrdiff_t>> trace;
  std::vector<std::ptrdiff_t> v(static_cast<std::size_t>(2 * max + 3), 0);
  const std::ptrdiff_t off = max + 1;
  std::ptrdiff_t final_d = 0;
  bool done = max == 0;
  if (done) trace.push_back({0});
  for (std::ptrdiff_t d = 0; d <= max && !done; ++d) {
    for (std::ptrdiff_t k = -d; k <= d; k += 2) {
      std::ptrdiff_t x;
      if (k == -d || (k != d && v[static_cast<std::size_t>(off + k - 1)] < v[static_cast<std::size_t>(off + k + 1)])) {
        x = v[static_cast<std::size_t>(off + k + 1)];
      } else {
        x = v[static_cast<std::size_t>(off + k - 1)] + 1;
      }
      std::ptrdiff_t y = x - k;
      while (x < n && y < m && before[static_cast<std::size_t>(x)] == after[static_cast<std::size_t>(y)]) ++x, ++y;
      v[static_cast<std::size_t>(off + k)] = x;
      if (x >= n && y >= m) done = true;
    }
    trace.emplace_back(v.begin() + off - d, v.begin() + off + d + 1);
    final_d = d;
  }

  std::vector<LineDiffEntry> reversed;
  std::ptrdiff_t x = n, y = m;
  for (std::ptrdiff_t d = final_d; d > 0; --d) {
    const auto& prev = trace[static_cast<std::size_t>(d - 1)];
    const auto at = [&](std::ptrdiff_t k) { return prev[static_cast<std::size_t>(k + d - 1)]; };
    const std::ptrdiff_t k = x - y;
    const bool down = k == -d || (k != d && at(k - 1) < at(k + 1));
    const std::ptrdiff_t prev_k = down ? k + 1 : k - 1;
    const std::ptrdiff_t prev_x = at(prev_k);
    const std::ptrdiff_t prev_y = prev_x - prev_k;
    const std::ptrdiff_t mid_x = down ? prev_x : prev_x + 1;
    while (x > mid_x) {
      --x, --y;
      reversed.push_back({DiffOp::Equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    if (down) {
      reversed.push_back({DiffOp::Add, static_cast<std::size_t>(prev_x), static_cast<std::size_t>(prev_y)});
    } else {
      reversed.push_back({DiffOp::Remove, static_cast<std::size_t>(prev_x), static_cast<std::size_t>(prev_y)});
    }
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    --x, --y;
    reversed.push_back({DiffOp::Equal, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
  }

  std::vector<LineDiffEntry> out(reversed.rbegin(), reversed.rend());
  for (std::size_t i = 0; i < out.size();) {
    if (out[i].op == DiffOp::Equal) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < out.size() && out[j].op != DiffOp::Equal) ++j;
    std::stable_partition(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j),
                          [](const LineDiffEntry& e) { return e.op == DiffOp::Remove; });
    i = j;
  }
  return out;
}

std::vector<MovePair> detect_moves(const std::vector<IndexedLine>& removed, const std::vector<IndexedLine>& added) {
  const auto eligible = [](const std::string& s) { return non_space_count(s) >= 3; };

  struct Slot {
    std::string key;
    bool eligible = false;
    bool paired = false;
  };
  std::unordered_map<std::size_t, Slot> rem, add;
  for (const auto& l : removed) rem[l.index] = {std::string(trim_right(l.text)), eligible(l.text), false};
  for (const auto& l : added) add[l.index] = {std::string(trim_right(l.text)), eligible(l.text), false};

  std::vector<std::size_t> rem_order, add_order;
  for (const auto& l : removed) rem_order.push_back(l.index);
  for (const auto& l : added) add_order.push_back(l.index);
  std::sort(rem_order.begin(), rem_order.end());
  std::sort(add_order.begin(), add_order.end());

  std::unordered_map<std::string, std::vector<std::size_t>> add_by_key;
  for (auto idx : add_order) {
    if (add[idx].eligible) add_by_key[add[idx].key].push_back(idx);
  }

  const auto open = [](std::unordered_map<std::size_t, Slot>& slots, std::size_t idx) -> Slot* {
    const auto it = slots.find(idx);
    if (it == slots.end() || !it->second.eligible || it->second.paired) return nullptr;
    return &it->second;
  };

  std::vector<MovePair> pairs;
  while (true) {
    std::size_t best_len = 0, best_r = 0, best_a = 0;
    for (auto r : rem_order) {
      const Slot* rs = open(rem, r);
      if (rs == nullptr) continue;
      const auto cands = add_by_key.find(rs->key);
      if (cands == add_by_key.end()) continue;
      for (auto a : cands->second) {
        if (open(add, a) == nullptr) continue;
        std::size_t len = 0;
        while (true) {
          const Slot* x = open(rem, r + len);
          const Slot* y = open(add, a + len);
          if (x == nullptr || y == nullptr || x->key != y->key) break;
          ++len;
        }
        if (len > best_len) {
          best_len = len;
          best_r = r;
          best_a = a;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t i = 0; i < best_len; ++i) {
      rem[best_r + i].paired = true;
      add[best_a + i].paired = true;
      pairs.push_back({best_r + i, best_a + i});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MovePair& x, const MovePair& y) { return x.removed_index < y.removed_index; });
  return pairs;
}

std::string_view to_string(LineTag tag) noexcept {
  switch (tag) {
    case LineTag::Unchanged: return "unchanged";
    case LineTag::Added: return "added";
    case LineTag::Removed: return "removed";
    case LineTag::Modified: return "modified";
    case LineTag::MovedFrom: return "moved_from";
    case LineTag::MovedTo: return "moved_to";
  }
  return "unknown";
}

std::size_t RenderedDiff::decorated_count() const {
  return static_cast<std::size_t>(
      std::count_if(lines.begin(), lines.end(), [](const DecoratedLine& l) { return l.tag != LineTag::Unchanged; }));
}

RenderedDiff render_diff(std::string_view before, std::string_view after) {
  const auto b = split_lines(before);
  const auto a = split_lines(after);
  const auto diff = line_diff(b, a);

  std::vector<IndexedLine> removed, added;
  for (const auto& e : diff) {
    if (e.op == DiffOp::Remove) removed.push_back({e.before_index, b[e.before_index]});
    if (e.op == DiffOp::Add) added.push_back({e.after_index, a[e.after_index]});
  }
  const auto moves = detect_moves(removed, added);
  std::unordered_map<std::size_t, std::size_t> moved_to_of, moved_from_of;
  for (const auto& p : moves) {
    moved_to_of[p.removed_index] = p.added_index;
    moved_from_of[p.added_index] = p.removed_index;
  }

  RenderedDiff out;
  std::unordered_map<std::size_t, std::size_t> row_of_before, row_of_after;
  for (std::size_t i = 0; i < diff.size();) {
    if (diff[i].op == DiffOp::Equal) {
      out.lines.push_back({b[diff[i].before_index], LineTag::Unchanged, diff[i].before_index, diff[i].after_index, {}, {}});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < diff.size() && diff[j].op != DiffOp::Equal) ++j;

    std::vector<std::size_t> plain_removed, plain_added;
    for (std::size_t e = i; e < j; ++e) {
      if (diff[e].op == DiffOp::Remove && !moved_to_of.contains(diff[e].before_index)) {
        plain_removed.push_back(diff[e].before_index);
      }
      if (diff[e].op == DiffOp::Add && !moved_from_of.contains(diff[e].after_index)) {
        plain_added.push_back(diff[e].after_index);
      }
    }
    const bool modified = plain_removed.size() == 1 && plain_added.size() == 1;

    for (std::size_t e = i; e < j; ++e) {
      const auto& d = diff[e];
      if (d.op == DiffOp::Remove) {
        const auto tag = moved_to_of.contains(d.before_index) ? LineTag::MovedFrom
                         : modified                            ? LineTag::Modified
                                                               : LineTag::Removed;
        row_of_before[d.before_index] = out.lines.size();
        out.lines.push_back({b[d.before_index], tag, d.before_index, std::nullopt, {}, {}});
      } else {
        const auto tag = moved_from_of.contains(d.after_index) ? LineTag::MovedTo
                         : modified                             ? LineTag::Modified
                                                                : LineTag::Added;
        row_of_after[d.after_index] = out.lines.size();
        out.lines.push_back({a[d.after_index], tag, std::nullopt, d.after_index, {}, {}});
      }
    }

    if (modified) {
      auto& old_line = out.lines[row_of_before[plain_removed[0]]];
      auto& new_line = out.lines[row_of_after[plain_added[0]]];
      const auto old_tokens = diff_tokens(old_line.text);
      const auto new_tokens = diff_tokens(new_line.text);
      std::vector<std::string_view> ov, nv;
      for (const auto& t : old_tokens) ov.push_back(std::string_view(old_line.text).substr(t.begin, t.end - t.begin));
      for (const auto& t : new_tokens) nv.push_back(std::string_view(new_line.text).substr(t.begin, t.end - t.begin));
      const auto [old_matched, new_matched] = token_lcs(ov, nv);
      old_line.highlights = highlight_spans(old_line.text, old_tokens, old_matched);
      new_line.highlights = highlight_spans(new_line.text, new_tokens, new_matched);
      old_line.partner = row_of_after[plain_added[0]];
      new_line.partner = row_of_before[plain_removed[0]];
    }
    i = j;
  }

  for (const auto& p : moves) {
    const auto from = row_of_before.at(p.removed_index);
    const auto to = row_of_after.at(p.added_index);
    out.lines[from].partner = to;
    out.lines[to].partner = from;
  }
  return out;
}

std::string format_rendered_diff(const RenderedDiff& diff) {
  std::string out;
  for (const auto& l : diff.lines) {
    switch (l.tag) {
      case LineTag::Unchanged: out += "  " + l.text; break;
      case LineTag::Added: out += "+ " + l.text; break;
      case LineTag::Removed: out += "- " + l.text; break;
      case LineTag::Modified:
        if (l.before_line) out += "< " + with_highlights(l.text, l.highlights, "[-", "-]");
        else out += "> " + with_highlights(l.text, l.highlights, "{+", "+}");
        break;
      case LineTag::MovedFrom:
        out += "<< " + l.text + "  (moved to line " + std::to_string(*diff.lines[*l.partner].after_line + 1) + ")";
        break;
      case LineTag::MovedTo:
        out += ">> " + l.text + "  (moved from line " + std::to_string(*diff.lines[*l.partner].before_line + 1) + ")";
        break;
    }
    out += '\n';
  }
  return out;
}

}  // namespace codeassist
