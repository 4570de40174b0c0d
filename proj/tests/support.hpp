#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "codeassist/session.hpp"
#include "codeassist/streak_cache.hpp"
#include "codeassist/text.hpp"

namespace testing {

using namespace codeassist;

inline Text T(const std::string& s) { return from_utf8(s); }

inline EditorEvent open(const FileId& f, const std::string& content, Millis ts = 0) {
  return {events::FileOpen{T(content)}, f, ts};
}
inline EditorEvent insert(const FileId& f, const std::string& text, Millis ts = 0) {
  return {events::Insert{T(text)}, f, ts};
}
inline EditorEvent erase(const FileId& f, std::size_t count, Millis ts = 0) { return {events::Delete{count}, f, ts}; }
inline EditorEvent move(const FileId& f, std::size_t offset, Millis ts = 0) {
  return {events::CursorMove{offset}, f, ts};
}
inline EditorEvent paste(const FileId& f, const std::string& text, bool full_file = false, Millis ts = 0) {
  return {events::Paste{T(text), full_file}, f, ts};
}

/// Request for document `content` with the cursor at `cursor`.
inline CompletionRequest request_at(const RequestId& id, const std::string& content, std::size_t cursor,
                                    Millis issued_at = 0, const FileId& file = "f") {
  DocumentState doc{file, T(content), cursor, 1};
  return make_request(id, doc, issued_at, 8000, 2000);
}

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

}  // namespace testing
