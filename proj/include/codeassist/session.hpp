#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "codeassist/text.hpp"

namespace codeassist {

using FileId = std::string;

/// Milliseconds since session start (virtual or wall clock).
using Millis = std::int64_t;

/// Half-open span of character positions.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool touches(const CharRange& o) const noexcept { return begin <= o.end && o.begin <= end; }
  bool overlaps(const CharRange& o) const noexcept { return begin < o.end && o.begin < end; }
  bool operator==(const CharRange&) const = default;
};

struct DocumentState {
  FileId file_id;
  Text content;
  std::size_t cursor = 0;
  std::uint64_t version = 0;
};

namespace events {

struct Insert {
  Text text;
};
/// Backspace semantics: removes `count` characters before the cursor.
struct Delete {
  std::size_t count = 0;
};
struct CursorMove {
  std::size_t offset = 0;
};
struct Paste {
  Text text;
  bool full_file = false;
};
struct FileOpen {
  Text content;
};
struct FileClose {};

}  // namespace events

using EventKind =
    std::variant<events::Insert, events::Delete, events::CursorMove, events::Paste, events::FileOpen, events::FileClose>;

struct EditorEvent {
  EventKind kind;
  FileId file_id;
  Millis timestamp = 0;
};

struct EditRecord {
  FileId file_id;
  CharRange range;
  Millis last_touched = 0;

  bool operator==(const EditRecord&) const = default;
};

/// Per-connection editing state: every open document, the focused file that
/// carries the cursor, and the coalesced recent-edit history.
class Session {
 public:
  static constexpr std::size_t kDefaultEditCapacity = 32;

  explicit Session(std::size_t edit_capacity = kDefaultEditCapacity) : edit_capacity_(edit_capacity) {}

  /// Throws Error{UnknownFile} for events on files that are not open and
  /// Error{OutOfBounds} for deletes or cursor moves past the content. A
  /// failed event leaves the session unchanged.
  void apply_event(const EditorEvent& event);

  /// Ordered by last_touched descending, then file_id, then range start.
  std::vector<EditRecord> recent_edits() const;

  const DocumentState& document(const FileId& file) const;
  const DocumentState* find_document(const FileId& file) const;
  bool is_open(const FileId& file) const { return documents_.contains(file); }

  /// Open files in file_id order.
  const std::map<FileId, DocumentState>& documents() const noexcept { return documents_; }

  std::optional<FileId> focused_file() const { return focused_; }
  Millis last_event_time() const noexcept { return last_event_time_; }

 private:
  void record_edit(const FileId& file, std::size_t at, std::size_t inserted, std::size_t removed, Millis ts);

  std::size_t edit_capacity_;
  std::map<FileId, DocumentState> documents_;
  std::vector<EditRecord> edits_;
  std::optional<FileId> focused_;
  Millis last_event_time_ = 0;
  std::uint64_t next_version_ = 1;
};

}  // namespace codeassist
