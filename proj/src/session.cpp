#include "codeassist/session.hpp"

#include <algorithm>
#include <tuple>

#include "codeassist/error.hpp"

namespace codeassist {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool recency_order(const EditRecord& a, const EditRecord& b) {
  return std::tie(b.last_touched, a.file_id, a.range.begin) < std::tie(a.last_touched, b.file_id, b.range.begin);
}

}  // namespace

const DocumentState& Session::document(const FileId& file) const {
  const auto* doc = find_document(file);
  if (doc == nullptr) throw Error(ErrorCode::UnknownFile, file);
  return *doc;
}

const DocumentState* Session::find_document(const FileId& file) const {
  const auto it = documents_.find(file);
  return it == documents_.end() ? nullptr : &it->second;
}

void Session::apply_event(const EditorEvent& event) {
  if (std::holds_alternative<events::FileOpen>(event.kind)) {
    auto& doc = documents_[event.file_id];
    doc.file_id = event.file_id;
    doc.content = std::get<events::FileOpen>(event.kind).content;
    doc.cursor = 0;
    doc.version = next_version_++;
    std::erase_if(edits_, [&](const EditRecord& r) { return r.file_id == event.file_id; });
    focused_ = event.file_id;
    last_event_time_ = event.timestamp;
    return;
  }

  const auto it = documents_.find(event.file_id);
  if (it == documents_.end()) throw Error(ErrorCode::UnknownFile, event.file_id);
  DocumentState& doc = it->second;

  std::visit(Overloaded{
                 [&](const events::Insert& e) {
                   doc.content.insert(doc.cursor, e.text);
                   record_edit(doc.file_id, doc.cursor, e.text.size(), 0, event.timestamp);
                   doc.cursor += e.text.size();
                 },
                 [&](const events::Paste& e) {
                   doc.content.insert(doc.cursor, e.text);
                   record_edit(doc.file_id, doc.cursor, e.text.size(), 0, event.timestamp);
                   doc.cursor += e.text.size();
                 },
                 [&](const events::Delete& e) {
                   if (e.count > doc.cursor) {
                     throw Error(ErrorCode::OutOfBounds, "delete of " + std::to_string(e.count) +
                                                             " characters before offset " + std::to_string(doc.cursor));
                   }
                   const std::size_t at = doc.cursor - e.count;
                   doc.content.erase(at, e.count);
                   record_edit(doc.file_id, at, 0, e.count, event.timestamp);
                   doc.cursor = at;
                 },
                 [&](const events::CursorMove& e) {
                   if (e.offset > doc.content.size()) {
                     throw Error(ErrorCode::OutOfBounds, "cursor offset " + std::to_string(e.offset) +
                                                             " beyond length " + std::to_string(doc.content.size()));
                   }
                   doc.cursor = e.offset;
                 },
                 [&](const events::FileClose&) {},
                 [&](const events::FileOpen&) {},
             },
             event.kind);

  last_event_time_ = event.timestamp;
  if (std::holds_alternative<events::FileClose>(event.kind)) {
    std::erase_if(edits_, [&](const EditRecord& r) { return r.file_id == event.file_id; });
    documents_.erase(it);
    if (focused_ == event.file_id) focused_.reset();
    return;
  }
  doc.version = next_version_++;
  focused_ = event.file_id;
}

void Session::record_edit(const FileId& file, std::size_t at, std::size_t inserted, std::size_t removed, Millis ts) {
  const auto shift = [&](std::size_t pos) {
    if (pos > at + removed) pos -= removed;
    else if (pos > at) pos = at;
    if (pos > at) pos += inserted;
    return pos;
  };

  EditRecord merged{file, {at, at + inserted}, ts};
  std::vector<EditRecord> kept;
  kept.reserve(edits_.size() + 1);
  for (auto record : edits_) {
    if (record.file_id == file) {
      record.range = {shift(record.range.begin), shift(record.range.end)};
      if (record.range.touches(merged.range)) {
        merged.range = {std::min(merged.range.begin, record.range.begin), std::max(merged.range.end, record.range.end)};
        merged.last_touched = std::max(merged.last_touched, record.last_touched);
        continue;
      }
    }
    kept.push_back(std::move(record));
  }
  kept.push_back(std::move(merged));

  if (kept.size() > edit_capacity_) {
    std::sort(kept.begin(), kept.end(), recency_order);
    kept.resize(edit_capacity_);
  }
  edits_ = std::move(kept);
}

std::vector<EditRecord> Session::recent_edits() const {
  auto out = edits_;
  std::sort(out.begin(), out.end(), recency_order);
  return out;
}

}  // namespace codeassist
