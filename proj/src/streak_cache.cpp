#include "codeassist/streak_cache.hpp"

#include <algorithm>
#include <tuple>

#include "codeassist/error.hpp"

namespace codeassist {

CompletionRequest make_request(RequestId id, const DocumentState& doc, Millis issued_at, std::size_t prefix_chars,
                               std::size_t suffix_chars) {
  CompletionRequest request;
  request.request_id = std::move(id);
  request.file_id = doc.file_id;
  request.anchor = doc.cursor;
  request.document = std::make_shared<const Text>(doc.content);
  const std::size_t prefix_begin = doc.cursor > prefix_chars ? doc.cursor - prefix_chars : 0;
  request.prefix_window = doc.content.substr(prefix_begin, doc.cursor - prefix_begin);
  request.suffix_window = doc.content.substr(doc.cursor, suffix_chars);
  request.issued_at = issued_at;
  return request;
}

void StreakCache::insert(StreakEntry entry) {
  const auto pos = std::upper_bound(entries_.begin(), entries_.end(), entry, [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.sequence) < std::tie(b.created_at, b.sequence);
  });
  entries_.insert(pos, std::move(entry));
}

void StreakCache::evict(Millis now, Millis ttl_ms, std::size_t capacity) {
  std::erase_if(entries_, [&](const StreakEntry& e) { return now - e.created_at > ttl_ms; });
  if (entries_.size() > capacity) {
    entries_.erase(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(entries_.size() - capacity));
  }
}

bool adapts(const StreakEntry& entry, const CompletionRequest& request, Text* remainder) {
  if (entry.status != StreakStatus::Completed || entry.predicted_text.empty()) return false;
  const auto& origin = entry.origin_request;
  if (origin.file_id != request.file_id || !origin.document || !request.document) return false;
  if (request.anchor < origin.anchor) return false;

  const std::size_t typed = request.anchor - origin.anchor;
  const Text& prediction = entry.predicted_text;
  if (typed >= prediction.size()) return false;

  const std::u32string_view before = *origin.document;
  const std::u32string_view now = *request.document;
  if (now.size() != before.size() + typed) return false;
  if (now.substr(0, origin.anchor) != before.substr(0, origin.anchor)) return false;
  if (now.substr(origin.anchor, typed) != std::u32string_view(prediction).substr(0, typed)) return false;
  if (now.substr(request.anchor) != before.substr(origin.anchor)) return false;

  if (remainder != nullptr) *remainder = prediction.substr(typed);
  return true;
}

std::optional<Adaptation> try_adapt(const StreakCache& cache, const CompletionRequest& request) {
  // entries() is oldest first, so the first match is the stable choice.
  for (const auto& entry : cache.entries()) {
    Text remainder;
    if (adapts(entry, request, &remainder)) return Adaptation{std::move(remainder), entry.origin_request.request_id};
  }
  return std::nullopt;
}

Scheduler::Scheduler(SchedulerConfig config, DispatchSink sink) : config_(config), sink_(std::move(sink)) {}

Scheduler::Tracked& Scheduler::lookup(const RequestId& id) {
  const auto it = requests_.find(id);
  if (it == requests_.end()) throw Error(ErrorCode::UnknownRequest, id);
  return it->second;
}

bool Scheduler::is_pending(const RequestId& id) const {
  const auto it = requests_.find(id);
  return it != requests_.end() && (it->second.phase == Phase::Queued || it->second.phase == Phase::InFlight);
}

void Scheduler::dispatch(Tracked& tracked) {
  tracked.phase = Phase::InFlight;
  in_flight_.push_back(tracked.request.request_id);
  sink_(tracked.request);
}

SubmitResult Scheduler::submit(CompletionRequest request) {
  if (requests_.contains(request.request_id)) throw Error(ErrorCode::DuplicateRequest, request.request_id);
  const RequestId id = request.request_id;
  auto& tracked = requests_[id];
  tracked.request = std::move(request);
  tracked.sequence = next_sequence_++;

  if (auto adapted = try_adapt(cache_, tracked.request)) {
    tracked.phase = Phase::Done;
    return {SubmitDecision::ServedFromCache, std::move(adapted->text), std::move(adapted->source)};
  }
  if (in_flight_.size() < config_.max_in_flight) {
    dispatch(tracked);
    return {SubmitDecision::Dispatched, {}, {}};
  }
  tracked.phase = Phase::Queued;
  queue_.push_back(id);
  return {SubmitDecision::Enqueued, {}, {}};
}

CancelResult Scheduler::cancel(const RequestId& id) {
  auto& tracked = lookup(id);
  switch (tracked.phase) {
    case Phase::Queued:
      std::erase(queue_, id);
      tracked.phase = Phase::Done;
      return CancelResult::RemovedFromQueue;
    case Phase::InFlight:
      tracked.phase = Phase::InFlightCancelled;
      return CancelResult::CancelledInFlight;
    default:
      return CancelResult::NoOp;
  }
}

void Scheduler::complete_slot(Tracked& tracked, ResponseResult& result) {
  tracked.phase = Phase::Done;
  std::erase(in_flight_, tracked.request.request_id);
  answer_waiting(result);
  while (in_flight_.size() < config_.max_in_flight && !queue_.empty()) {
    const RequestId next = queue_.front();
    queue_.pop_front();
    dispatch(requests_.at(next));
    result.dispatched.push_back(next);
  }
}

void Scheduler::answer_waiting(ResponseResult& result) {
  std::vector<Tracked*> waiting;
  for (const auto& id : queue_) waiting.push_back(&requests_.at(id));
  for (const auto& id : in_flight_) {
    auto& t = requests_.at(id);
    if (t.phase == Phase::InFlight) waiting.push_back(&t);
  }
  std::sort(waiting.begin(), waiting.end(), [](const Tracked* a, const Tracked* b) { return a->sequence < b->sequence; });

  for (Tracked* t : waiting) {
    auto adapted = try_adapt(cache_, t->request);
    if (!adapted) continue;
    if (t->phase == Phase::Queued) {
      std::erase(queue_, t->request.request_id);
      t->phase = Phase::Done;
    } else {
      t->phase = Phase::InFlightAnswered;
    }
    result.deliveries.push_back({t->request.request_id, std::move(adapted->text), ServedFrom::Cache, adapted->source});
  }
}

ResponseResult Scheduler::on_model_response(const RequestId& id, Text predicted_text) {
  auto& tracked = lookup(id);
  if (tracked.phase == Phase::Done) throw Error(ErrorCode::ResponseForCompletedEntry, id);
  if (tracked.phase == Phase::Queued) throw Error(ErrorCode::UnknownRequest, id + " is not in flight");

  ResponseResult result;
  if (tracked.phase == Phase::InFlight) {
    result.deliveries.push_back({id, predicted_text, ServedFrom::Model, id});
  }
  cache_.insert(StreakEntry{tracked.request, std::move(predicted_text), StreakStatus::Completed,
                            tracked.request.issued_at, tracked.sequence});
  complete_slot(tracked, result);
  return result;
}

ResponseResult Scheduler::on_model_failure(const RequestId& id, bool* failed) {
  auto& tracked = lookup(id);
  if (tracked.phase == Phase::Done) throw Error(ErrorCode::ResponseForCompletedEntry, id);
  if (tracked.phase == Phase::Queued) throw Error(ErrorCode::UnknownRequest, id + " is not in flight");
  if (failed != nullptr) *failed = tracked.phase == Phase::InFlight;
  ResponseResult result;
  complete_slot(tracked, result);
  return result;
}

void Scheduler::evict(Millis now) { cache_.evict(now, config_.cache_ttl_ms, config_.cache_capacity); }

}  // namespace codeassist
