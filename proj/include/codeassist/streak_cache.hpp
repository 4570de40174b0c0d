#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "codeassist/session.hpp"
#include "codeassist/text.hpp"

namespace codeassist {

using RequestId = std::string;

struct CompletionRequest {
  RequestId request_id;
  FileId file_id;
  /// Cursor offset at request time.
  std::size_t anchor = 0;
  /// Full document content the request was built from. Adaptation compares
  /// against it to prove that nothing outside the typed insertion changed.
  std::shared_ptr<const Text> document;
  Text prefix_window;
  Text suffix_window;
  Millis issued_at = 0;
};

/// Builds a request from the current state of `doc`, with windows bounded to
/// the given number of characters on each side of the cursor.
CompletionRequest make_request(RequestId id, const DocumentState& doc, Millis issued_at, std::size_t prefix_chars,
                               std::size_t suffix_chars);

enum class StreakStatus { InFlight, Completed, Cancelled };

struct StreakEntry {
  CompletionRequest origin_request;
  Text predicted_text;
  StreakStatus status = StreakStatus::InFlight;
  Millis created_at = 0;
  /// Submission order; breaks created_at ties.
  std::uint64_t sequence = 0;
};

struct Adaptation {
  Text text;
  RequestId source;
};

/// Completed streaks for one session, ordered oldest first.
class StreakCache {
 public:
  void insert(StreakEntry entry);
  /// Drops entries older than `ttl_ms`, then the oldest ones beyond `capacity`.
  void evict(Millis now, Millis ttl_ms, std::size_t capacity);

  const std::vector<StreakEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<StreakEntry> entries_;
};

/// Returns the remainder of the oldest completed prediction whose anchor the
/// user has since typed a strict prefix of, with every other character of the
/// document unchanged.
std::optional<Adaptation> try_adapt(const StreakCache& cache, const CompletionRequest& request);

/// True when `entry` adapts `request`; the remainder is written to `remainder`.
bool adapts(const StreakEntry& entry, const CompletionRequest& request, Text* remainder = nullptr);

struct SchedulerConfig {
  std::size_t max_in_flight = 2;
  std::size_t cache_capacity = 16;
  Millis cache_ttl_ms = 30000;
};

enum class SubmitDecision { ServedFromCache, Dispatched, Enqueued };

struct SubmitResult {
  SubmitDecision decision = SubmitDecision::Dispatched;
  /// Adapted suggestion when served from cache.
  Text text;
  RequestId source;
};

enum class CancelResult {
  RemovedFromQueue,
  /// The model call keeps running; its response is cached but not delivered.
  CancelledInFlight,
  /// The request already has its terminal outcome.
  NoOp,
};

enum class ServedFrom { Cache, Model };

struct Delivery {
  RequestId request_id;
  Text text;
  ServedFrom served_from = ServedFrom::Model;
  RequestId source;
};

struct ResponseResult {
  std::vector<Delivery> deliveries;
  std::vector<RequestId> dispatched;
};

/// Per-session request scheduler. Every request ends in exactly one terminal
/// outcome: a cache hit at submit, a Delivery, a cancellation, or a failure.
/// Dispatches go through the sink passed at construction, which must not
/// call back into the scheduler.
class Scheduler {
 public:
  using DispatchSink = std::function<void(const CompletionRequest&)>;

  Scheduler(SchedulerConfig config, DispatchSink sink);

  /// Throws Error{DuplicateRequest} when the id was seen before.
  SubmitResult submit(CompletionRequest request);
  /// Throws Error{UnknownRequest}.
  CancelResult cancel(const RequestId& id);
  /// Throws Error{UnknownRequest} or Error{ResponseForCompletedEntry}.
  ResponseResult on_model_response(const RequestId& id, Text predicted_text);
  /// The model did not answer. The request, unless cancelled or already
  /// answered from cache, fails; the slot is released for the queue head.
  /// `failed` is set when the request's terminal outcome is this failure.
  ResponseResult on_model_failure(const RequestId& id, bool* failed = nullptr);
  void evict(Millis now);

  std::size_t in_flight_count() const noexcept { return in_flight_.size(); }
  std::size_t queue_size() const noexcept { return queue_.size(); }
  const StreakCache& cache() const noexcept { return cache_; }
  const SchedulerConfig& config() const noexcept { return config_; }
  bool is_pending(const RequestId& id) const;

 private:
  enum class Phase {
    Queued,
    InFlight,
    /// In flight, but already answered by adapting another streak.
    InFlightAnswered,
    InFlightCancelled,
    Done,
  };

  struct Tracked {
    CompletionRequest request;
    Phase phase = Phase::Queued;
    std::uint64_t sequence = 0;
  };

  Tracked& lookup(const RequestId& id);
  void dispatch(Tracked& tracked);
  void complete_slot(Tracked& tracked, ResponseResult& result);
  void answer_waiting(ResponseResult& result);

  SchedulerConfig config_;
  DispatchSink sink_;
  std::map<RequestId, Tracked> requests_;
  std::vector<RequestId> in_flight_;
  std::deque<RequestId> queue_;
  StreakCache cache_;
  std::uint64_t next_sequence_ = 0;
};

}  // namespace codeassist
