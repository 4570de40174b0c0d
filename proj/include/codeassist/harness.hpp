#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeassist/context_packer.hpp"
#include "codeassist/edit_engine.hpp"
#include "codeassist/metrics.hpp"
#include "codeassist/model_backend.hpp"
#include "codeassist/session.hpp"
#include "codeassist/streak_cache.hpp"

namespace codeassist {

/// Timers fire in (due, scheduling order). Time never moves backwards.
class VirtualClock {
 public:
  using Callback = std::function<void()>;

  Millis now() const noexcept { return now_; }
  void schedule(Millis due, Callback callback);
  /// Fires every timer due at or before `t`, then sets now() to `t`.
  void advance_to(Millis t);
  /// Fires every pending timer, including ones scheduled while draining.
  void run_until_idle();
  std::size_t pending() const noexcept { return timers_.size(); }

 private:
  struct Timer {
    Millis due;
    std::uint64_t seq;
    Callback callback;
  };
  struct Later {
    bool operator()(const Timer& a, const Timer& b) const { return a.due != b.due ? a.due > b.due : a.seq > b.seq; }
  };
  bool fire_next(Millis limit);

  Millis now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Timer, std::vector<Timer>, Later> timers_;
};

struct EngineConfig {
  SchedulerConfig scheduler;
  PackerConfig packer;
  std::size_t prefix_window_chars = 8000;
  std::size_t suffix_window_chars = 2000;
  std::size_t input_token_budget = kInputTokenBudget;
  std::size_t edit_capacity = Session::kDefaultEditCapacity;
  /// Cancel a session's unanswered requests when it issues a new one.
  bool supersede_pending = true;
};

struct ServiceConfig {
  EngineConfig engine;
  std::string backend = "oracle";
  OracleModelConfig oracle;
};

/// Parses the JSON config document. Relative file paths resolve against
/// `base_dir`. Throws Error{ConfigError}.
ServiceConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& path);

std::unique_ptr<ModelBackend> make_backend(const ServiceConfig& config);

enum class OutcomeKind { Suggestion, Empty, Cancelled, Failed };

std::string_view to_string(OutcomeKind kind) noexcept;

/// The single terminal outcome of one completion request.
struct CompletionOutcome {
  RequestId request_id;
  OutcomeKind kind = OutcomeKind::Suggestion;
  Text text;
  std::optional<ServedFrom> served_from;
  Millis latency_ms = 0;
  Millis ts = 0;
};

struct TransformResult {
  std::string script;
  std::string content;
  RenderedDiff diff;
};

/// One session wired end to end: editor events into the Session, completion
/// requests through the Scheduler, prompts from the context packer, model
/// calls on the virtual clock, and every user-visible step into the metrics
/// log. Not thread-safe; callers serialize access.
class Engine {
 public:
  using OutcomeListener = std::function<void(const CompletionOutcome&)>;

  Engine(EngineConfig config, ModelBackend& backend, OutcomeListener listener = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Fires model replies due by `t`.
  void advance_to(Millis t);
  void drain();
  Millis now() const noexcept { return clock_.now(); }

  void apply_event(const EditorEvent& event);
  /// Completion at the cursor of `file` (the focused file when empty).
  SubmitDecision request_completion(const RequestId& id, const FileId& file = {});
  CancelResult cancel(const RequestId& id);
  /// Acts on the displayed suggestion; false when nothing is displayed or
  /// `id` names a different one.
  bool accept(const std::optional<RequestId>& id = std::nullopt);
  bool reject(const std::optional<RequestId>& id = std::nullopt);
  TransformResult transform(const FileId& file, const std::string& instruction);

  const Session& session() const noexcept { return session_; }
  const Scheduler& scheduler() const noexcept { return scheduler_; }
  const SessionEventLog& log() const noexcept { return log_; }
  MetricsReport report() const { return compute_report(log_); }
  std::uint64_t next_auto_id() { return auto_id_++; }

 private:
  struct Displayed {
    RequestId id;
    Text text;
    FileId file;
  };

  void dispatch(const CompletionRequest& request);
  void handle(const ResponseResult& result);
  void emit(CompletionOutcome outcome);
  void pump() { clock_.advance_to(clock_.now()); }

  EngineConfig config_;
  ModelBackend& backend_;
  OutcomeListener listener_;
  Session session_;
  Scheduler scheduler_;
  VirtualClock clock_;
  SessionEventLog log_;
  std::map<RequestId, CompletionRequest> open_requests_;
  /// Requests still waiting for their terminal outcome.
  std::set<RequestId> unresolved_;
  std::optional<Displayed> displayed_;
  std::uint64_t auto_id_ = 1;
};

/// One line of a replay trace.
struct TraceEvent {
  Millis ts = 0;
  std::string kind;
  FileId file;
  nlohmann::json payload;
};

/// Line-delimited JSON, one object per line with "ts" and "kind". Blank
/// lines and lines starting with '#' are skipped. Throws
/// Error{TraceParseError}, including for decreasing timestamps.
std::vector<TraceEvent> parse_trace(std::istream& in);
std::vector<TraceEvent> load_trace(const std::filesystem::path& path);

/// Replays through a fresh Engine and drains outstanding model calls.
MetricsReport replay(const std::vector<TraceEvent>& trace, const EngineConfig& config, ModelBackend& backend);
MetricsReport replay(const std::filesystem::path& trace_file, const ServiceConfig& config);

/// Applies one trace event to `engine` after advancing its clock.
void apply_trace_event(Engine& engine, const TraceEvent& event);

}  // namespace codeassist
