#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "codeassist/session.hpp"
#include "codeassist/streak_cache.hpp"

namespace codeassist {

/// Pastes at or above this many characters stay out of the FCML denominator.
inline constexpr std::size_t kMaxQualifyingPasteChars = 1000;
/// Rejections count only after the suggestion was visible this long.
inline constexpr Millis kMinRejectVisibilityMs = 750;

namespace metric {

struct Typed {
  std::size_t chars = 0;
};
struct Pasted {
  std::size_t chars = 0;
  bool full_file = false;
};
struct CompletionRequested {
  RequestId id;
  Millis ts = 0;
};
struct SuggestionShown {
  RequestId id;
  Millis ts = 0;
  std::size_t chars = 0;
};
struct SuggestionAccepted {
  RequestId id;
  Millis ts = 0;
};
struct SuggestionRejected {
  RequestId id;
  Millis ts = 0;
};
struct RequestLatency {
  Millis ms = 0;
  ServedFrom served_from = ServedFrom::Model;
};
/// Terminal outcomes that show nothing.
struct RequestCancelled {
  RequestId id;
};
struct ModelFailed {
  RequestId id;
};
struct EmptyPrediction {
  RequestId id;
};

}  // namespace metric

using MetricEvent = std::variant<metric::Typed, metric::Pasted, metric::CompletionRequested, metric::SuggestionShown,
                                 metric::SuggestionAccepted, metric::SuggestionRejected, metric::RequestLatency,
                                 metric::RequestCancelled, metric::ModelFailed, metric::EmptyPrediction>;

using SessionEventLog = std::vector<MetricEvent>;

/// accepted / (typed + qualifying pastes + accepted). Pastes of 1000+
/// characters and full-file pastes do not qualify. 0 on an empty denominator.
double fcml(const SessionEventLog& log);
/// accepted / (typed + accepted).
double fcml_no_paste(const SessionEventLog& log);
/// accepted / (accepted + rejects visible for at least 750 ms).
double acceptance_rate(const SessionEventLog& log);
/// Nearest-rank p50 and p90 of request latencies. Throws Error{EmptyLog}.
std::pair<Millis, Millis> latency_percentiles(const SessionEventLog& log);
/// Nearest-rank percentile of `values` (0 < p <= 100); values must be non-empty.
Millis nearest_rank(std::vector<Millis> values, double p);
double cache_hit_rate(const SessionEventLog& log);
double avg_chars_per_accept(const SessionEventLog& log);

struct FunnelCounts {
  std::size_t requests = 0;
  std::size_t served_from_cache = 0;
  std::size_t served_from_model = 0;
  std::size_t empty = 0;
  std::size_t failed = 0;
  std::size_t cancelled = 0;
  std::size_t shown = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rejected_qualifying = 0;

  bool operator==(const FunnelCounts&) const = default;
};

struct MetricsReport {
  double fcml = 0;
  double fcml_no_paste = 0;
  double acceptance_rate = 0;
  double avg_chars_per_accept = 0;
  Millis latency_p50_ms = 0;
  Millis latency_p90_ms = 0;
  double cache_hit_rate = 0;

  /// Set when the matching metric had a zero denominator and reads 0.
  bool fcml_undefined = false;
  bool acceptance_rate_undefined = false;
  bool avg_chars_per_accept_undefined = false;
  bool latency_undefined = false;
  bool cache_hit_rate_undefined = false;

  std::size_t typed_chars = 0;
  std::size_t pasted_chars = 0;
  std::size_t qualifying_paste_chars = 0;
  std::size_t accepted_chars = 0;
  FunnelCounts funnel;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_report(const SessionEventLog& log);

/// Single-line JSON object with a fixed key order.
std::string report_to_json(const MetricsReport& report);
/// Plain-text table of the headline metrics and funnel counts.
std::string report_to_table(const MetricsReport& report);

}  // namespace codeassist
