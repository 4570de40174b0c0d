#include "codeassist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "codeassist/error.hpp"

namespace codeassist {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct Tally {
  std::size_t typed = 0;
  std::size_t pasted = 0;
  std::size_t qualifying_paste = 0;
  std::size_t accepted_chars = 0;
  std::vector<Millis> latencies;
  FunnelCounts funnel;
};

Tally tally(const SessionEventLog& log) {
  struct Shown {
    Millis ts;
    std::size_t chars;
    bool resolved;
  };
  std::map<RequestId, Shown> shown;
  Tally t;
  for (const auto& event : log) {
    std::visit(Overloaded{
                   [&](const metric::Typed& e) { t.typed += e.chars; },
                   [&](const metric::Pasted& e) {
                     t.pasted += e.chars;
                     if (e.chars < kMaxQualifyingPasteChars && !e.full_file) t.qualifying_paste += e.chars;
                   },
                   [&](const metric::CompletionRequested&) { ++t.funnel.requests; },
                   [&](const metric::SuggestionShown& e) {
                     ++t.funnel.shown;
                     shown[e.id] = {e.ts, e.chars, false};
                   },
                   [&](const metric::SuggestionAccepted& e) {
                     const auto it = shown.find(e.id);
                     if (it == shown.end() || it->second.resolved) return;
                     it->second.resolved = true;
                     ++t.funnel.accepted;
                     t.accepted_chars += it->second.chars;
                   },
                   [&](const metric::SuggestionRejected& e) {
                     const auto it = shown.find(e.id);
                     if (it == shown.end() || it->second.resolved) return;
                     it->second.resolved = true;
                     ++t.funnel.rejected;
                     if (e.ts - it->second.ts >= kMinRejectVisibilityMs) ++t.funnel.rejected_qualifying;
                   },
                   [&](const metric::RequestLatency& e) {
                     t.latencies.push_back(e.ms);
                     if (e.served_from == ServedFrom::Cache) ++t.funnel.served_from_cache;
                     else ++t.funnel.served_from_model;
                   },
                   [&](const metric::RequestCancelled&) { ++t.funnel.cancelled; },
                   [&](const metric::ModelFailed&) { ++t.funnel.failed; },
                   [&](const metric::EmptyPrediction&) { ++t.funnel.empty; },
               },
               event);
  }
  return t;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double fcml(const SessionEventLog& log) {
  const auto t = tally(log);
  return ratio(t.accepted_chars, t.typed + t.qualifying_paste + t.accepted_chars);
}

double fcml_no_paste(const SessionEventLog& log) {
  const auto t = tally(log);
  return ratio(t.accepted_chars, t.typed + t.accepted_chars);
}

double acceptance_rate(const SessionEventLog& log) {
  const auto t = tally(log);
  return ratio(t.funnel.accepted, t.funnel.accepted + t.funnel.rejected_qualifying);
}

Millis nearest_rank(std::vector<Millis> values, double p) {
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::pair<Millis, Millis> latency_percentiles(const SessionEventLog& log) {
  const auto t = tally(log);
  if (t.latencies.empty()) throw Error(ErrorCode::EmptyLog, "no request latency events");
  return {nearest_rank(t.latencies, 50), nearest_rank(t.latencies, 90)};
}

double cache_hit_rate(const SessionEventLog& log) {
  const auto t = tally(log);
  return ratio(t.funnel.served_from_cache, t.latencies.size());
}

double avg_chars_per_accept(const SessionEventLog& log) {
  const auto t = tally(log);
  return ratio(t.accepted_chars, t.funnel.accepted);
}

MetricsReport compute_report(const SessionEventLog& log) {
  const auto t = tally(log);
  MetricsReport r;
  r.typed_chars = t.typed;
  r.pasted_chars = t.pasted;
  r.qualifying_paste_chars = t.qualifying_paste;
  r.accepted_chars = t.accepted_chars;
  r.funnel = t.funnel;

  r.fcml_undefined = t.typed + t.qualifying_paste + t.accepted_chars == 0;
  r.fcml = ratio(t.accepted_chars, t.typed + t.qualifying_paste + t.accepted_chars);
  r.fcml_no_paste = ratio(t.accepted_chars, t.typed + t.accepted_chars);
  r.acceptance_rate_undefined = t.funnel.accepted + t.funnel.rejected_qualifying == 0;
  r.acceptance_rate = ratio(t.funnel.accepted, t.funnel.accepted + t.funnel.rejected_qualifying);
  r.avg_chars_per_accept_undefined = t.funnel.accepted == 0;
  r.avg_chars_per_accept = ratio(t.accepted_chars, t.funnel.accepted);
  r.cache_hit_rate_undefined = t.latencies.empty();
  r.cache_hit_rate = ratio(t.funnel.served_from_cache, t.latencies.size());
  r.latency_undefined = t.latencies.empty();
  if (!t.latencies.empty()) {
    r.latency_p50_ms = nearest_rank(t.latencies, 50);
    r.latency_p90_ms = nearest_rank(t.latencies, 90);
  }
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["fcml"] = r.fcml;
  j["fcml_no_paste"] = r.fcml_no_paste;
  j["acceptance_rate"] = r.acceptance_rate;
  j["avg_chars_per_accept"] = r.avg_chars_per_accept;
  j["latency_p50_ms"] = r.latency_p50_ms;
  j["latency_p90_ms"] = r.latency_p90_ms;
  j["cache_hit_rate"] = r.cache_hit_rate;
  j["undefined"] = {
      {"fcml", r.fcml_undefined},
      {"acceptance_rate", r.acceptance_rate_undefined},
      {"avg_chars_per_accept", r.avg_chars_per_accept_undefined},
      {"latency", r.latency_undefined},
      {"cache_hit_rate", r.cache_hit_rate_undefined},
  };
  j["chars"] = {
      {"typed", r.typed_chars},
      {"pasted", r.pasted_chars},
      {"qualifying_paste", r.qualifying_paste_chars},
      {"accepted", r.accepted_chars},
  };
  j["funnel"] = {
      {"requests", r.funnel.requests},
      {"served_from_cache", r.funnel.served_from_cache},
      {"served_from_model", r.funnel.served_from_model},
      {"empty", r.funnel.empty},
      {"failed", r.funnel.failed},
      {"cancelled", r.funnel.cancelled},
      {"shown", r.funnel.shown},
      {"accepted", r.funnel.accepted},
      {"rejected", r.funnel.rejected},
      {"rejected_qualifying", r.funnel.rejected_qualifying},
  };
  return j.dump();
}

std::string report_to_table(const MetricsReport& r) {
  std::ostringstream out;
  const auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
    return std::string(buf);
  };
  const auto row = [&](const std::string& name, const std::string& value) {
    out << name << std::string(name.size() < 40 ? 40 - name.size() : 1, ' ') << value << '\n';
  };
  char avg[32];
  std::snprintf(avg, sizeof avg, "%.1f", r.avg_chars_per_accept);

  row("Fraction of code written by ML (FCML)", pct(r.fcml));
  row("FCML excluding paste in denominator", pct(r.fcml_no_paste));
  row("Acceptance rate", pct(r.acceptance_rate));
  row("Average characters added per accept", avg);
  row("Cache hit rate", pct(r.cache_hit_rate));
  row("Latency p50 (ms)", std::to_string(r.latency_p50_ms));
  row("Latency p90 (ms)", std::to_string(r.latency_p90_ms));
  out << '\n';
  row("Requests", std::to_string(r.funnel.requests));
  row("  served from cache", std::to_string(r.funnel.served_from_cache));
  row("  served from model", std::to_string(r.funnel.served_from_model));
  row("  empty predictions", std::to_string(r.funnel.empty));
  row("  model failures", std::to_string(r.funnel.failed));
  row("  cancelled", std::to_string(r.funnel.cancelled));
  row("Suggestions shown", std::to_string(r.funnel.shown));
  row("  accepted", std::to_string(r.funnel.accepted));
  row("  rejected", std::to_string(r.funnel.rejected));
  row("  rejected (visible >= 750 ms)", std::to_string(r.funnel.rejected_qualifying));
  return out.str();
}

}  // namespace codeassist
