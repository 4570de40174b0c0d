#include "doctest.h"
#include "support.hpp"

#include <algorithm>

#include "codeassist/error.hpp"
#include "codeassist/metrics.hpp"

using namespace testing;

namespace {

/// Shown at `shown_at` and accepted right away.
void add_accept(SessionEventLog& log, const std::string& id, std::size_t chars, Millis shown_at = 0) {
  log.push_back(metric::SuggestionShown{id, shown_at, chars});
  log.push_back(metric::SuggestionAccepted{id, shown_at + 10});
}

void add_reject(SessionEventLog& log, const std::string& id, Millis visible_ms, Millis shown_at = 0) {
  log.push_back(metric::SuggestionShown{id, shown_at, 5});
  log.push_back(metric::SuggestionRejected{id, shown_at + visible_ms});
}

}  // namespace

TEST_CASE("fcml") {
  SessionEventLog log;
  CHECK(fcml(log) == 0.0);
  CHECK(compute_report(log).fcml_undefined);

  add_accept(log, "s", 287);
  log.push_back(metric::Typed{513});
  log.push_back(metric::Pasted{200, false});
  CHECK(fcml(log) == 0.287);
  CHECK(fcml_no_paste(log) == 287.0 / 800.0);

  SessionEventLog none{metric::Typed{40}};
  CHECK(fcml(none) == 0.0);
  CHECK_FALSE(compute_report(none).fcml_undefined);
}

TEST_CASE("fcml ignores large and full-file pastes") {
  SessionEventLog log;
  add_accept(log, "s", 50);
  log.push_back(metric::Typed{50});
  log.push_back(metric::Pasted{1500, false});
  CHECK(fcml(log) == 0.5);

  log.push_back(metric::Pasted{1000, false});
  log.push_back(metric::Pasted{10, true});
  CHECK(fcml(log) == 0.5);
  log.push_back(metric::Pasted{999, false});
  CHECK(fcml(log) == 50.0 / 1099.0);
}

TEST_CASE("acceptance rate and the visibility rule") {
  SessionEventLog log;
  CHECK(acceptance_rate(log) == 0.0);
  for (int i = 0; i < 9; ++i) add_accept(log, "a" + std::to_string(i), 3);
  for (int i = 0; i < 11; ++i) add_reject(log, "r" + std::to_string(i), 750 + i);
  CHECK(acceptance_rate(log) == 0.45);

  SessionEventLog base;
  add_accept(base, "a", 3);
  add_reject(base, "r0", 1000);
  const double rate = acceptance_rate(base);
  CHECK(rate == 0.5);

  auto brief = base;
  add_reject(brief, "r1", 500);
  CHECK(acceptance_rate(brief) == rate);
  CHECK(compute_report(brief).funnel.rejected == 2);

  auto visible = base;
  add_reject(visible, "r1", 800);
  CHECK(acceptance_rate(visible) == 1.0 / 3.0);

  auto edge = base;
  add_reject(edge, "r1", 749);
  CHECK(acceptance_rate(edge) == rate);
}

TEST_CASE("suggestions resolve once") {
  SessionEventLog log;
  add_accept(log, "s", 10);
  log.push_back(metric::SuggestionAccepted{"s", 50});
  log.push_back(metric::SuggestionRejected{"s", 5000});
  log.push_back(metric::SuggestionAccepted{"never-shown", 60});
  const auto r = compute_report(log);
  CHECK(r.funnel.accepted == 1);
  CHECK(r.funnel.rejected == 0);
  CHECK(r.accepted_chars == 10);
}

TEST_CASE("latency percentiles") {
  SessionEventLog single{metric::RequestLatency{100, ServedFrom::Model}};
  CHECK(latency_percentiles(single) == std::pair<Millis, Millis>{100, 100});

  SessionEventLog ten;
  for (Millis v = 100; v >= 10; v -= 10) ten.push_back(metric::RequestLatency{v, ServedFrom::Model});
  CHECK(latency_percentiles(ten) == std::pair<Millis, Millis>{50, 90});

  CHECK_THROWS_AS(latency_percentiles({}), Error);
  try {
    latency_percentiles({metric::Typed{3}});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyLog);
  }
  const auto r = compute_report({});
  CHECK(r.latency_undefined);
  CHECK(r.latency_p50_ms == 0);

  CHECK(nearest_rank({1, 2, 3, 4}, 50) == 2);
  CHECK(nearest_rank({1, 2, 3, 4}, 51) == 3);
  CHECK(nearest_rank({7}, 1) == 7);
}

TEST_CASE("cache hit rate") {
  SessionEventLog log;
  CHECK(cache_hit_rate(log) == 0.0);
  for (int i = 0; i < 100; ++i) log.push_back(metric::RequestLatency{i, i < 35 ? ServedFrom::Cache : ServedFrom::Model});
  CHECK(cache_hit_rate(log) == 0.35);

  CHECK(cache_hit_rate({metric::RequestLatency{1, ServedFrom::Model}}) == 0.0);
  CHECK(cache_hit_rate({metric::RequestLatency{1, ServedFrom::Cache}}) == 1.0);
}

TEST_CASE("average characters per accept") {
  SessionEventLog log;
  CHECK(compute_report(log).avg_chars_per_accept_undefined);
  add_accept(log, "a", 10);
  add_accept(log, "b", 20);
  CHECK(avg_chars_per_accept(log) == 15.0);
}

TEST_CASE("report formats") {
  SessionEventLog log;
  add_accept(log, "s", 287);
  log.push_back(metric::Typed{513});
  log.push_back(metric::Pasted{200, false});
  log.push_back(metric::RequestLatency{200, ServedFrom::Model});
  const auto r = compute_report(log);
  const std::string json = report_to_json(r);
  CHECK(json.find('\n') == std::string::npos);
  CHECK(json.rfind("{\"fcml\":0.287,\"fcml_no_paste\":", 0) == 0);
  const std::string table = report_to_table(r);
  CHECK(table.find("28.7%") != std::string::npos);
  CHECK(table.find("Latency p50 (ms)") != std::string::npos);
}

namespace {

SessionEventLog random_log(Rng& rng) {
  SessionEventLog log;
  Millis ts = 0;
  for (int i = 0, n = 1 + static_cast<int>(pick(rng, 30)); i < n; ++i) {
    ts += static_cast<Millis>(pick(rng, 500));
    const std::string id = "s" + std::to_string(i);
    switch (pick(rng, 6)) {
      case 0: log.push_back(metric::Typed{pick(rng, 50)}); break;
      case 1: log.push_back(metric::Pasted{pick(rng, 2000), coin(rng, 0.2)}); break;
      case 2:
        log.push_back(metric::CompletionRequested{id, ts});
        log.push_back(metric::RequestLatency{static_cast<Millis>(pick(rng, 400)),
                                             coin(rng) ? ServedFrom::Cache : ServedFrom::Model});
        break;
      case 3:
        log.push_back(metric::CompletionRequested{id, ts});
        log.push_back(metric::SuggestionShown{id, ts, 1 + pick(rng, 40)});
        log.push_back(metric::SuggestionAccepted{id, ts + static_cast<Millis>(pick(rng, 2000))});
        break;
      case 4:
        log.push_back(metric::CompletionRequested{id, ts});
        log.push_back(metric::SuggestionShown{id, ts, 1 + pick(rng, 40)});
        log.push_back(metric::SuggestionRejected{id, ts + static_cast<Millis>(pick(rng, 2000))});
        break;
      default:
        log.push_back(metric::CompletionRequested{id, ts});
        log.push_back(metric::RequestCancelled{id});
        break;
    }
  }
  return log;
}

}  // namespace

TEST_CASE("property: metric invariants on random logs") {
  Rng rng(53);
  for (int trial = 0; trial < 500; ++trial) {
    const auto log = random_log(rng);
    const auto r = compute_report(log);
    CHECK(r.fcml_no_paste >= r.fcml);
    for (double v : {r.fcml, r.fcml_no_paste, r.acceptance_rate, r.cache_hit_rate}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(r.funnel.shown >= r.funnel.accepted + r.funnel.rejected);
    CHECK(r.funnel.requests >= r.funnel.shown);

    // Short-lived rejects do not move the acceptance rate.
    auto with_brief = log;
    add_reject(with_brief, "brief", static_cast<Millis>(pick(rng, 750)), 1000000);
    CHECK(acceptance_rate(with_brief) == r.acceptance_rate);

    // Reordering independent events leaves every metric unchanged: shift the
    // typing and paste events to the front.
    auto reordered = log;
    std::stable_partition(reordered.begin(), reordered.end(), [](const MetricEvent& e) {
      return std::holds_alternative<metric::Typed>(e) || std::holds_alternative<metric::Pasted>(e);
    });
    CHECK(compute_report(reordered) == r);
    CHECK(report_to_json(compute_report(log)) == report_to_json(r));
  }
}
