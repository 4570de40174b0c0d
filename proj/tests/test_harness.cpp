#include "doctest.h"
#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "codeassist/error.hpp"
#include "codeassist/harness.hpp"

using namespace testing;

namespace {

std::string data_dir() {
  const char* d = std::getenv("CODEASSIST_TEST_DATA");
  return d ? d : "tests/data";
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ProtocolError;
}

const std::string kTruth = "def compute_annual_balance(records):\n    return sum(records)\n";

OracleModelConfig oracle_cfg(Millis latency = 200) {
  OracleModelConfig c;
  c.ground_truth["main.py"] = T(kTruth);
  c.latency_ms = latency;
  return c;
}

/// Collects every terminal outcome per request.
struct Outcomes {
  std::map<RequestId, std::vector<CompletionOutcome>> by_id;
  Engine::OutcomeListener listener() {
    return [this](const CompletionOutcome& o) { by_id[o.request_id].push_back(o); };
  }
};

}  // namespace

TEST_CASE("virtual clock fires timers in due order, then scheduling order") {
  VirtualClock clock;
  std::vector<int> fired;
  clock.schedule(20, [&] { fired.push_back(2); });
  clock.schedule(10, [&] { fired.push_back(1); });
  clock.schedule(20, [&] { fired.push_back(3); });
  clock.advance_to(15);
  CHECK(fired == std::vector<int>{1});
  CHECK(clock.now() == 15);
  clock.advance_to(5);  // never moves backwards
  CHECK(clock.now() == 15);
  clock.schedule(clock.now(), [&] {
    fired.push_back(4);
    clock.schedule(100, [&] { fired.push_back(5); });
  });
  clock.run_until_idle();
  CHECK(fired == std::vector<int>{1, 4, 2, 3, 5});
  CHECK(clock.pending() == 0);
}

TEST_CASE("engine: model response becomes a shown suggestion that can be accepted") {
  OracleModel model(oracle_cfg());
  Outcomes out;
  Engine e({}, model, out.listener());
  e.apply_event(open("main.py", "", 0));
  e.apply_event(insert("main.py", "def ", 0));
  CHECK(e.request_completion("r1") == SubmitDecision::Dispatched);
  e.advance_to(199);
  CHECK(out.by_id.empty());
  e.advance_to(200);
  REQUIRE(out.by_id["r1"].size() == 1);
  const auto& o = out.by_id["r1"][0];
  CHECK(o.kind == OutcomeKind::Suggestion);
  CHECK(o.served_from == ServedFrom::Model);
  CHECK(o.latency_ms == 200);
  CHECK(o.text == T(kTruth.substr(4, 64)));

  CHECK_FALSE(e.accept(std::string("other")));
  CHECK(e.accept());
  CHECK(e.session().document("main.py").content == T(kTruth));
  const auto r = e.report();
  CHECK(r.typed_chars == 4);
  const double accepted = static_cast<double>(o.text.size());
  CHECK(r.accepted_chars == o.text.size());
  CHECK(r.fcml == accepted / (accepted + 4));
  CHECK(r.funnel.accepted == 1);
}

TEST_CASE("engine: forward typing is served from cache after the first response") {
  OracleModel model(oracle_cfg());
  Outcomes out;
  Engine e({}, model, out.listener());
  e.apply_event(open("main.py", "", 0));
  e.request_completion("k0");
  for (std::size_t i = 1; i <= 30; ++i) {
    const Millis ts = static_cast<Millis>(50 * i);
    e.advance_to(ts);
    e.apply_event(insert("main.py", kTruth.substr(i - 1, 1), ts));
    e.request_completion("k" + std::to_string(i));
  }
  e.drain();
  CHECK(model.completion_calls() == 2);
  for (std::size_t i = 0; i <= 30; ++i) {
    const auto& v = out.by_id["k" + std::to_string(i)];
    REQUIRE(v.size() == 1);
    if (i < 3) CHECK(v[0].kind == OutcomeKind::Cancelled);
    else CHECK(v[0].served_from == ServedFrom::Cache);
  }
  CHECK(e.report().cache_hit_rate == 1.0);
}

TEST_CASE("engine: cancelled requests never show a suggestion") {
  OracleModel model(oracle_cfg());
  Outcomes out;
  EngineConfig cfg;
  cfg.supersede_pending = false;
  Engine e(cfg, model, out.listener());
  e.apply_event(open("main.py", "d", 0));
  e.apply_event(move("main.py", 1, 0));
  e.request_completion("a");
  CHECK(e.cancel("a") == CancelResult::CancelledInFlight);
  e.drain();
  REQUIRE(out.by_id["a"].size() == 1);
  CHECK(out.by_id["a"][0].kind == OutcomeKind::Cancelled);
  CHECK_FALSE(e.accept());
  CHECK(e.scheduler().cache().size() == 1);
  CHECK(e.report().funnel.shown == 0);
}

TEST_CASE("engine: saturated scheduler defers, never drops") {
  OracleModel model(oracle_cfg());
  Outcomes out;
  EngineConfig cfg;
  cfg.supersede_pending = false;
  Engine e(cfg, model, out.listener());
  e.apply_event(open("main.py", "xyz", 0));
  e.apply_event(move("main.py", 1, 0));
  CHECK(e.request_completion("a") == SubmitDecision::Dispatched);
  e.apply_event(move("main.py", 2, 0));
  CHECK(e.request_completion("b") == SubmitDecision::Dispatched);
  e.apply_event(move("main.py", 3, 0));
  CHECK(e.request_completion("c") == SubmitDecision::Enqueued);
  e.drain();
  for (const std::string id : {"a", "b", "c"}) {
    REQUIRE(out.by_id[id].size() == 1);
    CHECK(out.by_id[id][0].kind == OutcomeKind::Empty);  // "xyz" diverges from the truth
  }
  CHECK(out.by_id["c"][0].latency_ms == 400);
}

TEST_CASE("engine: failures and empty predictions are terminal outcomes") {
  auto cfg = oracle_cfg();
  cfg.fail_every = 2;
  OracleModel model(cfg);
  Outcomes out;
  EngineConfig ecfg;
  ecfg.supersede_pending = false;
  Engine e(ecfg, model, out.listener());
  e.apply_event(open("main.py", "zzz", 0));
  e.apply_event(move("main.py", 3, 0));
  e.request_completion("a");
  e.apply_event(move("main.py", 2, 0));
  e.request_completion("b");
  e.drain();
  CHECK(out.by_id["a"][0].kind == OutcomeKind::Empty);
  CHECK(out.by_id["b"][0].kind == OutcomeKind::Failed);
  const auto r = e.report();
  CHECK(r.funnel.failed == 1);
  CHECK(r.funnel.empty == 1);
  CHECK(r.funnel.requests == 2);
}

TEST_CASE("engine: edits hide the suggestion; rejects are timed") {
  OracleModel model(oracle_cfg(100));
  Engine e({}, model);
  e.apply_event(open("main.py", "", 0));
  e.request_completion("a");
  e.advance_to(100);
  e.advance_to(1000);
  CHECK(e.reject());
  CHECK_FALSE(e.reject());

  e.request_completion("b");  // served from a's streak at once
  e.advance_to(1200);
  CHECK(e.reject(std::string("b")));
  auto r = e.report();
  CHECK(r.funnel.rejected == 2);
  CHECK(r.funnel.rejected_qualifying == 1);
  CHECK(r.acceptance_rate == 0.0);

  e.request_completion("c");
  e.apply_event(insert("main.py", "q", 1300));
  CHECK_FALSE(e.accept());
}

TEST_CASE("engine: transform") {
  auto cfg = oracle_cfg();
  cfg.transforms.push_back({"rename", "x = 1\n"});
  OracleModel model(cfg);
  Engine e({}, model);
  e.apply_event(open("main.py", "y = 1\n", 0));
  const auto t = e.transform("main.py", "rename");
  CHECK(t.content == "x = 1\n");
  CHECK(t.diff.decorated_count() == 2);
  CHECK(e.session().document("main.py").content == U"y = 1\n");
  CHECK(code_of([&] { e.transform("main.py", "other"); }) == ErrorCode::UnknownInstruction);
}

TEST_CASE("trace parsing") {
  std::istringstream ok("# comment\n\n{\"ts\":0,\"kind\":\"file_open\",\"file\":\"a\",\"content\":\"x\"}\n"
                        "{\"ts\":5,\"kind\":\"insert\",\"file\":\"a\",\"text\":\"y\"}\n");
  const auto trace = parse_trace(ok);
  REQUIRE(trace.size() == 2);
  CHECK(trace[1].ts == 5);
  CHECK(trace[1].payload.at("text") == "y");

  const auto bad = [](const std::string& s) {
    std::istringstream in(s);
    return code_of([&] { parse_trace(in); });
  };
  CHECK(bad("{nope") == ErrorCode::TraceParseError);
  CHECK(bad("{\"kind\":\"insert\",\"file\":\"a\",\"text\":\"y\"}") == ErrorCode::TraceParseError);
  CHECK(bad("{\"ts\":1,\"kind\":\"teleport\",\"file\":\"a\"}") == ErrorCode::TraceParseError);
  CHECK(bad("{\"ts\":1,\"kind\":\"insert\",\"file\":\"a\"}") == ErrorCode::TraceParseError);
  CHECK(bad("{\"ts\":1,\"kind\":\"delete\",\"file\":\"a\",\"count\":-1}") == ErrorCode::TraceParseError);
  CHECK(bad("{\"ts\":5,\"kind\":\"file_open\",\"file\":\"a\",\"content\":\"\"}\n"
            "{\"ts\":4,\"kind\":\"file_close\",\"file\":\"a\"}") == ErrorCode::TraceParseError);
  CHECK(code_of([] { load_trace("/nonexistent/trace.jsonl"); }) == ErrorCode::TraceParseError);
}

TEST_CASE("config parsing") {
  const auto cfg = parse_config(nlohmann::json::parse(R"({
    "scheduler": {"max_in_flight": 3, "cache_capacity": 4, "cache_ttl_ms": 100},
    "packer": {"window_lines": 20, "stride_lines": 5},
    "budget": {"input_tokens": 4096},
    "session": {"edit_capacity": 8, "supersede_pending": false},
    "backend": {"kind": "oracle", "oracle": {"horizon_chars": 10, "latency_ms": 50, "fail_every": 7,
                "ground_truth": {"a.py": "print(1)\n"},
                "transforms": [{"instruction": "i", "after": "x\n"}]}}
  })"));
  CHECK(cfg.engine.scheduler.max_in_flight == 3);
  CHECK(cfg.engine.scheduler.cache_capacity == 4);
  CHECK(cfg.engine.scheduler.cache_ttl_ms == 100);
  CHECK(cfg.engine.packer.window_lines == 20);
  CHECK(cfg.engine.input_token_budget == 4096);
  CHECK(cfg.engine.edit_capacity == 8);
  CHECK_FALSE(cfg.engine.supersede_pending);
  CHECK(cfg.oracle.horizon_chars == 10);
  CHECK(cfg.oracle.fail_every == 7);
  CHECK(cfg.oracle.ground_truth.at("a.py") == U"print(1)\n");
  REQUIRE(cfg.oracle.transforms.size() == 1);

  const auto err = [](const std::string& s) { return code_of([&] { parse_config(nlohmann::json::parse(s)); }); };
  CHECK(err(R"({"bogus": 1})") == ErrorCode::ConfigError);
  CHECK(err(R"({"scheduler": {"max_inflight": 2}})") == ErrorCode::ConfigError);
  CHECK(err(R"({"scheduler": {"max_in_flight": "two"}})") == ErrorCode::ConfigError);
  CHECK(err(R"({"backend": {"kind": "remote"}})") == ErrorCode::ConfigError);
  CHECK(err(R"({"backend": {"oracle": {"horizon_chars": 0}}})") == ErrorCode::ConfigError);
  CHECK(err(R"([1, 2])") == ErrorCode::ConfigError);

  const auto from_file = load_config(data_dir() + "/forward_typing.json");
  CHECK(from_file.oracle.latency_ms == 200);
  CHECK(code_of([] { load_config("/nonexistent.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("ground truth may come from a file relative to the config") {
  const auto cfg = parse_config(nlohmann::json::parse(R"({"backend": {"oracle": {"ground_truth":
                                  {"t.py": {"path": "num1_after.py"}}}}})"),
                                data_dir());
  CHECK(to_utf8(cfg.oracle.ground_truth.at("t.py")).rfind("def total", 0) == 0);
}

TEST_CASE("replay: empty trace yields an all-zero report") {
  OracleModel model(oracle_cfg());
  const auto r = replay(std::vector<TraceEvent>{}, EngineConfig{}, model);
  CHECK(r.fcml == 0.0);
  CHECK(r.acceptance_rate == 0.0);
  CHECK(r.cache_hit_rate == 0.0);
  CHECK(r.latency_p50_ms == 0);
  CHECK(r.funnel == FunnelCounts{});
  CHECK(r.fcml_undefined);
  CHECK(r.latency_undefined);
}

TEST_CASE("replay: the forward-typing fixture") {
  const auto cfg = load_config(data_dir() + "/forward_typing.json");
  const auto r1 = replay(data_dir() + "/forward_typing.jsonl", cfg);
  const auto r2 = replay(data_dir() + "/forward_typing.jsonl", cfg);
  CHECK(report_to_json(r1) == report_to_json(r2));
  CHECK(r1.cache_hit_rate >= 0.35);
  CHECK(r1.funnel.requests == 38);
  CHECK(r1.funnel.cancelled == 3);
  CHECK(r1.funnel.accepted == 1);
  CHECK(r1.typed_chars == 37);
}
