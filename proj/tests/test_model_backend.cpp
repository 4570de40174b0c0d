#include "doctest.h"
#include "support.hpp"

#include "codeassist/edit_engine.hpp"
#include "codeassist/error.hpp"
#include "codeassist/model_backend.hpp"

using namespace testing;

namespace {

OracleModelConfig oracle(const std::string& truth, std::size_t horizon = 64) {
  OracleModelConfig c;
  c.ground_truth["f"] = T(truth);
  c.horizon_chars = horizon;
  return c;
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

}  // namespace

TEST_CASE("oracle predicts the next characters of the ground truth") {
  OracleModel m(oracle("Build()", 6));
  CHECK(m.predict(request_at("r", "B", 1)) == U"uild()");
  CHECK(m.predict(request_at("r", "B()", 1)) == U"uild()");
  CHECK(m.predict(request_at("r", "Bu", 2)) == U"ild()");
  CHECK(m.predict(request_at("r", "Build()", 7)).empty());
}

TEST_CASE("oracle abstains when the typed text diverges") {
  OracleModel m(oracle("Build()", 6));
  CHECK(m.predict(request_at("r", "Bx", 2)).empty());
  CHECK(m.predict(request_at("r", "B", 1, 0, "unknown")).empty());
}

TEST_CASE("scheduled failures") {
  auto cfg = oracle("Build()");
  cfg.fail_every = 3;
  cfg.latency_ms = 120;
  OracleModel m(cfg);
  const auto req = request_at("r", "B", 1);
  CHECK(m.complete({}, req).latency_ms == 120);
  CHECK(m.complete({}, req).text == U"uild()");
  CHECK(code_of([&] { m.complete({}, req); }) == ErrorCode::ScheduledFailure);
  CHECK_NOTHROW(m.complete({}, req));
  CHECK(m.completion_calls() == 4);
}

TEST_CASE("output is capped at the output token budget") {
  const std::string truth(5000, 'x');
  for (std::size_t horizon : {1u, 100u, 511u, 512u, 513u, 4000u}) {
    OracleModel m(oracle(truth, horizon));
    const auto out = m.predict(request_at("r", "", 0));
    CHECK(default_estimator().estimate(to_utf8(out)) <= kOutputTokenBudget);
    CHECK(out.size() == std::min<std::size_t>(horizon, 512));
  }
  CHECK_THROWS_AS(OracleModel(oracle("x", 0)), Error);
}

TEST_CASE("determinism") {
  OracleModel a(oracle("for i in range(10):\n    print(i)\n", 12));
  OracleModel b(oracle("for i in range(10):\n    print(i)\n", 12));
  const auto req = request_at("r", "for i in", 8);
  const auto ra = a.complete({}, req);
  const auto rb = b.complete({}, req);
  CHECK(ra.text == rb.text);
  CHECK(ra.latency_ms == rb.latency_ms);
}

TEST_CASE("scripted transforms") {
  const std::string before = "abc = 3\nprint(abc)\n";
  const std::string after = "num1 = 3\nprint(num1)\n";
  auto cfg = oracle("");
  cfg.transforms.push_back({"use num1 to 3 instead of abc", after});
  cfg.transforms.push_back({"noop", before});
  OracleModel m(cfg);

  const auto reply = m.transform("f", before, "use num1 to 3 instead of abc");
  CHECK(apply_edit(parse_edit_script(reply.script), before) == after);
  CHECK(code_of([&] { m.transform("f", before, "rename everything"); }) == ErrorCode::UnknownInstruction);
  CHECK(code_of([&] { m.transform("f", before, "noop"); }) == ErrorCode::NoChange);
}
