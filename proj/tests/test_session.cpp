#include "doctest.h"
#include "support.hpp"

#include "codeassist/error.hpp"

using namespace testing;

namespace {

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

TEST_CASE("insert at the end of a file records one edit") {
  Session s;
  s.apply_event(open("a", "ab"));
  s.apply_event(move("a", 2));
  s.apply_event(insert("a", "c", 5));
  const auto& doc = s.document("a");
  CHECK(doc.content == U"abc");
  CHECK(doc.cursor == 3);
  const auto edits = s.recent_edits();
  REQUIRE(edits.size() == 1);
  CHECK(edits[0] == EditRecord{"a", {2, 3}, 5});
}

TEST_CASE("adjacent inserts coalesce") {
  Session s;
  s.apply_event(open("a", ""));
  s.apply_event(insert("a", "x", 1));
  s.apply_event(insert("a", "y", 2));
  const auto edits = s.recent_edits();
  REQUIRE(edits.size() == 1);
  CHECK(edits[0].range == CharRange{0, 2});
  CHECK(edits[0].last_touched == 2);
}

TEST_CASE("bounds and unknown files") {
  Session s;
  s.apply_event(open("a", "abc"));
  s.apply_event(move("a", 3));
  CHECK(code_of([&] { s.apply_event(erase("a", 5)); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.apply_event(move("a", 4)); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { s.apply_event(insert("b", "x")); }) == ErrorCode::UnknownFile);
  // Failed events change nothing.
  CHECK(s.document("a").content == U"abc");
  CHECK(s.recent_edits().empty());
  s.apply_event({events::FileClose{}, "a", 1});
  CHECK(code_of([&] { s.apply_event(insert("a", "x")); }) == ErrorCode::UnknownFile);
}

TEST_CASE("delete removes characters before the cursor") {
  Session s;
  s.apply_event(open("a", "hello"));
  s.apply_event(move("a", 3));
  s.apply_event(erase("a", 2, 4));
  CHECK(s.document("a").content == U"hlo");
  CHECK(s.document("a").cursor == 1);
  REQUIRE(s.recent_edits().size() == 1);
  CHECK(s.recent_edits()[0].range == CharRange{1, 1});
}

TEST_CASE("recent edits are ordered by recency, ties by file") {
  Session s;
  CHECK(s.recent_edits().empty());
  s.apply_event(open("a", ""));
  s.apply_event(open("b", ""));
  s.apply_event(insert("a", "1", 10));
  s.apply_event(insert("b", "2", 20));
  auto edits = s.recent_edits();
  REQUIRE(edits.size() == 2);
  CHECK(edits[0].file_id == "b");
  CHECK(edits[1].file_id == "a");

  Session t;
  t.apply_event(open("b", ""));
  t.apply_event(open("a", ""));
  t.apply_event(insert("b", "x", 7));
  t.apply_event(insert("a", "y", 7));
  edits = t.recent_edits();
  REQUIRE(edits.size() == 2);
  CHECK(edits[0].file_id == "a");
  CHECK(edits[1].file_id == "b");
}

TEST_CASE("versions increase and closing drops records") {
  Session s;
  s.apply_event(open("a", "x"));
  const auto v0 = s.document("a").version;
  s.apply_event(insert("a", "y"));
  CHECK(s.document("a").version > v0);
  s.apply_event({events::FileClose{}, "a", 1});
  CHECK_FALSE(s.is_open("a"));
  CHECK(s.recent_edits().empty());
}

TEST_CASE("later edits shift earlier records") {
  Session s;
  s.apply_event(open("a", "0123456789"));
  s.apply_event(move("a", 8));
  s.apply_event(insert("a", "X", 1));  // record [8, 9)
  s.apply_event(move("a", 2));
  s.apply_event(insert("a", "YY", 2));  // record [2, 4); the first shifts to [10, 11)
  const auto edits = s.recent_edits();
  REQUIRE(edits.size() == 2);
  CHECK(edits[0].range == CharRange{2, 4});
  CHECK(edits[1].range == CharRange{10, 11});
  CHECK(s.document("a").content.substr(10, 1) == U"X");
}

TEST_CASE("edit history keeps the most recent records") {
  Session s(3);
  s.apply_event(open("a", std::string(100, '.')));
  for (int i = 0; i < 5; ++i) {
    s.apply_event(move("a", static_cast<std::size_t>(i * 10)));
    s.apply_event(insert("a", "x", i + 1));
  }
  const auto edits = s.recent_edits();
  REQUIRE(edits.size() == 3);
  CHECK(edits[0].last_touched == 5);
  CHECK(edits[2].last_touched == 3);
}

namespace {

std::vector<EditorEvent> random_events(Rng& rng, std::size_t n) {
  std::vector<EditorEvent> out{open("a", "seed text\nline two"), open("b", "")};
  std::size_t len_a = 18, len_b = 0, cur_a = 0, cur_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool on_a = coin(rng);
    const FileId f = on_a ? "a" : "b";
    std::size_t& len = on_a ? len_a : len_b;
    std::size_t& cur = on_a ? cur_a : cur_b;
    const Millis ts = static_cast<Millis>(i + 1);
    switch (pick(rng, 4)) {
      case 0: {
        const std::string text(1 + pick(rng, 3), static_cast<char>('a' + pick(rng, 26)));
        out.push_back(insert(f, text, ts));
        len += text.size();
        cur += text.size();
        break;
      }
      case 1: {
        const std::size_t count = cur == 0 ? 0 : pick(rng, std::min<std::size_t>(cur, 3) + 1);
        out.push_back(erase(f, count, ts));
        len -= count;
        cur -= count;
        break;
      }
      case 2:
        cur = pick(rng, len + 1);
        out.push_back(move(f, cur, ts));
        break;
      default: {
        const std::string text = "p\nq";
        out.push_back(paste(f, text, false, ts));
        len += 3;
        cur += 3;
        break;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("property: determinism, disjoint records, length accounting") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto evs = random_events(rng, 60);
    Session s1, s2;
    std::size_t expected_a = 18, expected_b = 0;
    for (const auto& e : evs) {
      s1.apply_event(e);
      s2.apply_event(e);
      if (e.file_id == "a" || e.file_id == "b") {
        std::size_t& expected = e.file_id == "a" ? expected_a : expected_b;
        if (auto* ins = std::get_if<events::Insert>(&e.kind)) expected += ins->text.size();
        if (auto* p = std::get_if<events::Paste>(&e.kind)) expected += p->text.size();
        if (auto* d = std::get_if<events::Delete>(&e.kind)) expected -= d->count;
      }
    }
    CHECK(s1.document("a").content == s2.document("a").content);
    CHECK(s1.document("b").content == s2.document("b").content);
    CHECK(s1.recent_edits() == s2.recent_edits());
    CHECK(s1.document("a").content.size() == expected_a);
    CHECK(s1.document("b").content.size() == expected_b);

    const auto edits = s1.recent_edits();
    for (std::size_t i = 0; i < edits.size(); ++i) {
      const auto& doc = s1.document(edits[i].file_id);
      CHECK(edits[i].range.end <= doc.content.size());
      for (std::size_t j = i + 1; j < edits.size(); ++j) {
        if (edits[i].file_id != edits[j].file_id) continue;
        CHECK_FALSE(edits[i].range.touches(edits[j].range));
      }
    }
  }
}
