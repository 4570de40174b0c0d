#include "codeassist/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <iostream>
#include <thread>

#include "codeassist/error.hpp"

namespace codeassist {

using nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& what) { throw Error(ErrorCode::ProtocolError, what); }

const json& field(const json& msg, const char* key) {
  if (!msg.contains(key)) protocol_error(std::string("missing '") + key + "'");
  return msg.at(key);
}

std::string string_field(const json& msg, const char* key) {
  const auto& v = field(msg, key);
  if (!v.is_string()) protocol_error(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t count_field(const json& msg, const char* key) {
  const auto& v = field(msg, key);
  if (!v.is_number_unsigned()) protocol_error(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::optional<std::string> optional_string(const json& msg, const char* key) {
  if (!msg.contains(key)) return std::nullopt;
  return string_field(msg, key);
}

std::string_view to_string(SubmitDecision d) {
  switch (d) {
    case SubmitDecision::ServedFromCache: return "served_from_cache";
    case SubmitDecision::Dispatched: return "dispatched";
    case SubmitDecision::Enqueued: return "enqueued";
  }
  return "unknown";
}

std::string_view to_string(CancelResult r) {
  switch (r) {
    case CancelResult::RemovedFromQueue: return "removed_from_queue";
    case CancelResult::CancelledInFlight: return "cancelled_in_flight";
    case CancelResult::NoOp: return "noop";
  }
  return "unknown";
}

/// Starts a thread that feeds elapsed wall-clock milliseconds to `session`.
class WallClockTicker {
 public:
  WallClockTicker(ProtocolSession& session, bool enabled) {
    if (!enabled) return;
    thread_ = std::thread([this, &session] {
      const auto start = std::chrono::steady_clock::now();
      while (!stop_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        const auto elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        session.tick(static_cast<Millis>(elapsed));
      }
    });
  }
  ~WallClockTicker() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace

json outcome_to_json(const CompletionOutcome& o) {
  json j{{"type", "completion"}, {"request_id", o.request_id}, {"status", to_string(o.kind)}};
  if (o.kind == OutcomeKind::Suggestion || o.kind == OutcomeKind::Empty) {
    j["text"] = to_utf8(o.text);
    j["served_from"] = *o.served_from == ServedFrom::Cache ? "cache" : "model";
  }
  j["latency_ms"] = o.latency_ms;
  j["ts"] = o.ts;
  return j;
}

json diff_to_json(const RenderedDiff& diff) {
  json lines = json::array();
  for (const auto& l : diff.lines) {
    json j{{"text", l.text}, {"tag", to_string(l.tag)}};
    if (l.before_line) j["before_line"] = *l.before_line;
    if (l.after_line) j["after_line"] = *l.after_line;
    if (!l.highlights.empty()) {
      json spans = json::array();
      for (const auto& s : l.highlights) spans.push_back({s.begin, s.end});
      j["highlights"] = std::move(spans);
    }
    if (l.partner) j["partner"] = *l.partner;
    lines.push_back(std::move(j));
  }
  return lines;
}

ProtocolSession::ProtocolSession(const ServiceConfig& config, Writer writer)
    : backend_(make_backend(config)), writer_(std::move(writer)) {
  engine_ = std::make_unique<Engine>(config.engine, *backend_,
                                     [this](const CompletionOutcome& o) { write(outcome_to_json(o)); });
}

void ProtocolSession::write(const json& msg) { writer_(msg.dump()); }

void ProtocolSession::tick(Millis t) {
  std::lock_guard lock(mutex_);
  engine_->advance_to(t);
}

void ProtocolSession::handle_line(const std::string& line) {
  if (trim(line).empty()) return;
  std::lock_guard lock(mutex_);
  json id;
  try {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error& e) {
      protocol_error(std::string("malformed JSON: ") + e.what());
    }
    if (!msg.is_object()) protocol_error("expected a JSON object");
    if (msg.contains("id")) id = msg.at("id");
    json reply = dispatch(msg);
    if (!id.is_null()) reply["id"] = id;
    write(reply);
  } catch (const Error& e) {
    json err{{"type", "error"}, {"code", to_string(e.code())}, {"message", e.what()}};
    if (!id.is_null()) err["id"] = id;
    write(err);
  } catch (const json::exception& e) {
    json err{{"type", "error"}, {"code", "ProtocolError"}, {"message", e.what()}};
    if (!id.is_null()) err["id"] = id;
    write(err);
  }
}

json ProtocolSession::dispatch(const json& msg) {
  const std::string op = string_field(msg, "op");
  Engine& engine = *engine_;
  if (msg.contains("ts")) {
    if (!msg.at("ts").is_number_integer()) protocol_error("'ts' must be an integer");
    engine.advance_to(msg.at("ts").get<Millis>());
  }
  const Millis now = engine.now();
  json ok{{"type", "ok"}, {"op", op}};

  if (op == "open") {
    const auto file = string_field(msg, "file");
    engine.apply_event({events::FileOpen{from_utf8(string_field(msg, "content"))}, file, now});
    ok["version"] = engine.session().document(file).version;
    return ok;
  }
  if (op == "close") {
    engine.apply_event({events::FileClose{}, string_field(msg, "file"), now});
    return ok;
  }
  if (op == "edit") {
    const auto file = string_field(msg, "file");
    const auto kind = string_field(msg, "kind");
    EventKind event;
    if (kind == "insert") event = events::Insert{from_utf8(string_field(msg, "text"))};
    else if (kind == "delete") event = events::Delete{count_field(msg, "count")};
    else if (kind == "cursor_move") event = events::CursorMove{count_field(msg, "offset")};
    else if (kind == "paste") event = events::Paste{from_utf8(string_field(msg, "text")), msg.value("full_file", false)};
    else protocol_error("unknown edit kind '" + kind + "'");
    engine.apply_event({std::move(event), file, now});
    const auto& doc = engine.session().document(file);
    ok["version"] = doc.version;
    ok["cursor"] = doc.cursor;
    return ok;
  }
  if (op == "complete") {
    const auto request_id = string_field(msg, "request_id");
    const auto decision = engine.request_completion(request_id, optional_string(msg, "file").value_or(""));
    // A cache hit has already produced its completion line.
    return {{"type", "ack"}, {"op", op}, {"request_id", request_id}, {"decision", to_string(decision)}};
  }
  if (op == "cancel") {
    const auto request_id = string_field(msg, "request_id");
    ok["request_id"] = request_id;
    ok["result"] = to_string(engine.cancel(request_id));
    return ok;
  }
  if (op == "accept" || op == "reject") {
    const auto request_id = optional_string(msg, "request_id");
    const bool done = op == "accept" ? engine.accept(request_id) : engine.reject(request_id);
    if (!done) throw Error(ErrorCode::UnknownRequest, "no matching suggestion is displayed");
    return ok;
  }
  if (op == "transform") {
    const auto result = engine.transform(string_field(msg, "file"), string_field(msg, "instruction"));
    return {{"type", "transform"}, {"script", result.script}, {"content", result.content},
            {"diff", diff_to_json(result.diff)}};
  }
  if (op == "metrics") {
    return {{"type", "metrics"}, {"report", json::parse(report_to_json(engine.report()))}};
  }
  if (op == "wait") {
    ok["now"] = engine.now();
    return ok;
  }
  if (op == "drain") {
    engine.drain();
    ok["now"] = engine.now();
    return ok;
  }
  protocol_error("unknown op '" + op + "'");
}

void serve_stdio(const ServiceConfig& config, std::istream& in, std::ostream& out, bool wall_clock) {
  std::mutex out_mutex;
  ProtocolSession session(config, [&](const std::string& line) {
    std::lock_guard lock(out_mutex);
    out << line << '\n' << std::flush;
  });
  WallClockTicker ticker(session, wall_clock);
  std::string line;
  while (std::getline(in, line)) session.handle_line(line);
}

void serve_tcp(const ServiceConfig& config, const std::string& listen, bool wall_clock) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::BindError, "expected host:port, got '" + listen + "'");
  const std::string host = listen.substr(0, colon);
  const std::string port = listen.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::BindError, "cannot resolve " + listen);
  }
  const int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int yes = 1;
  if (fd >= 0) setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (fd < 0 || bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 16) != 0) {
    freeaddrinfo(res);
    if (fd >= 0) close(fd);
    throw Error(ErrorCode::BindError, "cannot listen on " + listen);
  }
  freeaddrinfo(res);
  std::cerr << "listening on " << listen << std::endl;

  while (true) {
    const int client = accept(fd, nullptr, nullptr);
    if (client < 0) continue;
    std::thread([client, &config, wall_clock] {
      std::mutex send_mutex;
      ProtocolSession session(config, [&](const std::string& line) {
        std::lock_guard lock(send_mutex);
        const std::string data = line + "\n";
        std::size_t sent = 0;
        while (sent < data.size()) {
          const auto n = send(client, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
          if (n <= 0) return;
          sent += static_cast<std::size_t>(n);
        }
      });
      {
        WallClockTicker ticker(session, wall_clock);
        std::string buffer;
        char chunk[4096];
        while (true) {
          const auto n = recv(client, chunk, sizeof chunk, 0);
          if (n <= 0) break;
          buffer.append(chunk, static_cast<std::size_t>(n));
          std::size_t nl;
          while ((nl = buffer.find('\n')) != std::string::npos) {
            session.handle_line(buffer.substr(0, nl));
            buffer.erase(0, nl + 1);
          }
        }
      }
      close(client);
    }).detach();
  }
}

}  // namespace codeassist
