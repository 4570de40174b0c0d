#include "codeassist/harness.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "codeassist/error.hpp"

namespace codeassist {

using nlohmann::json;

// ---------------------------------------------------------------------------
// VirtualClock

void VirtualClock::schedule(Millis due, Callback callback) {
  timers_.push({std::max(due, now_), next_seq_++, std::move(callback)});
}

bool VirtualClock::fire_next(Millis limit) {
  if (timers_.empty() || timers_.top().due > limit) return false;
  Timer timer = timers_.top();
  timers_.pop();
  now_ = std::max(now_, timer.due);
  timer.callback();
  return true;
}

void VirtualClock::advance_to(Millis t) {
  t = std::max(t, now_);
  while (fire_next(t)) {
  }
  now_ = t;
}

void VirtualClock::run_until_idle() {
  while (fire_next(std::numeric_limits<Millis>::max())) {
  }
}

// ---------------------------------------------------------------------------
// Config

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A string value, or {"path": ...} naming a file to read it from.
std::string text_value(const json& v, const std::filesystem::path& base_dir, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() && v.contains("path") && v.at("path").is_string()) {
    std::filesystem::path p = v.at("path").get<std::string>();
    return read_file(p.is_absolute() ? p : base_dir / p);
  }
  config_error(where + " must be a string or {\"path\": ...}");
}

}  // namespace

ServiceConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  check_keys(doc, "config", {"scheduler", "packer", "budget", "session", "backend"});

  if (doc.contains("scheduler")) {
    const auto& s = doc.at("scheduler");
    check_keys(s, "scheduler", {"max_in_flight", "cache_capacity", "cache_ttl_ms"});
    read(s, "max_in_flight", cfg.engine.scheduler.max_in_flight, "scheduler");
    read(s, "cache_capacity", cfg.engine.scheduler.cache_capacity, "scheduler");
    read(s, "cache_ttl_ms", cfg.engine.scheduler.cache_ttl_ms, "scheduler");
    if (cfg.engine.scheduler.max_in_flight == 0) config_error("scheduler.max_in_flight must be positive");
  }
  if (doc.contains("packer")) {
    const auto& p = doc.at("packer");
    check_keys(p, "packer",
               {"window_lines", "stride_lines", "context_lines_above", "context_lines_below", "prefix_window_chars",
                "suffix_window_chars"});
    read(p, "window_lines", cfg.engine.packer.window_lines, "packer");
    read(p, "stride_lines", cfg.engine.packer.stride_lines, "packer");
    read(p, "context_lines_above", cfg.engine.packer.context_lines_above, "packer");
    read(p, "context_lines_below", cfg.engine.packer.context_lines_below, "packer");
    read(p, "prefix_window_chars", cfg.engine.prefix_window_chars, "packer");
    read(p, "suffix_window_chars", cfg.engine.suffix_window_chars, "packer");
    if (cfg.engine.packer.window_lines == 0 || cfg.engine.packer.stride_lines == 0) {
      config_error("packer window and stride must be positive");
    }
  }
  if (doc.contains("budget")) {
    const auto& b = doc.at("budget");
    check_keys(b, "budget", {"input_tokens", "output_tokens"});
    read(b, "input_tokens", cfg.engine.input_token_budget, "budget");
    if (cfg.engine.input_token_budget > kInputTokenBudget) config_error("budget.input_tokens cannot exceed 8192");
    std::size_t output = kOutputTokenBudget;
    read(b, "output_tokens", output, "budget");
    if (output != kOutputTokenBudget) config_error("budget.output_tokens is fixed at 128");
  }
  if (doc.contains("session")) {
    const auto& s = doc.at("session");
    check_keys(s, "session", {"edit_capacity", "supersede_pending"});
    read(s, "edit_capacity", cfg.engine.edit_capacity, "session");
    read(s, "supersede_pending", cfg.engine.supersede_pending, "session");
  }
  if (doc.contains("backend")) {
    const auto& b = doc.at("backend");
    check_keys(b, "backend", {"kind", "oracle"});
    read(b, "kind", cfg.backend, "backend");
    if (cfg.backend != "oracle") config_error("unsupported backend kind '" + cfg.backend + "'");
    if (b.contains("oracle")) {
      const auto& o = b.at("oracle");
      check_keys(o, "backend.oracle", {"horizon_chars", "latency_ms", "fail_every", "ground_truth", "transforms"});
      read(o, "horizon_chars", cfg.oracle.horizon_chars, "backend.oracle");
      read(o, "latency_ms", cfg.oracle.latency_ms, "backend.oracle");
      read(o, "fail_every", cfg.oracle.fail_every, "backend.oracle");
      if (cfg.oracle.horizon_chars == 0) config_error("backend.oracle.horizon_chars must be positive");
      if (cfg.oracle.latency_ms < 0) config_error("backend.oracle.latency_ms must not be negative");
      if (o.contains("ground_truth")) {
        const auto& gt = o.at("ground_truth");
        if (!gt.is_object()) config_error("backend.oracle.ground_truth must be an object");
        for (const auto& [file, value] : gt.items()) {
          cfg.oracle.ground_truth[file] = from_utf8(text_value(value, base_dir, "ground_truth." + file));
        }
      }
      if (o.contains("transforms")) {
        const auto& ts = o.at("transforms");
        if (!ts.is_array()) config_error("backend.oracle.transforms must be an array");
        for (const auto& t : ts) {
          check_keys(t, "transform", {"instruction", "after"});
          if (!t.contains("instruction") || !t.at("instruction").is_string() || !t.contains("after")) {
            config_error("transform entries need 'instruction' and 'after'");
          }
          cfg.oracle.transforms.push_back(
              {t.at("instruction").get<std::string>(), text_value(t.at("after"), base_dir, "transform.after")});
        }
      }
    }
  }
  return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::unique_ptr<ModelBackend> make_backend(const ServiceConfig& config) {
  if (config.backend == "oracle") return std::make_unique<OracleModel>(config.oracle);
  config_error("unsupported backend kind '" + config.backend + "'");
}

// ---------------------------------------------------------------------------
// Engine

std::string_view to_string(OutcomeKind kind) noexcept {
  switch (kind) {
    case OutcomeKind::Suggestion: return "suggestion";
    case OutcomeKind::Empty: return "empty";
    case OutcomeKind::Cancelled: return "cancelled";
    case OutcomeKind::Failed: return "failed";
  }
  return "unknown";
}

Engine::Engine(EngineConfig config, ModelBackend& backend, OutcomeListener listener)
    : config_(config),
      backend_(backend),
      listener_(std::move(listener)),
      session_(config.edit_capacity),
      scheduler_(config.scheduler, [this](const CompletionRequest& r) { dispatch(r); }) {}

void Engine::advance_to(Millis t) { clock_.advance_to(t); }

void Engine::drain() { clock_.run_until_idle(); }

void Engine::apply_event(const EditorEvent& event) {
  session_.apply_event(event);
  if (const auto* e = std::get_if<events::Insert>(&event.kind)) {
    log_.push_back(metric::Typed{e->text.size()});
  } else if (const auto* p = std::get_if<events::Paste>(&event.kind)) {
    log_.push_back(metric::Pasted{p->text.size(), p->full_file});
  }
  if (displayed_ && displayed_->file == event.file_id) displayed_.reset();
  pump();
}

SubmitDecision Engine::request_completion(const RequestId& id, const FileId& file) {
  if (open_requests_.contains(id)) throw Error(ErrorCode::DuplicateRequest, id);
  FileId target = file;
  if (target.empty()) {
    const auto focused = session_.focused_file();
    if (!focused) throw Error(ErrorCode::UnknownFile, "no focused file");
    target = *focused;
  }
  const DocumentState& doc = session_.document(target);

  if (config_.supersede_pending) {
    const std::vector<RequestId> pending(unresolved_.begin(), unresolved_.end());
    for (const auto& pending_id : pending) {
      if (scheduler_.is_pending(pending_id)) cancel(pending_id);
    }
  }
  scheduler_.evict(clock_.now());

  auto request = make_request(id, doc, clock_.now(), config_.prefix_window_chars, config_.suffix_window_chars);
  open_requests_.emplace(id, request);
  unresolved_.insert(id);
  log_.push_back(metric::CompletionRequested{id, clock_.now()});

  const auto result = scheduler_.submit(std::move(request));
  if (result.decision == SubmitDecision::ServedFromCache) {
    emit({id, OutcomeKind::Suggestion, result.text, ServedFrom::Cache, 0, clock_.now()});
  }
  pump();
  return result.decision;
}

CancelResult Engine::cancel(const RequestId& id) {
  const auto result = scheduler_.cancel(id);
  if (result != CancelResult::NoOp) {
    emit({id, OutcomeKind::Cancelled, {}, std::nullopt, clock_.now() - open_requests_.at(id).issued_at, clock_.now()});
  }
  pump();
  return result;
}

bool Engine::accept(const std::optional<RequestId>& id) {
  if (!displayed_ || (id && *id != displayed_->id)) return false;
  const Displayed shown = std::move(*displayed_);
  displayed_.reset();
  session_.apply_event({events::Insert{shown.text}, shown.file, clock_.now()});
  log_.push_back(metric::SuggestionAccepted{shown.id, clock_.now()});
  pump();
  return true;
}

bool Engine::reject(const std::optional<RequestId>& id) {
  if (!displayed_ || (id && *id != displayed_->id)) return false;
  log_.push_back(metric::SuggestionRejected{displayed_->id, clock_.now()});
  displayed_.reset();
  return true;
}

TransformResult Engine::transform(const FileId& file, const std::string& instruction) {
  const std::string before = to_utf8(session_.document(file).content);
  TransformResult result;
  result.script = backend_.transform(file, before, instruction).script;
  result.content = apply_edit(parse_edit_script(result.script), before);
  result.diff = render_diff(before, result.content);
  return result;
}

void Engine::dispatch(const CompletionRequest& request) {
  const RequestId id = request.request_id;
  try {
    const auto prompt = assemble_prompt(session_, request, config_.packer, config_.input_token_budget);
    auto reply = backend_.complete(prompt, request);
    clock_.schedule(clock_.now() + reply.latency_ms,
                    [this, id, text = std::move(reply.text)] { handle(scheduler_.on_model_response(id, text)); });
  } catch (const Error&) {
    clock_.schedule(clock_.now(), [this, id] {
      bool failed = false;
      auto result = scheduler_.on_model_failure(id, &failed);
      if (failed) {
        emit({id, OutcomeKind::Failed, {}, std::nullopt, clock_.now() - open_requests_.at(id).issued_at, clock_.now()});
      }
      handle(result);
    });
  }
}

void Engine::handle(const ResponseResult& result) {
  for (const auto& d : result.deliveries) {
    const auto& request = open_requests_.at(d.request_id);
    emit({d.request_id, d.text.empty() ? OutcomeKind::Empty : OutcomeKind::Suggestion, d.text, d.served_from,
          clock_.now() - request.issued_at, clock_.now()});
  }
}

void Engine::emit(CompletionOutcome outcome) {
  unresolved_.erase(outcome.request_id);
  switch (outcome.kind) {
    case OutcomeKind::Suggestion:
    case OutcomeKind::Empty: {
      log_.push_back(metric::RequestLatency{outcome.latency_ms, *outcome.served_from});
      if (outcome.kind == OutcomeKind::Empty) {
        log_.push_back(metric::EmptyPrediction{outcome.request_id});
        break;
      }
      // Shown only while the document still looks the way it did at request time.
      const auto& request = open_requests_.at(outcome.request_id);
      const auto* doc = session_.find_document(request.file_id);
      if (doc != nullptr && doc->cursor == request.anchor && doc->content == *request.document) {
        displayed_ = Displayed{outcome.request_id, outcome.text, request.file_id};
        log_.push_back(metric::SuggestionShown{outcome.request_id, outcome.ts, outcome.text.size()});
      }
      break;
    }
    case OutcomeKind::Cancelled:
      log_.push_back(metric::RequestCancelled{outcome.request_id});
      break;
    case OutcomeKind::Failed:
      log_.push_back(metric::ModelFailed{outcome.request_id});
      break;
  }
  if (listener_) listener_(outcome);
}

// ---------------------------------------------------------------------------
// Traces

namespace {

[[noreturn]] void trace_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::TraceParseError, "line " + std::to_string(line_no) + ": " + what);
}

void require(const json& obj, const char* key, json::value_t type, std::size_t line_no) {
  if (!obj.contains(key)) trace_error(line_no, std::string("missing '") + key + "'");
  const auto& v = obj.at(key);
  const bool ok = type == json::value_t::number_unsigned ? v.is_number_unsigned() : v.type() == type;
  if (!ok) trace_error(line_no, std::string("'") + key + "' has the wrong type");
}

void validate(const TraceEvent& ev, std::size_t line_no) {
  const auto& p = ev.payload;
  const auto needs_file = [&] {
    if (ev.file.empty()) trace_error(line_no, "'" + ev.kind + "' needs 'file'");
  };
  if (ev.kind == "file_open") {
    needs_file();
    require(p, "content", json::value_t::string, line_no);
  } else if (ev.kind == "file_close") {
    needs_file();
  } else if (ev.kind == "insert") {
    needs_file();
    require(p, "text", json::value_t::string, line_no);
  } else if (ev.kind == "delete") {
    needs_file();
    require(p, "count", json::value_t::number_unsigned, line_no);
  } else if (ev.kind == "cursor_move") {
    needs_file();
    require(p, "offset", json::value_t::number_unsigned, line_no);
  } else if (ev.kind == "paste") {
    needs_file();
    require(p, "text", json::value_t::string, line_no);
    if (p.contains("full_file")) require(p, "full_file", json::value_t::boolean, line_no);
  } else if (ev.kind == "request_completion" || ev.kind == "accept" || ev.kind == "reject") {
    if (p.contains("request_id")) require(p, "request_id", json::value_t::string, line_no);
  } else if (ev.kind == "cancel") {
    require(p, "request_id", json::value_t::string, line_no);
  } else if (ev.kind == "transform") {
    needs_file();
    require(p, "instruction", json::value_t::string, line_no);
  } else {
    trace_error(line_no, "unknown kind '" + ev.kind + "'");
  }
}

}  // namespace

std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t line_no = 0;
  Millis last_ts = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    json obj;
    try {
      obj = json::parse(body);
    } catch (const json::parse_error& e) {
      trace_error(line_no, e.what());
    }
    if (!obj.is_object()) trace_error(line_no, "expected a JSON object");
    if (!obj.contains("ts") || !obj.at("ts").is_number_integer()) trace_error(line_no, "missing integer 'ts'");
    if (!obj.contains("kind") || !obj.at("kind").is_string()) trace_error(line_no, "missing string 'kind'");
    if (obj.contains("file") && !obj.at("file").is_string()) trace_error(line_no, "'file' must be a string");

    TraceEvent ev;
    ev.ts = obj.at("ts").get<Millis>();
    ev.kind = obj.at("kind").get<std::string>();
    ev.file = obj.value("file", std::string());
    if (ev.ts < last_ts) trace_error(line_no, "timestamp decreases");
    last_ts = ev.ts;
    obj.erase("ts");
    obj.erase("kind");
    obj.erase("file");
    ev.payload = std::move(obj);
    validate(ev, line_no);
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<TraceEvent> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::TraceParseError, "cannot read " + path.string());
  return parse_trace(in);
}

void apply_trace_event(Engine& engine, const TraceEvent& ev) {
  engine.advance_to(ev.ts);
  const auto& p = ev.payload;
  const auto editor = [&](EventKind kind) { engine.apply_event({std::move(kind), ev.file, ev.ts}); };
  const auto optional_id = [&]() -> std::optional<RequestId> {
    if (p.contains("request_id")) return p.at("request_id").get<std::string>();
    return std::nullopt;
  };

  if (ev.kind == "file_open") {
    editor(events::FileOpen{from_utf8(p.at("content").get<std::string>())});
  } else if (ev.kind == "file_close") {
    editor(events::FileClose{});
  } else if (ev.kind == "insert") {
    editor(events::Insert{from_utf8(p.at("text").get<std::string>())});
  } else if (ev.kind == "delete") {
    editor(events::Delete{p.at("count").get<std::size_t>()});
  } else if (ev.kind == "cursor_move") {
    editor(events::CursorMove{p.at("offset").get<std::size_t>()});
  } else if (ev.kind == "paste") {
    editor(events::Paste{from_utf8(p.at("text").get<std::string>()), p.value("full_file", false)});
  } else if (ev.kind == "request_completion") {
    const RequestId id = optional_id().value_or("r" + std::to_string(engine.next_auto_id()));
    engine.request_completion(id, ev.file);
  } else if (ev.kind == "cancel") {
    engine.cancel(p.at("request_id").get<std::string>());
  } else if (ev.kind == "accept") {
    engine.accept(optional_id());
  } else if (ev.kind == "reject") {
    engine.reject(optional_id());
  } else if (ev.kind == "transform") {
    engine.transform(ev.file, p.at("instruction").get<std::string>());
  }
}

MetricsReport replay(const std::vector<TraceEvent>& trace, const EngineConfig& config, ModelBackend& backend) {
  Engine engine(config, backend);
  for (const auto& ev : trace) apply_trace_event(engine, ev);
  engine.drain();
  return engine.report();
}

MetricsReport replay(const std::filesystem::path& trace_file, const ServiceConfig& config) {
  const auto trace = load_trace(trace_file);
  auto backend = make_backend(config);
  return replay(trace, config.engine, *backend);
}

}  // namespace codeassist
