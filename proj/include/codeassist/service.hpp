#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "codeassist/harness.hpp"

namespace codeassist {

/// One client connection speaking line-delimited JSON. Each input line is a
/// request object with an "op" and optional "id" (echoed back) and "ts"
/// (virtual milliseconds; advances the session clock before the op runs).
///
/// Ops: open, close, edit, complete, cancel, accept, reject, transform,
/// metrics, wait, drain. Completion results arrive as separate
/// {"type":"completion"} lines, exactly one per request, possibly after
/// later ops. Malformed input yields {"type":"error"} and the connection
/// stays usable.
class ProtocolSession {
 public:
  using Writer = std::function<void(const std::string& line)>;

  ProtocolSession(const ServiceConfig& config, Writer writer);

  void handle_line(const std::string& line);
  /// Advances the virtual clock to `t`; used by the wall-clock ticker.
  void tick(Millis t);

 private:
  nlohmann::json dispatch(const nlohmann::json& msg);
  void write(const nlohmann::json& msg);

  std::unique_ptr<ModelBackend> backend_;
  Writer writer_;
  std::recursive_mutex mutex_;
  std::unique_ptr<Engine> engine_;
};

nlohmann::json outcome_to_json(const CompletionOutcome& outcome);
nlohmann::json diff_to_json(const RenderedDiff& diff);

/// Serves standard streams until EOF.
void serve_stdio(const ServiceConfig& config, std::istream& in, std::ostream& out, bool wall_clock);

/// Accepts TCP connections, one session each, until the process exits.
/// Throws Error{BindError}.
void serve_tcp(const ServiceConfig& config, const std::string& listen, bool wall_clock);

}  // namespace codeassist
