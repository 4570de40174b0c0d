#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codeassist/context_packer.hpp"
#include "codeassist/streak_cache.hpp"

namespace codeassist {

struct ModelReply {
  Text text;
  /// Simulated delay before the reply is available, in virtual time.
  Millis latency_ms = 0;
};

struct TransformReply {
  /// Edit script in the textual hunk format.
  std::string script;
  Millis latency_ms = 0;
};

/// Completion and transformation model. Calls for one session are made in
/// order; replies are scheduled by the caller and may complete out of order.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  /// Throws Error{ScheduledFailure} when the model does not answer.
  virtual ModelReply complete(const PromptBundle& prompt, const CompletionRequest& request) = 0;

  /// `before` is the current content of the file being edited.
  virtual TransformReply transform(const FileId& file, const std::string& before, const std::string& instruction) = 0;
};

struct ScriptedTransform {
  std::string instruction;
  /// Content after the edit, UTF-8.
  std::string after;
};

struct OracleModelConfig {
  /// Future content of each file.
  std::map<FileId, Text> ground_truth;
  std::size_t horizon_chars = 64;
  Millis latency_ms = 200;
  /// Every Nth completion call fails; 0 disables failures.
  std::uint64_t fail_every = 0;
  std::vector<ScriptedTransform> transforms;
};

/// Deterministic model that predicts the next characters of a configured
/// ground truth, as long as the text before the cursor agrees with it.
class OracleModel final : public ModelBackend {
 public:
  explicit OracleModel(OracleModelConfig config, const TokenEstimator& estimator = default_estimator());

  ModelReply complete(const PromptBundle& prompt, const CompletionRequest& request) override;
  TransformReply transform(const FileId& file, const std::string& before, const std::string& instruction) override;

  /// Pure prediction without the failure schedule.
  Text predict(const CompletionRequest& request) const;

  std::uint64_t completion_calls() const noexcept { return calls_; }
  const OracleModelConfig& config() const noexcept { return config_; }

 private:
  OracleModelConfig config_;
  const TokenEstimator& estimator_;
  std::uint64_t calls_ = 0;
};

}  // namespace codeassist
