#include "codeassist/model_backend.hpp"

#include <algorithm>

#include "codeassist/edit_engine.hpp"
#include "codeassist/error.hpp"

namespace codeassist {

OracleModel::OracleModel(OracleModelConfig config, const TokenEstimator& estimator)
    : config_(std::move(config)), estimator_(estimator) {
  if (config_.horizon_chars == 0) throw Error(ErrorCode::ConfigError, "oracle horizon_chars must be positive");
}

Text OracleModel::predict(const CompletionRequest& request) const {
  const auto it = config_.ground_truth.find(request.file_id);
  if (it == config_.ground_truth.end() || !request.document) return {};
  const Text& truth = it->second;
  const std::u32string_view typed = std::u32string_view(*request.document).substr(0, request.anchor);
  if (truth.size() < typed.size() || std::u32string_view(truth).substr(0, typed.size()) != typed) return {};

  Text out = truth.substr(request.anchor, config_.horizon_chars);
  // Longest prefix within the output token cap.
  std::size_t lo = 0, hi = out.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (estimator_.estimate(to_utf8(std::u32string_view(out).substr(0, mid))) <= kOutputTokenBudget) lo = mid;
    else hi = mid - 1;
  }
  out.resize(lo);
  return out;
}

ModelReply OracleModel::complete(const PromptBundle&, const CompletionRequest& request) {
  ++calls_;
  if (config_.fail_every != 0 && calls_ % config_.fail_every == 0) {
    throw Error(ErrorCode::ScheduledFailure, "call " + std::to_string(calls_) + " for " + request.request_id);
  }
  return {predict(request), config_.latency_ms};
}

TransformReply OracleModel::transform(const FileId&, const std::string& before, const std::string& instruction) {
  const auto it = std::find_if(config_.transforms.begin(), config_.transforms.end(),
                               [&](const ScriptedTransform& t) { return t.instruction == instruction; });
  if (it == config_.transforms.end()) throw Error(ErrorCode::UnknownInstruction, instruction);
  return {format_edit_script(serialize_edit_script(before, it->after)), config_.latency_ms};
}

}  // namespace codeassist
