// SPDX-License-Identifier: Apache-2.0
//
// Uniform completion client. Two HTTP wire shapes (OpenAI-compatible chat
// completions and Gemini-compatible generateContent) plus a family of
// deterministic mock models so the whole pipeline runs offline.
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "graphdec/errors.hpp"
#include "graphdec/prompt_builder.hpp"

namespace graphdec {

enum class ProviderKind { openai_compatible, gemini_compatible, mock };

std::string_view to_string(ProviderKind kind);

// Mock model names understood by the mock provider.
inline constexpr std::string_view kMockEchoReference = "echo-reference";
inline constexpr std::string_view kMockFailThenFix = "fail-then-fix";
inline constexpr std::string_view kMockNoCode = "no-code";

struct ModelConfig {
  ProviderKind provider = ProviderKind::mock;
  std::string model_name = std::string(kMockEchoReference);
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::chrono::seconds timeout{120};
  std::string api_key_env;
  std::string endpoint;  // base URL; provider default when empty
  int max_retries = 2;
  std::chrono::milliseconds backoff{500};

  std::string canonical() const;
};

// "mock:<name>", "openai:<model>" or "gemini:<model>". Fills the provider's
// default key variable and endpoint. Throws ContractError on bad URIs.
ModelConfig parse_model_uri(std::string_view uri);

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason);

struct ModelResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  std::chrono::milliseconds latency{0};
  int call_index = 1;  // 1 = first pass, 2 = repair
};

// Maps a function name to its reference source; used by the mock models.
using ReferenceLookup = std::function<std::optional<std::string>(std::string_view)>;

// Low-level provider: one request, no retries. Throws AuthError, TimeoutError
// or TransportError; the transient flag on TransportError decides retries.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ModelResponse send(const PromptBundle& prompt, int call_index) = 0;
};

// Raised by providers for failures worth retrying (connection refused, 5xx,
// 429). Converted to TransportError once retries are exhausted.
class TransientTransportError : public TransportError {
 public:
  using TransportError::TransportError;
};

std::unique_ptr<Provider> make_provider(const ModelConfig& config, ReferenceLookup references);

class LlmGateway {
 public:
  struct Options {
    std::size_t max_in_flight = 4;
    std::optional<std::filesystem::path> audit_log;
    ReferenceLookup references;
  };

  // Throws AuthError when an HTTP provider's key variable is unset or empty.
  LlmGateway(ModelConfig config, Options options);
  LlmGateway(ModelConfig config, std::unique_ptr<Provider> provider, Options options);

  // Retries transient transport failures up to config.max_retries times with
  // exponential backoff. call_index must be 1 or 2.
  ModelResponse complete(const PromptBundle& prompt, int call_index);

  const ModelConfig& config() const { return config_; }
  std::size_t calls_issued() const;
  std::size_t peak_in_flight() const;

 private:
  void audit(const PromptBundle& prompt, int call_index, const ModelResponse* response,
             std::string_view error);

  ModelConfig config_;
  Options options_;
  std::unique_ptr<Provider> provider_;

  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  std::size_t in_flight_ = 0;
  std::size_t peak_in_flight_ = 0;
  std::size_t calls_ = 0;
  std::mutex audit_mutex_;
};

// Contents of the last fenced code block; otherwise the longest contiguous
// region that starts with a C type, qualifier or preprocessor line, with
// trailing prose removed. The result always ends in a newline. Throws
// NoCodeFound.
std::string extract_code(std::string_view text);

// Throws ContractError if the response finished with an error.
std::string extract_code(const ModelResponse& response);

}  // namespace graphdec
