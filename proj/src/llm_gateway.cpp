// SPDX-License-Identifier: Apache-2.0
#include "graphdec/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "graphdec/errors.hpp"
#include "http_providers.hpp"

namespace graphdec {

namespace {

// Appended to the reference on the first call of the fail-then-fix mock. The
// undeclared identifier is a hard error for every C compiler.
constexpr std::string_view kInjectedDefect =
    "\nint mock_injected_defect = undeclared_mock_symbol;\n";

std::string fenced(std::string_view code) {
  std::string out = "```c\n";
  out += code;
  if (out.back() != '\n') out += '\n';
  out += "```\n";
  return out;
}

class MockProvider : public Provider {
 public:
  MockProvider(std::string name, ReferenceLookup references)
      : name_(std::move(name)), references_(std::move(references)) {
    if (name_ != kMockEchoReference && name_ != kMockFailThenFix && name_ != kMockNoCode) {
      throw ContractError("unknown mock model '" + name_ + "'");
    }
  }

  ModelResponse send(const PromptBundle& prompt, int call_index) override {
    ModelResponse r;
    r.call_index = call_index;
    if (name_ == kMockNoCode) {
      r.text = "I am unable to reconstruct this function from the information given.";
      return r;
    }
    std::optional<std::string> ref;
    if (references_) ref = references_(prompt.function_name);
    if (!ref) {
      throw ContractError("mock model has no reference source for '" + prompt.function_name +
                          "'");
    }
    std::string code = *ref;
    if (name_ == kMockFailThenFix && call_index == 1) code += kInjectedDefect;
    r.text = "Here is the reconstructed function.\n\n" + fenced(code);
    return r;
  }

 private:
  std::string name_;
  ReferenceLookup references_;
};

}  // namespace

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::openai_compatible: return "openai";
    case ProviderKind::gemini_compatible: return "gemini";
    case ProviderKind::mock: return "mock";
  }
  return "?";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "?";
}

std::string ModelConfig::canonical() const {
  std::ostringstream out;
  out << "provider=" << to_string(provider) << ";model=" << model_name
      << ";temperature=" << temperature << ";max_output_tokens=" << max_output_tokens
      << ";endpoint=" << endpoint;
  return out.str();
}

ModelConfig parse_model_uri(std::string_view uri) {
  auto colon = uri.find(':');
  if (colon == std::string_view::npos || colon + 1 >= uri.size()) {
    throw ContractError("model must be given as <provider>:<name>, got '" + std::string(uri) +
                        "'");
  }
  std::string_view scheme = uri.substr(0, colon);
  ModelConfig c;
  c.model_name = std::string(uri.substr(colon + 1));
  if (scheme == "mock") {
    c.provider = ProviderKind::mock;
  } else if (scheme == "openai") {
    c.provider = ProviderKind::openai_compatible;
    c.api_key_env = "OPENAI_API_KEY";
    c.endpoint = "https://api.openai.com/v1";
  } else if (scheme == "gemini") {
    c.provider = ProviderKind::gemini_compatible;
    c.api_key_env = "GEMINI_API_KEY";
    c.endpoint = "https://generativelanguage.googleapis.com/v1beta";
  } else {
    throw ContractError("unknown model provider '" + std::string(scheme) + "'");
  }
  return c;
}

std::unique_ptr<Provider> make_provider(const ModelConfig& config, ReferenceLookup references) {
  if (config.provider == ProviderKind::mock) {
    return std::make_unique<MockProvider>(config.model_name, std::move(references));
  }
  const char* key = config.api_key_env.empty() ? nullptr : std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw AuthError("API key variable '" + config.api_key_env + "' is unset or empty");
  }
  return detail::make_http_provider(config, key);
}

LlmGateway::LlmGateway(ModelConfig config, Options options)
    : LlmGateway(config, nullptr, std::move(options)) {
  // Built here rather than in the delegation so the lookup is read before
  // options is moved from.
  provider_ = make_provider(config_, options_.references);
}

LlmGateway::LlmGateway(ModelConfig config, std::unique_ptr<Provider> provider, Options options)
    : config_(std::move(config)), options_(std::move(options)), provider_(std::move(provider)) {
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

std::size_t LlmGateway::calls_issued() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t LlmGateway::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

ModelResponse LlmGateway::complete(const PromptBundle& prompt, int call_index) {
  if (call_index != 1 && call_index != 2) {
    throw ContractError("call_index must be 1 or 2");
  }
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
    ++calls_;
    peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
  }
  struct Release {
    LlmGateway* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->slot_free_.notify_one();
    }
  } release{this};

  auto backoff = config_.backoff;
  for (int attempt = 0;; ++attempt) {
    auto started = std::chrono::steady_clock::now();
    try {
      ModelResponse r = provider_->send(prompt, call_index);
      r.call_index = call_index;
      r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      audit(prompt, call_index, &r, "");
      return r;
    } catch (const TimeoutError& e) {
      audit(prompt, call_index, nullptr, e.what());
      if (attempt >= config_.max_retries) throw;
      spdlog::warn("model call timed out ({}), retry {}/{}", e.what(), attempt + 1,
                   config_.max_retries);
    } catch (const TransientTransportError& e) {
      audit(prompt, call_index, nullptr, e.what());
      if (attempt >= config_.max_retries) throw TransportError(e.what());
      spdlog::warn("model transport failure ({}), retry {}/{}", e.what(), attempt + 1,
                   config_.max_retries);
    } catch (const Error& e) {
      audit(prompt, call_index, nullptr, e.what());
      throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

void LlmGateway::audit(const PromptBundle& prompt, int call_index, const ModelResponse* response,
                       std::string_view error) {
  if (!options_.audit_log) return;
  nlohmann::json line = {
      {"function", prompt.function_name},
      {"call_index", call_index},
      {"provider", to_string(config_.provider)},
      {"model", config_.model_name},
      {"config_fingerprint", prompt.config_fingerprint},
      {"system", prompt.system_text},
      {"user", prompt.user_text},
  };
  if (response != nullptr) {
    line["response"] = response->text;
    line["finish_reason"] = to_string(response->finish_reason);
    line["latency_ms"] = response->latency.count();
  } else {
    line["error"] = error;
  }
  std::lock_guard lock(audit_mutex_);
  std::ofstream out(*options_.audit_log, std::ios::app);
  out << line.dump() << "\n";
}

}  // namespace graphdec
